// Copyright 2026 The incrag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "incrag/models.hpp"
#include "incrag/queryengine.hpp"

namespace httplib {
class Server;
}

namespace incrag {

struct ServiceOptions {
    std::filesystem::path data_dir = "data";
    EngineConfig engine;
    int threads = 8;
    int query_timeout_ms = 60000;
};

/// /v1 REST front end over a set of engines, one per corpus. Each corpus
/// lives under data_dir/<corpus_id>/ and is reopened on construction.
/// Endpoint and body reference: docs/formats.md.
class Service {
public:
    Service(ServiceOptions options, std::shared_ptr<const ModelRegistry> registry);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds and serves on a background thread. Port 0 picks a free port.
    /// Returns the bound port.
    int start(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void listen(const std::string& host, int port);
    void stop();

    std::vector<std::string> corpus_ids() const;

private:
    struct Slot;
    struct Job;

    void routes();
    std::shared_ptr<Slot> slot(const std::string& corpus_id) const;
    void persist(Slot& s);
    void attach_log(Slot& s);
    void restore();
    void run_preprocess(std::shared_ptr<Slot> s, std::shared_ptr<Job> job);

    ServiceOptions options_;
    std::shared_ptr<const ModelRegistry> registry_;
    std::unique_ptr<httplib::Server> server_;
    std::thread server_thread_;

    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Slot>> corpora_;
    std::map<std::string, std::shared_ptr<Job>> jobs_;
    std::vector<std::thread> workers_;
    std::uint64_t next_job_ = 1;

    std::atomic<std::uint64_t> queries_served_{0};
};

}  // namespace incrag

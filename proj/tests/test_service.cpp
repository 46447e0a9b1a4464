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

#include <doctest.h>
#include <httplib.h>

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "incrag/service.hpp"
#include "oracles.hpp"

using namespace incrag;
using nlohmann::json;

namespace {

struct Running {
    std::unique_ptr<Service> service;
    int port = 0;

    Running(const std::filesystem::path& dir, int timeout_ms = 60000) {
        ServiceOptions o;
        o.data_dir = dir;
        o.threads = 4;
        o.query_timeout_ms = timeout_ms;
        service = std::make_unique<Service>(
            o, std::make_shared<ModelRegistry>(make_synthetic_registry(Vocabulary::street_scene())));
        port = service->start("127.0.0.1", 0);
    }
    ~Running() { service->stop(); }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(std::chrono::seconds(30));
        return c;
    }
};

struct Reply {
    int status = 0;
    json body;
};

Reply get(const Running& r, const std::string& path) {
    auto res = r.client().Get(path);
    REQUIRE(res);
    return {res->status, json::parse(res->body)};
}

Reply post(const Running& r, const std::string& path, const std::string& body,
           const std::string& type = "application/json") {
    auto res = r.client().Post(path, body, type);
    REQUIRE(res);
    return {res->status, json::parse(res->body)};
}

Reply post(const Running& r, const std::string& path, const json& body) { return post(r, path, body.dump()); }

void wait_ready(const Running& r, const std::string& job) {
    for (int i = 0; i < 500; ++i) {
        auto j = get(r, "/v1/jobs/" + job);
        REQUIRE(j.status == 200);
        if (j.body.at("state") == "done") {
            CHECK(j.body.at("progress") == 1.0);
            return;
        }
        REQUIRE(j.body.at("state") != "failed");
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    FAIL("preprocessing did not finish");
}

json small_corpus() { return {{"corpus_id", "street"}, {"synthetic", {{"seed", 7}, {"clips", 20}}}}; }

}  // namespace

TEST_CASE("happy path over /v1") {
    oracle::TempDir dir("svc");
    Running r(dir.path);
    CHECK(get(r, "/v1/health").body.at("status") == "ok");

    auto created = post(r, "/v1/corpora", small_corpus());
    CHECK(created.status == 201);
    CHECK(created.body.at("clips") == 20);
    CHECK(post(r, "/v1/corpora", small_corpus()).status == 409);
    CHECK(get(r, "/v1/corpora").body.at("corpora") == json::array({"street"}));

    auto early = post(r, "/v1/corpora/street/query", json{{"query", "Is there a white truck?"}});
    CHECK(early.status == 409);
    CHECK(early.body.at("error") == "not_ready");

    auto job = post(r, "/v1/corpora/street/preprocess", json::object());
    CHECK(job.status == 202);
    wait_ready(r, job.body.at("job_id"));
    auto info = get(r, "/v1/corpora/street");
    CHECK(info.body.at("ready") == true);
    CHECK(info.body.at("job_id") == job.body.at("job_id"));

    auto cold = post(r, "/v1/corpora/street/query", json{{"query", "Is there a white truck?"}, {"k", 4}});
    REQUIRE(cold.status == 200);
    CHECK(cold.body.at("answer").is_string());
    CHECK(cold.body.at("trace").size() >= 1);
    CHECK(cold.body.at("clips").size() == cold.body.at("supporting_clips").size());
    CHECK(cold.body.at("clips").size() <= 4);
    auto first_clip = cold.body.at("clips").at(0);
    CHECK(first_clip.contains("timestamp"));
    CHECK(cold.body.at("fraction_extracted").at("captioner").get<double>() > 0.0);

    auto warm = post(r, "/v1/corpora/street/query", json{{"query", "Is there a white truck?"}, {"k", 4}});
    CHECK(warm.body.at("answer") == cold.body.at("answer"));
    CHECK(warm.body.at("timing").at("extraction_units") == 0);

    auto clip = get(r, "/v1/corpora/street/clips/" + first_clip.at("clip_id").get<std::string>());
    CHECK(clip.status == 200);
    CHECK(clip.body.at("chunks").size() >= 1);

    auto m = get(r, "/v1/corpora/street/metrics");
    CHECK(m.body.at("store_sizes").at("index_chunks") == 20);
    CHECK(m.body.at("extraction_cost_total").get<std::int64_t>() > 0);
    CHECK(get(r, "/v1/metrics").body.at("queries_served") == 2);

    // The query log on disk holds the preprocessing and both queries.
    std::ifstream log(dir.path / "street" / "queries.jsonl");
    std::size_t queries = 0;
    for (std::string line; std::getline(log, line);) queries += json::parse(line).at("record") == "query";
    CHECK(queries == 2);
}

TEST_CASE("errors map to status codes") {
    oracle::TempDir dir("svc");
    Running r(dir.path);
    CHECK(get(r, "/v1/corpora/none").status == 404);
    CHECK(get(r, "/v1/jobs/job-99").status == 404);
    CHECK(post(r, "/v1/corpora/none/query", json{{"query", "x"}}).status == 404);
    CHECK(post(r, "/v1/corpora", std::string("{not json")).status == 400);
    CHECK(post(r, "/v1/corpora", json{{"nothing", 1}}).status == 400);
    CHECK(post(r, "/v1/corpora", json{{"manifest", "garbage\n"}}).status == 400);
    CHECK(post(r, "/v1/corpora", json{{"corpus_id", "bad id!"}, {"synthetic", {{"clips", 2}}}}).status == 400);
    post(r, "/v1/corpora", small_corpus());
    wait_ready(r, post(r, "/v1/corpora/street/preprocess", json::object()).body.at("job_id"));
    CHECK(post(r, "/v1/corpora/street/query", json::object()).status == 400);
    CHECK(post(r, "/v1/corpora/street/query", json{{"query", "x"}, {"max_iterations", 0}}).status == 400);
    CHECK(get(r, "/v1/corpora/street/clips/nope").status == 404);
}

TEST_CASE("manifest upload as JSON lines") {
    oracle::TempDir dir("svc");
    Running r(dir.path);
    std::ostringstream out;
    auto m = gen_synthetic(2, 6, Vocabulary::street_scene());
    m.corpus_id = "uploaded";
    write_manifest(out, m);
    CHECK(post(r, "/v1/corpora", out.str(), "application/x-ndjson").status == 201);
    auto again = json{{"manifest", out.str()}, {"corpus_id", "copy"}};
    CHECK(post(r, "/v1/corpora", again).status == 201);
    CHECK(get(r, "/v1/corpora/copy").body.at("clips") == 6);
}

TEST_CASE("concurrent queries and restart") {
    oracle::TempDir dir("svc");
    std::vector<std::string> qs = {"Is there a white truck?", "What is the color of the bus?", "Is there a red car?",
                                   "Is there a white truck?"};
    std::vector<json> first(qs.size());
    {
        Running r(dir.path);
        post(r, "/v1/corpora", small_corpus());
        wait_ready(r, post(r, "/v1/corpora/street/preprocess", json::object()).body.at("job_id"));
        std::vector<std::thread> ts;
        std::vector<int> status(qs.size());
        for (std::size_t i = 0; i < qs.size(); ++i) {
            ts.emplace_back([&, i] {
                auto res = r.client().Post("/v1/corpora/street/query", json{{"query", qs[i]}}.dump(), "application/json");
                status[i] = res ? res->status : -1;
            });
        }
        for (auto& t : ts) t.join();
        for (int s : status) CHECK(s == 200);
        // Dedup: one detailed chunk per extracted clip.
        auto m = get(r, "/v1/corpora/street/metrics").body;
        auto frac = m.at("fraction_extracted").at("captioner").get<double>();
        CHECK(m.at("store_sizes").at("detailed_chunks").get<double>() == doctest::Approx(frac * 20));
        for (std::size_t i = 0; i < qs.size(); ++i) first[i] = post(r, "/v1/corpora/street/query", json{{"query", qs[i]}}).body;
    }
    Running again(dir.path);
    CHECK(again.service->corpus_ids() == std::vector<std::string>{"street"});
    CHECK(get(again, "/v1/corpora/street").body.at("ready") == true);
    for (std::size_t i = 0; i < qs.size(); ++i) {
        auto b = post(again, "/v1/corpora/street/query", json{{"query", qs[i]}}).body;
        CHECK(b.at("answer") == first[i].at("answer"));
        CHECK(b.at("context_chunks") == first[i].at("context_chunks"));
        CHECK(b.at("timing").at("extraction_units") == 0);
    }
}

TEST_CASE("query timeout") {
    oracle::TempDir dir("svc");
    Running r(dir.path, 1);
    post(r, "/v1/corpora", json{{"corpus_id", "big"}, {"synthetic", {{"clips", 2000}}}});
    wait_ready(r, post(r, "/v1/corpora/big/preprocess", json::object()).body.at("job_id"));
    auto res = post(r, "/v1/corpora/big/query", json{{"query", "Is there a white truck?"}, {"k", 200}});
    // A cold query over 2000 clips at k=200 cannot finish within 1 ms.
    CHECK(res.status == 504);
    CHECK(res.body.at("error") == "timeout");
}

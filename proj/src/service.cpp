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

#include "incrag/service.hpp"

#include <chrono>
#include <fstream>
#include <future>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "incrag/error.hpp"
#include "incrag/prompt.hpp"

namespace incrag {

using nlohmann::json;

struct Service::Slot {
    std::string id;
    std::shared_ptr<Engine> engine;
    std::filesystem::path dir;
    std::mutex save_mutex;
    std::shared_ptr<Job> job;  // latest preprocessing job
    std::mutex log_mutex;
    std::ofstream log;
};

struct Service::Job {
    std::string id;
    std::string corpus_id;
    mutable std::mutex mutex;
    std::string state = "queued";  // queued | running | done | failed
    PreprocessProgress progress;
    std::string error;
    json report;

    json to_json() const {
        std::lock_guard lock(mutex);
        double frac = progress.clips_total ? static_cast<double>(progress.clips_done) / progress.clips_total : 0.0;
        json j{{"job_id", id},
               {"corpus_id", corpus_id},
               {"kind", "preprocess"},
               {"state", state},
               {"clips_done", progress.clips_done},
               {"clips_total", progress.clips_total},
               {"simulated_cost", progress.simulated_cost},
               {"progress", state == "done" ? 1.0 : frac}};
        if (!error.empty()) j["error"] = error;
        if (!report.is_null()) j["report"] = report;
        return j;
    }
};

namespace {

const std::regex kIdPattern("[A-Za-z0-9_.-]{1,128}");

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::kParse:
        case ErrorCode::kInvariant:
        case ErrorCode::kInvalidArgument:
        case ErrorCode::kDimensionMismatch:
        case ErrorCode::kMalformedPrompt:
            return 400;
        case ErrorCode::kNotFound:
        case ErrorCode::kUnknownModel:
            return 404;
        case ErrorCode::kNotReady:
        case ErrorCode::kEmptyIndex:
            return 409;
        case ErrorCode::kProvider:
            return 502;
        default:
            return 500;
    }
}

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int status, std::string_view code, const std::string& message) {
    reply(res, status, json{{"error", code}, {"message", message}});
}

// Runs a handler, turning library errors into JSON error replies.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            fail(res, http_status(e.code()), to_string(e.code()), e.what());
        } catch (const json::exception& e) {
            fail(res, 400, "parse_error", std::string("malformed body: ") + e.what());
        } catch (const std::exception& e) {
            fail(res, 500, "internal", e.what());
        }
    };
}

json body_json(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    auto j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::kParse, "request body must be a JSON object");
    return j;
}

CorpusManifest manifest_from_request(const httplib::Request& req) {
    auto type = req.get_header_value("Content-Type");
    if (type.starts_with("application/x-ndjson") || type.starts_with("application/jsonl")) {
        std::istringstream in(req.body);
        return parse_manifest(in);
    }
    auto j = body_json(req);
    CorpusManifest m;
    if (auto it = j.find("manifest"); it != j.end()) {
        std::istringstream in(it->get<std::string>());
        m = parse_manifest(in);
    } else if (auto s = j.find("synthetic"); s != j.end()) {
        SyntheticOptions opt;
        opt.keyframe_rate = s->value("keyframe_rate", opt.keyframe_rate);
        opt.clip_duration = s->value("clip_duration", opt.clip_duration);
        opt.visibility = s->value("visibility", opt.visibility);
        opt.label_probability = s->value("label_probability", opt.label_probability);
        opt.max_objects_per_clip = s->value("max_objects_per_clip", opt.max_objects_per_clip);
        m = gen_synthetic(s->value("seed", std::uint64_t{7}), s->value("clips", std::size_t{200}),
                          Vocabulary::street_scene(), opt);
    } else {
        throw Error(ErrorCode::kParse, "body needs 'manifest' (JSON lines text) or 'synthetic'");
    }
    if (auto id = j.find("corpus_id"); id != j.end()) m.corpus_id = id->get<std::string>();
    return m;
}

json chunk_json(const Chunk& c) {
    return {{"chunk_id", c.chunk_id},
            {"clip_id", c.clip_id},
            {"level", to_string(c.level)},
            {"source_model_id", c.source_model_id},
            {"text", c.text}};
}

json clip_card(const Clip& c) {
    json j{{"clip_id", c.clip_id},
           {"start", c.start},
           {"end", c.end},
           {"timestamp", format_timestamp(c.start)},
           {"keyframes", c.frames.size()},
           {"extracted", std::vector<std::string>(c.extraction_state.begin(), c.extraction_state.end())}};
    if (c.thumbnail_url) j["thumbnail_url"] = *c.thumbnail_url;
    return j;
}

QueryOptions query_options(const json& j) {
    QueryOptions o;
    if (auto it = j.find("k"); it != j.end()) o.k = it->get<std::size_t>();
    if (auto it = j.find("max_iterations"); it != j.end()) o.max_iterations = it->get<std::size_t>();
    if (auto it = j.find("top_f"); it != j.end()) o.top_f = it->get<std::size_t>();
    if (o.k && *o.k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
    return o;
}

}  // namespace

// Query and extraction records go to data_dir/<corpus_id>/queries.jsonl.
void Service::attach_log(Slot& s) {
    s.log.open(s.dir / "queries.jsonl", std::ios::app);
    s.engine->set_query_log([raw = &s](const json& rec) {
        std::lock_guard lock(raw->log_mutex);
        raw->log << rec.dump() << '\n' << std::flush;
    });
}

Service::Service(ServiceOptions options, std::shared_ptr<const ModelRegistry> registry)
    : options_(std::move(options)), registry_(std::move(registry)), server_(std::make_unique<httplib::Server>()) {
    options_.engine.validate();
    std::filesystem::create_directories(options_.data_dir);
    restore();
    routes();
}

Service::~Service() {
    stop();
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(mutex_);
        workers.swap(workers_);
    }
    for (auto& w : workers) {
        if (w.joinable()) w.join();
    }
}

int Service::start(const std::string& host, int port) {
    int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
    server_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void Service::listen(const std::string& host, int port) {
    if (!server_->listen(host, port)) throw Error(ErrorCode::kIo, "cannot listen on " + host + ":" + std::to_string(port));
}

void Service::stop() {
    if (server_) server_->stop();
    if (server_thread_.joinable()) server_thread_.join();
}

std::vector<std::string> Service::corpus_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : corpora_) ids.push_back(id);
    return ids;
}

std::shared_ptr<Service::Slot> Service::slot(const std::string& corpus_id) const {
    std::lock_guard lock(mutex_);
    auto it = corpora_.find(corpus_id);
    if (it == corpora_.end()) throw Error(ErrorCode::kNotFound, "unknown corpus '" + corpus_id + "'");
    return it->second;
}

void Service::persist(Slot& s) {
    std::lock_guard lock(s.save_mutex);
    s.engine->save(s.dir);
}

void Service::restore() {
    for (const auto& entry : std::filesystem::directory_iterator(options_.data_dir)) {
        if (!entry.is_directory() || !std::filesystem::exists(entry.path() / "manifest.jsonl")) continue;
        auto s = std::make_shared<Slot>();
        s->dir = entry.path();
        s->engine = Engine::open(entry.path(), registry_, options_.engine);
        s->id = s->engine->corpus().corpus_id;
        if (s->id != entry.path().filename().string()) continue;  // stray directory
        corpora_.emplace(s->id, s);
    }
    for (auto& [id, s] : corpora_) attach_log(*s);
}

void Service::run_preprocess(std::shared_ptr<Slot> s, std::shared_ptr<Job> job) {
    {
        std::lock_guard lock(job->mutex);
        job->state = "running";
    }
    try {
        auto report = s->engine->preprocess([&](const PreprocessProgress& p) {
            std::lock_guard lock(job->mutex);
            job->progress = p;
        });
        persist(*s);
        std::lock_guard lock(job->mutex);
        job->progress.clips_done = report.clips_done;
        job->progress.clips_total = report.clips_total;
        job->progress.simulated_cost = report.simulated_cost;
        job->report = incrag::to_json(report);
        job->state = report.failures.empty() ? "done" : "failed";
        if (!report.failures.empty()) job->error = report.failures.front().message;
    } catch (const std::exception& e) {
        std::lock_guard lock(job->mutex);
        job->state = "failed";
        job->error = e.what();
    }
}

void Service::routes() {
    auto& srv = *server_;

    srv.Get("/v1/health", guarded([](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, json{{"status", "ok"}});
    }));

    srv.Post("/v1/corpora", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto manifest = manifest_from_request(req);
        if (!std::regex_match(manifest.corpus_id, kIdPattern)) {
            throw Error(ErrorCode::kInvalidArgument, "corpus_id must match [A-Za-z0-9_.-]{1,128}");
        }
        auto s = std::make_shared<Slot>();
        s->id = manifest.corpus_id;
        s->dir = options_.data_dir / s->id;
        {
            std::lock_guard lock(mutex_);
            if (corpora_.count(s->id)) {
                fail(res, 409, "conflict", "corpus '" + s->id + "' already exists");
                return;
            }
            corpora_.emplace(s->id, s);
        }
        try {
            s->engine = std::make_shared<Engine>(std::move(manifest), registry_, options_.engine);
            persist(*s);
        } catch (...) {
            std::lock_guard lock(mutex_);
            corpora_.erase(s->id);
            throw;
        }
        attach_log(*s);
        auto corpus = s->engine->corpus();
        reply(res, 201, json{{"corpus_id", s->id}, {"clips", corpus.clips.size()}, {"keyframes", corpus.total_keyframes()}});
    }));

    srv.Get("/v1/corpora", guarded([this](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, json{{"corpora", corpus_ids()}});
    }));

    srv.Get(R"(/v1/corpora/([A-Za-z0-9_.-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto s = slot(req.matches[1]);
        auto corpus = s->engine->corpus();
        json j{{"corpus_id", s->id},
               {"clips", corpus.clips.size()},
               {"keyframes", corpus.total_keyframes()},
               {"ready", s->engine->ready()}};
        std::lock_guard lock(mutex_);
        if (s->job) j["job_id"] = s->job->id;
        reply(res, 200, j);
    }));

    srv.Post(R"(/v1/corpora/([A-Za-z0-9_.-]+)/preprocess)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto s = slot(req.matches[1]);
                 std::lock_guard lock(mutex_);
                 if (s->job) {
                     std::lock_guard jl(s->job->mutex);
                     if (s->job->state == "queued" || s->job->state == "running") {
                         reply(res, 202, json{{"job_id", s->job->id}, {"corpus_id", s->id}});
                         return;
                     }
                 }
                 auto job = std::make_shared<Job>();
                 job->id = "job-" + std::to_string(next_job_++);
                 job->corpus_id = s->id;
                 jobs_.emplace(job->id, job);
                 s->job = job;
                 workers_.emplace_back([this, s, job] { run_preprocess(s, job); });
                 reply(res, 202, json{{"job_id", job->id}, {"corpus_id", s->id}});
             }));

    srv.Get(R"(/v1/jobs/([A-Za-z0-9_.-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        std::shared_ptr<Job> job;
        {
            std::lock_guard lock(mutex_);
            auto it = jobs_.find(req.matches[1]);
            if (it == jobs_.end()) throw Error(ErrorCode::kNotFound, "unknown job '" + std::string(req.matches[1]) + "'");
            job = it->second;
        }
        reply(res, 200, job->to_json());
    }));

    srv.Post(R"(/v1/corpora/([A-Za-z0-9_.-]+)/query)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto s = slot(req.matches[1]);
        auto body = body_json(req);
        auto it = body.find("query");
        if (it == body.end() || !it->is_string() || it->get<std::string>().empty()) {
            throw Error(ErrorCode::kParse, "body needs a nonempty 'query' string");
        }
        std::string query = it->get<std::string>();
        auto opt = query_options(body);
        if (!s->engine->ready()) throw Error(ErrorCode::kNotReady, "corpus '" + s->id + "' is not preprocessed");

        // The query keeps running after a timeout; its extraction still lands.
        auto task = std::make_shared<std::packaged_task<QueryResult()>>(
            [s, query, opt] { return s->engine->answer_query(query, opt); });
        auto fut = task->get_future();
        std::thread([task] { (*task)(); }).detach();
        if (fut.wait_for(std::chrono::milliseconds(options_.query_timeout_ms)) != std::future_status::ready) {
            fail(res, 504, "timeout", "query exceeded " + std::to_string(options_.query_timeout_ms) + " ms");
            return;
        }
        auto result = fut.get();
        ++queries_served_;
        if (result.timing.extraction_units > 0) persist(*s);
        auto j = to_json(result);
        json clips = json::array();
        for (const auto& id : result.supporting_clips) {
            if (auto c = s->engine->clip(id)) clips.push_back(clip_card(*c));
        }
        j["clips"] = std::move(clips);
        json fractions = json::object();
        for (const auto* m : registry_->clip_models(WeightClass::kHeavyweight)) {
            fractions[m->descriptor().model_id] = s->engine->fraction_extracted(m->descriptor().model_id);
        }
        j["fraction_extracted"] = std::move(fractions);
        reply(res, 200, j);
    }));

    srv.Get(R"(/v1/corpora/([A-Za-z0-9_.-]+)/clips/([A-Za-z0-9_.#-]+))",
            guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto s = slot(req.matches[1]);
                auto c = s->engine->clip(std::string(req.matches[2]));
                if (!c) throw Error(ErrorCode::kNotFound, "unknown clip '" + std::string(req.matches[2]) + "'");
                json chunks = json::array();
                for (const auto& ch : s->engine->chunks_for_clip(c->clip_id)) chunks.push_back(chunk_json(ch));
                auto j = clip_card(*c);
                j["chunks"] = std::move(chunks);
                reply(res, 200, j);
            }));

    srv.Get(R"(/v1/corpora/([A-Za-z0-9_.-]+)/metrics)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto s = slot(req.matches[1]);
        json fractions = json::object();
        for (const auto& d : registry_->descriptors()) {
            if (d.role == ModelRole::kLlm) continue;
            fractions[d.model_id] = s->engine->fraction_extracted(d.model_id);
        }
        auto sizes = s->engine->store_sizes();
        reply(res, 200,
              json{{"corpus_id", s->id},
                   {"ready", s->engine->ready()},
                   {"fraction_extracted", fractions},
                   {"store_sizes",
                    {{"text_chunks", sizes.text_chunks},
                     {"index_chunks", sizes.index_chunks},
                     {"detailed_chunks", sizes.detailed_chunks},
                     {"frames", sizes.frames}}},
                   {"extraction_cost_total", s->engine->extraction_cost_total()}});
    }));

    srv.Get("/v1/metrics", guarded([this](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, json{{"corpora", corpus_ids().size()}, {"queries_served", queries_served_.load()}});
    }));

    srv.set_payload_max_length(256u << 20);
    srv.new_task_queue = [n = options_.threads] { return new httplib::ThreadPool(static_cast<std::size_t>(std::max(1, n))); };
}

}  // namespace incrag

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

// incrag command line: corpus generation, preprocessing, queries, the
// evaluation experiments and the HTTP service. Every subcommand reads one
// JSON config (see configs/default.json) and writes its reports under the
// configured results directory.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "incrag/config.hpp"
#include "incrag/error.hpp"
#include "incrag/evalharness.hpp"
#include "incrag/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace incrag;

namespace {

struct Common {
    std::string config_path;
    std::string results;

    AppConfig load() const {
        AppConfig c = config_path.empty() ? config_from_json(json::object()) : load_config(config_path);
        if (!results.empty()) c.results_dir = results;
        fs::create_directories(c.results_dir);
        return c;
    }
};

void add_common(CLI::App* cmd, Common& common) {
    cmd->add_option("-c,--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("-r,--results", common.results, "results directory (overrides the config)");
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
}

std::vector<SynthesizedQuery> pool_for(const AppConfig& cfg, const CorpusManifest& corpus,
                                       const ModelRegistry& registry, std::size_t n) {
    return query_pool(corpus, registry, cfg.engine.embedding, n, cfg.eval.query_seed);
}

fs::path corpus_dir(const AppConfig& cfg, const CorpusManifest& corpus) { return cfg.data_dir / corpus.corpus_id; }

int cmd_gen(const Common& common, const std::string& out) {
    auto cfg = common.load();
    auto corpus = load_corpus(cfg);
    fs::path path = out.empty() ? cfg.results_dir / "corpus.jsonl" : fs::path(out);
    save_manifest(path, corpus);
    std::cout << corpus.clips.size() << " clips, " << corpus.total_keyframes() << " keyframes -> " << path.string()
              << '\n';
    return 0;
}

int cmd_preprocess(const Common& common, bool compare) {
    auto cfg = common.load();
    auto vocab = Vocabulary::street_scene();
    auto registry = make_registry(cfg, vocab);
    auto corpus = load_corpus(cfg);
    auto dir = corpus_dir(cfg, corpus);
    auto engine = fs::exists(dir / "manifest.jsonl") ? Engine::open(dir, registry, cfg.engine)
                                                     : std::make_unique<Engine>(corpus, registry, cfg.engine);
    auto report = engine->preprocess([](const PreprocessProgress& p) {
        std::fprintf(stderr, "\rpreprocess %zu/%zu clips, cost %lld", p.clips_done, p.clips_total,
                     static_cast<long long>(p.simulated_cost));
    });
    std::fprintf(stderr, "\n");
    engine->save(dir);
    json j = to_json(report);
    if (compare) {
        auto cmp = compare_preprocessing(corpus, registry, cfg.engine);
        j["comparison"] = to_json(cmp);
        write_text(cfg.results_dir / "preprocessing.txt", format_table(cmp));
        std::cout << format_table(cmp);
    }
    write_json(cfg.results_dir / "preprocess.json", j);
    std::cout << "stores -> " << dir.string() << '\n';
    return report.failures.empty() ? 0 : 1;
}

int cmd_baseline(const Common& common, std::size_t k) {
    auto cfg = common.load();
    auto vocab = Vocabulary::street_scene();
    auto registry = make_registry(cfg, vocab);
    auto corpus = load_corpus(cfg);
    TextEmbedder embedder(cfg.engine.embedding);
    auto baseline = run_baseline(corpus, *registry, embedder);
    std::ofstream answers(cfg.results_dir / "baseline_answers.jsonl");
    for (const auto& q : attribute_queries(vocab)) {
        answers << json{{"query", q},
                        {"answer", baseline.answer(embedder, registry->llm(), q, k)},
                        {"clips", baseline.clips(embedder, q, k)}}
                       .dump()
                << '\n';
    }
    json j{{"clips", corpus.clips.size()},
           {"keyframes", corpus.total_keyframes()},
           {"chunks", baseline.text_db.size()},
           {"preprocess_cost", baseline.preprocess_cost},
           {"wall_ms", baseline.wall_ms},
           {"k", k}};
    write_json(cfg.results_dir / "baseline.json", j);
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_query(const Common& common, const std::string& text, const QueryOptions& opt) {
    auto cfg = common.load();
    auto vocab = Vocabulary::street_scene();
    auto registry = make_registry(cfg, vocab);
    auto corpus = load_corpus(cfg);
    auto dir = corpus_dir(cfg, corpus);
    if (!fs::exists(dir / "manifest.jsonl")) {
        throw Error(ErrorCode::kNotReady, "no stores under '" + dir.string() + "'; run preprocess first");
    }
    auto engine = Engine::open(dir, registry, cfg.engine);
    auto result = engine->answer_query(text, opt);
    if (result.timing.extraction_units > 0) engine->save(dir);
    auto j = to_json(result);
    std::ofstream log(cfg.results_dir / "queries.jsonl", std::ios::app);
    log << j.dump() << '\n';
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_eval_recall(const Common& common) {
    auto cfg = common.load();
    auto vocab = Vocabulary::street_scene();
    auto registry = make_registry(cfg, vocab);
    auto corpus = load_corpus(cfg);
    std::vector<std::string> queries;
    for (const auto& s : pool_for(cfg, corpus, *registry, cfg.eval.queries)) queries.push_back(s.query);
    std::vector<RecallSets> sets;
    auto rows = recall_experiment(corpus, registry, cfg.engine, queries, cfg.eval.recall_k, RecallMode::kColdPlan,
                                  std::nullopt, &sets);
    std::ofstream log(cfg.results_dir / "recall_sets.jsonl");
    for (const auto& s : sets) log << to_json(s).dump() << '\n';
    write_json(cfg.results_dir / "recall.json", json{{"queries", queries.size()}, {"rows", to_json(rows)}});
    write_text(cfg.results_dir / "recall.txt", format_table(rows));
    std::cout << format_table(rows);
    return 0;
}

int cmd_eval_filtering(const Common& common) {
    auto cfg = common.load();
    auto vocab = Vocabulary::street_scene();
    auto registry = make_registry(cfg, vocab);
    const auto& f = cfg.eval.filtering;
    auto train = gen_signature_corpus(f.train_seed, f.clips_per_pair, vocab);
    auto eval = gen_signature_corpus(f.eval_seed, f.clips_per_pair, vocab);
    auto report = filtering_tradeoff(train, eval, registry, cfg.engine, existence_queries(vocab),
                                     FilteringSetup{f.label_k, f.k_grid});
    write_json(cfg.results_dir / "filtering.json", to_json(report));
    write_text(cfg.results_dir / "filtering.txt", format_table(report));
    std::cout << format_table(report);
    return 0;
}

std::vector<StreamRun> streams(const AppConfig& cfg, const std::vector<std::size_t>& ks, bool repeat) {
    auto vocab = Vocabulary::street_scene();
    auto registry = make_registry(cfg, vocab);
    auto corpus = load_corpus(cfg);
    auto pool = pool_for(cfg, corpus, *registry, cfg.eval.pool);
    auto stream = sample_stream(pool, cfg.eval.stream_length, cfg.eval.stream_seed);
    std::vector<StreamRun> runs;
    for (auto k : ks) runs.push_back(run_stream(corpus, registry, cfg.engine, stream, k, cfg.eval.heavyweight_model, repeat));
    return runs;
}

int cmd_eval_fraction(const Common& common) {
    auto cfg = common.load();
    auto runs = streams(cfg, cfg.eval.fraction_k, false);
    json rows = json::array();
    for (const auto& r : runs) rows.push_back({{"k", r.k}, {"fraction_extracted", r.fraction_extracted}});
    write_json(cfg.results_dir / "fraction.json", json{{"model", cfg.eval.heavyweight_model}, {"rows", rows}});
    write_text(cfg.results_dir / "fraction.txt", format_fraction_table(runs));
    std::cout << format_fraction_table(runs);
    return 0;
}

int cmd_eval_latency(const Common& common) {
    auto cfg = common.load();
    auto runs = streams(cfg, cfg.eval.latency_k, true);
    json all = json::array();
    for (const auto& r : runs) all.push_back(to_json(r));
    write_json(cfg.results_dir / "latency.json", all);
    write_text(cfg.results_dir / "latency.txt", format_latency_table(runs));
    std::cout << format_latency_table(runs);
    return 0;
}

int cmd_eval_equivalence(const Common& common) {
    auto cfg = common.load();
    auto vocab = Vocabulary::street_scene();
    auto registry = make_registry(cfg, vocab);
    auto corpus = load_corpus(cfg);
    auto report = equivalence_sweep(corpus, registry, cfg.engine, attribute_queries(vocab));
    write_json(cfg.results_dir / "equivalence.json", to_json(report));
    std::cout << report.matched_eligible() << "/" << report.eligible() << " eligible queries match ("
              << report.cases.size() << " total)\n";
    return 0;
}

int cmd_train_knn(const Common& common, const std::string& out, bool attach) {
    auto cfg = common.load();
    auto vocab = Vocabulary::street_scene();
    auto registry = make_registry(cfg, vocab);
    const auto& f = cfg.eval.filtering;
    auto train = gen_signature_corpus(f.train_seed, f.clips_per_pair, vocab);
    std::size_t top_n = f.k_grid.empty() ? cfg.engine.planner.top_n : *std::max_element(f.k_grid.begin(), f.k_grid.end());
    auto knn = train_filter(train, registry, cfg.engine, existence_queries(vocab), f.label_k, top_n);
    fs::path path = out.empty() ? cfg.results_dir / "knn.db" : fs::path(out);
    persist(knn, path);
    json j{{"points", knn.size()}, {"positive", knn.count_label(1)}, {"feature_dim", knn.feature_dim()},
           {"path", path.string()}};
    if (attach) {
        auto dir = corpus_dir(cfg, load_corpus(cfg));
        fs::create_directories(dir);
        fs::copy_file(path, dir / "knn.db", fs::copy_options::overwrite_existing);
        j["attached"] = (dir / "knn.db").string();
    }
    write_json(cfg.results_dir / "knn.json", j);
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_serve(const Common& common, const std::string& host, int port) {
    auto cfg = common.load();
    auto vocab = Vocabulary::street_scene();
    ServiceOptions opt{cfg.data_dir, cfg.engine, cfg.service.threads, cfg.service.query_timeout_ms};
    Service service(opt, make_registry(cfg, vocab));
    std::string h = host.empty() ? cfg.service.host : host;
    int p = port ? port : cfg.service.port;
    std::cerr << "serving /v1 on " << h << ':' << p << " (data " << cfg.data_dir.string() << ")\n";
    service.listen(h, p);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"incrag: incremental retrieval-augmented generation over clip-indexed media"};
    app.require_subcommand(1);
    Common common;

    std::string out;
    auto* gen = app.add_subcommand("gen", "write the configured synthetic corpus as a manifest");
    add_common(gen, common);
    gen->add_option("-o,--out", out, "manifest path (default <results>/corpus.jsonl)");

    bool compare = false;
    auto* pre = app.add_subcommand("preprocess", "run the lightweight models and persist the stores");
    add_common(pre, common);
    pre->add_flag("--compare", compare, "also run the full-upfront baseline and report the cost ratio");

    std::size_t baseline_k = 8;
    auto* base = app.add_subcommand("baseline", "full-upfront extraction and answers to the attribute queries");
    add_common(base, common);
    base->add_option("-k", baseline_k, "context size")->check(CLI::PositiveNumber);

    std::string text;
    std::size_t qk = 0, qf = 0, qiter = 0;
    auto* query = app.add_subcommand("query", "answer one query against the persisted stores");
    add_common(query, common);
    query->add_option("text", text, "query text")->required();
    auto* kopt = query->add_option("-k", qk, "context size")->check(CLI::PositiveNumber);
    auto* fopt = query->add_option("--top-f", qf, "frame-retrieval depth (0 disables)");
    auto* iopt = query->add_option("--max-iterations", qiter, "incremental rounds")->check(CLI::PositiveNumber);

    auto* eval = app.add_subcommand("eval", "evaluation experiments");
    eval->require_subcommand(1);
    auto* recall = eval->add_subcommand("recall", "recall@k, text-only vs text+frames");
    auto* filtering = eval->add_subcommand("filtering", "context filtering cost and recall");
    auto* fraction = eval->add_subcommand("fraction", "fraction of clips extracted after a query stream");
    auto* latency = eval->add_subcommand("latency", "per-query latency over a cold stream and a repeat pass");
    auto* equivalence = eval->add_subcommand("equivalence", "converged answers against the baseline");
    for (auto* c : {recall, filtering, fraction, latency, equivalence}) add_common(c, common);

    std::string knn_out;
    bool attach = false;
    auto* knn = app.add_subcommand("train-knn", "train the context filter and persist it");
    add_common(knn, common);
    knn->add_option("-o,--out", knn_out, "model path (default <results>/knn.db)");
    knn->add_flag("--attach", attach, "also install it next to the configured corpus stores");

    std::string host;
    int port = 0;
    auto* serve = app.add_subcommand("serve", "run the /v1 HTTP service");
    add_common(serve, common);
    serve->add_option("--host", host, "bind address (default from config)");
    serve->add_option("--port", port, "port (default from config)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return cmd_gen(common, out);
        if (*pre) return cmd_preprocess(common, compare);
        if (*base) return cmd_baseline(common, baseline_k);
        if (*query) {
            QueryOptions opt;
            if (*kopt) opt.k = qk;
            if (*fopt) opt.top_f = qf;
            if (*iopt) opt.max_iterations = qiter;
            return cmd_query(common, text, opt);
        }
        if (*recall) return cmd_eval_recall(common);
        if (*filtering) return cmd_eval_filtering(common);
        if (*fraction) return cmd_eval_fraction(common);
        if (*latency) return cmd_eval_latency(common);
        if (*equivalence) return cmd_eval_equivalence(common);
        if (*knn) return cmd_train_knn(common, knn_out, attach);
        if (*serve) return cmd_serve(common, host, port);
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

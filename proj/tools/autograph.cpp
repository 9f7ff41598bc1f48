// autograph command-line entry point.
//
// Exit codes: 0 success, 1 config/usage, 2 data error, 3 upstream failure.

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "autograph/config.hpp"
#include "autograph/data.hpp"
#include "autograph/errors.hpp"
#include "autograph/eval.hpp"
#include "autograph/graph_store.hpp"
#include "autograph/grpo.hpp"
#include "autograph/scoring.hpp"
#include "autograph/server.hpp"

namespace fs = std::filesystem;
using namespace autograph;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kUpstream = 3 };

struct GlobalOptions {
    std::string config_file;
    std::vector<std::string> sets;
    std::string log_level = "info";
};

// "a.b.c=value" -> {"a":{"b":{"c":value}}}. The value is JSON when it parses,
// a plain string otherwise.
json override_from_assignment(const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key.path=value, got '" + assignment + "'");
    std::string path = assignment.substr(0, eq);
    std::string raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    std::vector<std::string> keys;
    std::size_t start = 0;
    for (std::size_t dot; (dot = path.find('.', start)) != std::string::npos; start = dot + 1)
        keys.push_back(path.substr(start, dot - start));
    keys.push_back(path.substr(start));
    json out = value;
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) out = json{{*it, out}};
    return out;
}

RunConfig resolve_config(const GlobalOptions& g, const json& flag_overrides) {
    RunConfig cfg;
    if (!g.config_file.empty()) cfg = RunConfig::load(g.config_file);
    cfg.apply_env();
    for (const auto& s : g.sets) cfg.merge(override_from_assignment(s));
    if (!flag_overrides.empty()) cfg.merge(flag_overrides);
    return cfg;
}

fs::path make_run_dir(const RunConfig& cfg, const std::string& command) {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    fs::path dir = fs::path(cfg.paths.runs_dir) / (std::string(stamp) + "-" + cfg.hash());
    fs::create_directories(dir);
    std::ofstream(dir / "config.json") << cfg.to_json().dump(2) << '\n';
    std::ofstream(dir / "command.txt") << command << '\n';
    return dir;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::vector<Passage> resolve_corpus(const RunConfig& cfg, const std::vector<DatasetRecord>* records) {
    if (!cfg.paths.corpus.empty()) return load_corpus_manifest(cfg.paths.corpus);
    if (records) return union_corpus(*records);
    throw ConfigError("no corpus: set paths.corpus (--corpus)");
}

ConstructionResult construct(const RunConfig& cfg, const std::vector<Passage>& corpus) {
    std::map<std::string, std::string> outputs;
    if (!cfg.paths.constructor_outputs.empty()) outputs = load_constructor_outputs(cfg.paths.constructor_outputs);
    std::shared_ptr<const ChatGateway> gateway;
    bool needs_gateway = std::any_of(corpus.begin(), corpus.end(),
                                     [&](const Passage& p) { return !outputs.count(p.id); });
    if (needs_gateway) gateway = make_gateway(cfg.llm);
    return construct_graph(corpus, outputs, gateway.get(), cfg.constructor.decoding());
}

// ---------------------------------------------------------------------------

int cmd_build_graph(const RunConfig& cfg) {
    auto corpus = resolve_corpus(cfg, nullptr);
    auto run_dir = make_run_dir(cfg, "build-graph");
    ConstructionResult built = construct(cfg, corpus);
    GraphStore store(cfg.paths.graph_store);
    std::string id = store.put(built.graph);

    json failures = json::array();
    for (const auto& f : built.failures) failures.push_back({{"passage_id", f.passage_id}, {"message", f.message}});
    json out = {{"graph_id", id},
                {"stats", graph_stats(built.graph).to_json()},
                {"malformed_count", built.malformed_count},
                {"failures", failures},
                {"config", cfg.to_json()}};
    write_json(run_dir / "build.json", out);
    out.erase("config");
    std::cout << out.dump(2) << std::endl;
    spdlog::info("run directory {}", run_dir.string());
    return kOk;
}

int cmd_eval(const RunConfig& cfg, bool mcq) {
    std::vector<DatasetRecord> records;
    if (!cfg.paths.dataset.empty()) {
        LoadedDataset ds = load_dataset(cfg.paths.dataset, parse_dataset_format(cfg.paths.dataset_format));
        for (const auto& e : ds.errors)
            spdlog::warn("dataset record {} ({}): {}", e.index, e.record_id, e.message);
        records = std::move(ds.records);
    } else if (!mcq) {
        throw ConfigError("eval needs paths.dataset (--dataset)");
    }

    std::shared_ptr<const KnowledgeGraph> graph;
    std::vector<Passage> corpus;
    if (!cfg.paths.graph_id.empty()) {
        graph = GraphStore(cfg.paths.graph_store).get(cfg.paths.graph_id);
        for (const auto& [_, p] : graph->passages()) corpus.push_back(p);
    } else {
        corpus = resolve_corpus(cfg, records.empty() ? nullptr : &records);
        graph = std::make_shared<const KnowledgeGraph>(construct(cfg, corpus).graph);
    }

    auto run_dir = make_run_dir(cfg, mcq ? "eval --mcq" : "eval");
    auto gateway = make_gateway(cfg.llm);
    EvalReport report;
    if (mcq) {
        report = mcq_intrinsic_harness(corpus, *graph, *gateway, cfg.mcq.decoding(), cfg.to_json());
    } else {
        std::vector<QASample> samples;
        for (const auto& r : records) samples.push_back(r.to_sample());
        auto embedder = make_embedder(cfg.embedding);
        EvalOptions opts;
        opts.answer_decoding = cfg.answer.decoding();
        opts.recall_k = cfg.eval.recall_k;
        opts.workers = cfg.eval.workers;
        report = run_qa_eval(*graph, samples, cfg.retriever, *gateway, *embedder, opts, cfg.to_json());
    }
    write_json(run_dir / "report.json", report.to_json());
    std::ofstream(run_dir / "report.txt") << report.table();
    std::cout << report.table();
    spdlog::info("run directory {}", run_dir.string());
    return kOk;
}

int cmd_score(const RunConfig& cfg, const std::string& fixture) {
    std::ifstream in(fixture);
    if (!in) throw DataError("cannot open " + fixture);
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ServiceContext ctx;
    ctx.config = cfg;
    ctx.gateway = make_gateway(cfg.llm);
    ctx.embedder = make_embedder(cfg.embedding);
    ApiResult r = api_score(ctx, body);
    std::cout << r.text() << std::endl;
    if (r.status == 200) return kOk;
    if (r.status == 502) return kUpstream;
    return kData;
}

int cmd_serve(const RunConfig& cfg) {
    // Route SIGINT/SIGTERM to a watcher thread; every other thread inherits
    // the blocked mask.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    HttpServer server(ServiceContext::from_config(cfg));
    server.bind();
    std::thread watcher([&] {
        int sig = 0;
        sigwait(&set, &sig);
        spdlog::info("signal {} received, draining", sig);
        server.stop();
    });
    server.run();
    if (watcher.joinable()) {
        // run() also returns when the listener fails; wake the watcher then.
        pthread_kill(watcher.native_handle(), SIGTERM);
        watcher.join();
    }
    return kOk;
}

int cmd_grpo(const RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError(path + ":" + std::to_string(lineno) + ": invalid JSON");
        RolloutGroup g = RolloutGroup::from_json(j);
        g.validate();
        json out = {{"line", lineno},
                    {"advantages", group_advantages(g.rewards, cfg.grpo.std_floor)},
                    {"objective", grpo_objective(g, cfg.grpo)}};
        std::cout << out.dump() << '\n';
    }
    return kOk;
}

double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()))) ;
    return v[std::min(v.size() - 1, idx == 0 ? 0 : idx - 1)];
}

int cmd_telemetry(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::map<std::string, std::vector<double>> latency;
    std::map<std::string, std::map<int, std::size_t>> statuses;
    std::vector<double> rewards, penalized, p_rep;
    std::size_t groups = 0, zero_variance = 0, skipped = 0;
    std::string line;
    while (std::getline(in, line)) {
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("path")) {
            ++skipped;
            continue;
        }
        std::string p = j["path"].get<std::string>();
        latency[p].push_back(j.value("latency_ms", 0.0));
        ++statuses[p][j.value("status", 0)];
        if (j.contains("penalized_rewards")) {
            ++groups;
            std::vector<double> pr = j["penalized_rewards"].get<std::vector<double>>();
            if (pr.size() >= 2 && std::all_of(pr.begin(), pr.end(), [&](double x) { return x == pr.front(); }))
                ++zero_variance;
            penalized.insert(penalized.end(), pr.begin(), pr.end());
            for (double x : j["rewards"].get<std::vector<double>>()) rewards.push_back(x);
            for (double x : j["p_rep"].get<std::vector<double>>()) p_rep.push_back(x);
        }
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    json endpoints = json::object();
    for (const auto& [p, lat] : latency) {
        json st = json::object();
        for (const auto& [code, n] : statuses[p]) st[std::to_string(code)] = n;
        endpoints[p] = {{"requests", lat.size()},
                        {"status", st},
                        {"latency_ms", {{"p50", percentile(lat, 0.50)},
                                        {"p95", percentile(lat, 0.95)},
                                        {"p99", percentile(lat, 0.99)},
                                        {"max", percentile(lat, 1.0)}}}};
    }
    json out = {{"endpoints", endpoints},
                {"score_groups", groups},
                {"zero_variance_groups", zero_variance},
                {"generations", rewards.size()},
                {"mean_reward", mean(rewards)},
                {"mean_penalized_reward", mean(penalized)},
                {"mean_p_rep", mean(p_rep)},
                {"unparsed_lines", skipped}};
    std::cout << out.dump(2) << std::endl;
    return kOk;
}

int cmd_pools(const RunConfig& cfg, std::size_t pool_size, bool hard_negative, const std::string& out_path) {
    LoadedDataset ds = load_dataset(cfg.paths.dataset, parse_dataset_format(cfg.paths.dataset_format));
    for (const auto& e : ds.errors) spdlog::warn("dataset record {} ({}): {}", e.index, e.record_id, e.message);
    std::vector<Passage> corpus = resolve_corpus(cfg, &ds.records);
    auto embedder = hard_negative ? make_embedder(cfg.embedding) : nullptr;
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write " + out_path);
    std::size_t short_pools = 0;
    for (const auto& rec : ds.records) {
        std::optional<Passage> hn;
        if (hard_negative) hn = mine_hard_negative(rec, corpus, *embedder);
        AssembledPool pool = assemble_pool(rec, pool_size, hard_negative, hn);
        short_pools += pool.short_of_target ? 1 : 0;
        out << to_generic_json(pool.record).dump() << '\n';
    }
    spdlog::info("{} records written, {} short of {} passages", ds.records.size(), short_pools, pool_size);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("autograph"));

    CLI::App app{"Graph construction, retrieval and reward tooling"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("-c,--config", g.config_file, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--set", g.sets, "Override a config key, e.g. --set reward.lambda_rep=0.5");
    app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error")->capture_default_str();

    // Shared path flags; each one wins over the config file.
    std::string corpus, dataset, dataset_format, outputs, graph_store, graph_id, runs_dir, llm_script, retriever;
    auto add_paths = [&](CLI::App* sub) {
        sub->add_option("--corpus", corpus, "Corpus manifest (JSONL id/text/source_doc)");
        sub->add_option("--outputs", outputs, "Constructor outputs (JSONL id/output)");
        sub->add_option("--graph-store", graph_store, "Graph store directory");
        sub->add_option("--runs-dir", runs_dir, "Run output directory");
        sub->add_option("--llm-script", llm_script, "Scripted gateway fixture");
    };

    auto* build = app.add_subcommand("build-graph", "Construct and persist a corpus graph");
    add_paths(build);

    auto* eval = app.add_subcommand("eval", "Answer questions over a graph and score them");
    add_paths(eval);
    bool mcq = false;
    eval->add_option("--dataset", dataset, "Dataset file");
    eval->add_option("--format", dataset_format, "hotpot_json|musique_json|generic_jsonl");
    eval->add_option("--graph-id", graph_id, "Use a stored graph instead of building one");
    eval->add_option("--retriever", retriever, "subgraph|dense_triples|tog|ppr");
    eval->add_flag("--mcq", mcq, "Run the per-passage multiple-choice harness");

    auto* score = app.add_subcommand("score", "Replay a score request without HTTP");
    std::string fixture;
    score->add_option("request", fixture, "ScoreRequest JSON file")->required()->check(CLI::ExistingFile);
    score->add_option("--llm-script", llm_script, "Scripted gateway fixture");

    auto* serve = app.add_subcommand("serve", "Run the scoring service");
    add_paths(serve);
    std::string host;
    int port = -1;
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Bind port (0 picks a free one)");

    auto* grpo = app.add_subcommand("grpo", "Advantages and surrogate objective for rollout groups");
    std::string rollouts;
    grpo->add_option("rollouts", rollouts, "JSONL of {rewards, logp_new, logp_old}")->required()->check(CLI::ExistingFile);

    auto* telemetry = app.add_subcommand("telemetry", "Summarize a server request log");
    std::string log_path;
    telemetry->add_option("log", log_path, "Request log (JSONL)")->required()->check(CLI::ExistingFile);

    auto* pools = app.add_subcommand("pools", "Assemble fixed-size training passage pools");
    std::size_t pool_size = 15;
    bool hard_negative = false;
    std::string pools_out;
    pools->add_option("--dataset", dataset, "Dataset file")->required();
    pools->add_option("--format", dataset_format, "hotpot_json|musique_json|generic_jsonl");
    pools->add_option("--corpus", corpus, "Corpus manifest for hard-negative mining");
    pools->add_option("--pool-size", pool_size)->capture_default_str();
    pools->add_flag("--hard-negative", hard_negative, "Add the most query-similar non-gold passage");
    pools->add_option("-o,--output", pools_out, "Output JSONL")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }
    spdlog::set_level(spdlog::level::from_str(g.log_level));

    try {
        json flags = json::object();
        auto set_path = [&](const char* key, const std::string& v) {
            if (!v.empty()) flags["paths"][key] = v;
        };
        set_path("corpus", corpus);
        set_path("dataset", dataset);
        set_path("dataset_format", dataset_format);
        set_path("constructor_outputs", outputs);
        set_path("graph_store", graph_store);
        set_path("graph_id", graph_id);
        set_path("runs_dir", runs_dir);
        if (!llm_script.empty()) flags["llm"] = {{"kind", "scripted"}, {"script", llm_script}};
        if (!retriever.empty()) flags["retriever"]["kind"] = retriever;
        if (!host.empty()) flags["server"]["host"] = host;
        if (port >= 0) flags["server"]["port"] = port;

        if (*telemetry) return cmd_telemetry(log_path);
        RunConfig cfg = resolve_config(g, flags);
        if (*build) return cmd_build_graph(cfg);
        if (*eval) return cmd_eval(cfg, mcq);
        if (*score) return cmd_score(cfg, fixture);
        if (*serve) return cmd_serve(cfg);
        if (*grpo) return cmd_grpo(cfg, rollouts);
        if (*pools) return cmd_pools(cfg, pool_size, hard_negative, pools_out);
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        switch (e.category()) {
            case Error::Category::Config: return kUsage;
            case Error::Category::Data: return kData;
            case Error::Category::Upstream: return kUpstream;
            case Error::Category::Internal: return kData;
        }
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kData;
    }
    return kOk;
}

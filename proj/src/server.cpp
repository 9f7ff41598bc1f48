#include "autograph/server.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "autograph/errors.hpp"
#include "autograph/retriever.hpp"
#include "autograph/scoring.hpp"

namespace autograph {

ServiceContext ServiceContext::from_config(const RunConfig& config) {
    ServiceContext ctx;
    ctx.config = config;
    ctx.gateway = make_gateway(config.llm);
    ctx.embedder = make_embedder(config.embedding);
    ctx.store = std::make_shared<GraphStore>(config.paths.graph_store);
    return ctx;
}

namespace {

ApiResult error_result(int status, const std::string& message) {
    return {status, {{"error", {{"status", status}, {"message", message}}}}};
}

json parse_body(std::string_view body) {
    auto j = json::parse(body, nullptr, false);
    if (j.is_discarded()) throw RequestError(400, "request body is not valid JSON");
    if (!j.is_object()) throw RequestError(400, "request body must be a JSON object");
    return j;
}

// Shared exception-to-status mapping. `not_found` is the status for
// ReferenceError (404 where the caller named a stored graph).
template <typename F>
ApiResult guarded(F&& f, int not_found = 422) {
    try {
        return f();
    } catch (const RequestError& e) {
        return error_result(e.status(), e.what());
    } catch (const ConflictError& e) {
        return error_result(409, e.what());
    } catch (const ReferenceError& e) {
        return error_result(not_found, e.what());
    } catch (const Error& e) {
        switch (e.category()) {
            case Error::Category::Upstream: return error_result(502, e.what());
            case Error::Category::Config:
            case Error::Category::Data: return error_result(422, e.what());
            case Error::Category::Internal: break;
        }
        return error_result(500, e.what());
    } catch (const json::exception& e) {
        return error_result(400, e.what());
    } catch (const std::exception& e) {
        spdlog::error("internal error: {}", e.what());
        return error_result(500, e.what());
    }
}

std::vector<Passage> passages_from_json(const json& arr) {
    if (!arr.is_array()) throw RequestError(400, "'passages' must be an array");
    std::vector<Passage> out;
    for (const auto& p : arr) {
        if (!p.is_object() || !p.contains("id") || !p["id"].is_string() || !p.contains("text") ||
            !p["text"].is_string())
            throw RequestError(400, "each passage needs string 'id' and 'text'");
        out.push_back({p["id"].get<std::string>(), p["text"].get<std::string>(),
                       p.value("source_doc", std::string())});
    }
    return out;
}

KnowledgeGraph inline_graph(const json& g) {
    if (!g.is_object() || !g.contains("passages") || !g.contains("edges") || !g["edges"].is_array())
        throw RequestError(400, "inline graph needs 'passages' and 'edges'");
    std::string passages, edges;
    for (const auto& p : passages_from_json(g["passages"]))
        passages += json{{"id", p.id}, {"text", p.text}, {"source_doc", p.source_doc}}.dump() + "\n";
    for (const auto& e : g["edges"]) edges += e.dump() + "\n";
    try {
        return KnowledgeGraph::from_jsonl(edges, passages);
    } catch (const ReferenceError& e) {
        throw RequestError(422, e.what());
    }
}

}  // namespace

ApiResult api_score(const ServiceContext& ctx, std::string_view body) {
    return guarded([&] {
        ScoreRequest req = ScoreRequest::from_json(parse_body(body), ScoreParams::from_config(ctx.config));
        ScoreResponse resp = score(req, *ctx.gateway, *ctx.embedder);
        return ApiResult{200, resp.to_json()};
    });
}

ApiResult api_retrieve(const ServiceContext& ctx, std::string_view body) {
    return guarded(
        [&] {
            json j = parse_body(body);
            if (!j.contains("query") || !j["query"].is_string())
                throw RequestError(400, "missing string field 'query'");
            RetrieverSpec spec = ctx.config.retriever;
            if (j.contains("retriever")) {
                try {
                    spec.update_from_json(j["retriever"]);
                } catch (const ConfigError& e) {
                    throw RequestError(422, e.what());
                }
            }
            std::shared_ptr<const KnowledgeGraph> graph;
            if (j.contains("graph_id")) {
                if (!j["graph_id"].is_string()) throw RequestError(400, "'graph_id' must be a string");
                graph = ctx.store->get(j["graph_id"].get<std::string>());
            } else if (j.contains("graph")) {
                graph = std::make_shared<const KnowledgeGraph>(inline_graph(j["graph"]));
            } else {
                throw RequestError(400, "request needs 'graph_id' or 'graph'");
            }
            Retrieval r = run_retriever(*graph, j["query"].get<std::string>(), spec, *ctx.embedder,
                                        ctx.gateway.get());
            return ApiResult{200, {{"retriever", spec.to_json()}, {"result", retrieval_to_json(r)}}};
        },
        404);
}

ApiResult api_put_graph(const ServiceContext& ctx, std::string_view body) {
    return guarded([&] {
        json j = parse_body(body);
        if (!j.contains("passages")) throw RequestError(400, "missing field 'passages'");
        std::vector<Passage> passages = passages_from_json(j["passages"]);
        if (passages.empty()) throw RequestError(422, "'passages' must not be empty");

        std::map<std::string, std::string> outputs;
        if (j.contains("outputs")) {
            const auto& o = j["outputs"];
            if (!o.is_object()) throw RequestError(400, "'outputs' must map passage id to raw output");
            for (const auto& [pid, raw] : o.items()) {
                if (!raw.is_string()) throw RequestError(400, "outputs must be strings");
                outputs[pid] = raw.get<std::string>();
            }
        }
        bool construct = j.value("construct", false);
        if (!construct) {
            for (const auto& p : passages) {
                if (!outputs.count(p.id))
                    throw RequestError(422, "no output for passage '" + p.id + "' and construct=false");
            }
        }
        ConstructionResult built = construct_graph(passages, outputs, construct ? ctx.gateway.get() : nullptr,
                                                   ctx.config.constructor.decoding());
        bool existed = ctx.store->contains(graph_id(built.graph));
        std::string id = ctx.store->put(built.graph);
        json failures = json::array();
        for (const auto& f : built.failures) failures.push_back({{"passage_id", f.passage_id}, {"message", f.message}});
        return ApiResult{existed ? 200 : 201,
                         {{"graph_id", id},
                          {"stats", graph_stats(built.graph).to_json()},
                          {"malformed_count", built.malformed_count},
                          {"failures", failures}}};
    });
}

ApiResult api_get_graph(const ServiceContext& ctx, const std::string& id) {
    return guarded(
        [&] {
            auto g = ctx.store->get(id);
            return ApiResult{200, {{"graph_id", id}, {"stats", graph_stats(*g).to_json()}}};
        },
        404);
}

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
    ServiceContext ctx;
    httplib::Server svr;
    std::thread thread;
    std::atomic<int> port{-1};
    std::atomic<std::uint64_t> request_counter{0};
    std::mutex log_mutex;
    std::ofstream log_file;

    void log_request(const httplib::Request& req, const httplib::Response& res, double latency_ms);
    void install_routes();
};

namespace {
thread_local std::chrono::steady_clock::time_point t_request_start;

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::now();
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

void reply(httplib::Response& res, const ApiResult& r) {
    res.status = r.status;
    res.set_content(r.text(), "application/json");
}
}  // namespace

void HttpServer::Impl::log_request(const httplib::Request& req, const httplib::Response& res,
                                   double latency_ms) {
    json line = {{"ts", utc_timestamp()},
                 {"request_id", ++request_counter},
                 {"method", req.method},
                 {"path", req.path},
                 {"status", res.status},
                 {"latency_ms", std::round(latency_ms * 1000.0) / 1000.0}};
    if (req.path == "/v1/score" && res.status == 200) {
        auto body = json::parse(res.body, nullptr, false);
        if (!body.is_discarded() && body.contains("per_generation")) {
            json rewards = json::array(), penalized = json::array(), p_rep = json::array();
            for (const auto& g : body["per_generation"]) {
                rewards.push_back(g["reward"]);
                penalized.push_back(g["penalized_reward"]);
                p_rep.push_back(g["p_rep"]);
            }
            line["rewards"] = rewards;
            line["penalized_rewards"] = penalized;
            line["p_rep"] = p_rep;
        }
    }
    std::string text = line.dump();
    std::lock_guard lock(log_mutex);
    if (log_file.is_open()) {
        log_file << text << '\n';
        log_file.flush();
    } else {
        spdlog::info("{}", text);
    }
}

void HttpServer::Impl::install_routes() {
    const int threads = std::max(1, ctx.config.server.threads);
    svr.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };

    const std::string token = ctx.config.server.bearer_token;
    svr.set_pre_routing_handler([token](const httplib::Request& req, httplib::Response& res) {
        t_request_start = std::chrono::steady_clock::now();
        if (!token.empty() && req.path != "/health" &&
            req.get_header_value("Authorization") != "Bearer " + token) {
            reply(res, error_result(401, "missing or invalid bearer token"));
            return httplib::Server::HandlerResponse::Handled;
        }
        return httplib::Server::HandlerResponse::Unhandled;
    });
    svr.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
        auto elapsed = std::chrono::steady_clock::now() - t_request_start;
        log_request(req, res, std::chrono::duration<double, std::milli>(elapsed).count());
    });
    svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string msg = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            msg = e.what();
        } catch (...) {
        }
        reply(res, error_result(500, msg));
    });

    svr.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        reply(res, {200, {{"status", "ok"}}});
    });
    svr.Get("/v1/config", [this](const httplib::Request&, httplib::Response& res) {
        reply(res, {200, ctx.config.to_json()});
    });
    svr.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, api_score(ctx, req.body));
    });
    svr.Post("/v1/retrieve", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, api_retrieve(ctx, req.body));
    });
    svr.Post("/v1/graphs", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, api_put_graph(ctx, req.body));
    });
    svr.Get(R"(/v1/graphs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, api_get_graph(ctx, req.matches[1].str()));
    });
}

HttpServer::HttpServer(ServiceContext ctx) : impl_(std::make_unique<Impl>()) {
    impl_->ctx = std::move(ctx);
    if (!impl_->ctx.config.server.request_log.empty()) {
        impl_->log_file.open(impl_->ctx.config.server.request_log, std::ios::app);
        if (!impl_->log_file)
            throw ConfigError("cannot open request log " + impl_->ctx.config.server.request_log);
    }
    impl_->install_routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
    const auto& sc = impl_->ctx.config.server;
    int port = sc.port;
    if (port == 0) {
        port = impl_->svr.bind_to_any_port(sc.host);
    } else if (!impl_->svr.bind_to_port(sc.host, port)) {
        port = -1;
    }
    if (port < 0) throw ConfigError(fmt::format("cannot bind {}:{}", sc.host, sc.port));
    impl_->port = port;
    return port;
}

void HttpServer::run() {
    if (impl_->port < 0) bind();
    spdlog::info("listening on {}:{}", impl_->ctx.config.server.host, impl_->port.load());
    impl_->svr.listen_after_bind();
}

int HttpServer::start() {
    int p = bind();
    impl_->thread = std::thread([this] { impl_->svr.listen_after_bind(); });
    impl_->svr.wait_until_ready();
    return p;
}

void HttpServer::stop() {
    if (!impl_) return;
    // httplib's pool finishes queued and running requests before joining.
    impl_->svr.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

int HttpServer::port() const { return impl_->port; }

}  // namespace autograph

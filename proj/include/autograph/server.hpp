#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "autograph/config.hpp"
#include "autograph/graph_store.hpp"

namespace autograph {

/// Shared, read-mostly state behind every endpoint.
struct ServiceContext {
    RunConfig config;
    std::shared_ptr<const ChatGateway> gateway;
    std::shared_ptr<const EmbeddingProvider> embedder;
    std::shared_ptr<GraphStore> store;

    /// Gateway, embedder and store built from `config`.
    static ServiceContext from_config(const RunConfig& config);
};

struct ApiResult {
    int status = 200;
    json body;

    /// The exact bytes sent over HTTP.
    std::string text() const { return body.dump(); }
};

// Transport-independent handlers; the HTTP server and the CLI both call these.
ApiResult api_score(const ServiceContext& ctx, std::string_view body);
ApiResult api_retrieve(const ServiceContext& ctx, std::string_view body);
ApiResult api_put_graph(const ServiceContext& ctx, std::string_view body);
ApiResult api_get_graph(const ServiceContext& ctx, const std::string& id);

class HttpServer {
public:
    explicit HttpServer(ServiceContext ctx);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds host:port from the config (port 0 picks a free port) and returns
    /// the bound port. Throws ConfigError when the address is unavailable.
    int bind();
    /// Serves until stop(); blocks.
    void run();
    /// bind() and run() on a background thread.
    int start();
    /// Stops accepting connections and waits for in-flight requests.
    void stop();
    int port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace autograph

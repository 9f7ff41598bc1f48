#include "autograph/graph_store.hpp"

#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "autograph/errors.hpp"

namespace autograph {

json GraphStats::to_json() const {
    return {{"entity_nodes", entity_nodes},
            {"passage_nodes", passage_nodes},
            {"fact_edges", fact_edges},
            {"provenance_edges", provenance_edges}};
}

GraphStats graph_stats(const KnowledgeGraph& graph) {
    return {graph.entity_nodes().size(), graph.passages().size(), graph.fact_edges().size(),
            graph.provenance_edges().size()};
}

std::string graph_id(const KnowledgeGraph& graph) { return graph.content_id().substr(0, 16); }

GraphStore::GraphStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
}

std::filesystem::path GraphStore::dir_for(const std::string& id) const {
    bool ok = !id.empty() && id.size() <= 64;
    for (char c : id) ok = ok && ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'));
    if (!ok) throw ReferenceError("malformed graph id '" + id + "'");
    return root_ / id;
}

std::string GraphStore::put(const KnowledgeGraph& graph) {
    const std::string id = graph_id(graph);
    std::lock_guard lock(mutex_);
    auto dir = dir_for(id);
    if (std::filesystem::exists(dir / "edges.jsonl")) {
        KnowledgeGraph stored = KnowledgeGraph::load(dir / "edges.jsonl", dir / "passages.jsonl");
        if (!(stored == graph)) throw ConflictError("graph id " + id + " already holds different content");
        return id;
    }
    // Write under a temporary name first so readers never see half a graph.
    auto tmp = root_ / (id + ".tmp");
    std::filesystem::remove_all(tmp);
    std::filesystem::create_directories(tmp);
    graph.save(tmp / "edges.jsonl", tmp / "passages.jsonl");
    std::filesystem::rename(tmp, dir);
    cache_[id] = std::make_shared<const KnowledgeGraph>(graph);
    return id;
}

std::shared_ptr<const KnowledgeGraph> GraphStore::get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(id); it != cache_.end()) return it->second;
    auto dir = dir_for(id);
    if (!std::filesystem::exists(dir / "edges.jsonl")) throw ReferenceError("unknown graph id '" + id + "'");
    auto g = std::make_shared<const KnowledgeGraph>(
        KnowledgeGraph::load(dir / "edges.jsonl", dir / "passages.jsonl"));
    if (graph_id(*g) != id) throw ConflictError("stored graph " + id + " fails its content hash");
    cache_[id] = g;
    return g;
}

bool GraphStore::contains(const std::string& id) const {
    try {
        return std::filesystem::exists(dir_for(id) / "edges.jsonl");
    } catch (const ReferenceError&) {
        return false;
    }
}

ConstructionResult construct_graph(const std::vector<Passage>& passages,
                                   const std::map<std::string, std::string>& outputs,
                                   const ChatGateway* gateway, const Decoding& decoding) {
    if (passages.empty()) throw DataError("corpus is empty");
    ConstructionResult res;
    std::vector<std::pair<std::string, std::vector<Triple>>> per_passage;
    std::exception_ptr last_error;
    for (const auto& p : passages) {
        try {
            std::string raw;
            if (auto it = outputs.find(p.id); it != outputs.end()) {
                raw = it->second;
            } else if (gateway) {
                ++res.gateway_calls;
                ChatResponse reply = gateway->complete(templates::kConstruct, {{"passage", p.text}}, decoding);
                if (reply.truncated()) spdlog::warn("passage {}: construction output truncated", p.id);
                raw = std::move(reply.text);
            } else {
                throw DataError("no constructor output and no gateway");
            }
            ParsedTriples parsed = parse_triples(raw);
            res.malformed_count += parsed.malformed_count;
            per_passage.emplace_back(p.id, std::move(parsed.triples));
        } catch (const Error& e) {
            if (e.category() == Error::Category::Config) throw;
            spdlog::warn("passage {}: {}", p.id, e.what());
            res.failures.push_back({p.id, e.what()});
            last_error = std::current_exception();
        }
    }
    if (res.failures.size() == passages.size()) std::rethrow_exception(last_error);
    res.graph = build_graph(per_passage, passages);
    return res;
}

std::map<std::string, std::string> load_constructor_outputs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open constructor outputs " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j["id"].is_string() ||
            !j.contains("output") || !j["output"].is_string())
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected {\"id\",\"output\"}");
        out[j["id"].get<std::string>()] = j["output"].get<std::string>();
    }
    return out;
}

}  // namespace autograph

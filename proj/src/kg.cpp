#include "autograph/kg.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include "autograph/errors.hpp"

namespace autograph {

Triple make_triple(std::string_view subject, std::string_view relation, std::string_view object) {
    Triple t{trim(subject), trim(relation), trim(object)};
    if (t.subject.empty() || t.relation.empty() || t.object.empty())
        throw DataError("triple has an empty field");
    return t;
}

std::string linearize(const Triple& t) {
    return "(" + t.subject + ", " + t.relation + ", " + t.object + ")";
}

std::string embedding_text(const Triple& t) {
    return t.subject + " " + t.relation + " " + t.object;
}

void validate(const QASample& sample) {
    std::set<std::string> ids;
    for (const auto& p : sample.context_passages) ids.insert(p.id);
    for (const auto& g : sample.gold_passage_ids) {
        if (!ids.count(g))
            throw DataError("sample " + sample.id + ": gold passage " + g + " not in context");
    }
}

ParsedTriples parse_triples(std::string_view raw_output) {
    auto array = extract_first_json_array(raw_output);
    if (!array) throw ParseError("no JSON array found in constructor output");

    ParsedTriples out;
    for (const auto& element : *array) {
        auto field = [&](const char* key) -> std::string {
            if (!element.is_object()) return {};
            auto it = element.find(key);
            if (it == element.end() || !it->is_string()) return {};
            return trim(it->get<std::string>());
        };
        std::string s = field("subject");
        std::string r = field("relation");
        std::string o = field("object");
        if (s.empty() || r.empty() || o.empty()) {
            ++out.malformed_count;
            continue;
        }
        out.triples.push_back({std::move(s), std::move(r), std::move(o)});
    }
    return out;
}

std::string serialize_triples(const std::vector<Triple>& triples) {
    json arr = json::array();
    for (const auto& t : triples)
        arr.push_back({{"subject", t.subject}, {"relation", t.relation}, {"object", t.object}});
    return arr.dump();
}

std::string normalize_entity(std::string_view label) {
    std::string out = ascii_lower(collapse_whitespace(label));
    if (out.empty()) throw NormalizationError("label is empty after normalization");
    return out;
}

std::vector<std::string> KnowledgeGraph::passage_ids() const {
    std::vector<std::string> ids;
    ids.reserve(passages_.size());
    for (const auto& [id, _] : passages_) ids.push_back(id);
    return ids;
}

const std::vector<std::size_t>& KnowledgeGraph::incident_edges(const std::string& entity) const {
    static const std::vector<std::size_t> kNone;
    auto it = incidence_.find(entity);
    return it == incidence_.end() ? kNone : it->second;
}

bool KnowledgeGraph::operator==(const KnowledgeGraph& other) const {
    return entities_ == other.entities_ && passages_ == other.passages_ && facts_ == other.facts_ &&
           provenance_ == other.provenance_;
}

void KnowledgeGraph::index() {
    std::sort(facts_.begin(), facts_.end());
    facts_.erase(std::unique(facts_.begin(), facts_.end()), facts_.end());

    entities_.clear();
    provenance_.clear();
    incidence_.clear();
    for (std::size_t i = 0; i < facts_.size(); ++i) {
        const auto& f = facts_[i];
        entities_.insert(f.subject);
        entities_.insert(f.object);
        provenance_.push_back({f.subject, f.source_passage});
        provenance_.push_back({f.object, f.source_passage});
        incidence_[f.subject].push_back(i);
        if (f.object != f.subject) incidence_[f.object].push_back(i);
    }
    std::sort(provenance_.begin(), provenance_.end());
    provenance_.erase(std::unique(provenance_.begin(), provenance_.end()), provenance_.end());
}

KnowledgeGraph build_graph(
    const std::vector<std::pair<std::string, std::vector<Triple>>>& per_passage_triples,
    const std::vector<Passage>& passages) {
    KnowledgeGraph g;
    for (const auto& p : passages) {
        if (!g.passages_.emplace(p.id, p).second)
            throw DataError("duplicate passage id " + p.id);
    }
    for (const auto& [pid, triples] : per_passage_triples) {
        if (!g.passages_.count(pid)) throw ReferenceError("unknown passage id " + pid);
        for (const auto& t : triples) {
            g.facts_.push_back({normalize_entity(t.subject), normalize_entity(t.relation),
                                normalize_entity(t.object), pid});
        }
    }
    g.index();
    return g;
}

std::string KnowledgeGraph::edges_jsonl() const {
    std::string out;
    for (const auto& f : facts_) {
        out += canonical_dump(
            {{"s", f.subject}, {"r", f.relation}, {"o", f.object}, {"src", f.source_passage}});
        out += '\n';
    }
    return out;
}

std::string KnowledgeGraph::passages_jsonl() const {
    std::string out;
    for (const auto& [id, p] : passages_) {
        out += canonical_dump({{"id", p.id}, {"text", p.text}, {"source_doc", p.source_doc}});
        out += '\n';
    }
    return out;
}

std::string KnowledgeGraph::content_id() const {
    return sha256_hex(passages_jsonl() + "\x1e" + edges_jsonl());
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
}

template <typename Fn>
void for_each_jsonl(std::string_view text, const char* what, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        ++line_no;
        auto line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        if (line.empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw ParseError(std::string(what) + " line " + std::to_string(line_no) +
                             ": not a JSON object");
        try {
            fn(j);
        } catch (const json::exception& e) {
            throw ParseError(std::string(what) + " line " + std::to_string(line_no) + ": " +
                             e.what());
        }
    }
}

}  // namespace

void KnowledgeGraph::save(const std::filesystem::path& edges_file,
                          const std::filesystem::path& passages_file) const {
    write_file(edges_file, edges_jsonl());
    write_file(passages_file, passages_jsonl());
}

KnowledgeGraph KnowledgeGraph::load(const std::filesystem::path& edges_file,
                                    const std::filesystem::path& passages_file) {
    return from_jsonl(read_file(edges_file), read_file(passages_file));
}

KnowledgeGraph KnowledgeGraph::from_jsonl(std::string_view edges, std::string_view passages) {
    KnowledgeGraph g;
    for_each_jsonl(passages, "passage manifest", [&](const json& j) {
        Passage p{j.at("id").get<std::string>(), j.value("text", ""), j.value("source_doc", "")};
        if (!g.passages_.emplace(p.id, p).second)
            throw DataError("duplicate passage id " + p.id);
    });
    for_each_jsonl(edges, "edge file", [&](const json& j) {
        FactEdge f{j.at("s").get<std::string>(), j.at("r").get<std::string>(),
                   j.at("o").get<std::string>(), j.at("src").get<std::string>()};
        if (!g.passages_.count(f.source_passage))
            throw ReferenceError("edge references unknown passage " + f.source_passage);
        g.facts_.push_back({normalize_entity(f.subject), normalize_entity(f.relation),
                            normalize_entity(f.object), f.source_passage});
    });
    g.index();
    return g;
}

std::vector<Triple> khop_neighborhood(const KnowledgeGraph& graph,
                                      const std::set<std::string>& anchors, int k) {
    if (k < 1) throw ConfigError("k-hop neighborhood needs k >= 1");

    std::map<std::string, int> dist;
    std::deque<std::string> frontier;
    for (const auto& a : anchors) {
        std::string label;
        try {
            label = normalize_entity(a);
        } catch (const NormalizationError&) {
            continue;
        }
        if (graph.has_entity(label) && dist.emplace(label, 0).second) frontier.push_back(label);
    }

    const auto& facts = graph.fact_edges();
    while (!frontier.empty()) {
        std::string node = std::move(frontier.front());
        frontier.pop_front();
        int d = dist[node];
        if (d == k) continue;
        for (std::size_t ei : graph.incident_edges(node)) {
            const auto& f = facts[ei];
            const std::string& other = f.subject == node ? f.object : f.subject;
            if (dist.emplace(other, d + 1).second) frontier.push_back(other);
        }
    }

    std::set<Triple> out;
    for (const auto& [node, _] : dist) {
        for (std::size_t ei : graph.incident_edges(node)) {
            const auto& f = facts[ei];
            if (dist.count(f.subject) && dist.count(f.object)) out.insert(f.triple());
        }
    }
    return {out.begin(), out.end()};
}

}  // namespace autograph

#include "autograph/data.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <spdlog/spdlog.h>

#include "autograph/errors.hpp"

namespace autograph {

std::set<std::string> DatasetRecord::gold_ids() const {
    std::set<std::string> ids;
    for (const auto& p : supporting_passages) ids.insert(p.id);
    return ids;
}

QASample DatasetRecord::to_sample() const {
    QASample s{id, question, answer, candidate_passages, gold_ids()};
    validate(s);
    return s;
}

DatasetFormat parse_dataset_format(std::string_view name) {
    if (name == "hotpot_json") return DatasetFormat::HotpotJson;
    if (name == "musique_json") return DatasetFormat::MusiqueJson;
    if (name == "generic_jsonl") return DatasetFormat::GenericJsonl;
    throw ConfigError("unknown dataset format '" + std::string(name) + "'");
}

namespace {

std::string required_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        throw DataError(std::string("missing or non-string \"") + key + "\"");
    return it->get<std::string>();
}

std::string id_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw DataError(std::string("missing \"") + key + "\"");
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    throw DataError(std::string("\"") + key + "\" must be a string or integer");
}

void add_passage(DatasetRecord& r, Passage p, bool gold) {
    for (const auto& existing : r.candidate_passages) {
        if (existing.id == p.id) throw DataError("duplicate passage id " + p.id);
    }
    if (gold) r.supporting_passages.push_back(p);
    r.candidate_passages.push_back(std::move(p));
}

DatasetRecord from_generic(const json& j) {
    DatasetRecord r;
    r.id = id_field(j, "id");
    r.question = required_string(j, "question");
    r.answer = required_string(j, "answer");
    const auto& passages = j.at("passages");
    if (!passages.is_array()) throw DataError("\"passages\" must be an array");
    std::size_t i = 0;
    for (const auto& p : passages) {
        Passage passage;
        passage.id = p.contains("id") ? id_field(p, "id") : r.id + "#" + std::to_string(i);
        passage.text = required_string(p, "text");
        passage.source_doc = p.value("source_doc", p.value("title", std::string()));
        add_passage(r, std::move(passage), p.value("is_gold", false));
        ++i;
    }
    return r;
}

DatasetRecord from_hotpot(const json& j) {
    DatasetRecord r;
    r.id = id_field(j, j.contains("_id") ? "_id" : "id");
    r.question = required_string(j, "question");
    r.answer = required_string(j, "answer");
    std::set<std::string> gold_titles;
    for (const auto& fact : j.value("supporting_facts", json::array())) {
        if (fact.is_array() && !fact.empty() && fact[0].is_string())
            gold_titles.insert(fact[0].get<std::string>());
    }
    std::size_t i = 0;
    for (const auto& ctx : j.at("context")) {
        if (!ctx.is_array() || ctx.size() != 2 || !ctx[0].is_string() || !ctx[1].is_array())
            throw DataError("context entries must be [title, [sentences]]");
        std::string title = ctx[0].get<std::string>();
        std::string text;
        for (const auto& s : ctx[1]) text += s.get<std::string>();
        add_passage(r, {r.id + "#" + std::to_string(i), collapse_whitespace(text), title},
                    gold_titles.count(title) > 0);
        ++i;
    }
    return r;
}

DatasetRecord from_musique(const json& j) {
    DatasetRecord r;
    r.id = id_field(j, "id");
    r.question = required_string(j, "question");
    r.answer = required_string(j, "answer");
    std::size_t i = 0;
    for (const auto& p : j.at("paragraphs")) {
        std::size_t idx = p.contains("idx") ? p["idx"].get<std::size_t>() : i;
        add_passage(r,
                    {r.id + "#" + std::to_string(idx), required_string(p, "paragraph_text"),
                     p.value("title", std::string())},
                    p.value("is_supporting", false));
        ++i;
    }
    return r;
}

}  // namespace

LoadedDataset parse_dataset(std::string_view content, DatasetFormat format) {
    // Either one JSON array of records or one record per line.
    std::vector<std::pair<std::size_t, json>> raw;
    auto whole = json::parse(content, nullptr, false);
    if (!whole.is_discarded() && whole.is_array()) {
        for (std::size_t i = 0; i < whole.size(); ++i) raw.emplace_back(i + 1, whole[i]);
    } else {
        std::istringstream in{std::string(content)};
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            auto j = json::parse(line, nullptr, false);
            if (j.is_discarded())
                throw ParseError("dataset line " + std::to_string(line_no) + ": invalid JSON");
            raw.emplace_back(line_no, std::move(j));
        }
    }

    LoadedDataset out;
    std::set<std::string> seen;
    for (auto& [index, j] : raw) {
        std::string rid;
        if (j.is_object()) {
            const char* key = j.contains("_id") ? "_id" : "id";
            if (j.contains(key) && (j[key].is_string() || j[key].is_number_integer()))
                rid = id_field(j, key);
        }
        try {
            if (!j.is_object()) throw DataError("record is not a JSON object");
            DatasetRecord r;
            switch (format) {
                case DatasetFormat::GenericJsonl: r = from_generic(j); break;
                case DatasetFormat::HotpotJson: r = from_hotpot(j); break;
                case DatasetFormat::MusiqueJson: r = from_musique(j); break;
            }
            if (!seen.insert(r.id).second) throw DataError("duplicate record id " + r.id);
            out.records.push_back(std::move(r));
        } catch (const std::exception& e) {
            out.errors.push_back({index, rid, e.what()});
            spdlog::warn("dataset record {} ({}): {}", index, rid, e.what());
        }
    }
    return out;
}

LoadedDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open dataset " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_dataset(ss.str(), format);
}

json to_generic_json(const DatasetRecord& record) {
    auto gold = record.gold_ids();
    json passages = json::array();
    for (const auto& p : record.candidate_passages) {
        passages.push_back({{"id", p.id},
                            {"text", p.text},
                            {"source_doc", p.source_doc},
                            {"is_gold", gold.count(p.id) > 0}});
    }
    return {{"id", record.id},
            {"question", record.question},
            {"answer", record.answer},
            {"passages", passages}};
}

Passage mine_hard_negative(const DatasetRecord& record, const std::vector<Passage>& corpus,
                           const EmbeddingProvider& embedder) {
    auto gold = record.gold_ids();
    std::vector<const Passage*> pool;
    for (const auto& p : corpus) {
        if (!gold.count(p.id)) pool.push_back(&p);
    }
    if (pool.empty()) throw DataError("record " + record.id + ": corpus has no non-gold passage");

    std::vector<std::string> texts{record.question};
    for (const auto* p : pool) texts.push_back(p->text);
    auto vecs = embedder.embed(texts);
    std::vector<std::pair<std::string, Embedding>> candidates;
    std::map<std::string, const Passage*> by_id;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        candidates.emplace_back(pool[i]->id, std::move(vecs[i + 1]));
        by_id.emplace(pool[i]->id, pool[i]);
    }
    auto best = top_k_similar(vecs[0], candidates, 1);
    return *by_id.at(best.front().id);
}

AssembledPool assemble_pool(const DatasetRecord& record, std::size_t pool_size,
                            bool with_hard_negative, const std::optional<Passage>& hard_negative) {
    if (pool_size < record.supporting_passages.size())
        throw DataError("record " + record.id + ": pool size " + std::to_string(pool_size) +
                        " is smaller than its " +
                        std::to_string(record.supporting_passages.size()) + " gold passages");
    AssembledPool out;
    out.record = record;
    auto& pool = out.record.candidate_passages;
    pool = record.supporting_passages;
    std::set<std::string> taken = record.gold_ids();

    if (with_hard_negative && hard_negative && pool.size() < pool_size &&
        taken.insert(hard_negative->id).second)
        pool.push_back(*hard_negative);

    std::vector<Passage> distractors;
    for (const auto& p : record.candidate_passages) {
        if (!taken.count(p.id)) distractors.push_back(p);
    }
    std::sort(distractors.begin(), distractors.end(),
              [](const Passage& a, const Passage& b) { return a.id < b.id; });
    for (auto& d : distractors) {
        if (pool.size() >= pool_size) break;
        if (taken.insert(d.id).second) pool.push_back(std::move(d));
    }
    std::sort(pool.begin(), pool.end(), [](const Passage& a, const Passage& b) { return a.id < b.id; });

    if (pool.size() < pool_size) {
        out.short_of_target = true;
        spdlog::warn("record {}: pool has {} passages, wanted {}", record.id, pool.size(), pool_size);
    }
    return out;
}

std::vector<Passage> load_corpus_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open corpus manifest " + path.string());
    std::vector<Passage> out;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw ParseError("corpus manifest line " + std::to_string(line_no) + ": invalid JSON");
        try {
            Passage p{id_field(j, "id"), required_string(j, "text"),
                      j.value("source_doc", j.value("title", std::string()))};
            if (!ids.insert(p.id).second) throw DataError("duplicate passage id " + p.id);
            out.push_back(std::move(p));
        } catch (const DataError& e) {
            throw ParseError("corpus manifest line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void save_corpus_manifest(const std::filesystem::path& path, const std::vector<Passage>& passages) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& p : passages)
        out << canonical_dump({{"id", p.id}, {"text", p.text}, {"source_doc", p.source_doc}}) << '\n';
}

std::vector<Passage> union_corpus(const std::vector<DatasetRecord>& records) {
    std::map<std::string, Passage> by_id;
    for (const auto& r : records) {
        for (const auto& p : r.candidate_passages) by_id.emplace(p.id, p);
    }
    std::vector<Passage> out;
    for (auto& [_, p] : by_id) out.push_back(std::move(p));
    return out;
}

}  // namespace autograph

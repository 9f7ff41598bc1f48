#include "autograph/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "autograph/errors.hpp"

namespace autograph {

std::vector<std::string> normalize_answer_tokens(std::string_view text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (char c : text) {
        auto u = static_cast<unsigned char>(c);
        if (u < 0x80 && std::ispunct(u)) continue;
        cleaned.push_back(static_cast<char>(std::tolower(u)));
    }
    std::vector<std::string> tokens;
    std::string tok;
    auto flush = [&] {
        if (!tok.empty() && tok != "a" && tok != "an" && tok != "the") tokens.push_back(tok);
        tok.clear();
    };
    for (char c : cleaned) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            tok.push_back(c);
        }
    }
    flush();
    return tokens;
}

double answer_f1(std::string_view prediction, std::string_view gold) {
    auto p = normalize_answer_tokens(prediction);
    auto g = normalize_answer_tokens(gold);
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;
    std::map<std::string, int> counts;
    for (const auto& t : g) ++counts[t];
    int common = 0;
    for (const auto& t : p) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) return 0.0;
    double precision = static_cast<double>(common) / static_cast<double>(p.size());
    double recall = static_cast<double>(common) / static_cast<double>(g.size());
    return 2.0 * precision * recall / (precision + recall);
}

void EvalReport::finalize() {
    std::stable_sort(per_sample.begin(), per_sample.end(),
                     [](const SampleResult& a, const SampleResult& b) { return a.id < b.id; });
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& s : per_sample) {
        for (const auto& [name, v] : s.metrics) {
            acc[name].first += v;
            ++acc[name].second;
        }
    }
    aggregates.clear();
    for (const auto& [name, sum_count] : acc)
        aggregates[name] = sum_count.first / static_cast<double>(sum_count.second);
}

json EvalReport::to_json() const {
    json samples = json::array();
    for (const auto& s : per_sample) {
        samples.push_back(
            {{"id", s.id}, {"metrics", s.metrics}, {"flags", s.flags}, {"prediction", s.prediction}});
    }
    return {{"per_sample", samples}, {"aggregates", aggregates}, {"config", config_snapshot}};
}

std::string EvalReport::table() const {
    std::set<std::string> metric_names;
    for (const auto& s : per_sample) {
        for (const auto& [name, _] : s.metrics) metric_names.insert(name);
    }
    std::size_t id_width = 6;
    for (const auto& s : per_sample) id_width = std::max(id_width, s.id.size());

    std::string out = fmt::format("{:<{}}", "sample", id_width);
    for (const auto& m : metric_names) out += fmt::format("  {:>10}", m);
    out += "  flags\n";
    for (const auto& s : per_sample) {
        out += fmt::format("{:<{}}", s.id, id_width);
        for (const auto& m : metric_names) {
            auto it = s.metrics.find(m);
            out += it == s.metrics.end() ? fmt::format("  {:>10}", "-")
                                         : fmt::format("  {:>10.4f}", it->second);
        }
        std::string flags;
        for (const auto& f : s.flags) flags += (flags.empty() ? "" : ",") + f;
        out += "  " + flags + "\n";
    }
    out += fmt::format("{:<{}}", "mean", id_width);
    for (const auto& m : metric_names) {
        auto it = aggregates.find(m);
        out += it == aggregates.end() ? fmt::format("  {:>10}", "-")
                                      : fmt::format("  {:>10.4f}", it->second);
    }
    out += "\n";
    return out;
}

namespace {

SampleResult eval_one(const KnowledgeGraph& graph, const QASample& sample,
                      const RetrieverSpec& spec, const ChatGateway& gateway,
                      const EmbeddingProvider& embedder, const EvalOptions& options) {
    SampleResult res;
    res.id = sample.id;
    try {
        Retrieval retrieval = run_retriever(graph, sample.query, spec, embedder, &gateway);
        std::string_view tmpl;
        Bindings b{{"question", sample.query}};
        if (auto* ev = std::get_if<GraphEvidence>(&retrieval)) {
            ev->truncate(spec.max_items);
            res.metrics["evidence_size"] = static_cast<double>(ev->size());
            tmpl = templates::kAnswerGraph;
            b["triples string"] = ev->context();
        } else {
            const auto& ranking = std::get<PassageRanking>(retrieval);
            if (!sample.gold_passage_ids.empty()) {
                res.metrics["recall@" + std::to_string(options.recall_k)] =
                    recall_at_k(ranking, sample.gold_passage_ids, options.recall_k);
            }
            tmpl = templates::kAnswerText;
            b["Retrieved Texts"] = passages_context(graph, ranking);
        }

        ChatResponse reply = gateway.complete(tmpl, b, options.answer_decoding);
        if (reply.truncated()) res.flags.push_back("truncated");
        FinalAnswer answer = extract_final_answer(reply.text);
        if (answer.fallback) res.flags.push_back("no_answer_marker");
        res.prediction = answer.text;
        res.metrics["f1"] = answer_f1(answer.text, sample.gold_answer);
    } catch (const Error& e) {
        if (e.category() == Error::Category::Config) throw;
        spdlog::warn("eval sample {}: {}", sample.id, e.what());
        res.flags.push_back(e.category() == Error::Category::Upstream ? "gateway_error"
                                                                      : "data_error");
        res.metrics["f1"] = 0.0;
    }
    return res;
}

}  // namespace

EvalReport run_qa_eval(const KnowledgeGraph& graph, const std::vector<QASample>& samples,
                       const RetrieverSpec& spec, const ChatGateway& gateway,
                       const EmbeddingProvider& embedder, const EvalOptions& options,
                       const json& config_snapshot) {
    EvalReport report;
    report.config_snapshot = config_snapshot;
    report.per_sample.resize(samples.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < samples.size(); i = next++) {
            try {
                report.per_sample[i] = eval_one(graph, samples[i], spec, gateway, embedder, options);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::size_t n_workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(1, samples.size()));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    report.finalize();
    return report;
}

// ---------------------------------------------------------------------------

std::optional<int> parse_answer_letter(std::string_view text) {
    std::string s = trim(text);
    std::size_t i = 0;
    while (i < s.size() && (s[i] == '(' || s[i] == '"' || s[i] == '\'' || s[i] == '*')) ++i;
    if (i >= s.size()) return std::nullopt;
    char c = static_cast<char>(std::toupper(static_cast<unsigned char>(s[i])));
    if (c < 'A' || c > 'D') return std::nullopt;
    if (i + 1 < s.size() && std::isalnum(static_cast<unsigned char>(s[i + 1]))) return std::nullopt;
    return c - 'A';
}

namespace {
std::string strip_option_label(const std::string& option, int index) {
    std::string s = trim(option);
    if (s.size() >= 2 && std::toupper(static_cast<unsigned char>(s[0])) == 'A' + index &&
        (s[1] == ':' || s[1] == '.' || s[1] == ')'))
        return trim(std::string_view(s).substr(2));
    return s;
}
}  // namespace

std::vector<Mcq> parse_mcqs(std::string_view raw) {
    auto array = extract_first_json_array(raw);
    if (!array) throw ParseError("no JSON array in MCQ output");
    std::vector<Mcq> out;
    for (const auto& e : *array) {
        if (!e.is_object()) continue;
        auto q = e.find("question");
        auto opts = e.find("options");
        auto ans = e.find("answer");
        if (q == e.end() || !q->is_string() || opts == e.end() || !opts->is_array() ||
            opts->size() != 4 || ans == e.end() || !ans->is_string())
            continue;
        Mcq m;
        m.question = q->get<std::string>();
        bool ok = true;
        for (int i = 0; i < 4; ++i) {
            if (!(*opts)[static_cast<std::size_t>(i)].is_string()) {
                ok = false;
                break;
            }
            m.options.push_back(strip_option_label((*opts)[static_cast<std::size_t>(i)].get<std::string>(), i));
        }
        auto letter = parse_answer_letter(ans->get<std::string>());
        if (!ok || !letter) continue;
        m.answer = *letter;
        out.push_back(std::move(m));
    }
    return out;
}

EvalReport mcq_intrinsic_harness(const std::vector<Passage>& passages, const KnowledgeGraph& graph,
                                 const ChatGateway& gateway, const Decoding& decoding,
                                 const json& config_snapshot) {
    EvalReport report;
    report.config_snapshot = config_snapshot;
    for (const auto& passage : passages) {
        SampleResult res;
        res.id = passage.id;

        std::vector<Mcq> mcqs;
        try {
            auto gen = gateway.complete(templates::kMcqGenerate, {{"passage", passage.text}}, decoding);
            mcqs = parse_mcqs(gen.text);
        } catch (const DataError&) {
        }
        if (mcqs.empty()) {
            res.flags.push_back("mcq_malformed");
            report.per_sample.push_back(std::move(res));
            continue;
        }

        std::string context;
        for (const auto& f : graph.fact_edges()) {
            if (f.source_passage != passage.id) continue;
            if (!context.empty()) context += '\n';
            context += linearize(f.triple());
        }

        int correct = 0;
        for (const auto& m : mcqs) {
            Bindings b{{"contexts", context}, {"question", m.question}};
            for (int i = 0; i < 4; ++i)
                b["options_" + std::to_string(i)] = m.options[static_cast<std::size_t>(i)];
            auto reply = gateway.complete(templates::kMcqAnswer, b, decoding);
            auto letter = parse_answer_letter(reply.text);
            if (!letter) res.flags.push_back("unparsed_letter");
            if (letter && *letter == m.answer) ++correct;
        }
        res.metrics["accuracy"] = static_cast<double>(correct) / static_cast<double>(mcqs.size());
        res.metrics["num_questions"] = static_cast<double>(mcqs.size());
        report.per_sample.push_back(std::move(res));
    }
    report.finalize();
    return report;
}

}  // namespace autograph

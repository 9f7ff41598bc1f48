// Thin pybind11 layer over the reward and GRPO kernels plus the score
// endpoint. Structured payloads cross the boundary as JSON text; the Python
// package decodes them.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "autograph/config.hpp"
#include "autograph/errors.hpp"
#include "autograph/eval.hpp"
#include "autograph/grpo.hpp"
#include "autograph/kg.hpp"
#include "autograph/reward.hpp"
#include "autograph/server.hpp"

namespace py = pybind11;
using namespace autograph;

namespace {

using TripleTuple = std::tuple<std::string, std::string, std::string>;

std::vector<Triple> to_triples(const std::vector<TripleTuple>& in) {
    std::vector<Triple> out;
    for (const auto& [s, r, o] : in) out.push_back({s, r, o});
    return out;
}

// Holds a gateway and embedder built from a config; score() mirrors POST /v1/score.
class Scorer {
public:
    explicit Scorer(const std::string& config_json) {
        RunConfig cfg;
        cfg.merge(json::parse(config_json.empty() ? "{}" : config_json));
        ctx_.config = cfg;
        ctx_.gateway = make_gateway(cfg.llm);
        ctx_.embedder = make_embedder(cfg.embedding);
    }

    std::pair<int, std::string> score(const std::string& body) const {
        ApiResult r;
        {
            py::gil_scoped_release release;
            r = api_score(ctx_, body);
        }
        return {r.status, r.text()};
    }

    std::string config() const { return ctx_.config.to_json().dump(); }

private:
    ServiceContext ctx_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Graph-construction rewards and GRPO kernels";

    py::register_exception<Error>(m, "AutographError", PyExc_ValueError);

    m.def(
        "parse_triples",
        [](const std::string& raw) {
            ParsedTriples p = parse_triples(raw);
            std::vector<TripleTuple> out;
            for (const auto& t : p.triples) out.emplace_back(t.subject, t.relation, t.object);
            return std::make_pair(out, p.malformed_count);
        },
        py::arg("raw"), "Triples and the malformed-element count from raw constructor output.");

    m.def(
        "repetition_penalty", [](const std::vector<TripleTuple>& ts) { return repetition_penalty(to_triples(ts)).p_rep; },
        py::arg("triples"));

    m.def(
        "compose_reward",
        [](double value, double p_rep, double lambda_rep, double hard_cap) {
            RewardOutcome raw;
            raw.value = raw.penalized_value = value;
            return compose_reward(raw, p_rep, lambda_rep, hard_cap).penalized_value;
        },
        py::arg("value"), py::arg("p_rep"), py::arg("lambda_rep") = 1.0, py::arg("hard_cap") = 0.3);

    m.def(
        "indexing_reward",
        [](const std::vector<std::string>& ranked, const std::set<std::string>& gold, std::size_t k) {
            PassageRanking r;
            for (std::size_t i = 0; i < ranked.size(); ++i)
                r.ranked.push_back({ranked[i], static_cast<double>(ranked.size() - i)});
            return knowledge_indexing_reward(r, gold, k).value;
        },
        py::arg("ranked_ids"), py::arg("gold_ids"), py::arg("k"));

    m.def(
        "group_advantages", [](const std::vector<double>& r, double floor) { return group_advantages(r, floor); },
        py::arg("rewards"), py::arg("std_floor") = 1e-6);

    m.def(
        "grpo_objective",
        [](const std::vector<double>& rewards, const std::vector<std::vector<double>>& logp_new,
           const std::vector<std::vector<double>>& logp_old, double clip_epsilon, double std_floor) {
            RolloutGroup g{rewards, logp_new, logp_old};
            return grpo_objective(g, {clip_epsilon, std_floor});
        },
        py::arg("rewards"), py::arg("logp_new"), py::arg("logp_old"), py::arg("clip_epsilon") = 0.2,
        py::arg("std_floor") = 1e-6);

    m.def("answer_f1", &answer_f1, py::arg("prediction"), py::arg("gold"));

    py::class_<Scorer>(m, "Scorer")
        .def(py::init<const std::string&>(), py::arg("config_json") = "")
        .def("score", &Scorer::score, py::arg("body"))
        .def("config", &Scorer::config);
}

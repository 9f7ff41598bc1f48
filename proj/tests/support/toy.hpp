// The four-passage toy corpus under fixtures/toy, loaded the same way the CLI
// loads it.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "autograph/data.hpp"
#include "autograph/graph_store.hpp"
#include "autograph/llm.hpp"

namespace toy {

inline std::filesystem::path dir() { return std::filesystem::path(AUTOGRAPH_FIXTURE_DIR) / "toy"; }

inline autograph::KnowledgeGraph graph() {
    auto corpus = autograph::load_corpus_manifest(dir() / "corpus.jsonl");
    auto outputs = autograph::load_constructor_outputs(dir() / "outputs.jsonl");
    return autograph::construct_graph(corpus, outputs, nullptr, {}).graph;
}

inline std::vector<autograph::QASample> samples() {
    auto ds = autograph::load_dataset(dir() / "dataset.jsonl", autograph::DatasetFormat::GenericJsonl);
    std::vector<autograph::QASample> out;
    for (const auto& r : ds.records) out.push_back(r.to_sample());
    return out;
}

inline autograph::ScriptedGateway gateway() {
    return autograph::ScriptedGateway::from_file(dir() / "script.json");
}

}  // namespace toy

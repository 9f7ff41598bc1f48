#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "autograph/embed.hpp"
#include "autograph/kg.hpp"

namespace autograph {

struct DatasetRecord {
    std::string id;
    std::string question;
    std::string answer;
    std::vector<Passage> supporting_passages;
    std::vector<Passage> candidate_passages;

    std::set<std::string> gold_ids() const;
    QASample to_sample() const;
};

enum class DatasetFormat { HotpotJson, MusiqueJson, GenericJsonl };
DatasetFormat parse_dataset_format(std::string_view name);

struct RecordError {
    std::size_t index;  // 1-based line (JSONL) or array position
    std::string record_id;
    std::string message;
};

struct LoadedDataset {
    std::vector<DatasetRecord> records;
    std::vector<RecordError> errors;
};

/// Reads a dataset into canonical records. Bad records are reported in
/// `errors` and skipped; a file that cannot be read or parsed at all throws
/// ParseError. Passages without an id get "<record id>#<index>".
LoadedDataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
LoadedDataset parse_dataset(std::string_view content, DatasetFormat format);

/// Canonical generic_jsonl line for a record.
json to_generic_json(const DatasetRecord& record);

/// The non-gold passage most similar to the question (ties: lowest id).
/// Throws DataError when every corpus passage is gold.
Passage mine_hard_negative(const DatasetRecord& record, const std::vector<Passage>& corpus,
                           const EmbeddingProvider& embedder);

struct AssembledPool {
    DatasetRecord record;
    bool short_of_target = false;
};

/// Gold passages, then the hard negative (if enabled and given), then the
/// record's own distractors in id order, up to `pool_size`. The resulting
/// candidate list is sorted by id. Throws DataError when pool_size is smaller
/// than the gold set.
AssembledPool assemble_pool(const DatasetRecord& record, std::size_t pool_size,
                            bool with_hard_negative,
                            const std::optional<Passage>& hard_negative = std::nullopt);

/// Corpus manifest: JSONL `{"id","text","source_doc"}`.
std::vector<Passage> load_corpus_manifest(const std::filesystem::path& path);
void save_corpus_manifest(const std::filesystem::path& path, const std::vector<Passage>& passages);

/// Deduplicated union of every record's candidate passages, sorted by id.
std::vector<Passage> union_corpus(const std::vector<DatasetRecord>& records);

}  // namespace autograph

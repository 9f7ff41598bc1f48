#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace autograph {

using json = nlohmann::json;

std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::string ascii_lower(std::string_view s);

// Stable across processes and platforms.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);
std::string sha256_hex(std::string_view data);

// Locates the first balanced `[...]` in `text` that parses as a JSON array.
// Markdown code fences and prose around it are ignored.
std::optional<json> extract_first_json_array(std::string_view text);

// Canonical single-line dump used wherever bytes must be reproducible.
std::string canonical_dump(const json& j);

}  // namespace autograph

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "qgen/dataset.hpp"
#include "qgen/pipeline.hpp"
#include "qgen/ranking.hpp"

namespace qgen {

using Json = nlohmann::ordered_json;

inline constexpr int kSnapshotFormatVersion = 1;
inline constexpr std::string_view kSnapshotExtension = ".qsession";

struct SessionSnapshot {
    int format_version = kSnapshotFormatVersion;
    std::string session_id;
    std::string dataset_name;
    std::string dataset_hash;
    std::string document;  // the bytes written
};

Json config_to_json(const EngineConfig& config);
// Applies the keys present in `overrides` on top of `base`; unknown keys
// are rejected with InvalidArgument.
EngineConfig config_from_json(const Json& overrides, EngineConfig base = {});

Json slice_to_json(const Slice& slice);
Slice slice_from_json(const Json& j);
Json question_to_json(const QuestionCandidate& q);
QuestionCandidate question_from_json(const Json& j);

// Deterministic: the same state always yields the same bytes.
std::string serialize_session(const SessionState& state, const Dataset& dataset);
SessionState restore_session(std::string_view document, const Dataset& dataset);

// Writes to a temporary file, then renames over `destination`.
SessionSnapshot save_session(const SessionState& state, const Dataset& dataset,
                             const std::filesystem::path& destination);
SessionState load_session(const std::filesystem::path& source, const Dataset& dataset);

// Reads just the dataset binding of a snapshot (hash, name) without a
// dataset at hand.
SessionSnapshot peek_snapshot(std::string_view document);

}  // namespace qgen

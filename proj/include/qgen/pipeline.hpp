#pragma once

#include <string>
#include <vector>

#include "qgen/dataset.hpp"
#include "qgen/interestingness.hpp"
#include "qgen/questiongen.hpp"
#include "qgen/slicer.hpp"

namespace qgen {

struct EngineConfig {
    std::size_t top_k_columns = 10;
    SlicerConfig slicer;
    MeasureRegistry measures;
    std::string entity = "records";
    std::size_t question_limit = 500;
    std::size_t top_n = 10;
    // Keep only questions whose slice passed the significance gate.
    bool significant_only = false;
};

struct PipelineResult {
    std::vector<ColumnProfile> profiles;
    std::vector<std::size_t> selected;          // column indices, ascending
    std::vector<QuestionCandidate> questions;   // valid, initial rank order, truncated to the limit
    std::size_t generated = 0;                  // before validation and truncation
    std::size_t rejected = 0;                   // failed the validity filter
};

// Columns -> subsets -> per-measure best slices -> template -> slot fill ->
// validity filter -> score, then the question_limit best by score.
PipelineResult run_pipeline(const Dataset& dataset, const EngineConfig& config,
                            const OperatorCatalog& catalog = OperatorCatalog::defaults());

}  // namespace qgen

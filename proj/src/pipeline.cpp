#include "qgen/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <thread>

#include "qgen/error.hpp"
#include "qgen/ranking.hpp"

namespace qgen {

PipelineResult run_pipeline(const Dataset& dataset, const EngineConfig& config, const OperatorCatalog& catalog) {
    if (config.question_limit == 0) throw Error(ErrorCode::InvalidArgument, "question limit must be at least 1");

    PipelineResult result;
    result.profiles = select_top_k_columns(dataset, config.top_k_columns, config.measures);
    result.selected = selected_columns(result.profiles);
    const auto subsets = enumerate_column_subsets(result.selected, config.slicer.r_max);

    // Subsets are independent; results are merged back in enumeration order.
    std::vector<std::vector<Slice>> per_subset(subsets.size());
    std::vector<std::exception_ptr> errors(subsets.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < subsets.size(); i = next++) {
            try {
                per_subset[i] = best_slices_by_measure(dataset, subsets[i], config.slicer);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(subsets.size(), 1));
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    pool.clear();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    RuleValidityFilter filter(catalog, config.entity);
    QuestionOptions options{config.entity, &catalog, &filter};
    std::map<std::string, QuestionCandidate> by_text;
    for (const auto& slices : per_subset) {
        for (const auto& slice : slices) {
            if (config.significant_only && !slice.significance.significant) continue;
            ++result.generated;
            QuestionCandidate q;
            try {
                q = build_question(dataset, slice, options);
            } catch (const Error&) {
                ++result.rejected;
                continue;
            }
            if (!q.valid) {
                ++result.rejected;
                continue;
            }
            auto it = by_text.find(q.surface_text);
            if (it == by_text.end()) {
                by_text.emplace(q.surface_text, std::move(q));
            } else if (q.score > it->second.score || (q.score == it->second.score && q.id < it->second.id)) {
                it->second = std::move(q);
            }
        }
    }

    std::vector<QuestionCandidate> pool_questions;
    pool_questions.reserve(by_text.size());
    for (auto& [_, q] : by_text) pool_questions.push_back(std::move(q));
    auto order = rank_initial(pool_questions);
    if (order.size() > config.question_limit) order.resize(config.question_limit);
    for (auto idx : order) result.questions.push_back(std::move(pool_questions[idx]));
    return result;
}

}  // namespace qgen

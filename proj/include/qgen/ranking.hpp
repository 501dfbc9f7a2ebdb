#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qgen/pipeline.hpp"
#include "qgen/questiongen.hpp"

namespace qgen {

struct SessionState {
    std::string session_id;
    std::string dataset_id;
    std::vector<std::string> columns;      // the K selected columns
    std::vector<std::uint64_t> counters;   // T_i per column, starts at 1
    std::vector<std::string> history;      // selected question ids
    std::size_t iteration = 0;
    std::vector<QuestionCandidate> question_cache;
    EngineConfig config;

    static SessionState create(std::string session_id, std::string dataset_id, std::vector<std::string> columns,
                               std::vector<QuestionCandidate> questions, EngineConfig config);

    // p_i = T_i / sum_j T_j
    std::vector<double> probabilities() const;
    std::uint64_t counter_total() const;
    const QuestionCandidate* find(std::string_view question_id) const;
};

// Orders are returned as indices into the question list.

// Descending score, then ascending id.
std::vector<std::size_t> rank_initial(std::span<const QuestionCandidate> questions);

// Descending product of p_i over the question's distinct selected columns,
// then descending score, then ascending id. Products are compared exactly.
std::vector<std::size_t> rank_feedback(const SessionState& state);

// rank_feedback once a selection exists, rank_initial before.
std::vector<std::size_t> current_ranking(const SessionState& state);

// T_i += 1 for each distinct selected column in the question.
void record_selection(SessionState& state, std::string_view question_id);

// Same increment for a column header the user names directly.
void record_column_interest(SessionState& state, std::string_view column);

// Product of p_i, for display.
double question_weight(const SessionState& state, const QuestionCandidate& question);

// Every whitespace-separated token must occur case-insensitively in the
// surface text; results follow the current ranking.
std::vector<std::size_t> search_questions(const SessionState& state, std::string_view query, std::size_t limit);

}  // namespace qgen

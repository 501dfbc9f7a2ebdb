#include "qgen/ranking.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <numeric>

#include "qgen/error.hpp"
#include "qgen/text.hpp"

namespace qgen {

namespace {

using boost::multiprecision::cpp_int;

// Counters of the distinct selected columns a question touches.
std::vector<std::uint64_t> question_counters(const SessionState& state, const QuestionCandidate& q) {
    std::vector<std::uint64_t> out;
    std::vector<std::size_t> seen;
    for (const auto& c : q.columns) {
        auto it = std::find(state.columns.begin(), state.columns.end(), c);
        if (it == state.columns.end()) continue;
        auto idx = static_cast<std::size_t>(it - state.columns.begin());
        if (std::find(seen.begin(), seen.end(), idx) != seen.end()) continue;
        seen.push_back(idx);
        out.push_back(state.counters[idx]);
    }
    return out;
}

struct ExactWeight {
    cpp_int numerator = 1;
    std::size_t arity = 0;  // denominator is total^arity
};

}  // namespace

SessionState SessionState::create(std::string session_id, std::string dataset_id, std::vector<std::string> columns,
                                  std::vector<QuestionCandidate> questions, EngineConfig config) {
    SessionState s;
    s.session_id = std::move(session_id);
    s.dataset_id = std::move(dataset_id);
    s.counters.assign(columns.size(), 1);
    s.columns = std::move(columns);
    s.question_cache = std::move(questions);
    s.config = std::move(config);
    return s;
}

std::uint64_t SessionState::counter_total() const {
    return std::accumulate(counters.begin(), counters.end(), std::uint64_t{0});
}

std::vector<double> SessionState::probabilities() const {
    const double total = static_cast<double>(counter_total());
    std::vector<double> p;
    p.reserve(counters.size());
    for (auto t : counters) p.push_back(static_cast<double>(t) / total);
    return p;
}

const QuestionCandidate* SessionState::find(std::string_view question_id) const {
    for (const auto& q : question_cache)
        if (q.id == question_id) return &q;
    return nullptr;
}

std::vector<std::size_t> rank_initial(std::span<const QuestionCandidate> questions) {
    std::vector<std::size_t> order(questions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (questions[a].score != questions[b].score) return questions[a].score > questions[b].score;
        return questions[a].id < questions[b].id;
    });
    return order;
}

std::vector<std::size_t> rank_feedback(const SessionState& state) {
    const auto& qs = state.question_cache;
    const cpp_int total = state.counter_total();

    std::vector<ExactWeight> weights(qs.size());
    std::size_t max_arity = 0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const auto counters = question_counters(state, qs[i]);
        for (auto t : counters) weights[i].numerator *= t;
        weights[i].arity = counters.size();
        max_arity = std::max(max_arity, weights[i].arity);
    }
    // Bring every weight onto the common denominator total^max_arity.
    std::vector<cpp_int> scaled(qs.size());
    for (std::size_t i = 0; i < qs.size(); ++i) {
        scaled[i] = weights[i].numerator;
        for (std::size_t k = weights[i].arity; k < max_arity; ++k) scaled[i] *= total;
    }

    std::vector<std::size_t> order(qs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scaled[a] != scaled[b]) return scaled[a] > scaled[b];
        if (qs[a].score != qs[b].score) return qs[a].score > qs[b].score;
        return qs[a].id < qs[b].id;
    });
    return order;
}

std::vector<std::size_t> current_ranking(const SessionState& state) {
    return state.iteration >= 1 ? rank_feedback(state) : rank_initial(state.question_cache);
}

void record_selection(SessionState& state, std::string_view question_id) {
    const QuestionCandidate* q = state.find(question_id);
    if (!q) throw Error(ErrorCode::UnknownQuestion, "no question with id '" + std::string(question_id) + "'");
    std::vector<std::size_t> bumped;
    for (const auto& c : q->columns) {
        auto it = std::find(state.columns.begin(), state.columns.end(), c);
        if (it == state.columns.end()) continue;
        auto idx = static_cast<std::size_t>(it - state.columns.begin());
        if (std::find(bumped.begin(), bumped.end(), idx) != bumped.end()) continue;
        bumped.push_back(idx);
        ++state.counters[idx];
    }
    state.history.emplace_back(question_id);
    ++state.iteration;
}

void record_column_interest(SessionState& state, std::string_view column) {
    auto it = std::find(state.columns.begin(), state.columns.end(), column);
    if (it == state.columns.end())
        throw Error(ErrorCode::UnknownColumn, "'" + std::string(column) + "' is not one of the selected columns");
    ++state.counters[static_cast<std::size_t>(it - state.columns.begin())];
    state.history.push_back("column:" + std::string(column));
    ++state.iteration;
}

double question_weight(const SessionState& state, const QuestionCandidate& question) {
    const double total = static_cast<double>(state.counter_total());
    double w = 1.0;
    for (auto t : question_counters(state, question)) w *= static_cast<double>(t) / total;
    return w;
}

std::vector<std::size_t> search_questions(const SessionState& state, std::string_view query, std::size_t limit) {
    const auto tokens = text::split_whitespace(query);
    std::vector<std::size_t> out;
    for (std::size_t idx : current_ranking(state)) {
        if (out.size() >= limit) break;
        const auto& surface = state.question_cache[idx].surface_text;
        bool all = std::all_of(tokens.begin(), tokens.end(), [&](const auto& t) { return text::icontains(surface, t); });
        if (all) out.push_back(idx);
    }
    return out;
}

}  // namespace qgen

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qgen/dataset.hpp"
#include "qgen/operators.hpp"
#include "qgen/slicer.hpp"

namespace qgen {

inline constexpr std::string_view kBlank = "____";

enum class OperatorRole { Measure, Filter };
enum class Interrogative { WhatIs, WhatFraction, Which, HowMany };

std::string_view interrogative_head(Interrogative head) noexcept;

struct OperatorSpec {
    std::string name;
    OperatorRole role = OperatorRole::Measure;
    std::vector<ColumnKind> applicable_kinds;
    int blank_arity = 0;
    // Placeholders: {col} (display name of the column) and {entity}.
    std::string fragment;
    std::optional<Interrogative> interrogative;  // measures only

    bool applies_to(ColumnKind kind) const;
};

// Wording for every operator, editable as a plain-text table:
//   name | role | kinds | arity | interrogative | fragment
// with kinds comma-separated (numerical,categorical,date), "-" for no
// interrogative, and '#' starting a comment line.
class OperatorCatalog {
public:
    static const OperatorCatalog& defaults();
    static OperatorCatalog parse(std::string_view table);
    static OperatorCatalog load_file(const std::string& path);

    const OperatorSpec* find(std::string_view name) const;
    const OperatorSpec& at(std::string_view name) const;
    const std::vector<OperatorSpec>& specs() const noexcept { return specs_; }
    std::string to_table() const;

private:
    std::vector<OperatorSpec> specs_;
};

using OperatorMap = std::vector<std::pair<std::string, std::string>>;  // column -> operator, subset order

struct QuestionRequest {
    std::optional<std::string> title;        // accepted, does not change wording
    std::optional<std::string> description;  // accepted, does not change wording
    OperatorMap operator_map;
    std::string fixed_column;
    std::string entity = "records";
};

// "Salary_Band" -> "salary band"
std::string display_name(std::string_view column_name);

// Template with "____" blanks. When `dataset` is given, operator kinds are
// checked against the column kinds.
std::string generate_question(const QuestionRequest& request, const OperatorCatalog& catalog = OperatorCatalog::defaults(),
                              const Dataset* dataset = nullptr);

struct FilledQuestion {
    std::string surface_text;
    std::vector<std::string> slot_values;
};

// Operand strings for the slice's blanks, in template order: measure
// blanks first, then filter predicates in subset order.
std::vector<std::string> slot_values_for(const Slice& slice, const Dataset& dataset);

FilledQuestion slot_fill(std::string_view template_text, const Slice& slice, const Dataset& dataset);

struct QuestionCandidate {
    std::string id;
    std::vector<std::string> columns;
    OperatorMap operator_map;
    std::string template_text;
    std::vector<std::string> slot_values;
    std::string surface_text;
    Slice slice_ref;
    double score = 0;
    bool valid = false;
};

// Operator map implied by a slice: measure on the fixed column, filters on
// the others.
OperatorMap operator_map_for(const Slice& slice);
std::string question_id(const Slice& slice);

class ValidityFilter {
public:
    virtual ~ValidityFilter() = default;
    virtual bool accept(const QuestionCandidate& candidate) const = 0;
};

class RuleValidityFilter final : public ValidityFilter {
public:
    explicit RuleValidityFilter(const OperatorCatalog& catalog = OperatorCatalog::defaults(),
                                std::string entity = "records", std::size_t max_length = 200)
        : catalog_(catalog), entity_(std::move(entity)), max_length_(max_length) {}

    bool accept(const QuestionCandidate& candidate) const override;

private:
    const OperatorCatalog& catalog_;
    std::string entity_;
    std::size_t max_length_;
};

bool validate_question(const QuestionCandidate& candidate);

struct QuestionOptions {
    std::string entity = "records";
    const OperatorCatalog* catalog = nullptr;  // defaults when null
    const ValidityFilter* filter = nullptr;    // RuleValidityFilter when null
};

// Template, slot filling, id, score and validity for one scored slice.
QuestionCandidate build_question(const Dataset& dataset, const Slice& slice, const QuestionOptions& options = {});

}  // namespace qgen

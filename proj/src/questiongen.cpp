#include "qgen/questiongen.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "qgen/error.hpp"
#include "qgen/text.hpp"

namespace qgen {

namespace {

constexpr std::string_view kDefaultCatalog = R"(# name | role | kinds | arity | interrogative | fragment
average       | measure | numerical                  | 0 | what_is       | the average {col}
median        | measure | numerical                  | 0 | what_is       | the median {col}
std           | measure | numerical                  | 0 | what_is       | the standard deviation of {col}
min           | measure | numerical                  | 0 | what_is       | the minimum {col}
max           | measure | numerical                  | 0 | what_is       | the maximum {col}
total         | measure | numerical                  | 0 | what_is       | the total {col}
fraction      | measure | categorical                | 1 | what_fraction | of {entity} have {col} as ____
majority      | measure | categorical                | 0 | which         | {col} has the most {entity}
minority      | measure | categorical                | 0 | which         | {col} has the fewest {entity}
missing       | measure | numerical,categorical,date | 0 | what_fraction | of {entity} have a missing {col}
outlier       | measure | numerical                  | 0 | how_many      | {entity} have an outlier {col}
top_k_percent | measure | numerical                  | 1 | what_is       | the average {col} of the top ____ percent {entity}
among         | filter  | categorical                | 1 | -             | among ____
in            | filter  | categorical                | 1 | -             | in ____
more_than     | filter  | numerical                  | 1 | -             | with {col} more than ____
less_than     | filter  | numerical                  | 1 | -             | with {col} less than ____
above         | filter  | numerical                  | 1 | -             | above {col} ____
below         | filter  | numerical                  | 1 | -             | below {col} ____
before        | filter  | date                       | 1 | -             | with {col} before ____
after         | filter  | date                       | 1 | -             | with {col} after ____
within        | filter  | numerical,date             | 2 | -             | with {col} between ____ and ____
on            | filter  | date,categorical           | 1 | -             | on ____
)";

std::vector<std::string> split_bar(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto bar = line.find('|', start);
        out.push_back(text::trim(line.substr(start, bar == std::string_view::npos ? line.npos : bar - start)));
        if (bar == std::string_view::npos) break;
        start = bar + 1;
    }
    return out;
}

std::optional<Interrogative> parse_interrogative(std::string_view s) {
    if (s == "what_is") return Interrogative::WhatIs;
    if (s == "what_fraction") return Interrogative::WhatFraction;
    if (s == "which") return Interrogative::Which;
    if (s == "how_many") return Interrogative::HowMany;
    return std::nullopt;
}

std::string_view interrogative_key(Interrogative i) {
    switch (i) {
        case Interrogative::WhatIs: return "what_is";
        case Interrogative::WhatFraction: return "what_fraction";
        case Interrogative::Which: return "which";
        case Interrogative::HowMany: return "how_many";
    }
    return "-";
}

std::optional<ColumnKind> parse_kind(std::string_view s) {
    if (s == "numerical") return ColumnKind::Numerical;
    if (s == "categorical") return ColumnKind::Categorical;
    if (s == "date") return ColumnKind::Date;
    return std::nullopt;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

std::string render_fragment(const OperatorSpec& spec, std::string_view column, std::string_view entity) {
    return replace_all(replace_all(spec.fragment, "{col}", display_name(column)), "{entity}", entity);
}

std::size_t count_blanks(std::string_view s) {
    std::size_t n = 0;
    for (std::size_t pos = s.find(kBlank); pos != std::string_view::npos; pos = s.find(kBlank, pos + kBlank.size()))
        ++n;
    return n;
}

std::string fill_blanks(std::string_view templ, const std::vector<std::string>& values) {
    std::string out;
    std::size_t pos = 0;
    for (const auto& v : values) {
        auto next = templ.find(kBlank, pos);
        out.append(templ.substr(pos, next - pos));
        out += v;
        pos = next + kBlank.size();
    }
    out.append(templ.substr(pos));
    return out;
}

struct NumericRange {
    double min, max;
};

NumericRange member_range(const Slice& slice, const Column& column) {
    bool any = false;
    NumericRange r{0, 0};
    for (auto row : slice.member_rows) {
        if (column.is_null(row)) continue;
        double v = column.kind == ColumnKind::Date ? static_cast<double>(column.days[row]) : column.numbers[row];
        if (!any) r = {v, v}, any = true;
        r.min = std::min(r.min, v);
        r.max = std::max(r.max, v);
    }
    if (!any) throw Error(ErrorCode::EmptySlice, "slice has no values in column '" + column.name + "'");
    return r;
}

std::string render_value(const Column& column, double v) {
    if (column.kind == ColumnKind::Date) return column.render_date(static_cast<std::int64_t>(v));
    return column.render_number(v);
}

}  // namespace

std::string_view interrogative_head(Interrogative head) noexcept {
    switch (head) {
        case Interrogative::WhatIs: return "What is";
        case Interrogative::WhatFraction: return "What fraction";
        case Interrogative::Which: return "Which";
        case Interrogative::HowMany: return "How many";
    }
    return "What is";
}

bool OperatorSpec::applies_to(ColumnKind kind) const {
    return std::find(applicable_kinds.begin(), applicable_kinds.end(), kind) != applicable_kinds.end();
}

const OperatorCatalog& OperatorCatalog::defaults() {
    static const OperatorCatalog catalog = parse(kDefaultCatalog);
    return catalog;
}

OperatorCatalog OperatorCatalog::parse(std::string_view table) {
    OperatorCatalog catalog;
    std::istringstream in{std::string(table)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split_bar(t);
        auto fail = [&](const std::string& why) {
            throw Error(ErrorCode::BadCatalog, "operator table line " + std::to_string(line_no) + ": " + why);
        };
        if (fields.size() != 6) fail("expected 6 '|'-separated fields");
        OperatorSpec spec;
        spec.name = fields[0];
        if (fields[1] == "measure") spec.role = OperatorRole::Measure;
        else if (fields[1] == "filter") spec.role = OperatorRole::Filter;
        else fail("role must be 'measure' or 'filter'");
        std::string kinds = fields[2];
        for (auto& k : split_bar(replace_all(kinds, ",", "|"))) {
            auto kind = parse_kind(k);
            if (!kind) fail("unknown column kind '" + k + "'");
            spec.applicable_kinds.push_back(*kind);
        }
        if (fields[3] != "0" && fields[3] != "1" && fields[3] != "2") fail("arity must be 0, 1 or 2");
        spec.blank_arity = fields[3][0] - '0';
        if (fields[4] != "-") {
            spec.interrogative = parse_interrogative(fields[4]);
            if (!spec.interrogative) fail("unknown interrogative '" + fields[4] + "'");
        }
        if (spec.role == OperatorRole::Measure && !spec.interrogative) fail("measures need an interrogative");
        spec.fragment = fields[5];
        if (static_cast<int>(count_blanks(spec.fragment)) != spec.blank_arity)
            fail("fragment blank count does not match arity");
        if (catalog.find(spec.name)) fail("duplicate operator '" + spec.name + "'");
        catalog.specs_.push_back(std::move(spec));
    }
    return catalog;
}

OperatorCatalog OperatorCatalog::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open operator table '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const OperatorSpec* OperatorCatalog::find(std::string_view name) const {
    for (const auto& s : specs_)
        if (s.name == name) return &s;
    return nullptr;
}

const OperatorSpec& OperatorCatalog::at(std::string_view name) const {
    if (const auto* s = find(name)) return *s;
    throw Error(ErrorCode::IncompatibleOperator, "unknown operator '" + std::string(name) + "'");
}

std::string OperatorCatalog::to_table() const {
    std::string out = "# name | role | kinds | arity | interrogative | fragment\n";
    for (const auto& s : specs_) {
        std::string kinds;
        for (auto k : s.applicable_kinds) {
            if (!kinds.empty()) kinds += ",";
            kinds += text::to_lower(kind_name(k));
        }
        out += s.name + " | " + (s.role == OperatorRole::Measure ? "measure" : "filter") + " | " + kinds + " | " +
               std::to_string(s.blank_arity) + " | " +
               std::string(s.interrogative ? interrogative_key(*s.interrogative) : "-") + " | " + s.fragment + "\n";
    }
    return out;
}

std::string display_name(std::string_view column_name) {
    std::string s = text::to_lower(column_name);
    std::replace(s.begin(), s.end(), '_', ' ');
    std::string out;
    for (char c : text::trim(s)) {
        if (c == ' ' && !out.empty() && out.back() == ' ') continue;
        out.push_back(c);
    }
    return out;
}

std::string generate_question(const QuestionRequest& request, const OperatorCatalog& catalog, const Dataset* dataset) {
    auto fixed_it = std::find_if(request.operator_map.begin(), request.operator_map.end(),
                                 [&](const auto& kv) { return kv.first == request.fixed_column; });
    if (fixed_it == request.operator_map.end())
        throw Error(ErrorCode::MissingMeasure, "fixed column '" + request.fixed_column + "' has no operator");
    const OperatorSpec* measure = catalog.find(fixed_it->second);
    if (!measure || measure->role != OperatorRole::Measure)
        throw Error(ErrorCode::MissingMeasure, "operator '" + fixed_it->second + "' on the fixed column is not a measure");

    std::set<std::string> seen;
    for (const auto& [column, op] : request.operator_map) {
        if (!seen.insert(column).second)
            throw Error(ErrorCode::IncompatibleOperator, "column '" + column + "' appears twice");
        const OperatorSpec& spec = catalog.at(op);
        if (column != request.fixed_column && spec.role != OperatorRole::Filter)
            throw Error(ErrorCode::IncompatibleOperator, "'" + op + "' is not a filter operator");
        if (dataset) {
            const Column& col = dataset->column(column);
            if (!spec.applies_to(col.kind))
                throw Error(ErrorCode::IncompatibleOperator, "'" + op + "' does not apply to " +
                                                                 std::string(kind_name(col.kind)) + " column '" +
                                                                 column + "'");
        }
    }

    std::string out(interrogative_head(*measure->interrogative));
    out += " ";
    out += render_fragment(*measure, request.fixed_column, request.entity);
    const bool has_filters = request.operator_map.size() > 1;
    if (!has_filters && *measure->interrogative == Interrogative::WhatIs &&
        measure->fragment.find("{entity}") == std::string::npos) {
        out += " of " + request.entity;
    }
    for (const auto& [column, op] : request.operator_map) {
        if (column == request.fixed_column) continue;
        out += " " + render_fragment(catalog.at(op), column, request.entity);
    }
    out += "?";
    return out;
}

std::vector<std::string> slot_values_for(const Slice& slice, const Dataset& dataset) {
    std::vector<std::string> values;
    switch (slice.measure.op) {
        case MeasureOp::Fraction: values.push_back(slice.target_label); break;
        case MeasureOp::TopKPercent: values.push_back(std::to_string(slice.measure.percent)); break;
        default: break;
    }
    if (slice.member_rows.empty()) throw Error(ErrorCode::EmptySlice, "slice has no member rows");

    for (const auto& p : slice.predicates) {
        const Column& col = dataset.column(p.column_index);
        switch (p.op) {
            case FilterOp::Above:
            case FilterOp::MoreThan: {
                const double lo = member_range(slice, col).min;
                std::optional<double> below;
                for (std::size_t r = 0; r < col.size(); ++r) {
                    if (col.is_null(r) || !(col.numbers[r] < lo)) continue;
                    if (!below || col.numbers[r] > *below) below = col.numbers[r];
                }
                values.push_back(col.render_number(below.value_or(lo)));
                break;
            }
            case FilterOp::Below:
            case FilterOp::LessThan: {
                const double hi = member_range(slice, col).max;
                std::optional<double> above;
                for (std::size_t r = 0; r < col.size(); ++r) {
                    if (col.is_null(r) || !(col.numbers[r] > hi)) continue;
                    if (!above || col.numbers[r] < *above) above = col.numbers[r];
                }
                values.push_back(col.render_number(above.value_or(hi)));
                break;
            }
            case FilterOp::Within: {
                auto range = member_range(slice, col);
                values.push_back(render_value(col, range.min));
                values.push_back(render_value(col, range.max));
                break;
            }
            case FilterOp::Before:
            case FilterOp::After: values.push_back(col.render_date(std::get<DateValue>(p.operand).days)); break;
            case FilterOp::Among:
            case FilterOp::In:
            case FilterOp::On:
                if (const auto* d = std::get_if<DateValue>(&p.operand)) values.push_back(col.render_date(d->days));
                else values.push_back(std::get<std::string>(p.operand));
                break;
        }
    }
    return values;
}

FilledQuestion slot_fill(std::string_view template_text, const Slice& slice, const Dataset& dataset) {
    FilledQuestion out;
    out.slot_values = slot_values_for(slice, dataset);
    const std::size_t blanks = count_blanks(template_text);
    if (blanks != out.slot_values.size()) {
        throw Error(ErrorCode::ArityMismatch, "template has " + std::to_string(blanks) + " blanks but the slice yields " +
                                                  std::to_string(out.slot_values.size()) + " values");
    }
    out.surface_text = fill_blanks(template_text, out.slot_values);
    return out;
}

OperatorMap operator_map_for(const Slice& slice) {
    OperatorMap map;
    std::size_t p = 0;
    for (std::size_t i = 0; i < slice.subset_indices.size(); ++i) {
        if (slice.subset_indices[i] == slice.fixed_index) {
            map.emplace_back(slice.subset_columns[i], std::string(measure_name(slice.measure.op)));
        } else {
            map.emplace_back(slice.subset_columns[i], std::string(filter_name(slice.predicates.at(p++).op)));
        }
    }
    return map;
}

std::string question_id(const Slice& slice) {
    std::string key;
    for (const auto& c : slice.subset_columns) key += c + "\x1f";
    key += "|" + slice.fixed_column + "|" + slice.measure.to_string();
    for (const auto& p : slice.predicates) key += "|" + p.describe();
    return text::hex64(text::fnv1a64(key));
}

bool RuleValidityFilter::accept(const QuestionCandidate& q) const {
    const std::string& s = q.surface_text;
    if (s.empty() || s.size() > max_length_) return false;
    if (s.find("___") != std::string::npos) return false;
    if (!(s.starts_with("What ") || s.starts_with("Which ") || s.starts_with("How many "))) return false;
    if (s.back() != '?') return false;
    for (const auto& v : q.slot_values)
        if (text::trim(v).empty()) return false;
    for (const auto& c : q.columns)
        if (text::count_phrase(s, display_name(c)) > 1) return false;

    // Filled filter fragments must be pairwise distinct.
    std::size_t slot = 0;
    std::vector<std::string> fragments;
    for (const auto& [column, op] : q.operator_map) {
        const OperatorSpec* spec = catalog_.find(op);
        if (!spec) return false;
        const auto arity = static_cast<std::size_t>(spec->blank_arity);
        if (slot + arity > q.slot_values.size()) return false;
        if (spec->role == OperatorRole::Filter) {
            std::vector<std::string> vals(q.slot_values.begin() + static_cast<std::ptrdiff_t>(slot),
                                          q.slot_values.begin() + static_cast<std::ptrdiff_t>(slot + arity));
            fragments.push_back(fill_blanks(render_fragment(*spec, column, entity_), vals));
        }
        slot += arity;
    }
    std::set<std::string> unique(fragments.begin(), fragments.end());
    return unique.size() == fragments.size();
}

bool validate_question(const QuestionCandidate& candidate) {
    static const RuleValidityFilter filter;
    return filter.accept(candidate);
}

QuestionCandidate build_question(const Dataset& dataset, const Slice& slice, const QuestionOptions& options) {
    const OperatorCatalog& catalog = options.catalog ? *options.catalog : OperatorCatalog::defaults();

    QuestionCandidate q;
    q.id = question_id(slice);
    q.columns = slice.subset_columns;
    q.operator_map = operator_map_for(slice);
    QuestionRequest request;
    request.title = dataset.title();
    request.description = dataset.description();
    request.operator_map = q.operator_map;
    request.fixed_column = slice.fixed_column;
    request.entity = options.entity;
    q.template_text = generate_question(request, catalog, &dataset);
    auto filled = slot_fill(q.template_text, slice, dataset);
    q.surface_text = std::move(filled.surface_text);
    q.slot_values = std::move(filled.slot_values);
    q.slice_ref = slice;
    q.score = slice.interestingness;
    if (options.filter) {
        q.valid = options.filter->accept(q);
    } else {
        RuleValidityFilter filter(catalog, options.entity);
        q.valid = filter.accept(q);
    }
    return q;
}

}  // namespace qgen

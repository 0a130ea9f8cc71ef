#include "psbo/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "psbo/error.hpp"

namespace psbo {

Dataset::Dataset(std::vector<FeatureMeta> features, std::vector<std::string> class_labels,
                 std::vector<double> values, std::vector<int> targets)
    : features_(std::move(features)),
      class_labels_(std::move(class_labels)),
      values_(std::move(values)),
      targets_(std::move(targets)),
      p_(features_.size()) {
    if (p_ == 0 || targets_.empty() || values_.size() != targets_.size() * p_)
        throw Error("malformed dataset: value matrix does not match n x p");
    if (class_labels_.size() < 2) throw Error("single-class target");
}

std::vector<std::size_t> Dataset::class_histogram() const {
    std::vector<std::size_t> counts(class_labels_.size(), 0);
    for (int t : targets_) counts[static_cast<std::size_t>(t)]++;
    return counts;
}

SizeClass classify_size(const Dataset& d) {
    SizeClass s;
    s.product = static_cast<double>(d.n()) * static_cast<double>(d.p());
    s.tag = s.product > 1e6 ? SizeClass::Tag::large : SizeClass::Tag::small;
    return s;
}

namespace {

struct RawCell {
    bool missing = false;
    std::string text;
};

struct RawTable {
    std::vector<std::string> column_names;
    std::vector<std::vector<RawCell>> rows;
    // ARFF-declared kinds; empty for CSV (kinds inferred later).
    std::vector<std::optional<FeatureKind>> declared_kinds;
    std::vector<std::vector<std::string>> declared_levels;
};

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

bool parse_number(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* begin = t.data();
    const char* end = begin + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

// One CSV record, RFC-4180 quoting. `line_no` is advanced across embedded
// newlines inside quoted fields.
std::vector<std::string> split_csv_record(std::istream& in, std::size_t& line_no, bool& eof) {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int c;
    while ((c = in.get()) != EOF) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line_no;
                field.push_back(static_cast<char>(c));
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c == '\n') {
            ++line_no;
            break;
        } else if (c != '\r') {
            field.push_back(static_cast<char>(c));
        }
    }
    eof = (c == EOF);
    if (in_quotes) throw ParseError("unterminated quoted field", line_no);
    if (any) fields.push_back(field);
    return fields;
}

RawTable read_csv(std::istream& in) {
    RawTable table;
    std::size_t line_no = 1;
    bool eof = false;
    table.column_names = split_csv_record(in, line_no, eof);
    if (table.column_names.empty()) throw ParseError("empty dataset", 1);
    for (auto& name : table.column_names) name = trim(name);
    table.declared_kinds.resize(table.column_names.size());
    table.declared_levels.resize(table.column_names.size());
    while (!eof) {
        const std::size_t record_line = line_no;
        auto fields = split_csv_record(in, line_no, eof);
        if (fields.empty()) continue;  // blank line
        if (fields.size() == 1 && trim(fields[0]).empty()) continue;
        if (fields.size() != table.column_names.size())
            throw ParseError("expected " + std::to_string(table.column_names.size()) +
                                 " fields, got " + std::to_string(fields.size()),
                             record_line);
        std::vector<RawCell> row(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const std::string v = trim(fields[i]);
            if (v == "?" || v.empty()) {
                row[i].missing = true;
            } else {
                row[i].text = v;
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty()) throw ParseError("empty dataset");
    return table;
}

std::vector<std::string> split_plain(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

// ARFF subset: @relation, @attribute <name> {a,b,...} | numeric | real |
// integer, @data followed by a CSV body. Keywords case-insensitive,
// '%' comments ignored.
RawTable read_arff(std::istream& in) {
    RawTable table;
    std::string line;
    std::size_t line_no = 0;
    bool in_data = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '%') continue;
        if (!in_data) {
            const std::string lt = lower(t);
            if (lt.rfind("@relation", 0) == 0) continue;
            if (lt.rfind("@attribute", 0) == 0) {
                std::string rest = trim(t.substr(10));
                std::string name;
                if (!rest.empty() && (rest[0] == '\'' || rest[0] == '"')) {
                    const char quote = rest[0];
                    const std::size_t close = rest.find(quote, 1);
                    if (close == std::string::npos)
                        throw ParseError("unterminated attribute name", line_no);
                    name = rest.substr(1, close - 1);
                    rest = trim(rest.substr(close + 1));
                } else {
                    const std::size_t sp = rest.find_first_of(" \t");
                    if (sp == std::string::npos)
                        throw ParseError("attribute without a type", line_no);
                    name = rest.substr(0, sp);
                    rest = trim(rest.substr(sp));
                }
                table.column_names.push_back(name);
                if (!rest.empty() && rest[0] == '{') {
                    const std::size_t close = rest.find('}');
                    if (close == std::string::npos)
                        throw ParseError("unterminated category list", line_no);
                    std::vector<std::string> levels;
                    for (auto& lv : split_plain(rest.substr(1, close - 1), ','))
                        levels.push_back(trim(lv));
                    table.declared_kinds.push_back(FeatureKind::categorical);
                    table.declared_levels.push_back(std::move(levels));
                } else {
                    const std::string type = lower(trim(rest));
                    if (type != "numeric" && type != "real" && type != "integer")
                        throw ParseError("unsupported attribute type '" + rest + "'", line_no);
                    table.declared_kinds.push_back(FeatureKind::numeric);
                    table.declared_levels.emplace_back();
                }
                continue;
            }
            if (lt.rfind("@data", 0) == 0) {
                if (table.column_names.empty()) throw ParseError("@data before any @attribute", line_no);
                in_data = true;
                continue;
            }
            throw ParseError("unrecognized header line '" + t + "'", line_no);
        }
        auto fields = split_plain(t, ',');
        if (fields.size() != table.column_names.size())
            throw ParseError("expected " + std::to_string(table.column_names.size()) +
                                 " fields, got " + std::to_string(fields.size()),
                             line_no);
        std::vector<RawCell> row(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            std::string v = trim(fields[i]);
            if (v.size() >= 2 && v.front() == '\'' && v.back() == '\'') v = v.substr(1, v.size() - 2);
            if (v == "?" || v.empty()) {
                row[i].missing = true;
            } else {
                row[i].text = v;
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (!in_data || table.rows.empty()) throw ParseError("empty dataset");
    return table;
}

Dataset build_dataset(RawTable& table, const std::string& target) {
    const std::size_t cols = table.column_names.size();
    std::size_t target_col = cols;
    for (std::size_t i = 0; i < cols; ++i)
        if (table.column_names[i] == target) target_col = i;
    if (target_col == cols) {
        std::string available;
        for (std::size_t i = 0; i < cols; ++i) {
            if (i) available += ", ";
            available += table.column_names[i];
        }
        throw Error("target column '" + target + "' not found; available columns: " + available);
    }

    const std::size_t n = table.rows.size();
    const std::size_t p = cols - 1;
    if (p == 0) throw Error("dataset has no feature columns");

    // Target: collect class labels in first-appearance order.
    std::vector<std::string> class_labels;
    std::map<std::string, int> class_index;
    std::vector<int> targets(n);
    for (std::size_t r = 0; r < n; ++r) {
        const RawCell& cell = table.rows[r][target_col];
        if (cell.missing) throw Error("missing target value in row " + std::to_string(r + 1));
        auto it = class_index.find(cell.text);
        if (it == class_index.end()) {
            it = class_index.emplace(cell.text, static_cast<int>(class_labels.size())).first;
            class_labels.push_back(cell.text);
        }
        targets[r] = it->second;
    }
    if (class_labels.size() < 2) throw Error("single-class target");

    std::vector<FeatureMeta> features;
    features.reserve(p);
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < cols; ++c)
        if (c != target_col) feature_cols.push_back(c);

    std::vector<double> values(n * p, 0.0);
    std::size_t imputed = 0;

    for (std::size_t j = 0; j < p; ++j) {
        const std::size_t c = feature_cols[j];
        FeatureMeta meta;
        meta.name = table.column_names[c];

        bool numeric;
        if (table.declared_kinds[c].has_value()) {
            numeric = *table.declared_kinds[c] == FeatureKind::numeric;
        } else {
            numeric = true;
            bool all_integer = true;
            std::set<double> distinct;
            for (std::size_t r = 0; r < n && numeric; ++r) {
                const RawCell& cell = table.rows[r][c];
                if (cell.missing) continue;
                double tmp;
                if (!parse_number(cell.text, tmp)) {
                    numeric = false;
                } else {
                    if (tmp != std::floor(tmp)) all_integer = false;
                    if (distinct.size() <= 10) distinct.insert(tmp);
                }
            }
            // Low-cardinality integer columns (door counts, ratings, ...)
            // read as categorical levels.
            if (numeric && all_integer && distinct.size() <= 10 && !distinct.empty())
                numeric = false;
        }

        if (numeric) {
            meta.kind = FeatureKind::numeric;
            std::vector<double> present;
            present.reserve(n);
            for (std::size_t r = 0; r < n; ++r) {
                const RawCell& cell = table.rows[r][c];
                if (cell.missing) continue;
                double v;
                if (!parse_number(cell.text, v))
                    throw ParseError("non-numeric value '" + cell.text + "' in numeric column '" +
                                     meta.name + "'");
                present.push_back(v);
            }
            double median = 0.0;
            if (!present.empty()) {
                std::sort(present.begin(), present.end());
                median = present[(present.size() - 1) / 2];
            }
            meta.impute_value = median;
            for (std::size_t r = 0; r < n; ++r) {
                const RawCell& cell = table.rows[r][c];
                if (cell.missing) {
                    values[r * p + j] = median;
                    ++imputed;
                } else {
                    double v;
                    parse_number(cell.text, v);
                    values[r * p + j] = v;
                }
            }
        } else {
            meta.kind = FeatureKind::categorical;
            std::map<std::string, int> level_index;
            if (!table.declared_levels[c].empty()) {
                for (const auto& lv : table.declared_levels[c]) {
                    level_index.emplace(lv, static_cast<int>(meta.categories.size()));
                    meta.categories.push_back(lv);
                }
            } else {
                for (std::size_t r = 0; r < n; ++r) {
                    const RawCell& cell = table.rows[r][c];
                    if (cell.missing) continue;
                    if (level_index.emplace(cell.text, static_cast<int>(meta.categories.size())).second)
                        meta.categories.push_back(cell.text);
                }
            }
            if (meta.categories.empty()) meta.categories.push_back("(missing)");
            std::vector<std::size_t> counts(meta.categories.size(), 0);
            for (std::size_t r = 0; r < n; ++r) {
                const RawCell& cell = table.rows[r][c];
                if (cell.missing) continue;
                auto it = level_index.find(cell.text);
                if (it == level_index.end())
                    throw ParseError("value '" + cell.text + "' outside declared levels of '" +
                                     meta.name + "'");
                counts[static_cast<std::size_t>(it->second)]++;
            }
            const std::size_t mode = static_cast<std::size_t>(
                std::max_element(counts.begin(), counts.end()) - counts.begin());
            meta.impute_value = static_cast<double>(mode);
            for (std::size_t r = 0; r < n; ++r) {
                const RawCell& cell = table.rows[r][c];
                if (cell.missing) {
                    values[r * p + j] = meta.impute_value;
                    ++imputed;
                } else {
                    values[r * p + j] = static_cast<double>(level_index.at(cell.text));
                }
            }
        }
        features.push_back(std::move(meta));
    }

    Dataset d(std::move(features), std::move(class_labels), std::move(values), std::move(targets));
    d.set_missing_imputed(imputed);
    return d;
}

DataFormat detect_format(const std::string& path, const std::string& head) {
    const std::string lp = lower(path);
    if (lp.size() >= 5 && lp.substr(lp.size() - 5) == ".arff") return DataFormat::arff;
    if (lp.size() >= 4 && lp.substr(lp.size() - 4) == ".csv") return DataFormat::csv;
    // First non-comment line decides.
    std::istringstream in(head);
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = lower(trim(line));
        if (t.empty() || t[0] == '%') continue;
        if (t.rfind("@relation", 0) == 0 || t.rfind("@attribute", 0) == 0)
            return DataFormat::arff;
        break;
    }
    return DataFormat::csv;
}

}  // namespace

Dataset parse_dataset(const std::string& text, DataFormat format, const std::string& target) {
    if (format == DataFormat::autodetect) format = detect_format("", text.substr(0, 4096));
    std::istringstream in(text);
    RawTable table = format == DataFormat::arff ? read_arff(in) : read_csv(in);
    return build_dataset(table, target);
}

Dataset load_dataset(const std::string& path, DataFormat format, const std::string& target) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open dataset file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    if (format == DataFormat::autodetect) format = detect_format(path, text.substr(0, 4096));
    return parse_dataset(text, format, target);
}

Dataset subset_rows(const Dataset& d, const std::vector<std::uint32_t>& rows) {
    std::vector<double> values;
    values.reserve(rows.size() * d.p());
    std::vector<int> targets;
    targets.reserve(rows.size());
    for (std::uint32_t r : rows) {
        for (std::size_t c = 0; c < d.p(); ++c) values.push_back(d.value(r, c));
        targets.push_back(d.target(r));
    }
    return Dataset(d.features(), d.class_labels(), std::move(values), std::move(targets));
}

}  // namespace psbo

#include "psbo/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psbo/error.hpp"

namespace psbo {

namespace {

nlohmann::json schema_to_json(const std::vector<FeatureMeta>& schema) {
    nlohmann::json arr = nlohmann::json::array();
    for (const FeatureMeta& f : schema) {
        arr.push_back({{"name", f.name},
                       {"kind", f.kind == FeatureKind::numeric ? "numeric" : "categorical"},
                       {"categories", f.categories},
                       {"impute", f.impute_value}});
    }
    return arr;
}

std::vector<FeatureMeta> schema_from_json(const nlohmann::json& arr) {
    std::vector<FeatureMeta> schema;
    for (const auto& fj : arr) {
        FeatureMeta f;
        f.name = fj.at("name").get<std::string>();
        f.kind = fj.at("kind").get<std::string>() == "numeric" ? FeatureKind::numeric
                                                               : FeatureKind::categorical;
        f.categories = fj.at("categories").get<std::vector<std::string>>();
        f.impute_value = fj.at("impute").get<double>();
        schema.push_back(std::move(f));
    }
    return schema;
}

}  // namespace

void save_model(const SavedModel& m, const std::string& path) {
    nlohmann::json j = {{"format_version", m.format_version},
                        {"algorithm", m.algorithm},
                        {"combination", m.combination},
                        {"schema", schema_to_json(m.schema)},
                        {"class_labels", m.class_labels},
                        {"model", m.model->to_json()}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model file '" + path + "'");
    out << j.dump(2) << "\n";
}

SavedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error("model file '" + path + "' is not valid JSON: " + e.what());
    }
    SavedModel m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != 1)
        throw Error("unsupported model format version " + std::to_string(m.format_version));
    m.algorithm = j.at("algorithm").get<std::string>();
    m.combination = j.at("combination");
    m.schema = schema_from_json(j.at("schema"));
    m.class_labels = j.at("class_labels").get<std::vector<std::string>>();
    m.model = model_from_json(j.at("model"));
    return m;
}

Dataset load_for_predict(const std::string& path, const SavedModel& m) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open data file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    std::istringstream text(buf.str());

    // Header-driven CSV read; ARFF input for prediction goes through the
    // regular loader path upstream.
    std::string header;
    if (!std::getline(text, header)) throw Error("empty data file '" + path + "'");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    std::vector<std::string> columns;
    {
        std::string cur;
        for (char c : header) {
            if (c == ',') {
                columns.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        columns.push_back(cur);
    }

    std::map<std::string, std::size_t> column_index;
    for (std::size_t i = 0; i < columns.size(); ++i) column_index.emplace(columns[i], i);

    std::vector<std::size_t> source_col(m.schema.size());
    for (std::size_t f = 0; f < m.schema.size(); ++f) {
        auto it = column_index.find(m.schema[f].name);
        if (it == column_index.end())
            throw Error("input is missing feature column '" + m.schema[f].name + "'");
        source_col[f] = it->second;
    }

    std::vector<double> values;
    std::size_t n = 0;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(text, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        fields.push_back(cur);
        if (fields.size() != columns.size())
            throw ParseError("expected " + std::to_string(columns.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        for (std::size_t f = 0; f < m.schema.size(); ++f) {
            const FeatureMeta& meta = m.schema[f];
            const std::string& raw = fields[source_col[f]];
            double v;
            if (raw == "?" || raw.empty()) {
                v = meta.impute_value;
            } else if (meta.kind == FeatureKind::numeric) {
                try {
                    std::size_t pos = 0;
                    v = std::stod(raw, &pos);
                    if (pos != raw.size()) throw std::invalid_argument(raw);
                } catch (const std::exception&) {
                    throw ParseError("non-numeric value '" + raw + "' in numeric column '" +
                                         meta.name + "'",
                                     line_no);
                }
            } else {
                const auto it = std::find(meta.categories.begin(), meta.categories.end(), raw);
                v = it == meta.categories.end()
                        ? meta.impute_value  // unseen level
                        : static_cast<double>(it - meta.categories.begin());
            }
            values.push_back(v);
        }
        ++n;
    }
    if (n == 0) throw Error("no data rows in '" + path + "'");

    // Targets are placeholders; prediction never reads them.
    std::vector<int> targets(n, 0);
    return Dataset(m.schema, m.class_labels, std::move(values), std::move(targets));
}

}  // namespace psbo

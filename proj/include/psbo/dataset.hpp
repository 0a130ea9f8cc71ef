#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace psbo {

enum class FeatureKind { numeric, categorical };

struct FeatureMeta {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::vector<std::string> categories;  // level names, categorical only
    // Value substituted for missing cells: median for numeric, mode level
    // index for categorical. Stored so models can impute at predict time.
    double impute_value = 0.0;
};

// In-memory classification dataset. Categorical cells store their level
// index; missing cells are imputed at load time, so downstream code only
// ever sees concrete values.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<FeatureMeta> features, std::vector<std::string> class_labels,
            std::vector<double> values, std::vector<int> targets);

    std::size_t n() const { return targets_.size(); }
    std::size_t p() const { return features_.size(); }

    double value(std::size_t row, std::size_t col) const { return values_[row * p_ + col]; }
    int target(std::size_t row) const { return targets_[row]; }

    const FeatureMeta& feature(std::size_t col) const { return features_[col]; }
    const std::vector<FeatureMeta>& features() const { return features_; }
    const std::vector<std::string>& class_labels() const { return class_labels_; }
    std::size_t class_count() const { return class_labels_.size(); }

    std::vector<std::size_t> class_histogram() const;
    std::size_t missing_imputed() const { return missing_imputed_; }
    void set_missing_imputed(std::size_t count) { missing_imputed_ = count; }

private:
    std::vector<FeatureMeta> features_;
    std::vector<std::string> class_labels_;
    std::vector<double> values_;  // row-major, n x p
    std::vector<int> targets_;
    std::size_t p_ = 0;
    std::size_t missing_imputed_ = 0;
};

struct SizeClass {
    enum class Tag { small, large };
    Tag tag = Tag::small;
    double product = 0.0;  // n * p

    bool is_large() const { return tag == Tag::large; }
};

// Large iff n * p > 10^6 (exactly 10^6 is still small).
SizeClass classify_size(const Dataset& d);

enum class DataFormat { csv, arff, autodetect };

// Parses a CSV (RFC-4180-style, header row, '?' = missing) or an ARFF
// subset (@relation / @attribute / @data). Feature kinds are inferred for
// CSV, declared for ARFF. Missing values are imputed (median / mode).
Dataset load_dataset(const std::string& path, DataFormat format, const std::string& target);

// Same, from an in-memory buffer (used by tests and the python bindings).
Dataset parse_dataset(const std::string& text, DataFormat format, const std::string& target);

// Row-subset copy sharing the original schema and class labels.
Dataset subset_rows(const Dataset& d, const std::vector<std::uint32_t>& rows);

}  // namespace psbo

#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "psbo/dataset.hpp"
#include "psbo/hyperspace.hpp"
#include "psbo/learnzoo.hpp"

namespace psbo {

// Self-describing trained-model file: version tag, algorithm id, winning
// combination, training schema (features, classes, imputation values) and
// the learned parameters.
struct SavedModel {
    int format_version = 1;
    std::string algorithm;
    nlohmann::json combination;  // flat name -> value map
    std::vector<FeatureMeta> schema;
    std::vector<std::string> class_labels;
    std::unique_ptr<Model> model;
};

void save_model(const SavedModel& m, const std::string& path);
SavedModel load_model(const std::string& path);

// Loads a CSV/ARFF file against a saved model's schema: columns are
// matched by name, kinds must agree, categorical levels come from the
// schema and unseen or missing values fall back to the schema's
// imputation value. The target column, if present, is ignored.
Dataset load_for_predict(const std::string& path, const SavedModel& m);

}  // namespace psbo

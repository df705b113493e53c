#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"

namespace fedsim {

enum class TaskKind { kLinearRegression, kBinaryLogistic };

const char* task_kind_name(TaskKind task);
TaskKind task_kind_from_name(const std::string& name);

// Row-major sample matrix with labels. Labels hold class indices for
// classification and real targets for regression; regression datasets use
// the single pseudo class 0 so the histogram invariant holds either way.
struct Dataset {
  std::vector<double> features;  // n_samples x n_features, row major
  std::vector<double> labels;
  std::size_t n_samples = 0;
  std::size_t n_features = 0;
  std::map<int, std::size_t> class_histogram;

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * n_features, n_features};
  }

  void append_row(std::span<const double> x, double label) {
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
    ++n_samples;
  }
};

// Builds class_histogram from labels, then checks the shape invariants.
void finalize_dataset(Dataset& data, TaskKind task);

Dataset concat_datasets(const std::vector<Dataset>& parts, TaskKind task);

inline const char* task_kind_name(TaskKind task) {
  switch (task) {
    case TaskKind::kLinearRegression: return "linear-regression";
    case TaskKind::kBinaryLogistic: return "binary-logistic";
  }
  return "?";
}

inline TaskKind task_kind_from_name(const std::string& name) {
  if (name == "linear-regression") return TaskKind::kLinearRegression;
  if (name == "binary-logistic") return TaskKind::kBinaryLogistic;
  raise(ErrorCode::kConfig, "unknown task kind: " + name);
}

}  // namespace fedsim

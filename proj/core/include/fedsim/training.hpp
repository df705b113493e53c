#pragma once

#include <cstdint>
#include <optional>

#include "fedsim/dataset.hpp"
#include "fedsim/param_vector.hpp"

namespace fedsim {

struct TrainingConfig {
  double learning_rate = 0.1;
  int local_epochs = 1;
  int batch_size = 32;
  double proximal_lambda = 0.0;  // coupling strength toward the anchor
};

struct EvalReport {
  double loss = 0.0;
  std::optional<double> accuracy;  // classification only
  std::size_t n_samples = 0;
};

// Mean task loss: squared error for regression, cross entropy for
// logistic. Model layout is [feature weights..., bias].
double loss_value(TaskKind task, const ParamVector& model,
                  const Dataset& data);

// Full-batch gradient of the mean loss, written into grad (resized).
void loss_gradient(TaskKind task, const ParamVector& model,
                   const Dataset& data, std::vector<double>& grad);

// Mini-batch SGD for local_epochs over the local data. When an anchor is
// given the objective gains (lambda/2) * ||w - anchor||^2, which couples
// related tasks without sharing their data. Batch order is a seeded
// shuffle per epoch; identical inputs and seed give identical output.
ParamVector local_train(TaskKind task, const ParamVector& model,
                        const Dataset& data, const TrainingConfig& cfg,
                        const ParamVector* anchor = nullptr,
                        std::uint64_t seed = 0);

EvalReport evaluate(TaskKind task, const ParamVector& model,
                    const Dataset& data);

// Max abs difference between the analytic gradient and a central finite
// difference with step 1e-6, over all coordinates.
double gradient_check(TaskKind task, const ParamVector& model,
                      const Dataset& data);

}  // namespace fedsim

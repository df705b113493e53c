#include "fedsim/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

void check_dims(const ParamVector& model, const Dataset& data,
                const char* where) {
  if (model.dim() != data.n_features + 1) {
    raise(ErrorCode::kShape,
          std::string(where) + ": model dim " + std::to_string(model.dim()) +
              " does not match feature dim + 1 = " +
              std::to_string(data.n_features + 1));
  }
}

double predict_linear(const ParamVector& model, std::span<const double> x) {
  double z = model.values.back();  // bias
  for (std::size_t f = 0; f < x.size(); ++f) z += model.values[f] * x[f];
  return z;
}

// Numerically stable -[y log p + (1-y) log(1-p)] with p = sigmoid(z).
double logistic_loss(double z, double y) {
  return std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Gradient of the mean loss over the given sample indices.
void batch_gradient(TaskKind task, const ParamVector& model,
                    const Dataset& data, std::span<const std::size_t> batch,
                    std::vector<double>& grad) {
  grad.assign(model.dim(), 0.0);
  for (std::size_t i : batch) {
    const auto x = data.row(i);
    const double z = predict_linear(model, x);
    double g;
    if (task == TaskKind::kLinearRegression) {
      g = 2.0 * (z - data.labels[i]);
    } else {
      g = sigmoid(z) - data.labels[i];
    }
    for (std::size_t f = 0; f < x.size(); ++f) grad[f] += g * x[f];
    grad.back() += g;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& v : grad) v *= inv;
}

}  // namespace

double loss_value(TaskKind task, const ParamVector& model,
                  const Dataset& data) {
  check_dims(model, data, "loss_value");
  if (data.n_samples == 0) {
    raise(ErrorCode::kEvaluation, "loss_value: empty dataset");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < data.n_samples; ++i) {
    const double z = predict_linear(model, data.row(i));
    if (task == TaskKind::kLinearRegression) {
      const double r = z - data.labels[i];
      total += r * r;
    } else {
      total += logistic_loss(z, data.labels[i]);
    }
  }
  return total / static_cast<double>(data.n_samples);
}

void loss_gradient(TaskKind task, const ParamVector& model,
                   const Dataset& data, std::vector<double>& grad) {
  check_dims(model, data, "loss_gradient");
  std::vector<std::size_t> all(data.n_samples);
  std::iota(all.begin(), all.end(), std::size_t{0});
  batch_gradient(task, model, data, all, grad);
}

ParamVector local_train(TaskKind task, const ParamVector& model,
                        const Dataset& data, const TrainingConfig& cfg,
                        const ParamVector* anchor, std::uint64_t seed) {
  check_dims(model, data, "local_train");
  if (anchor && anchor->dim() != model.dim()) {
    raise(ErrorCode::kShape, "local_train: anchor dimension mismatch");
  }
  if (cfg.learning_rate <= 0) {
    raise(ErrorCode::kConfig, "local_train: learning_rate must be > 0");
  }
  if (cfg.local_epochs < 1 || cfg.batch_size < 1) {
    raise(ErrorCode::kConfig, "local_train: epochs and batch_size must be >= 1");
  }
  if (static_cast<std::size_t>(cfg.batch_size) > data.n_samples) {
    raise(ErrorCode::kConfig, "local_train: batch_size exceeds dataset size");
  }

  ParamVector w = model;
  Rng rng = Rng::substream(seed, "training");
  std::vector<std::size_t> order(data.n_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad;

  const double lambda = anchor ? cfg.proximal_lambda : 0.0;
  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t len = std::min<std::size_t>(cfg.batch_size,
                                                    order.size() - start);
      batch_gradient(task, w, data,
                     std::span<const std::size_t>(order.data() + start, len),
                     grad);
      for (std::size_t f = 0; f < w.dim(); ++f) {
        double g = grad[f];
        if (lambda > 0) g += lambda * (w.values[f] - anchor->values[f]);
        w.values[f] -= cfg.learning_rate * g;
      }
      check_finite(w, "local_train");
    }
  }
  w.version = model.version;
  return w;
}

EvalReport evaluate(TaskKind task, const ParamVector& model,
                    const Dataset& data) {
  check_dims(model, data, "evaluate");
  if (data.n_samples == 0) {
    raise(ErrorCode::kEvaluation, "evaluate: empty dataset");
  }
  EvalReport report;
  report.n_samples = data.n_samples;
  report.loss = loss_value(task, model, data);
  if (task == TaskKind::kBinaryLogistic) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.n_samples; ++i) {
      const double z = predict_linear(model, data.row(i));
      const bool predicted_one = z >= 0.0;
      if (predicted_one == (data.labels[i] >= 0.5)) ++correct;
    }
    report.accuracy =
        static_cast<double>(correct) / static_cast<double>(data.n_samples);
  }
  return report;
}

double gradient_check(TaskKind task, const ParamVector& model,
                      const Dataset& data) {
  check_dims(model, data, "gradient_check");
  std::vector<double> analytic;
  loss_gradient(task, model, data, analytic);

  const double h = 1e-6;
  double worst = 0.0;
  ParamVector probe = model;
  for (std::size_t i = 0; i < model.dim(); ++i) {
    const double saved = probe.values[i];
    probe.values[i] = saved + h;
    const double up = loss_value(task, probe, data);
    probe.values[i] = saved - h;
    const double down = loss_value(task, probe, data);
    probe.values[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic[i] - fd));
  }
  return worst;
}

}  // namespace fedsim

#include "fedsim/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "fedsim/rng.hpp"

namespace fedsim {

void finalize_dataset(Dataset& data, TaskKind task) {
  if (data.n_features == 0 && data.n_samples > 0) {
    raise(ErrorCode::kShape, "dataset has samples but zero features");
  }
  if (data.features.size() != data.n_samples * data.n_features) {
    raise(ErrorCode::kShape, "feature matrix size does not match n_samples");
  }
  if (data.labels.size() != data.n_samples) {
    raise(ErrorCode::kShape, "label count does not match n_samples");
  }
  data.class_histogram.clear();
  for (double y : data.labels) {
    const int cls =
        task == TaskKind::kBinaryLogistic ? static_cast<int>(y) : 0;
    ++data.class_histogram[cls];
  }
}

Dataset concat_datasets(const std::vector<Dataset>& parts, TaskKind task) {
  Dataset out;
  for (const auto& p : parts) {
    if (out.n_features == 0) out.n_features = p.n_features;
    if (p.n_features != out.n_features) {
      raise(ErrorCode::kShape, "concat_datasets: feature width mismatch");
    }
    out.features.insert(out.features.end(), p.features.begin(),
                        p.features.end());
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    out.n_samples += p.n_samples;
  }
  finalize_dataset(out, task);
  return out;
}

namespace {

// Ground-truth weights drawn once per seed; unit-ish scale keeps the
// logistic task from being trivially separable.
ParamVector draw_true_weights(Rng& rng, std::size_t n_features) {
  std::vector<double> w(n_features + 1);
  for (auto& v : w) v = rng.gaussian();
  return ParamVector(std::move(w));
}

}  // namespace

SyntheticPool generate_pool(TaskKind task, std::size_t total_samples,
                            std::uint64_t seed, const PartitionConfig& cfg) {
  Rng rng = Rng::substream(seed, "pool");
  SyntheticPool out;
  out.true_weights = draw_true_weights(rng, cfg.n_features);
  Dataset& data = out.pool;
  data.n_features = cfg.n_features;

  std::vector<double> x(cfg.n_features);
  for (std::size_t i = 0; i < total_samples; ++i) {
    if (task == TaskKind::kBinaryLogistic) {
      // Two Gaussian blobs on opposite sides of a random direction.
      const int cls = static_cast<int>(i % 2);
      const double sign = cls == 0 ? -1.0 : 1.0;
      const double dir_norm =
          std::max(1e-12, l2_norm(ParamVector(std::vector<double>(
                              out.true_weights.values.begin(),
                              out.true_weights.values.end() - 1))));
      for (std::size_t f = 0; f < cfg.n_features; ++f) {
        const double center = sign * 0.5 * cfg.class_sep *
                              out.true_weights.values[f] / dir_norm;
        x[f] = center + rng.gaussian();
      }
      data.append_row(x, static_cast<double>(cls));
    } else {
      for (auto& v : x) v = rng.gaussian();
      double y = out.true_weights.values[cfg.n_features];  // bias
      for (std::size_t f = 0; f < cfg.n_features; ++f) {
        y += out.true_weights.values[f] * x[f];
      }
      if (cfg.noise_std > 0) y += cfg.noise_std * rng.gaussian();
      data.append_row(x, y);
    }
  }
  finalize_dataset(data, task);
  return out;
}

namespace {

std::vector<Dataset> partition_classification(const Dataset& pool,
                                              std::size_t n_clients,
                                              double skew, std::uint64_t seed) {
  const double alpha = 1.0 / (skew + 1e-3);
  Rng rng = Rng::substream(seed, "partition");

  // Per-class index pools, consumed from the back.
  std::map<int, std::vector<std::size_t>> pools;
  for (std::size_t i = 0; i < pool.n_samples; ++i) {
    pools[static_cast<int>(pool.labels[i])].push_back(i);
  }
  std::vector<int> classes;
  for (auto& [cls, indices] : pools) {
    classes.push_back(cls);
    rng.shuffle(indices);
  }

  // Each client gets its own class mixture; low alpha makes the mixture
  // nearly one-hot, which is what label skew means here.
  std::vector<std::vector<double>> mixtures(n_clients);
  for (auto& m : mixtures) m = rng.dirichlet(alpha, classes.size());

  // Near-equal sample counts, remainder to the first clients.
  std::vector<std::size_t> targets(n_clients, pool.n_samples / n_clients);
  for (std::size_t j = 0; j < pool.n_samples % n_clients; ++j) ++targets[j];

  std::vector<std::vector<std::size_t>> assigned(n_clients);
  for (std::size_t j = 0; j < n_clients; ++j) {
    for (std::size_t t = 0; t < targets[j]; ++t) {
      // Renormalise the mixture over classes that still have samples so
      // every sample is assigned exactly once.
      double total = 0.0;
      for (std::size_t c = 0; c < classes.size(); ++c) {
        if (!pools[classes[c]].empty()) total += mixtures[j][c];
      }
      std::size_t pick = 0;
      if (total <= 0.0) {
        // All remaining mass on exhausted classes: take the largest pool.
        std::size_t best = 0;
        for (std::size_t c = 0; c < classes.size(); ++c) {
          if (pools[classes[c]].size() > pools[classes[best]].size()) best = c;
        }
        pick = best;
      } else {
        double r = rng.uniform() * total;
        for (std::size_t c = 0; c < classes.size(); ++c) {
          if (pools[classes[c]].empty()) continue;
          r -= mixtures[j][c];
          pick = c;
          if (r <= 0.0) break;
        }
      }
      auto& p = pools[classes[pick]];
      assigned[j].push_back(p.back());
      p.pop_back();
    }
  }

  std::vector<Dataset> out(n_clients);
  for (std::size_t j = 0; j < n_clients; ++j) {
    out[j].n_features = pool.n_features;
    for (std::size_t idx : assigned[j]) {
      out[j].append_row(pool.row(idx), pool.labels[idx]);
    }
    finalize_dataset(out[j], TaskKind::kBinaryLogistic);
  }
  return out;
}

}  // namespace

PartitionedData generate_partitioned(std::size_t n_clients, double skew,
                                     TaskKind task, std::uint64_t seed,
                                     const PartitionConfig& cfg) {
  if (n_clients < 1) {
    raise(ErrorCode::kConfig, "generate_partitions: n_clients must be >= 1");
  }
  if (skew < 0) {
    raise(ErrorCode::kConfig, "generate_partitions: skew must be >= 0");
  }
  const std::size_t total = cfg.samples_per_client * n_clients;
  PartitionedData out;

  if (task == TaskKind::kBinaryLogistic) {
    SyntheticPool pool = generate_pool(task, total, seed, cfg);
    out.true_weights = pool.true_weights;
    out.clients = partition_classification(pool.pool, n_clients, skew, seed);
    return out;
  }

  // Regression: per-client feature mean shift grows with skew; labels are
  // generated after the shift so they stay consistent with the weights.
  Rng wrng = Rng::substream(seed, "pool");
  out.true_weights = draw_true_weights(wrng, cfg.n_features);
  Rng rng = Rng::substream(seed, "partition");
  out.clients.resize(n_clients);
  std::vector<double> x(cfg.n_features);
  for (std::size_t j = 0; j < n_clients; ++j) {
    std::vector<double> shift(cfg.n_features, 0.0);
    if (skew > 0) {
      for (auto& s : shift) s = cfg.shift_scale * skew * rng.gaussian();
    }
    Dataset& d = out.clients[j];
    d.n_features = cfg.n_features;
    for (std::size_t i = 0; i < cfg.samples_per_client; ++i) {
      double y = out.true_weights.values[cfg.n_features];
      for (std::size_t f = 0; f < cfg.n_features; ++f) {
        x[f] = shift[f] + rng.gaussian();
        y += out.true_weights.values[f] * x[f];
      }
      if (cfg.noise_std > 0) y += cfg.noise_std * rng.gaussian();
      d.append_row(x, y);
    }
    finalize_dataset(d, task);
  }
  return out;
}

std::vector<Dataset> generate_partitions(std::size_t n_clients, double skew,
                                         TaskKind task, std::uint64_t seed,
                                         const PartitionConfig& cfg) {
  return generate_partitioned(n_clients, skew, task, seed, cfg).clients;
}

TwoModeData generate_two_mode(std::size_t n_clients, double mode_gap,
                              TaskKind task, std::uint64_t seed,
                              const PartitionConfig& cfg) {
  if (n_clients < 2) {
    raise(ErrorCode::kConfig, "generate_two_mode: need at least 2 clients");
  }
  if (mode_gap <= 0) {
    raise(ErrorCode::kConfig, "generate_two_mode: mode_gap must be > 0");
  }
  Rng rng = Rng::substream(seed, "pool");
  TwoModeData out;

  // One random direction, the two modes sit mode_gap apart along it.
  std::vector<double> axis(cfg.n_features + 1);
  for (auto& v : axis) v = rng.gaussian();
  for (int m = 0; m < 2; ++m) {
    const double sign = m == 0 ? 0.5 : -0.5;
    std::vector<double> w(axis.size());
    for (std::size_t f = 0; f < axis.size(); ++f) {
      w[f] = sign * mode_gap * axis[f];
    }
    out.mode_weights[m] = ParamVector(std::move(w));
  }

  Rng drng = Rng::substream(seed, "partition");
  out.clients.resize(n_clients);
  out.true_mode.resize(n_clients);
  std::vector<double> x(cfg.n_features);
  const std::size_t first_half = (n_clients + 1) / 2;
  for (std::size_t j = 0; j < n_clients; ++j) {
    const int mode = j < first_half ? 0 : 1;
    out.true_mode[j] = mode;
    const auto& w = out.mode_weights[mode].values;
    Dataset& d = out.clients[j];
    d.n_features = cfg.n_features;
    for (std::size_t i = 0; i < cfg.samples_per_client; ++i) {
      double z = w[cfg.n_features];
      for (std::size_t f = 0; f < cfg.n_features; ++f) {
        x[f] = drng.gaussian();
        z += w[f] * x[f];
      }
      const double noisy = z + cfg.noise_std * drng.gaussian();
      const double y =
          task == TaskKind::kBinaryLogistic ? (noisy > 0 ? 1.0 : 0.0) : noisy;
      d.append_row(x, y);
    }
    finalize_dataset(d, task);
  }
  return out;
}

}  // namespace fedsim

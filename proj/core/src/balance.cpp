#include "fedsim/balance.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fedsim/rng.hpp"
#include "fedsim/synthetic.hpp"

namespace fedsim {

std::pair<Dataset, BalanceReport> balance_dataset(const Dataset& data,
                                                  double tolerance,
                                                  std::uint64_t seed) {
  if (tolerance < 1.0) {
    raise(ErrorCode::kConfig, "balance: tolerance must be >= 1");
  }
  if (data.n_samples == 0) {
    raise(ErrorCode::kConfig, "balance: empty dataset");
  }

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.n_samples; ++i) {
    by_class[static_cast<int>(data.labels[i])].push_back(i);
  }
  if (by_class.size() < 2) {
    raise(ErrorCode::kBalanceImpossible,
          "balance: single-class dataset; adding classes needs distillation");
  }

  BalanceReport report;
  std::size_t mn = data.n_samples, mx = 0;
  for (const auto& [cls, rows] : by_class) {
    report.before[cls] = rows.size();
    mn = std::min(mn, rows.size());
    mx = std::max(mx, rows.size());
  }
  if (static_cast<double>(mx) <= tolerance * static_cast<double>(mn)) {
    report.after = report.before;
    return {data, report};
  }

  // Equalise every class at the mean count; ratio becomes exactly 1.
  const std::size_t target =
      std::max<std::size_t>(1, data.n_samples / by_class.size());

  // Jitter scale from the whole dataset, per feature. Zero-variance
  // features get zero jitter and stay constant.
  std::vector<double> mean(data.n_features, 0.0);
  std::vector<double> jitter(data.n_features, 0.0);
  for (std::size_t i = 0; i < data.n_samples; ++i) {
    const auto row = data.row(i);
    for (std::size_t f = 0; f < data.n_features; ++f) mean[f] += row[f];
  }
  for (auto& m : mean) m /= static_cast<double>(data.n_samples);
  for (std::size_t i = 0; i < data.n_samples; ++i) {
    const auto row = data.row(i);
    for (std::size_t f = 0; f < data.n_features; ++f) {
      const double d = row[f] - mean[f];
      jitter[f] += d * d;
    }
  }
  for (auto& j : jitter) {
    j = 0.01 * std::sqrt(j / static_cast<double>(data.n_samples));
  }

  Rng rng = Rng::substream(seed, "balance");
  Dataset out;
  out.n_features = data.n_features;
  std::vector<double> x(data.n_features);
  for (const auto& [cls, rows] : by_class) {
    if (rows.size() > target) {
      auto keep = rows;
      rng.shuffle(keep);
      keep.resize(target);
      std::sort(keep.begin(), keep.end());
      for (std::size_t idx : keep) out.append_row(data.row(idx), data.labels[idx]);
      report.removed += rows.size() - target;
    } else {
      for (std::size_t idx : rows) out.append_row(data.row(idx), data.labels[idx]);
      for (std::size_t t = rows.size(); t < target; ++t) {
        const std::size_t src = rows[rng.uniform_int(rows.size())];
        const auto row = data.row(src);
        for (std::size_t f = 0; f < data.n_features; ++f) {
          x[f] = row[f] + jitter[f] * rng.gaussian();
        }
        out.append_row(x, data.labels[src]);
      }
      report.added += target - rows.size();
    }
  }
  finalize_dataset(out, TaskKind::kBinaryLogistic);
  report.after = out.class_histogram;
  return {out, report};
}

}  // namespace fedsim

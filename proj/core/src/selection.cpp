#include "fedsim/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fedsim/rng.hpp"

namespace fedsim {

const char* selection_mode_name(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::kResource: return "resource";
    case SelectionMode::kData: return "data";
    case SelectionMode::kPerformance: return "performance";
    case SelectionMode::kRandom: return "random";
    case SelectionMode::kCdw: return "cdw";
  }
  return "?";
}

SelectionMode selection_mode_from_name(const std::string& name) {
  if (name == "resource") return SelectionMode::kResource;
  if (name == "data") return SelectionMode::kData;
  if (name == "performance") return SelectionMode::kPerformance;
  if (name == "random") return SelectionMode::kRandom;
  if (name == "cdw") return SelectionMode::kCdw;
  raise(ErrorCode::kConfig, "unknown selection mode: " + name);
}

namespace {

std::map<int, double> normalized_histogram(const DataSummary& s) {
  std::map<int, double> h;
  if (s.n_samples == 0) return h;
  for (const auto& [cls, count] : s.class_histogram) {
    h[cls] = static_cast<double>(count) / static_cast<double>(s.n_samples);
  }
  return h;
}

// Total variation distance between a client's label mix and the cohort
// mean mix.
double heterogeneity_score(const std::map<int, double>& h,
                           const std::map<int, double>& mean) {
  double tv = 0.0;
  for (const auto& [cls, p] : mean) {
    auto it = h.find(cls);
    tv += std::abs((it == h.end() ? 0.0 : it->second) - p);
  }
  for (const auto& [cls, p] : h) {
    if (!mean.count(cls)) tv += p;
  }
  return 0.5 * tv;
}

double last_loss(const ClientRecord& r) {
  if (r.perf_history.empty()) return std::numeric_limits<double>::infinity();
  return r.perf_history.back().loss;
}

}  // namespace

std::vector<std::string> select_clients(const ClientRegistry& registry,
                                        const SelectionCriteria& criteria,
                                        int round, std::uint64_t seed) {
  if (registry.size() == 0) {
    raise(ErrorCode::kConfig, "select_clients: registry is empty");
  }
  if (criteria.top_k < 1) {
    raise(ErrorCode::kConfig, "select_clients: top_k must be >= 1");
  }
  if (criteria.min_compute < 0 || criteria.min_bandwidth < 0 ||
      criteria.max_heterogeneity < 0) {
    raise(ErrorCode::kConfig, "select_clients: thresholds must be >= 0");
  }

  std::vector<ClientRecord> eligible;
  for (const auto& rec : registry.snapshot()) {
    if (!rec.online) continue;
    if (rec.compute_capacity < criteria.min_compute) continue;
    if (rec.bandwidth < criteria.min_bandwidth) continue;
    eligible.push_back(rec);
  }
  if (eligible.empty()) return {};

  if (criteria.mode == SelectionMode::kData) {
    // Cohort mean over the eligible set, then apply the cap.
    std::map<int, double> mean;
    for (const auto& rec : eligible) {
      for (const auto& [cls, p] : normalized_histogram(rec.data_summary)) {
        mean[cls] += p;
      }
    }
    for (auto& [_, p] : mean) p /= static_cast<double>(eligible.size());
    std::erase_if(eligible, [&](const ClientRecord& rec) {
      return heterogeneity_score(normalized_histogram(rec.data_summary),
                                 mean) > criteria.max_heterogeneity;
    });
    if (eligible.empty()) return {};
  }

  // Sort key: smaller is better. Ties break on client_id, which the
  // stable sort preserves because snapshot() is id-sorted.
  auto key = [&](const ClientRecord& r) -> double {
    switch (criteria.mode) {
      case SelectionMode::kResource: return -r.compute_capacity * r.bandwidth;
      case SelectionMode::kData:
        return -static_cast<double>(r.data_summary.n_samples);
      case SelectionMode::kPerformance: return last_loss(r);
      case SelectionMode::kCdw: return -r.data_summary.centroid_gap;
      case SelectionMode::kRandom: return 0.0;
    }
    return 0.0;
  };

  if (criteria.mode == SelectionMode::kRandom) {
    Rng rng = Rng::substream(seed, "select", static_cast<std::uint64_t>(round));
    rng.shuffle(eligible);
  } else {
    std::stable_sort(eligible.begin(), eligible.end(),
                     [&](const ClientRecord& a, const ClientRecord& b) {
                       return key(a) < key(b);
                     });
  }

  std::vector<std::string> out;
  const std::size_t take =
      std::min<std::size_t>(criteria.top_k, eligible.size());
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(eligible[i].client_id);
  return out;
}

}  // namespace fedsim

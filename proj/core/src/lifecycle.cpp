#include "fedsim/lifecycle.hpp"

namespace fedsim {

const char* lifecycle_state_name(LifecycleState s) {
  switch (s) {
    case LifecycleState::kTaskCreated: return "task_created";
    case LifecycleState::kBroadcast: return "broadcast";
    case LifecycleState::kLocalTraining: return "local_training";
    case LifecycleState::kUpdateSubmitted: return "update_submitted";
    case LifecycleState::kAggregated: return "aggregated";
    case LifecycleState::kEvaluated: return "evaluated";
    case LifecycleState::kConverged: return "converged";
    case LifecycleState::kDeployed: return "deployed";
    case LifecycleState::kMonitored: return "monitored";
    case LifecycleState::kReplaced: return "replaced";
  }
  return "?";
}

LifecycleState lifecycle_state_from_name(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(LifecycleState::kReplaced); ++i) {
    const auto s = static_cast<LifecycleState>(i);
    if (name == lifecycle_state_name(s)) return s;
  }
  raise(ErrorCode::kConfig, "unknown lifecycle state: " + name);
}

bool lifecycle_transition_allowed(LifecycleState from, LifecycleState to) {
  using S = LifecycleState;
  switch (from) {
    case S::kTaskCreated: return to == S::kBroadcast;
    case S::kBroadcast: return to == S::kLocalTraining;
    case S::kLocalTraining: return to == S::kUpdateSubmitted;
    case S::kUpdateSubmitted: return to == S::kAggregated;
    case S::kAggregated: return to == S::kEvaluated;
    case S::kEvaluated: return to == S::kBroadcast || to == S::kConverged;
    case S::kConverged: return to == S::kDeployed;
    case S::kDeployed: return to == S::kMonitored;
    case S::kMonitored: return to == S::kMonitored || to == S::kReplaced;
    case S::kReplaced: return to == S::kTaskCreated;
  }
  return false;
}

void LifecycleTracker::advance(LifecycleState to) {
  if (!lifecycle_transition_allowed(state_, to)) {
    raise(ErrorCode::kInvariant,
          std::string("illegal lifecycle transition ") +
              lifecycle_state_name(state_) + " -> " + lifecycle_state_name(to));
  }
  state_ = to;
}

}  // namespace fedsim

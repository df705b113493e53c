#pragma once

#include <string>

#include "fedsim/errors.hpp"

namespace fedsim {

// The model's journey through one training generation. `evaluated`
// either loops back to `broadcast` for the next round or exits through
// `converged`; a deployed model is monitored until a replacement is
// triggered, which starts a new generation.
enum class LifecycleState {
  kTaskCreated,
  kBroadcast,
  kLocalTraining,
  kUpdateSubmitted,
  kAggregated,
  kEvaluated,
  kConverged,
  kDeployed,
  kMonitored,
  kReplaced,
};

const char* lifecycle_state_name(LifecycleState s);
LifecycleState lifecycle_state_from_name(const std::string& name);

bool lifecycle_transition_allowed(LifecycleState from, LifecycleState to);

// Enforces the state graph; an illegal transition is a programming error
// in the driver, reported as kInvariant.
class LifecycleTracker {
 public:
  LifecycleState state() const { return state_; }
  void advance(LifecycleState to);

 private:
  LifecycleState state_ = LifecycleState::kTaskCreated;
};

}  // namespace fedsim

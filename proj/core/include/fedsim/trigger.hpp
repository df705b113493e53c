#pragma once

#include <map>
#include <string>

#include "fedsim/training.hpp"

namespace fedsim {

// Degradation monitor for a deployed model. A round breaches when at
// least quorum_fraction of the monitored clients report accuracy below
// threshold; patience consecutive breaches fire the trigger.
struct TriggerState {
  double threshold = 0.8;
  int patience = 3;
  double quorum_fraction = 0.5;
  int consecutive_breaches = 0;
  bool fired = false;

  bool operator==(const TriggerState&) const = default;
};

// One monitoring round. Once fired, the state is frozen; callers react
// by scheduling retraining, not by calling this again. Reports must
// carry accuracy (classification deployments only) and be non-empty;
// clients that did not report count as healthy.
TriggerState check_replacement_trigger(
    TriggerState state, const std::map<std::string, EvalReport>& reports,
    int n_monitored);

}  // namespace fedsim

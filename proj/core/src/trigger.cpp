#include "fedsim/trigger.hpp"

namespace fedsim {

TriggerState check_replacement_trigger(
    TriggerState state, const std::map<std::string, EvalReport>& reports,
    int n_monitored) {
  if (n_monitored < 1) {
    raise(ErrorCode::kConfig, "trigger: n_monitored must be >= 1");
  }
  if (state.patience < 1) {
    raise(ErrorCode::kConfig, "trigger: patience must be >= 1");
  }
  if (state.quorum_fraction <= 0.0 || state.quorum_fraction > 1.0) {
    raise(ErrorCode::kConfig, "trigger: quorum_fraction must be in (0, 1]");
  }
  if (reports.empty()) {
    raise(ErrorCode::kMonitoring, "trigger: no monitoring reports");
  }
  if (state.fired) return state;

  int below = 0;
  for (const auto& [client, report] : reports) {
    if (!report.accuracy) {
      raise(ErrorCode::kMonitoring,
            "trigger: report from " + client + " lacks accuracy");
    }
    if (*report.accuracy < state.threshold) ++below;
  }
  const bool breach = static_cast<double>(below) >=
                      state.quorum_fraction * static_cast<double>(n_monitored);
  state.consecutive_breaches = breach ? state.consecutive_breaches + 1 : 0;
  state.fired = state.consecutive_breaches >= state.patience;
  return state;
}

}  // namespace fedsim

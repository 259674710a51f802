#pragma once

#include <cstdint>
#include <vector>

namespace ucsg {

/// One simulated step: the state seen, the joint action taken, the
/// reward earned, and the phase the learner was in.
struct StepRecord {
  int64_t t = 0;
  int s = 0;
  int a1 = 0;
  int a2 = 0;
  double r = 0.0;
  int phase = 0;
};

using Trajectory = std::vector<StepRecord>;

}  // namespace ucsg

#pragma once

// Machine checks of the standing assumptions.  Drivers are sampled at every
// node: y uniform on the band (clipped to a finite window when a barrier is
// infinite) and z on a symmetric grid.

#include <cstdint>
#include <vector>

#include "drbsde/problem.hpp"
#include "drbsde/report.hpp"

namespace drbsde {

struct SampleOptions {
  int samples = 1000;  // per node
  std::uint64_t seed = 1;
  double z_max = 10.0;
  /// Half-width of the y window used where the band is unbounded.
  double y_window = 10.0;
  double tolerance = 1e-12;
};

/// |f| <= eta + (C/2)|z|^2 and |g| <= 1 on the band.
std::vector<CheckReport> validate_A1_A2(const ProblemSpec& spec, const SampleOptions& options = {});
/// L <= S <= U for the declared shift.
CheckReport validate_shift_in_band(const ProblemSpec& spec);
/// L <= 0 <= U.
CheckReport validate_zero_in_band(const ProblemSpec& spec);

/// Sign conditions of a transformed problem.
std::vector<CheckReport> validate_transformed_signs(const ProblemSpec& spec, const SampleOptions& options = {});

struct LipschitzConstants {
  double f_lipschitz = 1.0;  // C1
  double f_floor = 1.0;      // C2
  double g_lipschitz = 1.0;  // C3
  double clock_total = 1.0;  // C4
  double forcing_total = 1.0;  // C5
};

/// Strong assumptions under which a Lipschitz solution exists.
std::vector<CheckReport> validate_lipschitz_case(const ProblemSpec& spec, const LipschitzConstants& constants,
                                                 const SampleOptions& options = {});

}  // namespace drbsde

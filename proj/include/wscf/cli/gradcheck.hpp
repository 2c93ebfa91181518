#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wscf::cli {

struct GradcheckPoint {
  int attempt = 0;
  bool rejected = false;  // too close to a kink; resampled
  std::string note;
  double max_relative_error = 0;
};

struct GradcheckOptions {
  int points = 5;
  double tolerance = 1e-4;
  std::uint64_t seed = 1;
  bool inject_kink = false;  // make the first loss_weak point sit exactly on a hinge kink
};

struct GradcheckOutcome {
  std::string component;
  std::vector<GradcheckPoint> points;
  int accepted = 0;
  int rejected = 0;
  double max_relative_error = 0;
  bool passed = false;
  std::string detail;  // reason for a failure beyond the error bound
};

const std::vector<std::string>& gradcheck_components();

/// Finite-difference check of one component at `points` seeded random
/// non-kink points (double precision). Throws std::invalid_argument for an
/// unknown component, naming the valid ones.
GradcheckOutcome run_gradcheck(const std::string& component, const GradcheckOptions& options = {});

}  // namespace wscf::cli

#pragma once

#include <string>

#include "singlim/field.hpp"

namespace singlim {

// Time-indexed snapshots on a shared uniform grid; times start at 0 and
// increase strictly. label records which equation and parameters produced it.
struct Trajectory {
  std::vector<double> times;
  std::vector<SpectralField> snapshots;
  std::string label;
};

}  // namespace singlim

#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "esd_pinn/mlp.hpp"

namespace esd {

/// States x1..x4 sampled at strictly increasing times.
struct SolutionTable {
  Vector<double> times;
  OutputRows<double> states;

  Eigen::Index size() const { return times.size(); }

  /// Throws std::invalid_argument naming the first broken invariant.
  void validate() const {
    if (states.rows() != times.size())
      throw std::invalid_argument("solution table: row count " + std::to_string(states.rows()) +
                                  " != time count " + std::to_string(times.size()));
    for (Eigen::Index i = 1; i < times.size(); ++i) {
      if (!(times(i) > times(i - 1)))
        throw std::invalid_argument("solution table: times not strictly increasing at row " +
                                    std::to_string(i));
    }
    if (!times.allFinite() || !states.allFinite())
      throw std::invalid_argument("solution table: non-finite entry");
  }
};

}  // namespace esd

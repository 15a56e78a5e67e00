#include "esd_pinn/esd_model.hpp"

#include <utility>

namespace esd {

EsdParameters default_chaotic_params() {
  EsdParameters p;
  p.a1 = 0.09;
  p.a2 = 0.15;
  p.z1 = 0.06;
  p.z2 = 0.082;
  p.z3 = 0.07;
  p.s1 = 0.2;
  p.s2 = 0.5;
  p.s3 = 0.4;
  p.M = 1.8;
  p.N = 1.0;
  p.d1 = 0.1;
  p.d2 = 0.06;
  p.d3 = 0.08;
  return p;
}

State<double> default_initial_state() { return State<double>(0.82, 0.29, 0.48, 0.1); }

ValidationResult validate_params(const EsdParameters& p) {
  ValidationResult result;
  const std::pair<const char*, double> fields[] = {
      {"a1", p.a1}, {"a2", p.a2}, {"z1", p.z1}, {"z2", p.z2}, {"z3", p.z3},
      {"s1", p.s1}, {"s2", p.s2}, {"s3", p.s3}, {"d1", p.d1}, {"d2", p.d2},
      {"d3", p.d3}, {"M", p.M},   {"N", p.N}};
  for (const auto& [name, value] : fields) {
    // NaN fails this comparison too.
    if (!(value > 0.0) || !std::isfinite(value)) {
      result.violations.push_back(std::string(name) + " must be a finite positive number");
    }
  }
  if (!(p.N < p.M)) result.violations.emplace_back("N < M");
  return result;
}

}  // namespace esd

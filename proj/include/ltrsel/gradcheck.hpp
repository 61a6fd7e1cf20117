#pragma once

#include <functional>
#include <vector>

#include "ltrsel/autodiff.hpp"

namespace ltrsel {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_coord = 0;
  bool pass = false;
};

// Compares reverse-mode gradients of a scalar-valued function against central
// finite differences (h = 1e-5). The caller is responsible for choosing a
// smooth point (away from sparsemax support changes, relu kinks, ...).
GradCheckReport grad_check(
    const std::function<ad::Var(const std::vector<ad::Var>&)>& fn,
    const std::vector<Tensor>& point, double tolerance);

}  // namespace ltrsel

#include "ltrsel/gradcheck.hpp"

#include <cmath>

namespace ltrsel {

GradCheckReport grad_check(
    const std::function<ad::Var(const std::vector<ad::Var>&)>& fn,
    const std::vector<Tensor>& point, double tolerance) {
  std::vector<ad::Var> inputs;
  inputs.reserve(point.size());
  for (const Tensor& t : point) inputs.push_back(ad::param(t));
  ad::Var out = fn(inputs);
  ad::backward(out);

  constexpr double h = 1e-5;
  GradCheckReport report;
  for (std::size_t pi = 0; pi < point.size(); ++pi) {
    for (std::size_t ci = 0; ci < point[pi].numel(); ++ci) {
      std::vector<Tensor> shifted = point;
      shifted[pi][ci] += h;
      std::vector<ad::Var> plus;
      for (const Tensor& t : shifted) plus.push_back(ad::constant(t));
      const double fp = fn(plus).scalar();
      shifted[pi][ci] -= 2.0 * h;
      std::vector<ad::Var> minus;
      for (const Tensor& t : shifted) minus.push_back(ad::constant(t));
      const double fm = fn(minus).scalar();
      const double fd = (fp - fm) / (2.0 * h);
      const double an = inputs[pi].has_grad() ? inputs[pi].grad()[ci] : 0.0;
      const double rel = std::abs(an - fd) / std::max(1e-6, std::abs(an) + std::abs(fd));
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_input = pi;
        report.worst_coord = ci;
      }
    }
  }
  report.pass = report.max_rel_error <= tolerance;
  return report;
}

}  // namespace ltrsel

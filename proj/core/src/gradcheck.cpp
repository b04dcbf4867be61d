#include "mslstm/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace mslstm {

GradCheckResult finite_diff_check(const ValueAndGrad& f, std::span<const double> point,
                                  double eps) {
  std::vector<double> analytic;
  f(point, &analytic);
  std::vector<double> probe(point.begin(), point.end());
  GradCheckResult result;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + eps;
    const double up = f(probe, nullptr);
    probe[i] = saved - eps;
    const double down = f(probe, nullptr);
    probe[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double err = std::abs(analytic[i] - numeric) / std::max(1e-12, std::abs(numeric));
    if (i == 0 || err > result.max_rel_error) result = {err, i, analytic[i], numeric};
  }
  return result;
}

GradCheckResult check_tape_gradients(const TapeFunction& fn, const std::vector<Tensor>& inputs,
                                     double eps) {
  std::vector<double> point;
  for (const Tensor& t : inputs) point.insert(point.end(), t.data().begin(), t.data().end());

  auto f = [&](std::span<const double> x, std::vector<double>* grad) {
    Tape tape(grad != nullptr);
    std::vector<Var> vars;
    std::size_t pos = 0;
    for (const Tensor& t : inputs) {
      std::vector<double> data(x.begin() + static_cast<std::ptrdiff_t>(pos),
                               x.begin() + static_cast<std::ptrdiff_t>(pos + t.size()));
      pos += t.size();
      vars.push_back(tape.variable(Tensor(t.shape(), std::move(data))));
    }
    const Var root = fn(tape, vars);
    const double value = tape.value(root).item();
    if (grad) {
      tape.backward(root);
      grad->clear();
      for (Var v : vars) {
        const Tensor g = tape.grad(v);
        grad->insert(grad->end(), g.data().begin(), g.data().end());
      }
    }
    return value;
  };
  return finite_diff_check(f, point, eps);
}

}  // namespace mslstm

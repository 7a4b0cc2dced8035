#include "vbreg/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace vbreg {

GradCheckResult grad_check(const LossBuilder& loss, const ParamStore& params, double epsilon_fd,
                           double floor) {
  ParamStore work = params;
  work.zero_grad();
  {
    ad::Tape tape;
    ad::Var l = loss(tape, work);
    tape.backward(l);
    tape.collect_param_grads(work);
  }
  auto eval = [&](const ParamStore& p) {
    ad::Tape tape(false);
    return loss(tape, p).scalar();
  };

  GradCheckResult res;
  ParamStore probe = work;
  for (auto& [name, param] : work) {
    Matrix& value = probe.at(name).value;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double orig = value.data()[i];
      value.data()[i] = orig + epsilon_fd;
      const double up = eval(probe);
      value.data()[i] = orig - epsilon_fd;
      const double down = eval(probe);
      value.data()[i] = orig;
      const double numeric = (up - down) / (2.0 * epsilon_fd);
      const double analytic = param.grad.data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      res.max_relative_error = std::max(res.max_relative_error, std::abs(analytic - numeric) / denom);
      res.max_abs_gradient = std::max(res.max_abs_gradient, std::abs(analytic));
      ++res.scalars_checked;
    }
  }
  return res;
}

}  // namespace vbreg

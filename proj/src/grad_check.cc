/* Copyright 2026 The GRANDE Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "grande/grad_check.h"

#include <algorithm>
#include <cmath>

namespace grande {

namespace {

double relative_error(double ad, double fd) {
  return std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
}

double checked(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw Error(std::string("grad_check: non-finite ") + what);
  }
  return v;
}

double eval_at(const ScalarFn& f, const Tensor& x) {
  Tape tape;
  Var y = f(tape, tape.constant(x));
  return checked(y.value().item(), "function value");
}

}  // namespace

double grad_check(const ScalarFn& f, const Tensor& point, double step) {
  Tape tape;
  Var x = tape.variable(point);
  Var y = f(tape, x);
  checked(y.value().item(), "function value");
  tape.backward(y);
  const Tensor g = tape.grad(x);
  double worst = 0.0;
  Tensor probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = eval_at(f, probe);
    probe[i] = orig - step;
    const double down = eval_at(f, probe);
    probe[i] = orig;
    const double fd = (up - down) / (2.0 * step);
    worst = std::max(worst, relative_error(checked(g[i], "gradient"), fd));
  }
  return worst;
}

std::vector<ParameterGradError> grad_check_parameters(
    ParameterStore& params, const std::function<Var(Tape&)>& loss,
    double step) {
  params.zero_grad();
  {
    Tape tape;
    Var y = loss(tape);
    checked(y.value().item(), "loss");
    tape.backward(y);
    tape.flush_parameter_gradients();
  }
  auto eval = [&]() {
    Tape tape;
    return checked(loss(tape).value().item(), "loss");
  };
  std::vector<ParameterGradError> out;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Parameter& param = params.at(p);
    ParameterGradError err{param.name, 0.0};
    for (std::size_t i = 0; i < param.value.size(); ++i) {
      const double orig = param.value[i];
      param.value[i] = orig + step;
      const double up = eval();
      param.value[i] = orig - step;
      const double down = eval();
      param.value[i] = orig;
      const double fd = (up - down) / (2.0 * step);
      err.max_relative_error =
          std::max(err.max_relative_error,
                   relative_error(checked(param.grad[i], "gradient"), fd));
    }
    out.push_back(err);
  }
  return out;
}

}  // namespace grande

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

#ifndef GRANDE_GRAD_CHECK_H_
#define GRANDE_GRAD_CHECK_H_

#include <functional>
#include <string>
#include <vector>

#include "grande/autodiff.h"
#include "grande/parameters.h"

namespace grande {

using ScalarFn = std::function<Var(Tape&, Var)>;

/// Compares the tape gradient of f at point against central differences.
/// Returns max_i |g_ad - g_fd| / max(1, |g_ad|, |g_fd|).
double grad_check(const ScalarFn& f, const Tensor& point, double step = 1e-5);

struct ParameterGradError {
  std::string name;
  double max_relative_error = 0.0;
};

/// Same comparison for every tensor of a parameter store; loss is rebuilt on a
/// fresh tape for every evaluation and must only read parameters via
/// Tape::param.
std::vector<ParameterGradError> grad_check_parameters(
    ParameterStore& params, const std::function<Var(Tape&)>& loss,
    double step = 1e-5);

}  // namespace grande

#endif  // GRANDE_GRAD_CHECK_H_

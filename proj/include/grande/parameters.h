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

#ifndef GRANDE_PARAMETERS_H_
#define GRANDE_PARAMETERS_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "grande/tensor.h"

namespace grande {

/// Weight matrices are L2-regularized; biases, layer-norm and frequency
/// vectors are not.
enum class ParamKind { kWeight, kBias, kNormScale, kNormShift, kFrequency };

struct Parameter {
  std::string name;
  ParamKind kind = ParamKind::kWeight;
  Tensor value;
  Tensor grad;

  bool decays() const { return kind == ParamKind::kWeight; }
};

/// Owns parameters with stable addresses, in registration order.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  /// Registers a parameter; weights get Glorot-uniform values drawn from rng,
  /// biases and shifts zeros, norm scales ones. Frequencies are left zero for
  /// the caller to set.
  Parameter& add(std::string name, std::size_t rows, std::size_t cols,
                 ParamKind kind, std::mt19937_64& rng);

  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  Parameter& at(std::size_t i) { return *params_[i]; }
  const Parameter& at(std::size_t i) const { return *params_[i]; }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();
  /// Copies of all values, used for best-model snapshots.
  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  explicit AdamState(AdamOptions options = {}) : options_(options) {}

  const AdamOptions& options() const { return options_; }
  std::int64_t step_count() const { return steps_; }
  const Tensor& first_moment(std::size_t i) const { return m_[i]; }
  const Tensor& second_moment(std::size_t i) const { return v_[i]; }

  /// One bias-corrected Adam update of every parameter from Parameter::grad.
  /// Throws grande::Error and leaves parameters untouched when any gradient
  /// is non-finite.
  void step(ParameterStore& params);

 private:
  AdamOptions options_;
  std::int64_t steps_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

/// Binary checkpoint: magic, format version, entry count, then per entry the
/// name, rank, dims and raw little-endian float64 values.
inline constexpr char kCheckpointMagic[8] = {'G', 'R', 'N', 'D',
                                             'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParameterStore& params,
                     const std::filesystem::path& path);
/// Loads values into an already configured store. Every name and shape must
/// match exactly.
void load_checkpoint(ParameterStore& params,
                     const std::filesystem::path& path);

}  // namespace grande

#endif  // GRANDE_PARAMETERS_H_

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

#include "grande/parameters.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace grande {

Parameter& ParameterStore::add(std::string name, std::size_t rows,
                               std::size_t cols, ParamKind kind,
                               std::mt19937_64& rng) {
  if (find(name) != nullptr) throw Error("duplicate parameter " + name);
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->kind = kind;
  p->value = Tensor(rows, cols);
  p->grad = Tensor(rows, cols);
  switch (kind) {
    case ParamKind::kWeight: {
      const double limit =
          std::sqrt(6.0 / static_cast<double>(rows + cols));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (double& v : p->value.values()) v = dist(rng);
      break;
    }
    case ParamKind::kNormScale:
      p->value.fill(1.0);
      break;
    case ParamKind::kBias:
    case ParamKind::kNormShift:
    case ParamKind::kFrequency:
      break;
  }
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterStore::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) {
    if (!p->grad.same_shape(p->value)) {
      p->grad = Tensor(p->value.rows(), p->value.cols());
    } else {
      p->grad.fill(0.0);
    }
  }
}

std::vector<Tensor> ParameterStore::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value);
  return out;
}

void ParameterStore::restore(const std::vector<Tensor>& values) {
  if (values.size() != params_.size()) {
    throw Error("ParameterStore::restore: expected " +
                std::to_string(params_.size()) + " tensors, got " +
                std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].same_shape(params_[i]->value)) {
      throw Error("ParameterStore::restore: shape mismatch for " +
                  params_[i]->name);
    }
    params_[i]->value = values[i];
  }
}

void AdamState::step(ParameterStore& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params.at(i);
    if (p.grad.same_shape(p.value) && !p.grad.all_finite()) {
      throw Error("adam: non-finite gradient in " + p.name + " at step " +
                  std::to_string(steps_ + 1));
    }
  }
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Tensor& w = params.at(i).value;
      m_.emplace_back(w.rows(), w.cols());
      v_.emplace_back(w.rows(), w.cols());
    }
  }
  ++steps_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params.at(i);
    if (!p.grad.same_shape(p.value)) continue;
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      m[k] = b1 * m[k] + (1.0 - b1) * g;
      v[k] = b2 * v[k] + (1.0 - b2) * g * g;
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p.value[k] -=
          options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) {
    throw Error("checkpoint: truncated file");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw Error("checkpoint: truncated file");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const ParameterStore& params,
                     const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("checkpoint: cannot open " + path.string());
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_u32(os, kCheckpointVersion);
  write_u32(os, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params.at(i);
    write_u32(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    const auto shape = p.value.shape();
    write_u32(os, static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) write_u64(os, d);
    for (double v : p.value.values()) write_u64(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw Error("checkpoint: write failed for " + path.string());
}

void load_checkpoint(ParameterStore& params,
                     const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("checkpoint: cannot open " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  if (!is.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error("checkpoint: bad magic in " + path.string());
  }
  const std::uint32_t version = read_u32(is);
  if (version != kCheckpointVersion) {
    throw Error("checkpoint: unsupported format version " +
                std::to_string(version));
  }
  const std::uint32_t count = read_u32(is);
  if (count != params.size()) {
    throw Error("checkpoint: " + std::to_string(count) +
                " entries, model expects " + std::to_string(params.size()));
  }
  std::vector<Tensor> values;
  for (std::uint32_t i = 0; i < count; ++i) {
    const Parameter& p = params.at(i);
    const std::uint32_t len = read_u32(is);
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw Error("checkpoint: truncated file");
    if (name != p.name) {
      throw Error("checkpoint: entry " + std::to_string(i) + " is '" + name +
                  "', model expects '" + p.name + "'");
    }
    const std::uint32_t rank = read_u32(is);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = read_u64(is);
    if (shape != p.value.shape()) {
      throw Error("checkpoint: shape mismatch for " + name);
    }
    Tensor t(p.value.rows(), p.value.cols());
    for (double& v : t.values()) v = std::bit_cast<double>(read_u64(is));
    values.push_back(std::move(t));
  }
  params.restore(values);
}

}  // namespace grande

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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "grande/grad_check.h"
#include "grande/model.h"
#include "model_fixtures.h"
#include "oracles.h"
#include "test_graphs.h"

using namespace grande;
using grande::testing::random_tensor;
using grande::testing::randomize;
using grande::testing::sink_star_graph;
using grande::testing::small_config;
using grande::testing::toy_graph;

namespace {

oracle::Vec to_vec(const Tensor& t) {
  return oracle::Vec(t.values().begin(), t.values().end());
}

oracle::Vec row_of(Var v, std::size_t r) {
  return oracle::row(v.value(), r);
}

void expect_near(const oracle::Vec& got, const oracle::Vec& want, double tol,
                 const std::string& what = "") {
  ASSERT_EQ(got.size(), want.size()) << what;
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_NEAR(got[i], want[i], tol) << what << " [" << i << "]";
  }
}

void expect_matches_oracle(const ModelConfig& c, const DirectedMultigraph& g,
                           const std::vector<EdgeId>& targets,
                           std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  GrandeModel model(c, g.node_feature_width(), g.edge_feature_width());
  randomize(model.parameters(), rng);
  ModelInput input = make_model_input(g, targets, c);
  Tape tape;
  ForwardState s = model.forward(tape, input);
  const oracle::Output want = oracle::forward(model.parameters(), c, g, targets);
  for (std::size_t l = 0; l <= c.layers; ++l) {
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
      expect_near(row_of(s.h[l], v), want.h[l][v], tol,
                  "h layer " + std::to_string(l) + " node " + std::to_string(v));
    }
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      expect_near(row_of(s.g[l], e), want.g[l][e], tol,
                  "g layer " + std::to_string(l) + " edge " + std::to_string(e));
    }
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (c.use_cross_query) {
      expect_near(row_of(s.delta_uv, i), want.delta_uv[i], tol, "delta_uv");
      expect_near(row_of(s.delta_vu, i), want.delta_vu[i], tol, "delta_vu");
    }
    EXPECT_NEAR(s.probabilities.value()[i], want.probabilities[i], tol);
  }
}

struct SingleAttention {
  Tape tape;
  AttentionWeights w;
};

void make_weights(SingleAttention& a, std::size_t q_width, std::size_t k_width,
                  std::size_t out, std::mt19937_64& rng) {
  a.w = {a.tape.constant(random_tensor(q_width, out, rng)),
         a.tape.constant(random_tensor(k_width, out, rng)),
         a.tape.constant(random_tensor(k_width, out, rng)),
         a.tape.constant(random_tensor(k_width, out, rng))};
}

}  // namespace

TEST(TimeEncoding, ZeroOffsetClosedForm) {
  Tape t;
  Var rho = t.constant(Tensor::row({0.3, 2.0, 7.5}));
  Var te = time_encode(t, {0.0}, rho);
  const double s = std::sqrt(2.0 / 6.0);
  EXPECT_EQ(te.value(), Tensor::row({s, 0.0, s, 0.0, s, 0.0}));
}

TEST(TimeEncoding, QuarterTurn) {
  Tape t;
  Var te = time_encode(t, {1.0}, t.constant(Tensor::row({std::numbers::pi / 2})));
  EXPECT_NEAR(te.value()[0], 0.0, 1e-15);
  EXPECT_NEAR(te.value()[1], 1.0, 1e-15);
}

TEST(TimeEncoding, UnitNorm) {
  std::mt19937_64 rng(40);
  std::uniform_real_distribution<double> s(0.0, 1e6), r(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    Tape t;
    Tensor rho(1, 8);
    for (double& v : rho.values()) v = r(rng);
    Var te = time_encode(t, {s(rng)}, t.constant(rho));
    double sq = 0.0;
    for (double v : te.value().values()) sq += v * v;
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-12);
  }
}

TEST(TimeEncoding, RejectsNegativeOffsetsAndDifferentiatesInRho) {
  Tape t;
  Var rho = t.constant(Tensor::row({1.0}));
  EXPECT_THROW(time_encode(t, {-1.0}, rho), Error);
  const double err = grad_check(
      [](Tape& tape, Var r) {
        return sum(mul(time_encode(tape, {0.5, 3.0}, r),
                       tape.constant(Tensor(2, 6, 0.7))));
      },
      Tensor::row({0.2, 1.1, -0.4}));
  EXPECT_LT(err, 1e-8);
}

TEST(EdgeTimeOffsets, Examples) {
  DirectedMultigraph single(2, {{0, 1, 7.0}});
  EXPECT_EQ(edge_time_offsets(single, 0), (std::vector<double>{0.0}));
  DirectedMultigraph star(4, {{1, 0, 5.0}, {0, 2, 3.0}, {3, 0, 9.0}});
  // Incoming edges first (ids 0, 2), then outgoing (id 1).
  EXPECT_EQ(edge_time_offsets(star, 0), (std::vector<double>{2.0, 6.0, 0.0}));
  DirectedMultigraph same(3, {{0, 1, 2.0}, {2, 1, 2.0}});
  EXPECT_EQ(edge_time_offsets(same, 1), (std::vector<double>{0.0, 0.0}));
  DirectedMultigraph isolated(3, {{0, 1, 2.0}});
  EXPECT_TRUE(edge_time_offsets(isolated, 2).empty());
}

TEST(Attend, EmptyKeysReduceToSelfTerm) {
  std::mt19937_64 rng(41);
  SingleAttention a;
  make_weights(a, 4, 4, 4, rng);
  Var q = a.tape.constant(random_tensor(1, 4, rng));
  Var none = a.tape.constant(Tensor(0, 4));
  AttentionResult r = attend(a.w, q, q, none, none, {});
  EXPECT_EQ(r.alpha_self.value()[0], 1.0);
  expect_near(to_vec(r.value.value()),
              oracle::times(to_vec(q.value()), a.w.w_n.value()), 1e-15);
}

TEST(Attend, ZeroQueryWeightsGiveUniformWeights) {
  std::mt19937_64 rng(42);
  SingleAttention a;
  make_weights(a, 4, 4, 4, rng);
  a.w.w_q = a.tape.constant(Tensor(4, 4));
  Var q = a.tape.constant(random_tensor(1, 4, rng));
  Var nk = a.tape.constant(random_tensor(3, 4, rng));
  Var ek = a.tape.constant(random_tensor(3, 4, rng));
  AttentionResult r = attend(a.w, q, q, nk, ek, {0, 0, 0});
  EXPECT_DOUBLE_EQ(r.alpha_self.value()[0], 0.25);
  for (double v : r.alpha.value().values()) EXPECT_DOUBLE_EQ(v, 0.25);
  for (double v : r.beta.value().values()) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
}

TEST(Attend, MatchesScalarOracle) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    SingleAttention a;
    make_weights(a, 4, 6, 4, rng);
    Var q = a.tape.constant(random_tensor(1, 4, rng));
    Var self = a.tape.constant(random_tensor(1, 6, rng));
    Var nk = a.tape.constant(random_tensor(2, 6, rng));
    Var ek = a.tape.constant(random_tensor(2, 6, rng));
    AttentionResult r = attend(a.w, q, self, nk, ek, {0, 0});
    const oracle::Weights w{&a.w.w_q.value(), &a.w.w_k.value(),
                            &a.w.w_n.value(), &a.w.w_e.value()};
    const oracle::Attention want =
        oracle::attend(w, to_vec(q.value()), to_vec(self.value()),
                       {row_of(nk, 0), row_of(nk, 1)},
                       {row_of(ek, 0), row_of(ek, 1)});
    expect_near(to_vec(r.value.value()), want.value, 1e-12);
    expect_near(to_vec(r.alpha.value()), want.alpha, 1e-12);
    expect_near(to_vec(r.beta.value()), want.beta, 1e-12);
    EXPECT_NEAR(r.alpha_self.value()[0], want.alpha_self, 1e-12);
  }
}

TEST(Attend, WeightsNormalizePerSegment) {
  std::mt19937_64 rng(44);
  SingleAttention a;
  make_weights(a, 5, 5, 5, rng);
  const std::vector<std::int32_t> seg = {0, 2, 2, 0, 2, 3};
  Var q = a.tape.constant(random_tensor(4, 5, rng, -3, 3));
  Var nk = a.tape.constant(random_tensor(6, 5, rng, -3, 3));
  Var ek = a.tape.constant(random_tensor(6, 5, rng, -3, 3));
  AttentionResult r = attend(a.w, q, q, nk, ek, seg);
  std::vector<double> alpha(4), beta(4);
  for (std::size_t s = 0; s < 4; ++s) alpha[s] = r.alpha_self.value()[s];
  for (std::size_t i = 0; i < seg.size(); ++i) {
    alpha[seg[i]] += r.alpha.value()[i];
    beta[seg[i]] += r.beta.value()[i];
  }
  for (std::size_t s = 0; s < 4; ++s) EXPECT_NEAR(alpha[s], 1.0, 1e-12);
  // Segment 1 has no keys, so its beta sum is empty.
  EXPECT_NEAR(beta[0], 1.0, 1e-12);
  EXPECT_EQ(beta[1], 0.0);
  EXPECT_NEAR(beta[2], 1.0, 1e-12);
  EXPECT_NEAR(beta[3], 1.0, 1e-12);
}

TEST(Attend, WidthMismatchThrows) {
  std::mt19937_64 rng(45);
  SingleAttention a;
  make_weights(a, 4, 6, 4, rng);
  Var q = a.tape.constant(random_tensor(1, 4, rng));
  Var self = a.tape.constant(random_tensor(1, 6, rng));
  Var bad = a.tape.constant(random_tensor(1, 5, rng));
  EXPECT_THROW(attend(a.w, q, self, bad, bad, {0}), Error);
  EXPECT_THROW(attend(a.w, q, self, self, self, {0, 0}), Error);
}

TEST(TemporalAttend, ZeroOffsetsEqualConstantAugmentation) {
  std::mt19937_64 rng(46);
  SingleAttention a;
  make_weights(a, 4, 8, 4, rng);
  Var rho = a.tape.constant(Tensor::row({0.5, 2.0}));
  Tensor q = random_tensor(1, 4, rng);
  Tensor nk = random_tensor(3, 4, rng), ek = random_tensor(3, 4, rng);
  // Path 1: keys widened with encodings of zero offsets.
  Var te = time_encode(a.tape, {0.0, 0.0, 0.0}, rho);
  Var qv = a.tape.constant(q);
  std::array<Var, 2> self_parts{qv, time_encode(a.tape, {0.0}, rho)};
  std::array<Var, 2> nk_parts{a.tape.constant(nk), te};
  std::array<Var, 2> ek_parts{a.tape.constant(ek), te};
  AttentionResult r1 = attend(a.w, qv, concat_cols(self_parts),
                              concat_cols(nk_parts), concat_cols(ek_parts),
                              {0, 0, 0});
  // Path 2: plain attend on keys augmented with the closed-form TE(0).
  auto widen = [](const Tensor& x) {
    const double s = std::sqrt(0.5);
    Tensor out(x.rows(), x.cols() + 4);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = x(r, c);
      out(r, x.cols()) = s;
      out(r, x.cols() + 2) = s;
    }
    return out;
  };
  AttentionResult r2 =
      attend(a.w, qv, a.tape.constant(widen(q)), a.tape.constant(widen(nk)),
             a.tape.constant(widen(ek)), {0, 0, 0});
  EXPECT_EQ(r1.value.value(), r2.value.value());
  // Empty keys: W_N applied to the widened self key.
  Var none = a.tape.constant(Tensor(0, 8));
  AttentionResult r3 = attend(a.w, qv, a.tape.constant(widen(q)), none, none, {});
  expect_near(to_vec(r3.value.value()),
              oracle::times(to_vec(widen(q)), a.w.w_n.value()), 1e-15);
}

namespace {

BlockWeights random_block(Tape& t, std::size_t width, std::size_t key_width,
                          std::size_t ff, std::mt19937_64& rng) {
  BlockWeights b;
  b.attention = {t.constant(random_tensor(width, width, rng)),
                 t.constant(random_tensor(key_width, width, rng)),
                 t.constant(random_tensor(key_width, width, rng)),
                 t.constant(random_tensor(key_width, width, rng))};
  b.ln1_scale = t.constant(random_tensor(1, width, rng, 0.5, 1.5));
  b.ln1_shift = t.constant(random_tensor(1, width, rng));
  b.ff1_w = t.constant(random_tensor(width, ff, rng));
  b.ff1_b = t.constant(random_tensor(1, ff, rng));
  b.ff2_w = t.constant(random_tensor(ff, width, rng));
  b.ff2_b = t.constant(random_tensor(1, width, rng));
  b.ln2_scale = t.constant(random_tensor(1, width, rng, 0.5, 1.5));
  b.ln2_shift = t.constant(random_tensor(1, width, rng));
  return b;
}

}  // namespace

TEST(TransformerBlock, ZeroedSublayersGiveDoubleLayerNorm) {
  std::mt19937_64 rng(47);
  Tape t;
  BlockWeights b = random_block(t, 4, 4, 6, rng);
  b.attention.w_n = t.constant(Tensor(4, 4));
  b.attention.w_e = t.constant(Tensor(4, 4));
  b.ff1_w = t.constant(Tensor(4, 6));
  b.ff1_b = t.constant(Tensor(1, 6));
  b.ff2_w = t.constant(Tensor(6, 4));
  b.ff2_b = t.constant(Tensor(1, 4));
  b.ln1_scale = b.ln2_scale = t.constant(Tensor(1, 4, 1.0));
  b.ln1_shift = b.ln2_shift = t.constant(Tensor(1, 4));
  Var q = t.constant(random_tensor(1, 4, rng));
  Var nk = t.constant(random_tensor(2, 4, rng));
  Var out = transformer_block(b, q, q, nk, nk, {0, 0});
  const Tensor ones(1, 4, 1.0), zeros(1, 4);
  expect_near(to_vec(out.value()),
              oracle::layer_norm(oracle::layer_norm(to_vec(q.value()), ones,
                                                    zeros),
                                 ones, zeros),
              1e-15);
}

TEST(TransformerBlock, OutputIsNormalized) {
  // With unit scale and zero shift the output is the normalized vector
  // itself: mean 0 and variance v / (v + eps) for pre-norm variance v.
  std::mt19937_64 rng(48);
  for (int trial = 0; trial < 20; ++trial) {
    Tape t;
    BlockWeights b = random_block(t, 6, 6, 8, rng);
    b.ln2_scale = t.constant(Tensor(1, 6, 1.0));
    b.ln2_shift = t.constant(Tensor(1, 6));
    Var q = t.constant(random_tensor(1, 6, rng, -2, 2));
    Var nk = t.constant(random_tensor(3, 6, rng));
    Var ek = t.constant(random_tensor(3, 6, rng));
    Var out = transformer_block(b, q, q, nk, ek, {0, 0, 0});
    // Recompute the pre-norm vector to learn v.
    AttentionResult att;
    transformer_block(b, q, q, nk, ek, {0, 0, 0}, &att);
    const oracle::Vec x = oracle::layer_norm(
        oracle::plus(to_vec(q.value()), to_vec(att.value.value())),
        b.ln1_scale.value(), b.ln1_shift.value());
    oracle::Vec hidden = oracle::plus_row(oracle::times(x, b.ff1_w.value()),
                                          b.ff1_b.value());
    for (double& v : hidden) v = std::max(v, 0.0);
    const oracle::Vec pre = oracle::plus(
        x, oracle::plus_row(oracle::times(hidden, b.ff2_w.value()),
                            b.ff2_b.value()));
    double m = 0.0, var = 0.0;
    for (double v : pre) m += v / 6.0;
    for (double v : pre) var += (v - m) * (v - m) / 6.0;
    double om = 0.0, ovar = 0.0;
    for (double v : out.value().values()) om += v / 6.0;
    for (double v : out.value().values()) ovar += (v - om) * (v - om) / 6.0;
    EXPECT_NEAR(om, 0.0, 1e-12);
    EXPECT_NEAR(ovar, var / (var + 1e-5), 1e-9);
  }
}

TEST(TransformerBlock, MatchesScalarOracle) {
  std::mt19937_64 rng(49);
  for (int trial = 0; trial < 10; ++trial) {
    Tape t;
    BlockWeights b = random_block(t, 4, 6, 7, rng);
    Var q = t.constant(random_tensor(1, 4, rng));
    Var self = t.constant(random_tensor(1, 6, rng));
    Var nk = t.constant(random_tensor(2, 6, rng));
    Var ek = t.constant(random_tensor(2, 6, rng));
    Var out = transformer_block(b, q, self, nk, ek, {0, 0});
    const oracle::Weights w{&b.attention.w_q.value(), &b.attention.w_k.value(),
                            &b.attention.w_n.value(), &b.attention.w_e.value()};
    const oracle::Attention a =
        oracle::attend(w, to_vec(q.value()), to_vec(self.value()),
                       {row_of(nk, 0), row_of(nk, 1)},
                       {row_of(ek, 0), row_of(ek, 1)});
    const oracle::Vec x = oracle::layer_norm(
        oracle::plus(to_vec(q.value()), a.value), b.ln1_scale.value(),
        b.ln1_shift.value());
    oracle::Vec hidden = oracle::plus_row(oracle::times(x, b.ff1_w.value()),
                                          b.ff1_b.value());
    for (double& v : hidden) v = std::max(v, 0.0);
    const oracle::Vec want = oracle::layer_norm(
        oracle::plus(x, oracle::plus_row(oracle::times(hidden, b.ff2_w.value()),
                                         b.ff2_b.value())),
        b.ln2_scale.value(), b.ln2_shift.value());
    expect_near(to_vec(out.value()), want, 1e-12);
  }
}

TEST(Model, ParameterShapesFollowConfig) {
  ModelConfig c = small_config();
  GrandeModel full(c, 3, 2);
  EXPECT_EQ(full.classifier_input_width(), 40u);
  EXPECT_EQ(full.parameters().find("type_embedding")->value.rows(), 4u);
  EXPECT_EQ(full.parameters().find("layer0.node_in.w_k")->value.rows(), 8u);
  EXPECT_EQ(full.parameters().find("time.frequency")->value.cols(), 2u);

  c.use_dual = false;
  c.use_cross_query = false;
  GrandeModel reduced(c, 3, 2);
  EXPECT_EQ(reduced.classifier_input_width(), 24u);
  EXPECT_EQ(reduced.parameters().find("head.w1")->value.rows(), 24u);
  EXPECT_EQ(reduced.parameters().find("type_embedding"), nullptr);
  EXPECT_EQ(reduced.parameters().find("cross.left_in.w_q"), nullptr);

  c.use_time_encoding = false;
  GrandeModel no_te(c, 3, 2);
  EXPECT_EQ(no_te.parameters().find("layer0.node_in.w_k")->value.rows(), 4u);
  EXPECT_EQ(no_te.parameters().find("time.frequency"), nullptr);
}

TEST(Model, ConfigValidation) {
  ModelConfig c = small_config();
  c.hidden = 7;
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.layers = 0;
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.time_width = 3;
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.use_dual = false;
  c.dual_mode = DualMode::kPlainLine;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Model, MatchesScalarOracleAcrossVariants) {
  std::mt19937_64 rng(50);
  const DirectedMultigraph g = toy_graph(rng);
  const std::vector<EdgeId> targets = {0, 3, 5, 6};
  std::vector<std::pair<std::string, ModelConfig>> variants;
  ModelConfig c = small_config();
  variants.emplace_back("full", c);
  ModelConfig reduced = c;
  reduced.use_dual = false;
  reduced.use_cross_query = false;
  variants.emplace_back("reduced", reduced);
  ModelConfig no_prune = c;
  no_prune.use_causal_pruning = false;
  variants.emplace_back("no_causal_pruning", no_prune);
  ModelConfig no_te = c;
  no_te.use_time_encoding = false;
  variants.emplace_back("no_time_encoding", no_te);
  ModelConfig no_cross = c;
  no_cross.use_cross_query = false;
  variants.emplace_back("no_cross_query", no_cross);
  ModelConfig line = c;
  line.dual_mode = DualMode::kPlainLine;
  variants.emplace_back("line_graph", line);
  ModelConfig in_only = c;
  in_only.use_out_branch = false;
  variants.emplace_back("in_only", in_only);
  ModelConfig one_layer = c;
  one_layer.layers = 1;
  variants.emplace_back("one_layer", one_layer);
  for (const auto& [name, config] : variants) {
    SCOPED_TRACE(name);
    expect_matches_oracle(config, g, targets, 51, 1e-10);
  }
}

TEST(Model, SingleEdgeMatchesOracle) {
  std::mt19937_64 rng(52);
  DirectedMultigraph g(2, {{0, 1, 3.0}}, random_tensor(2, 3, rng),
                       random_tensor(1, 2, rng));
  expect_matches_oracle(small_config(), g, {0}, 53, 1e-10);
}

TEST(Model, SingleEdgeStructure) {
  // Node 0 has no incoming edges and edge 0 has no dual neighbours, so those
  // branches reduce to their self terms; node 0's outgoing branch sees edge 0.
  std::mt19937_64 rng(54);
  ModelConfig c = small_config();
  c.layers = 1;
  DirectedMultigraph g(2, {{0, 1, 3.0}}, random_tensor(2, 3, rng),
                       random_tensor(1, 2, rng));
  GrandeModel model(c, 3, 2);
  randomize(model.parameters(), rng);
  const ParameterStore& ps = model.parameters();
  Tape tape;
  ForwardState s = model.forward(tape, make_model_input(g, {0}, c));
  const oracle::Vec h0 = row_of(s.h[0], 0);
  const oracle::Vec g0 = row_of(s.g[0], 0);
  const oracle::Vec te0 =
      oracle::time_encoding(0.0, oracle::param(ps, "time.frequency"));
  const oracle::Vec q = oracle::times(h0, oracle::param(ps, "layer0.phi_n"));
  const oracle::Vec phi = oracle::transformer(ps, "layer0.node_in", q,
                                              oracle::cat(q, te0), {}, {});
  const oracle::Vec h1 = row_of(s.h[1], 0);
  expect_near(oracle::Vec(h1.begin(), h1.begin() + 4), phi, 1e-12);
  const oracle::Vec gq = oracle::times(g0, oracle::param(ps, "layer0.theta_n"));
  const oracle::Vec theta = oracle::transformer(ps, "layer0.edge_in", gq,
                                                oracle::cat(gq, te0), {}, {});
  const oracle::Vec g1 = row_of(s.g[1], 0);
  expect_near(oracle::Vec(g1.begin(), g1.begin() + 4), theta, 1e-12);
}

TEST(Model, ForwardIsDeterministicAndInUnitInterval) {
  std::mt19937_64 rng(55);
  const DirectedMultigraph g = toy_graph(rng);
  ModelConfig c = small_config();
  GrandeModel a(c, 3, 2), b(c, 3, 2);
  ModelInput input = make_model_input(g, {0, 1, 2, 3, 4, 5, 6}, c);
  const std::vector<double> pa = a.predict(input);
  EXPECT_EQ(pa, a.predict(input));
  EXPECT_EQ(pa, b.predict(input));
  for (double p : pa) {
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
  DirectedMultigraph trivial(2, {{0, 1, 0.0}}, Tensor(2, 3), Tensor(1, 2));
  const std::vector<double> pt = a.predict(make_model_input(trivial, {0}, c));
  ASSERT_EQ(pt.size(), 1u);
  EXPECT_GT(pt[0], 0.0);
  EXPECT_LT(pt[0], 1.0);
}

TEST(Model, ZeroHeadGivesHalf) {
  std::mt19937_64 rng(56);
  ModelConfig c = small_config();
  GrandeModel model(c, 3, 2);
  model.parameters().find("head.w2")->value.fill(0.0);
  model.parameters().find("head.b2")->value.fill(0.0);
  const std::vector<double> p =
      model.predict(make_model_input(toy_graph(rng), {0, 4}, c));
  EXPECT_EQ(p, (std::vector<double>{0.5, 0.5}));
}

TEST(CrossQuery, LoneTargetReducesToSelfTerms) {
  // v = node 1 touches only the target edge, so every attention over v's
  // neighbourhood is the self term h_u W_N.
  std::mt19937_64 rng(57);
  ModelConfig c = small_config();
  DirectedMultigraph g(3, {{0, 1, 1.0}, {2, 0, 2.0}}, random_tensor(3, 3, rng),
                       random_tensor(2, 2, rng));
  GrandeModel model(c, 3, 2);
  randomize(model.parameters(), rng);
  Tape tape;
  ForwardState s = model.forward(tape, make_model_input(g, {0}, c));
  const oracle::Vec hu = row_of(s.h.back(), 0);
  const ParameterStore& ps = model.parameters();
  const oracle::Vec want =
      oracle::cat(oracle::times(hu, oracle::param(ps, "cross.left_in.w_n")),
                  oracle::times(hu, oracle::param(ps, "cross.left_out.w_n")));
  expect_near(row_of(s.delta_uv, 0), want, 1e-12);
}

TEST(CrossQuery, AsymmetricWitness) {
  std::mt19937_64 rng(58);
  ModelConfig c = small_config();
  const DirectedMultigraph g = toy_graph(rng);
  GrandeModel model(c, 3, 2);
  Tape tape;
  ForwardState s = model.forward(tape, make_model_input(g, {0}, c));
  double diff = 0.0;
  for (std::size_t j = 0; j < c.hidden; ++j) {
    diff = std::max(diff, std::abs(s.delta_uv.value()(0, j) -
                                   s.delta_vu.value()(0, j)));
  }
  EXPECT_GT(diff, 1e-6);
}

TEST(Model, PermutationEquivariance) {
  std::mt19937_64 rng(59);
  const DirectedMultigraph g = toy_graph(rng);
  const std::vector<EdgeId> targets = {0, 2, 4, 6};
  ModelConfig c = small_config();
  GrandeModel model(c, 3, 2);
  randomize(model.parameters(), rng);
  Tape t1;
  ForwardState base = model.forward(t1, make_model_input(g, targets, c));

  for (int trial = 0; trial < 5; ++trial) {
    std::vector<NodeId> node_perm(g.num_nodes());
    std::vector<EdgeId> edge_perm(g.num_edges());
    std::iota(node_perm.begin(), node_perm.end(), 0);
    std::iota(edge_perm.begin(), edge_perm.end(), 0);
    std::shuffle(node_perm.begin(), node_perm.end(), rng);
    std::shuffle(edge_perm.begin(), edge_perm.end(), rng);
    // Edge i of the permuted graph is edge src[i] of the original.
    std::vector<EdgeId> src(g.num_edges());
    for (std::size_t e = 0; e < g.num_edges(); ++e) src[edge_perm[e]] = e;
    std::vector<Edge> edges(g.num_edges());
    Tensor x(g.num_nodes(), 3), z(g.num_edges(), 2);
    for (std::size_t i = 0; i < g.num_edges(); ++i) {
      const Edge& e = g.edges()[src[i]];
      edges[i] = {node_perm[e.tail], node_perm[e.head], e.timestamp};
      for (std::size_t j = 0; j < 2; ++j) z(i, j) = g.edge_features()(src[i], j);
    }
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
      for (std::size_t j = 0; j < 3; ++j) {
        x(node_perm[v], j) = g.node_features()(v, j);
      }
    }
    DirectedMultigraph pg(g.num_nodes(), edges, x, z);
    std::vector<EdgeId> ptargets;
    for (EdgeId t : targets) ptargets.push_back(edge_perm[t]);
    Tape t2;
    ForwardState perm = model.forward(t2, make_model_input(pg, ptargets, c));
    for (std::size_t l = 0; l <= c.layers; ++l) {
      for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        expect_near(row_of(perm.h[l], node_perm[v]), row_of(base.h[l], v),
                    1e-9, "h");
      }
      for (std::size_t e = 0; e < g.num_edges(); ++e) {
        expect_near(row_of(perm.g[l], edge_perm[e]), row_of(base.g[l], e),
                    1e-9, "g");
      }
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
      EXPECT_NEAR(perm.probabilities.value()[i],
                  base.probabilities.value()[i], 1e-9);
    }
  }
}

TEST(Model, ReachabilityOfOutgoingNeighbours) {
  // h of the sink n0 after two layers reaches n9 only through n5's outgoing
  // edge to n9.
  auto probe = [](bool out_branch) {
    ModelConfig c = small_config();
    c.use_out_branch = out_branch;
    const DirectedMultigraph g = sink_star_graph(4, 2);
    GrandeModel model(c, 4, 2);
    Tape tape;
    Var x = tape.variable(g.node_features());
    Var z = tape.constant(g.edge_features());
    ForwardState s = model.forward(tape, make_model_input(g, {4}, c), x, z);
    Var h0 = slice_rows(s.h.back(), 0, 1);
    // A LayerNorm output with unit scale sums to zero, so weight unevenly.
    Tensor w(1, c.hidden);
    for (std::size_t j = 0; j < c.hidden; ++j) w(0, j) = 1.0 + double(j);
    tape.backward(sum(mul(h0, tape.constant(w))));
    const Tensor grad = tape.grad(x);
    double mx = 0.0;
    for (std::size_t j = 0; j < 4; ++j) mx = std::max(mx, std::abs(grad(9, j)));
    return mx;
  };
  EXPECT_GT(probe(true), 1e-8);
  EXPECT_EQ(probe(false), 0.0);
}

TEST(Model, DirectionWitness) {
  // Reversing every edge of a fixed instance moves the target probability.
  std::mt19937_64 rng(60);
  ModelConfig c = small_config();
  const DirectedMultigraph g = sink_star_graph(4, 2);
  std::vector<Edge> reversed;
  for (const Edge& e : g.edges()) reversed.push_back({e.head, e.tail, e.timestamp});
  const DirectedMultigraph r(g.num_nodes(), reversed, g.node_features(),
                             g.edge_features());
  GrandeModel model(c, 4, 2);
  const double p = model.predict(make_model_input(g, {4}, c))[0];
  const double q = model.predict(make_model_input(r, {4}, c))[0];
  EXPECT_GT(std::abs(p - q), 1e-3);
}

TEST(Model, FullGradientCheck) {
  std::mt19937_64 rng(61);
  ModelConfig c = small_config();
  c.hidden = 4;
  c.ff_hidden = 5;
  c.classifier_hidden = 4;
  const DirectedMultigraph g = toy_graph(rng, 2, 2);
  GrandeModel model(c, 2, 2);
  randomize(model.parameters(), rng);
  const ModelInput input = make_model_input(g, {0, 1, 3, 5, 6}, c);
  const std::vector<double> labels = {1, 0, 1, 0, 1};
  const std::vector<double> mask(5, 1.0);
  auto errors = grad_check_parameters(model.parameters(), [&](Tape& t) {
    return binary_cross_entropy(model.forward(t, input).probabilities, labels,
                                mask);
  });
  ASSERT_EQ(errors.size(), model.parameters().size());
  for (const auto& e : errors) EXPECT_LT(e.max_relative_error, 1e-4) << e.name;
}

TEST(Model, CheckpointRoundTrip) {
  ModelConfig c = small_config();
  GrandeModel a(c, 3, 2);
  std::mt19937_64 rng(62);
  randomize(a.parameters(), rng);
  const auto path = std::filesystem::temp_directory_path() / "grande_model.ckpt";
  save_checkpoint(a.parameters(), path);
  GrandeModel b(c, 3, 2);
  load_checkpoint(b.parameters(), path);
  const DirectedMultigraph g = toy_graph(rng);
  EXPECT_EQ(a.predict(make_model_input(g, {0, 1}, c)),
            b.predict(make_model_input(g, {0, 1}, c)));
  ModelConfig other = c;
  other.use_cross_query = false;
  GrandeModel wrong(other, 3, 2);
  EXPECT_THROW(load_checkpoint(wrong.parameters(), path), Error);
  std::filesystem::remove(path);
}

TEST(Model, RecordsEveryAttentionCall) {
  std::mt19937_64 rng(63);
  const DirectedMultigraph g = toy_graph(rng);
  for (bool dual : {true, false}) {
    ModelConfig c = small_config();
    c.use_dual = dual;
    c.use_cross_query = dual;
    GrandeModel model(c, 3, 2);
    randomize(model.parameters(), rng);
    Tape t;
    const ForwardState s = model.forward(t, make_model_input(g, {0, 3}, c));
    ASSERT_EQ(s.attention.size(), dual ? 2 * 4 + 4 : 2 * 2);
    EXPECT_EQ(s.attention.front().site, "layer0.node_in");
    for (const AttentionCall& call : s.attention) {
      const std::size_t n = call.result.alpha_self.rows();
      std::vector<double> total(n);
      for (std::size_t q = 0; q < n; ++q) total[q] = call.result.alpha_self.value()[q];
      for (std::size_t i = 0; i < call.segment.size(); ++i) {
        total[call.segment[i]] += call.result.alpha.value()[i];
      }
      for (double v : total) EXPECT_NEAR(v, 1.0, 1e-12) << call.site;
    }
  }
}

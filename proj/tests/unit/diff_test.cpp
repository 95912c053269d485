#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "oracles/adam_oracle.hpp"
#include "oracles/tensor_oracle.hpp"
#include "wordspot/diff/adam.hpp"
#include "wordspot/diff/gradcheck.hpp"
#include "wordspot/diff/init.hpp"
#include "wordspot/diff/ops.hpp"
#include "wordspot/error.hpp"

using namespace wordspot;
using namespace wordspot::diff;

namespace {

Array random_array(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Array a(std::move(shape));
  for (auto& v : a.storage()) v = u(rng);
  return a;
}

oracle::Tensor3 to_tensor(const Array& a) {
  auto t = oracle::make_tensor(a.extent(0), a.extent(1), a.extent(2));
  for (std::size_t c = 0; c < a.extent(0); ++c)
    for (std::size_t y = 0; y < a.extent(1); ++y)
      for (std::size_t x = 0; x < a.extent(2); ++x) t[c][y][x] = a.at(c, y, x);
  return t;
}

oracle::Tensor4 to_tensor4(const Array& a) {
  oracle::Tensor4 t(a.extent(0), oracle::make_tensor(a.extent(1), a.extent(2), a.extent(3)));
  std::size_t i = 0;
  for (auto& f : t)
    for (auto& c : f)
      for (auto& row : c)
        for (auto& v : row) v = a[i++];
  return t;
}

std::vector<double> flatten(const oracle::Tensor3& t) {
  std::vector<double> out;
  for (const auto& c : t)
    for (const auto& row : c) out.insert(out.end(), row.begin(), row.end());
  return out;
}

std::vector<double> flatten(const oracle::Tensor4& t) {
  std::vector<double> out;
  for (const auto& f : t) {
    const auto v = flatten(f);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

void expect_near(std::span<const double> a, std::span<const double> b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], tol) << "at " << i;
}

// Contracts any node with fixed random weights into a scalar.
Var project(Graph& g, Var x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = g.value(x).size();
  const auto w = g.input(random_array({1, n}, rng));
  const auto b = g.input(Array({1}));
  return linear(g, x, w, b);
}

GradCheckReport check(const ScalarFunction& fn, std::vector<Array>& values,
                      GradCheckOptions options = {}) {
  std::vector<CheckedBlock> blocks;
  for (std::size_t i = 0; i < values.size(); ++i) {
    blocks.push_back({"block" + std::to_string(i), &values[i]});
  }
  return grad_check(fn, blocks, options);
}

}  // namespace

// ---- Array / Graph ---------------------------------------------------------

TEST(Array, ShapeInvariants) {
  EXPECT_THROW(Array({2, 0, 3}), Error);
  EXPECT_THROW(Array({2, 2}, std::vector<double>(3)), Error);
  const Array a({2, 3}, 1.5);
  EXPECT_EQ(a.size(), 6u);
  EXPECT_EQ(a.reshaped({6}).shape(), (Shape{6}));
  EXPECT_THROW(a.reshaped({5}), Error);
}

TEST(Graph, BackwardNeedsScalarOutput) {
  Graph g;
  const auto x = g.input(Array({3}, 1.0), true);
  EXPECT_THROW(g.backward(relu(g, x)), Error);
}

TEST(Graph, UntrackedInputsReceiveNoGradient) {
  Graph g;
  Array w({1, 2}, 1.0), gw({1, 2});
  const auto x = g.input(Array::vector({1.0, 2.0}));
  const auto y = linear(g, x, g.parameter(w, &gw), g.input(Array({1})));
  EXPECT_TRUE(g.requires_grad(y));
  EXPECT_FALSE(g.requires_grad(x));
  g.backward(y);
  EXPECT_EQ(gw.to_vector(), (std::vector<double>{1.0, 2.0}));
}

TEST(Graph, ConstantFunctionHasZeroGradient) {
  std::vector<Array> values{Array::vector({0.3, -0.2})};
  const auto report = check(
      [](Graph& g, std::span<const Var> v) {
        const auto zero = g.input(Array({1, 2}));
        return linear(g, v[0], zero, g.input(Array::vector({2.0})));
      },
      values);
  EXPECT_TRUE(report.passed);
  EXPECT_EQ(report.blocks[0].max_absolute_error, 0.0);
}

// ---- conv2d ---------------------------------------------------------------

TEST(Conv2d, ScalarProduct) {
  Graph g;
  const auto y = conv2d(g, g.input(Array({1, 1, 1}, 3.0)), g.input(Array({1, 1, 1, 1}, -2.0)),
                        std::nullopt);
  EXPECT_EQ(g.value(y)[0], -6.0);
}

TEST(Conv2d, IdentityKernel) {
  std::mt19937_64 rng(1);
  const auto x = random_array({1, 6, 7}, rng);
  Array k({1, 1, 3, 3});
  k[4] = 1.0;
  Graph g;
  const auto y = conv2d(g, g.input(x), g.input(k), std::nullopt);
  EXPECT_EQ(g.value(y), x);
}

TEST(Conv2d, ChannelMismatchThrows) {
  Graph g;
  EXPECT_THROW(conv2d(g, g.input(Array({2, 4, 4})), g.input(Array({1, 3, 3, 3})), std::nullopt),
               Error);
  EXPECT_THROW(conv2d(g, g.input(Array({1, 4, 4})), g.input(Array({1, 1, 2, 2})), std::nullopt),
               Error);
}

struct ConvCase {
  std::size_t c, h, w, f, kh, kw;
  int stride;
};

class ConvOracle : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvOracle, ForwardAndBackwardMatchLoops) {
  const auto p = GetParam();
  std::mt19937_64 rng(p.c * 131 + p.h * 7 + p.kh + static_cast<std::size_t>(p.stride));
  const auto x = random_array({p.c, p.h, p.w}, rng);
  const auto k = random_array({p.f, p.c, p.kh, p.kw}, rng);
  const auto b = random_array({p.f}, rng);

  Graph g;
  Array gx(x.shape()), gk(k.shape()), gb(b.shape());
  const auto vx = g.parameter(x, &gx);
  const auto vk = g.parameter(k, &gk);
  const auto vb = g.parameter(b, &gb);
  const auto y = conv2d(g, vx, vk, vb, p.stride);

  const auto expected = oracle::conv(to_tensor(x), to_tensor4(k), b.to_vector(), p.stride);
  expect_near(g.value(y).values(), flatten(expected), 1e-12);

  const auto r = random_array(g.value(y).shape(), rng);
  const auto loss = linear(g, y, g.input(r.reshaped({1, r.size()})), g.input(Array({1})));
  g.backward(loss);

  oracle::Tensor3 d_in;
  oracle::Tensor4 d_k;
  oracle::conv_backward(to_tensor(x), to_tensor4(k), to_tensor(r), p.stride, d_in, d_k);
  expect_near(gx.values(), flatten(d_in), 1e-12);
  expect_near(gk.values(), flatten(d_k), 1e-12);
  std::vector<double> d_b(p.f, 0.0);
  for (std::size_t f = 0; f < p.f; ++f)
    for (std::size_t i = 0; i < r.size() / p.f; ++i) d_b[f] += r[f * (r.size() / p.f) + i];
  expect_near(gb.values(), d_b, 1e-12);
}

INSTANTIATE_TEST_SUITE_P(
    Shapes, ConvOracle,
    ::testing::Values(ConvCase{2, 5, 5, 3, 3, 3, 1}, ConvCase{2, 5, 5, 3, 3, 3, 2},
                      ConvCase{3, 6, 9, 4, 1, 1, 1}, ConvCase{3, 7, 6, 2, 1, 1, 2},
                      ConvCase{1, 9, 11, 2, 5, 5, 1}, ConvCase{2, 8, 8, 2, 7, 7, 2},
                      ConvCase{2, 4, 6, 3, 3, 5, 1}, ConvCase{1, 2, 3, 2, 5, 5, 1}));

// ---- pooling ----------------------------------------------------------------

TEST(Pooling, ConstantInputStaysConstant) {
  Graph g;
  const auto x = g.input(Array({2, 6, 6}, 0.7));
  for (const auto& v : g.value(max_pool2d(g, x, 3, 2)).storage()) EXPECT_EQ(v, 0.7);
  for (const auto& v : g.value(avg_pool2d(g, x, 2, 2)).storage()) EXPECT_DOUBLE_EQ(v, 0.7);
}

TEST(Pooling, MaxGradientLandsOnTheMaximum) {
  Array x({1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  Array gx(x.shape());
  Graph g;
  const auto y = max_pool2d(g, g.parameter(x, &gx), 2, 2);
  EXPECT_EQ(g.value(y)[0], 4.0);
  g.backward(y);
  EXPECT_EQ(gx.to_vector(), (std::vector<double>{0, 0, 0, 1}));
}

TEST(Pooling, TiesGoToFirstRowMajorPosition) {
  Array x({1, 2, 2}, std::vector<double>{5, 1, 5, 5});
  Array gx(x.shape());
  Graph g;
  g.backward(max_pool2d(g, g.parameter(x, &gx), 2, 2));
  EXPECT_EQ(gx.to_vector(), (std::vector<double>{1, 0, 0, 0}));
}

TEST(Pooling, MatchesLoopOracle) {
  std::mt19937_64 rng(3);
  for (const auto& [window, stride] : {std::pair{2, 2}, {3, 2}, {3, 1}, {2, 1}}) {
    const auto x = random_array({3, 9, 10}, rng);
    Graph g;
    const auto vx = g.input(x);
    expect_near(g.value(max_pool2d(g, vx, window, stride)).values(),
                flatten(oracle::pool(to_tensor(x), window, stride, true)), 0.0);
    expect_near(g.value(avg_pool2d(g, vx, window, stride)).values(),
                flatten(oracle::pool(to_tensor(x), window, stride, false)), 1e-15);
  }
}

TEST(Pooling, WindowLargerThanInputThrows) {
  Graph g;
  EXPECT_THROW(max_pool2d(g, g.input(Array({1, 2, 5})), 3, 1), Error);
}

// ---- tpp ------------------------------------------------------------------

TEST(Tpp, HandEvaluatedBins) {
  Graph g;
  const auto y = tpp(g, g.input(Array({1, 1, 4}, std::vector<double>{1, 2, 3, 4})),
                     TppConfig{2, TppPooling::kMax});
  EXPECT_EQ(g.value(y).to_vector(), (std::vector<double>{4, 2, 4}));
}

TEST(Tpp, ConstantInputGivesConstantOutput) {
  Graph g;
  const auto y = tpp(g, g.input(Array({3, 7, 9}, -0.25)), TppConfig{});
  EXPECT_EQ(g.value(y).size(), 45u);
  for (const auto& v : g.value(y).storage()) EXPECT_EQ(v, -0.25);
}

TEST(Tpp, MatchesLoopOracleForBothAggregators) {
  std::mt19937_64 rng(8);
  for (const auto pooling : {TppPooling::kMax, TppPooling::kAverage}) {
    for (const std::size_t w : {5u, 6u, 13u, 31u}) {
      const auto x = random_array({4, 5, w}, rng);
      Graph g;
      const auto y = tpp(g, g.input(x), TppConfig{5, pooling});
      expect_near(g.value(y).values(),
                  oracle::tpp(to_tensor(x), 5, pooling == TppPooling::kMax), 1e-15);
    }
  }
}

TEST(Tpp, LengthIndependentOfInputSize) {
  for (const std::size_t c : {1u, 50u}) {
    for (std::size_t h = 5; h <= 64; h += 9) {
      for (std::size_t w = 5; w <= 64; w += 7) {
        Graph g;
        EXPECT_EQ(g.value(tpp(g, g.input(Array({c, h, w})), TppConfig{})).size(), 15 * c);
      }
    }
  }
}

TEST(Tpp, TooNarrowInputThrows) {
  Graph g;
  try {
    tpp(g, g.input(Array({1, 8, 4})), TppConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInputTooNarrow);
  }
}

// ---- elementwise / linear / dropout ----------------------------------------

TEST(Elementwise, ReluAndSigmoidValues) {
  Graph g;
  const auto x = g.input(Array::vector({-1.0, 2.0, 0.0}));
  EXPECT_EQ(g.value(relu(g, x)).to_vector(), (std::vector<double>{0.0, 2.0, 0.0}));
  EXPECT_EQ(g.value(sigmoid(g, x))[2], 0.5);
  const auto big = g.input(Array::vector({-800.0, 800.0}));
  EXPECT_EQ(g.value(sigmoid(g, big))[0], 0.0);
  EXPECT_EQ(g.value(sigmoid(g, big))[1], 1.0);
}

TEST(Linear, MatchesOracle) {
  std::mt19937_64 rng(4);
  const auto x = random_array({2, 3, 4}, rng);
  const auto w = random_array({5, 24}, rng);
  const auto b = random_array({5}, rng);
  Graph g;
  const auto y = linear(g, g.input(x), g.input(w), g.input(b));
  std::vector<std::vector<double>> wm(5, std::vector<double>(24));
  for (std::size_t o = 0; o < 5; ++o)
    for (std::size_t i = 0; i < 24; ++i) wm[o][i] = w[o * 24 + i];
  expect_near(g.value(y).values(), oracle::linear(x.to_vector(), wm, b.to_vector()), 1e-13);
  EXPECT_THROW(linear(g, g.input(Array({23})), g.input(w), g.input(b)), Error);
}

TEST(Dropout, IdentityWhenDisabled) {
  std::mt19937_64 rng(2);
  const auto x = random_array({50}, rng);
  for (const auto mode : {Mode::kTrain, Mode::kEval}) {
    Graph g(mode, 1);
    EXPECT_EQ(g.value(dropout(g, g.input(x), 0.0)), x);
  }
  Graph eval(Mode::kEval, 1);
  EXPECT_EQ(eval.value(dropout(eval, eval.input(x), 0.5)), x);
}

TEST(Dropout, InvalidProbabilityThrows) {
  Graph g(Mode::kTrain);
  const auto x = g.input(Array({4}, 1.0));
  for (const double p : {-0.1, 1.0, 1.5}) {
    try {
      dropout(g, x, p);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidProbability);
    }
  }
}

TEST(Dropout, PreservesExpectation) {
  Graph g(Mode::kTrain, 77);
  const auto y = dropout(g, g.input(Array({100000}, 1.0)), 0.5);
  double mean = 0.0;
  for (const double v : g.value(y).storage()) {
    EXPECT_TRUE(v == 0.0 || v == 2.0);
    mean += v;
  }
  mean /= 100000.0;
  EXPECT_NEAR(mean, 1.0, 0.01);
}

TEST(Concat, StacksChannelsAndRoutesGradients) {
  Array a({1, 2, 2}, 1.0), b({2, 2, 2}, 2.0), ga(a.shape()), gb(b.shape());
  Graph g;
  const auto y = concat_channels(g, g.parameter(a, &ga), g.parameter(b, &gb));
  EXPECT_EQ(g.value(y).shape(), (Shape{3, 2, 2}));
  EXPECT_EQ(g.value(y)[3], 1.0);
  EXPECT_EQ(g.value(y)[4], 2.0);
  EXPECT_THROW(concat_channels(g, g.input(Array({1, 2, 2})), g.input(Array({1, 2, 3}))), Error);
}

TEST(Add, RequiresExactShapeEquality) {
  Graph g;
  const auto a = g.input(Array({2, 3, 3}, 1.0));
  EXPECT_EQ(g.value(add(g, a, g.input(Array({2, 3, 3}, 2.0))))[0], 3.0);
  EXPECT_THROW(add(g, a, g.input(Array({2, 3, 4}))), Error);
  EXPECT_THROW(add(g, a, g.input(Array({18}))), Error);
}

// ---- loss -----------------------------------------------------------------

TEST(Bce, HalfPredictionsGiveLn2) {
  Graph g;
  const std::vector<double> t{1, 0, 1, 1, 0};
  const auto l = bce_loss(g, g.input(Array({5}, 0.5)), t);
  EXPECT_NEAR(g.value(l)[0], std::log(2.0), 1e-15);
}

TEST(Bce, PerfectPredictionApproachesZero) {
  Graph g;
  const std::vector<double> t{1, 0};
  const auto l = bce_loss(g, g.input(Array::vector({1.0, 0.0})), t);
  EXPECT_LT(g.value(l)[0], 1.1e-7);
  EXPECT_TRUE(std::isfinite(g.value(l)[0]));
}

TEST(Bce, MatchesSummationOracle) {
  std::mt19937_64 rng(6);
  const auto p = random_array({40}, rng, 0.0, 1.0);
  std::vector<double> t(40);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = (rng() & 1) ? 1.0 : 0.0;
  Graph g;
  EXPECT_NEAR(g.value(bce_loss(g, g.input(p), t))[0], oracle::bce(p.to_vector(), t), 1e-14);
  EXPECT_THROW(bce_loss(g, g.input(p), std::vector<double>(39)), Error);
}

// ---- gradient checks per op --------------------------------------------------

TEST(GradCheck, LinearLayer) {
  std::mt19937_64 rng(10);
  std::vector<Array> v{random_array({6}, rng), random_array({3, 6}, rng), random_array({3}, rng)};
  const auto r = check(
      [](Graph& g, std::span<const Var> x) { return project(g, linear(g, x[0], x[1], x[2]), 1); },
      v);
  EXPECT_TRUE(r.passed);
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(GradCheck, Conv2dAllStrides) {
  std::mt19937_64 rng(11);
  for (const int stride : {1, 2}) {
    for (const std::size_t k : {1u, 3u, 5u}) {
      std::vector<Array> v{random_array({2, 6, 7}, rng), random_array({3, 2, k, k}, rng),
                           random_array({3}, rng)};
      const auto r = check(
          [stride](Graph& g, std::span<const Var> x) {
            return project(g, conv2d(g, x[0], x[1], x[2], stride), 2);
          },
          v);
      EXPECT_TRUE(r.passed) << "k=" << k << " stride=" << stride;
      EXPECT_LT(r.max_relative_error, 1e-4);
    }
  }
}

TEST(GradCheck, PoolingReluSigmoid) {
  std::mt19937_64 rng(12);
  std::vector<Array> v{random_array({2, 7, 8}, rng)};
  const std::vector<std::function<Var(Graph&, Var)>> ops = {
      [](Graph& g, Var x) { return max_pool2d(g, x, 2, 2); },
      [](Graph& g, Var x) { return max_pool2d(g, x, 3, 2); },
      [](Graph& g, Var x) { return avg_pool2d(g, x, 2, 2); },
      [](Graph& g, Var x) { return avg_pool2d(g, x, 3, 1); },
      [](Graph& g, Var x) { return relu(g, x); },
      [](Graph& g, Var x) { return sigmoid(g, x); },
      [](Graph& g, Var x) { return tpp(g, x, TppConfig{5, TppPooling::kMax}); },
      [](Graph& g, Var x) { return tpp(g, x, TppConfig{3, TppPooling::kAverage}); },
  };
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const auto r = check(
        [&](Graph& g, std::span<const Var> x) { return project(g, ops[i](g, x[0]), 3); }, v);
    EXPECT_TRUE(r.passed) << "op " << i;
    EXPECT_LT(r.max_relative_error, 1e-4) << "op " << i;
  }
}

TEST(GradCheck, DropoutConcatAdd) {
  std::mt19937_64 rng(13);
  std::vector<Array> v{random_array({2, 4, 4}, rng), random_array({2, 4, 4}, rng)};
  GradCheckOptions train;
  train.mode = Mode::kTrain;
  train.graph_seed = 5;
  const auto d = check(
      [](Graph& g, std::span<const Var> x) { return project(g, dropout(g, x[0], 0.5), 4); }, v,
      train);
  EXPECT_TRUE(d.passed);
  const auto c = check(
      [](Graph& g, std::span<const Var> x) {
        return project(g, concat_channels(g, x[0], x[1]), 5);
      },
      v);
  EXPECT_TRUE(c.passed);
  const auto a = check(
      [](Graph& g, std::span<const Var> x) { return project(g, add(g, x[0], x[1]), 6); }, v);
  EXPECT_TRUE(a.passed);
}

TEST(GradCheck, BceLoss) {
  std::mt19937_64 rng(14);
  std::vector<Array> v{random_array({12}, rng, 0.05, 0.95)};
  std::vector<double> t(12);
  for (auto& x : t) x = (rng() & 1) ? 1.0 : 0.0;
  const auto r = check([&](Graph& g, std::span<const Var> x) { return bce_loss(g, x[0], t); }, v);
  EXPECT_TRUE(r.passed);
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(GradCheck, CompositePipeline) {
  std::mt19937_64 rng(15);
  std::vector<Array> v{random_array({1, 6, 12}, rng), random_array({4, 1, 3, 3}, rng),
                       random_array({4}, rng), random_array({10, 12}, rng),
                       random_array({10}, rng)};
  std::vector<double> t(10);
  for (auto& x : t) x = (rng() & 1) ? 1.0 : 0.0;
  const auto r = check(
      [&](Graph& g, std::span<const Var> x) {
        auto h = relu(g, conv2d(g, x[0], x[1], x[2]));
        h = tpp(g, h, TppConfig{2, TppPooling::kMax});
        return bce_loss(g, sigmoid(g, linear(g, h, x[3], x[4])), t);
      },
      v);
  EXPECT_TRUE(r.passed);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(GradCheck, DetectsWrongGradient) {
  // Forward doubles the input, backward claims a factor of 3.
  std::vector<Array> v{Array::vector({0.4, -0.3})};
  const auto r = check(
      [](Graph& g, std::span<const Var> x) {
        Array out = g.value(x[0]);
        for (auto& e : out.storage()) e *= 2.0;
        const auto y = g.record(OpTag::kLinear, out, {x[0]}, [x0 = x[0]](Graph& gg, Var self) {
          const Array up = gg.grad(self);
          Array& down = gg.grad(x0);
          for (std::size_t i = 0; i < up.size(); ++i) down[i] += 3.0 * up[i];
        });
        return project(g, y, 0);
      },
      v);
  EXPECT_FALSE(r.passed);
  EXPECT_NEAR(r.max_relative_error, 1.0 / 3.0, 1e-6);
}

// ---- optimizer ----------------------------------------------------------------

TEST(Adam, ZeroGradientIsANoOp) {
  std::mt19937_64 rng(20);
  std::vector<Array> params{random_array({3, 4}, rng), random_array({5}, rng)};
  const auto before = params;
  auto state = AdamState::for_parameters(params, 1e-4);
  std::vector<Array> grads{Array({3, 4}), Array({5})};
  for (int i = 0; i < 3; ++i) adam_step(params, grads, state);
  EXPECT_EQ(params, before);
  EXPECT_EQ(state.step_count, 3u);
}

TEST(Adam, FirstStepMovesByTheLearningRate) {
  std::vector<Array> params{Array({4}, 0.5)};
  std::vector<Array> grads{Array::vector({1.0, -1.0, 1e-3, -250.0})};
  AdamState state;
  state.learning_rate = 1e-4;
  adam_step(params, grads, state);
  for (std::size_t i = 0; i < 4; ++i) {
    const double moved = std::abs(params[0][i] - 0.5);
    EXPECT_NEAR(moved, 1e-4, 1e-4 * 1e-7 + 1e-4 * 1e-8 / std::abs(grads[0][i]));
  }
  EXPECT_NEAR(std::abs(params[0][0] - 0.5), 1e-4 / (1.0 + 1e-8), 1e-4 * 1e-7);
}

TEST(Adam, ThreeStepTraceMatchesScalarOracle) {
  const std::vector<std::vector<double>> grads = {{0.3, -1.2, 4.0}, {-0.7, 0.1, 2.5},
                                                  {0.05, 0.9, -3.0}};
  std::vector<Array> params{Array::vector({1.0, -2.0, 0.25})};
  AdamState state;
  state.learning_rate = 1e-3;
  std::vector<oracle::ScalarAdam> ref(3, oracle::ScalarAdam{1e-3});
  std::vector<double> theta{1.0, -2.0, 0.25};
  for (const auto& g : grads) {
    std::vector<Array> ga{Array({3}, g)};
    adam_step(params, ga, state);
    for (std::size_t i = 0; i < 3; ++i) theta[i] = ref[i].step(theta[i], g[i]);
    for (std::size_t i = 0; i < 3; ++i) ASSERT_NEAR(params[0][i], theta[i], 1e-12);
  }
}

TEST(Adam, ShapeMismatchThrows) {
  std::vector<Array> params{Array({3})};
  std::vector<Array> grads{Array({4})};
  AdamState state;
  EXPECT_THROW(adam_step(params, grads, state), Error);
}

// ---- initialization -----------------------------------------------------------

TEST(HeInit, MatchesTargetVariance) {
  std::mt19937_64 rng(21);
  const auto a = he_init({100000}, 1000, rng);
  double mean = 0.0, var = 0.0;
  for (const double v : a.storage()) mean += v;
  mean /= 1e5;
  for (const double v : a.storage()) var += (v - mean) * (v - mean);
  var /= 1e5;
  EXPECT_LT(std::abs(mean), 0.005);
  EXPECT_NEAR(var, 0.002, 0.0002);
}

TEST(HeInit, DeterministicAndValidated) {
  std::mt19937_64 a(3), b(3);
  const auto x = he_init({64}, 2, a);
  const auto y = he_init({64}, 2, b);
  EXPECT_EQ(std::memcmp(x.data(), y.data(), 64 * sizeof(double)), 0);
  EXPECT_THROW(he_init({4}, 0, a), Error);
}

TEST(Forward, BitReproducible) {
  std::mt19937_64 rng(22);
  const auto x = random_array({1, 10, 20}, rng);
  const auto k = random_array({4, 1, 3, 3}, rng);
  auto run_once = [&] {
    Graph g(Mode::kTrain, 9);
    auto h = dropout(g, relu(g, conv2d(g, g.input(x), g.input(k), std::nullopt)), 0.5);
    return g.value(tpp(g, h, TppConfig{})).to_vector();
  };
  const auto a = run_once();
  const auto b = run_once();
  EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)), 0);
}

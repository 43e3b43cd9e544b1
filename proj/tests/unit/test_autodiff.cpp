#include <gtest/gtest.h>

#include <cmath>

#include "dartk/adam.hpp"
#include "dartk/autodiff.hpp"
#include "dartk/parallel.hpp"
#include "dartk/rng.hpp"
#include "dartk/tensor.hpp"
#include "grad_check.hpp"

using dartk::Rng;
using dartk::Tape;
using dartk::Tensor;
namespace ops = dartk::ops;

namespace {

Tensor<double> rand_tensor(std::vector<std::size_t> shape, Rng& rng,
                           double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST(Conv1d, EdgeDetectorWithPadding) {
  Tape<double> tape;
  Tensor<double> x({1, 1, 3}, {1.0, 2.0, 3.0});
  Tensor<double> w({1, 1, 3}, {1.0, 0.0, -1.0});
  Tensor<double> b({1}, {0.0});
  auto y = ops::conv1d(tape, x, w, b, 1);
  ASSERT_EQ(y.shape(), (std::vector<std::size_t>{1, 1, 3}));
  EXPECT_DOUBLE_EQ(y.values()[0], -2.0);
  EXPECT_DOUBLE_EQ(y.values()[1], -2.0);
  EXPECT_DOUBLE_EQ(y.values()[2], 2.0);
}

TEST(Conv1d, IdentityKernelPreservesInput) {
  Tape<double> tape;
  Rng rng(7);
  auto x = rand_tensor({2, 3, 16}, rng);
  Tensor<double> w({3, 3, 1});
  for (std::size_t co = 0; co < 3; ++co) w.values()[co * 3 + co] = 1.0;
  Tensor<double> b({3});
  auto y = ops::conv1d(tape, x, w, b, 0);
  ASSERT_TRUE(y.same_shape(x));
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_DOUBLE_EQ(y.values()[i], x.values()[i]);
}

TEST(Conv1d, BiasShiftsEveryOutput) {
  Tape<double> tape;
  Tensor<double> x({1, 1, 4}, {0.0, 0.0, 0.0, 0.0});
  Tensor<double> w({2, 1, 3});
  Tensor<double> b({2}, {0.5, -1.25});
  auto y = ops::conv1d(tape, x, w, b, 1);
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_DOUBLE_EQ(y.values()[t], 0.5);
    EXPECT_DOUBLE_EQ(y.values()[4 + t], -1.25);
  }
}

TEST(Conv1d, SamePaddingShape) {
  Tape<double> tape;
  Rng rng(9);
  auto x = rand_tensor({4, 2, 32}, rng);
  auto w = rand_tensor({5, 2, 5}, rng);
  Tensor<double> b({5});
  auto y = ops::conv1d(tape, x, w, b, 2);
  EXPECT_EQ(y.shape(), (std::vector<std::size_t>{4, 5, 32}));
}

TEST(Conv1d, RejectsChannelMismatch) {
  Tape<double> tape;
  Tensor<double> x({1, 2, 8});
  Tensor<double> w({3, 1, 3});
  Tensor<double> b({3});
  EXPECT_THROW(ops::conv1d(tape, x, w, b, 1), dartk::Error);
}

TEST(Conv1d, GradientsMatchFiniteDifferences) {
  Rng rng(11);
  auto x = rand_tensor({2, 2, 9}, rng);
  auto w = rand_tensor({3, 2, 3}, rng);
  auto b = rand_tensor({3}, rng);
  auto tgt = rand_tensor({2, 3, 9}, rng, 2.0, 3.0);
  auto fwd = [&](Tape<double>& t) {
    auto y = ops::conv1d(t, x, w, b, 1);
    return ops::l1_loss(t, y, tgt);
  };
  auto r = testutil::grad_check(fwd, {x, w, b});
  EXPECT_TRUE(r.ok) << r.where << " rel " << r.worst_rel;
}

TEST(Conv1d, ThreadCountDoesNotChangeBits) {
  Rng rng(13);
  auto x = rand_tensor({8, 3, 64}, rng);
  auto w = rand_tensor({4, 3, 5}, rng);
  auto b = rand_tensor({4}, rng);

  dartk::set_threads(1);
  Tape<double> t1;
  auto y1 = ops::conv1d(t1, x, w, b, 2);
  dartk::set_threads(4);
  Tape<double> t4;
  auto y4 = ops::conv1d(t4, x, w, b, 2);
  dartk::set_threads(1);

  for (std::size_t i = 0; i < y1.size(); ++i)
    ASSERT_EQ(y1.values()[i], y4.values()[i]) << "index " << i;
}

TEST(Relu, ClampsAndRoutesGradient) {
  Tape<double> tape;
  Tensor<double> x({1, 1, 4}, {-2.0, -0.5, 0.5, 2.0});
  x.set_requires_grad(true);
  auto y = ops::relu(tape, x);
  EXPECT_DOUBLE_EQ(y.values()[0], 0.0);
  EXPECT_DOUBLE_EQ(y.values()[1], 0.0);
  EXPECT_DOUBLE_EQ(y.values()[2], 0.5);
  EXPECT_DOUBLE_EQ(y.values()[3], 2.0);
  auto s = ops::sum(tape, y);
  tape.backward(s);
  EXPECT_DOUBLE_EQ(x.grad()[0], 0.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], 0.0);
  EXPECT_DOUBLE_EQ(x.grad()[2], 1.0);
  EXPECT_DOUBLE_EQ(x.grad()[3], 1.0);
}

TEST(Tanh, MatchesStdAndGradient) {
  Rng rng(17);
  auto x = rand_tensor({1, 2, 6}, rng, -2.0, 2.0);
  Tape<double> tape;
  auto y = ops::tanh(tape, x);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_DOUBLE_EQ(y.values()[i], std::tanh(x.values()[i]));

  auto fwd = [&](Tape<double>& t) {
    return ops::sum(t, ops::tanh(t, x));
  };
  auto r = testutil::grad_check(fwd, {x});
  EXPECT_TRUE(r.ok) << r.where;
}

TEST(BatchNorm, NormalizedInputIsNearFixedPoint) {
  // Two values per channel with mean 0 and biased variance 1.
  Tensor<double> x({2, 1, 1}, {1.0, -1.0});
  Tensor<double> gamma({1}, {1.0});
  Tensor<double> beta({1}, {0.0});
  Tensor<double> rm({1}), rv({1}, {1.0});
  Tape<double> tape;
  auto y = ops::batchnorm1d(tape, x, gamma, beta, rm, rv, true);
  EXPECT_NEAR(y.values()[0], 1.0, 1e-4);
  EXPECT_NEAR(y.values()[1], -1.0, 1e-4);
}

TEST(BatchNorm, ConstantChannelCollapsesToBeta) {
  Tensor<double> x({1, 2, 3}, {4.0, 4.0, 4.0, -7.0, -7.0, -7.0});
  Tensor<double> gamma({2}, {3.0, 3.0});
  Tensor<double> beta({2}, {0.25, -0.5});
  Tensor<double> rm({2}), rv({2}, {1.0, 1.0});
  Tape<double> tape;
  auto y = ops::batchnorm1d(tape, x, gamma, beta, rm, rv, true);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_NEAR(y.values()[t], 0.25, 1e-12);
    EXPECT_NEAR(y.values()[3 + t], -0.5, 1e-12);
  }
}

TEST(BatchNorm, ZeroGammaCollapsesToBeta) {
  Rng rng(19);
  auto x = rand_tensor({2, 2, 4}, rng);
  Tensor<double> gamma({2});
  Tensor<double> beta({2}, {1.5, -2.5});
  Tensor<double> rm({2}), rv({2}, {1.0, 1.0});
  Tape<double> tape;
  auto y = ops::batchnorm1d(tape, x, gamma, beta, rm, rv, true);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t t = 0; t < 4; ++t) {
      EXPECT_DOUBLE_EQ(y.values()[(n * 2 + 0) * 4 + t], 1.5);
      EXPECT_DOUBLE_EQ(y.values()[(n * 2 + 1) * 4 + t], -2.5);
    }
}

TEST(BatchNorm, RunningStatsUpdateWithMomentum) {
  // Channel values {1,2,3,4}: mean 2.5, biased var 1.25, unbiased 5/3.
  Tensor<double> x({2, 1, 2}, {1.0, 2.0, 3.0, 4.0});
  Tensor<double> gamma({1}, {1.0});
  Tensor<double> beta({1});
  Tensor<double> rm({1}), rv({1}, {1.0});
  Tape<double> tape;
  ops::batchnorm1d(tape, x, gamma, beta, rm, rv, true, 0.1);
  EXPECT_NEAR(rm.values()[0], 0.25, 1e-12);
  EXPECT_NEAR(rv.values()[0], 0.9 + 0.1 * (5.0 / 3.0), 1e-12);
}

TEST(BatchNorm, EvalUsesRunningBuffers) {
  Tensor<double> x({1, 1, 3}, {2.0, 4.0, 6.0});
  Tensor<double> gamma({1}, {2.0});
  Tensor<double> beta({1}, {1.0});
  Tensor<double> rm({1}, {4.0});
  Tensor<double> rv({1}, {4.0});
  Tape<double> tape;
  auto y = ops::batchnorm1d(tape, x, gamma, beta, rm, rv, false);
  // (x-4)/2 * 2 + 1 = x - 3
  EXPECT_NEAR(y.values()[0], -1.0, 1e-5);
  EXPECT_NEAR(y.values()[1], 1.0, 1e-5);
  EXPECT_NEAR(y.values()[2], 3.0, 1e-5);
  // Eval must not touch the buffers.
  EXPECT_DOUBLE_EQ(rm.values()[0], 4.0);
  EXPECT_DOUBLE_EQ(rv.values()[0], 4.0);
}

TEST(BatchNorm, SingleValueBatchIsRejectedInTraining) {
  Tensor<double> x({1, 1, 1}, {1.0});
  Tensor<double> gamma({1}, {1.0});
  Tensor<double> beta({1});
  Tensor<double> rm({1}), rv({1}, {1.0});
  Tape<double> tape;
  try {
    ops::batchnorm1d(tape, x, gamma, beta, rm, rv, true);
    FAIL() << "expected DegenerateBatch";
  } catch (const dartk::Error& e) {
    EXPECT_EQ(e.code(), dartk::Errc::DegenerateBatch);
  }
}

TEST(BatchNorm, TrainGradientsMatchFiniteDifferences) {
  Rng rng(23);
  auto x = rand_tensor({3, 2, 5}, rng);
  auto gamma = rand_tensor({2}, rng, 0.5, 1.5);
  auto beta = rand_tensor({2}, rng, -0.5, 0.5);
  Tensor<double> rm({2}), rv({2}, {1.0, 1.0});
  auto tgt = rand_tensor({3, 2, 5}, rng, 2.0, 3.0);
  auto fwd = [&](Tape<double>& t) {
    auto y = ops::batchnorm1d(t, x, gamma, beta, rm, rv, true);
    return ops::l1_loss(t, y, tgt);
  };
  auto r = testutil::grad_check(fwd, {x, gamma, beta}, {rm, rv});
  EXPECT_TRUE(r.ok) << r.where << " rel " << r.worst_rel;
}

TEST(BatchNorm, EvalGradientsMatchFiniteDifferences) {
  Rng rng(29);
  auto x = rand_tensor({2, 2, 4}, rng);
  auto gamma = rand_tensor({2}, rng, 0.5, 1.5);
  auto beta = rand_tensor({2}, rng, -0.5, 0.5);
  Tensor<double> rm({2}, {0.1, -0.2});
  Tensor<double> rv({2}, {0.8, 1.3});
  auto tgt = rand_tensor({2, 2, 4}, rng, 2.0, 3.0);
  auto fwd = [&](Tape<double>& t) {
    auto y = ops::batchnorm1d(t, x, gamma, beta, rm, rv, false);
    return ops::l1_loss(t, y, tgt);
  };
  auto r = testutil::grad_check(fwd, {x, gamma, beta}, {rm, rv});
  EXPECT_TRUE(r.ok) << r.where << " rel " << r.worst_rel;
}

TEST(L1Loss, HandValues) {
  Tape<double> tape;
  Tensor<double> p({1, 1, 3}, {1.0, -2.0, 3.0});
  Tensor<double> t({1, 1, 3}, {0.0, 0.0, 0.0});
  p.set_requires_grad(true);
  auto l = ops::l1_loss(tape, p, t);
  EXPECT_DOUBLE_EQ(l.item(), 2.0);
  tape.backward(l);
  EXPECT_DOUBLE_EQ(p.grad()[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(p.grad()[1], -1.0 / 3.0);
  EXPECT_DOUBLE_EQ(p.grad()[2], 1.0 / 3.0);
}

TEST(L1Loss, ZeroDifferenceHasZeroSubgradient) {
  Tape<double> tape;
  Tensor<double> p({1, 1, 2}, {5.0, -1.0});
  Tensor<double> t({1, 1, 2}, {5.0, -1.0});
  p.set_requires_grad(true);
  auto l = ops::l1_loss(tape, p, t);
  EXPECT_DOUBLE_EQ(l.item(), 0.0);
  tape.backward(l);
  EXPECT_DOUBLE_EQ(p.grad()[0], 0.0);
  EXPECT_DOUBLE_EQ(p.grad()[1], 0.0);
}

TEST(Tape, BackwardRequiresScalarLoss) {
  Tape<double> tape;
  Tensor<double> x({1, 1, 3}, {1.0, 2.0, 3.0});
  x.set_requires_grad(true);
  auto y = ops::relu(tape, x);
  try {
    tape.backward(y);
    FAIL() << "expected NonScalarLoss";
  } catch (const dartk::Error& e) {
    EXPECT_EQ(e.code(), dartk::Errc::NonScalarLoss);
  }
}

TEST(Tape, SecondBackwardAccumulatesLeafGradients) {
  Tape<double> tape;
  Tensor<double> x({1, 1, 2}, {0.5, -0.25});
  x.set_requires_grad(true);
  auto y = ops::tanh(tape, x);
  auto s = ops::sum(tape, y);
  tape.backward(s);
  const double g0 = x.grad()[0];
  const double g1 = x.grad()[1];
  tape.backward(s);
  EXPECT_DOUBLE_EQ(x.grad()[0], 2.0 * g0);
  EXPECT_DOUBLE_EQ(x.grad()[1], 2.0 * g1);
}

TEST(Stack, FullNetworkGradientsMatchFiniteDifferences) {
  // conv -> relu -> bn(train) -> conv -> tanh -> l1, checked end to end.
  Rng rng(31);
  auto x = rand_tensor({2, 1, 12}, rng);
  auto w1 = rand_tensor({3, 1, 5}, rng, -0.6, 0.6);
  auto b1 = rand_tensor({3}, rng, -0.2, 0.2);
  auto g1 = rand_tensor({3}, rng, 0.8, 1.2);
  auto be1 = rand_tensor({3}, rng, -0.2, 0.2);
  Tensor<double> rm({3}), rv({3}, {1.0, 1.0, 1.0});
  auto w2 = rand_tensor({1, 3, 5}, rng, -0.6, 0.6);
  auto b2 = rand_tensor({1}, rng, -0.2, 0.2);
  auto tgt = rand_tensor({2, 1, 12}, rng, 2.0, 3.0);

  auto fwd = [&](Tape<double>& t) {
    auto h = ops::conv1d(t, x, w1, b1, 2);
    h = ops::relu(t, h);
    h = ops::batchnorm1d(t, h, g1, be1, rm, rv, true);
    h = ops::conv1d(t, h, w2, b2, 2);
    h = ops::tanh(t, h);
    return ops::l1_loss(t, h, tgt);
  };
  auto r = testutil::grad_check(fwd, {x, w1, b1, g1, be1, w2, b2}, {rm, rv},
                                1e-5, 2e-4);
  EXPECT_TRUE(r.ok) << r.where << " rel " << r.worst_rel;
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor<float> w({1}, {0.5f});
  w.set_requires_grad(true);
  dartk::Adam<float> opt({w});
  Tape<float> tape;
  auto s = ops::sum(tape, w);
  tape.backward(s);
  opt.step();
  EXPECT_NEAR(w.values()[0], 0.499f, 1e-6f);
}

TEST(Adam, DrivesQuadraticTowardZero) {
  Tensor<double> w({1}, {1.0});
  w.set_requires_grad(true);
  dartk::Adam<double> opt({w});
  for (int i = 0; i < 5000; ++i) {
    opt.zero_grad();
    w.grad()[0] = 2.0 * w.values()[0];
    opt.step();
  }
  EXPECT_LT(std::abs(w.values()[0]), 0.01);
}

TEST(Adam, ZeroGradClearsParameterGradients) {
  Tensor<double> w({2}, {1.0, 2.0});
  w.set_requires_grad(true);
  w.grad()[0] = 3.0;
  w.grad()[1] = -4.0;
  dartk::Adam<double> opt({w});
  opt.zero_grad();
  EXPECT_DOUBLE_EQ(w.grad()[0], 0.0);
  EXPECT_DOUBLE_EQ(w.grad()[1], 0.0);
}

#include <gtest/gtest.h>

#include <omp.h>

#include <cmath>
#include <cstring>
#include <numeric>

#include "scalemart/kernels.hpp"
#include "scalemart/rng.hpp"

using namespace scalemart;
using namespace scalemart::kernels;

namespace {

// Forces several OpenMP threads even on a single core so the parallel
// branches really split the work.
class Threads : public ::testing::Test {
 protected:
  void SetUp() override {
    saved_ = omp_get_max_threads();
    omp_set_num_threads(4);
  }
  void TearDown() override { omp_set_num_threads(saved_); }

 private:
  int saved_ = 1;
};

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  PathStream s(seed, 0, PathStream::kTest);
  std::vector<double> v(n);
  for (auto& x : v) x = s.normal() * 3.0 + 0.25;
  return v;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(PathStream, ReproducibleAndDistinct) {
  PathStream a(7, 3, PathStream::kEnsemble), b(7, 3, PathStream::kEnsemble);
  PathStream c(7, 4, PathStream::kEnsemble), d(7, 3, PathStream::kPath);
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    ASSERT_TRUE(same_bits(x, b.normal()));
    ASSERT_FALSE(same_bits(x, c.normal()));
    ASSERT_FALSE(same_bits(x, d.normal()));
  }
}

// Values from a from-scratch Python implementation of std::seed_seq,
// std::mt19937_64 and the polar method.
TEST(PathStream, MatchesIndependentGenerator) {
  PathStream s(1, 0, PathStream::kTest);
  EXPECT_EQ(s.uniform(), 0.21422834664177626);
  EXPECT_EQ(s.uniform(), 0.6233649333411404);
  EXPECT_EQ(s.normal(), 1.3012934824017275);
  EXPECT_EQ(s.normal(), -0.06544325006358052);
  EXPECT_EQ(s.normal(), 1.2456415317287814);
}

TEST(PathStream, NormalMoments) {
  PathStream s(11, 0, PathStream::kTest);
  const std::size_t n = 400000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = s.normal();
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(m4, 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(StepPlan, CountsAndSpacing) {
  const std::vector<double> times{0.0, 1.0, 4.0};
  const auto plan = make_step_plan(times, 1.0, 100);
  ASSERT_EQ(plan.n_samples(), 3u);
  EXPECT_EQ(plan.sample_end[0], 0u);
  EXPECT_EQ(plan.sample_end[1], 100u);
  EXPECT_EQ(plan.sample_end[2], 400u);
  EXPECT_EQ(count_steps(times, 1.0, 100), 400u);
  EXPECT_EQ(plan.inv_sqrt_s[0], 0.0);
  EXPECT_NEAR(plan.inv_sqrt_s[100], 1.0, 1e-12);
  for (double r : plan.sqrt_ds) EXPECT_NEAR(r, 0.1, 1e-12);
}

TEST(StepPlan, TransformedTimeAndMinimumOneStep) {
  // s = t^{0.7}; each gap gets ceil(Δs * 10) steps, at least one.
  const std::vector<double> times{10.0, 10.001, 1000.0};
  const auto plan = make_step_plan(times, 0.7, 10);
  const double s0 = std::pow(10.0, 0.7), s2 = std::pow(1000.0, 0.7);
  const auto first = static_cast<std::size_t>(std::ceil(s0 * 10));
  EXPECT_EQ(plan.sample_end[0], first);
  EXPECT_EQ(plan.sample_end[1], first + 1);
  EXPECT_EQ(plan.total_steps(), count_steps(times, 0.7, 10));
  double s_total = 0.0;
  for (double r : plan.sqrt_ds) s_total += r * r;
  EXPECT_NEAR(s_total, s2, 1e-9 * s2);
}

TEST_F(Threads, SimulatePathsBitIdenticalAcrossExecution) {
  const std::vector<double> times{1.0, 5.0, 20.0};
  const HurstExponent h(0.35);
  const auto plan = make_step_plan(times, h.two_h(), 50);
  const std::size_t n = 300;
  const DiffusionShape shapes[] = {AffineShape{}, ConstantShape{1.5}};
  for (const auto& shape : shapes) {
    std::vector<double> a(n * times.size()), b(n * times.size());
    ASSERT_TRUE(simulate_paths(plan, shape, h, 42, PathStream::kTest, 0, n, a, Execution::Serial));
    ASSERT_TRUE(simulate_paths(plan, shape, h, 42, PathStream::kTest, 0, n, b, Execution::Parallel));
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_TRUE(same_bits(a[i], b[i])) << i;
  }
}

TEST_F(Threads, PathIndexSelectsStream) {
  const std::vector<double> times{2.0, 3.0};
  const HurstExponent h(0.5);
  const auto plan = make_step_plan(times, 1.0, 20);
  std::vector<double> all(10 * 2), tail(4 * 2);
  simulate_paths(plan, ConstantShape{1.0}, h, 9, PathStream::kTest, 0, 10, all, Execution::Parallel);
  simulate_paths(plan, ConstantShape{1.0}, h, 9, PathStream::kTest, 6, 4, tail, Execution::Serial);
  for (std::size_t i = 0; i < tail.size(); ++i) ASSERT_TRUE(same_bits(tail[i], all[12 + i]));
}

TEST(SimulatePaths, TabulatedShapeLeavingTableIsReported) {
  const std::vector<double> times{100.0};
  const HurstExponent h(0.5);
  const auto plan = make_step_plan(times, 1.0, 10);
  const DiffusionShape narrow = TabulatedShape({-0.01, 0.0, 0.01}, {1.0, 1.0, 1.0});
  std::vector<double> out(50);
  EXPECT_FALSE(simulate_paths(plan, narrow, h, 1, PathStream::kTest, 0, 50, out, Execution::Serial));
}

TEST_F(Threads, ReductionsBitIdenticalAcrossExecution) {
  const auto v = noise(3 * kBlockSize + 517, 5);
  const auto w = noise(v.size(), 6);
  EXPECT_TRUE(same_bits(sum(v, Execution::Serial), sum(v, Execution::Parallel)));
  EXPECT_TRUE(same_bits(sum_squares(v, Execution::Serial), sum_squares(v, Execution::Parallel)));
  EXPECT_TRUE(same_bits(dot(v, w, Execution::Serial), dot(v, w, Execution::Parallel)));
  const auto ms = central_moments(v, Execution::Serial);
  const auto mp = central_moments(v, Execution::Parallel);
  EXPECT_TRUE(same_bits(ms.mean, mp.mean));
  EXPECT_TRUE(same_bits(ms.m2, mp.m2));
  EXPECT_TRUE(same_bits(ms.m4, mp.m4));
  EXPECT_EQ(histogram(v, -8.0, 8.0, 77, Execution::Serial),
            histogram(v, -8.0, 8.0, 77, Execution::Parallel));
  EXPECT_EQ(lagged_differences(v, 13, 3, Execution::Serial),
            lagged_differences(v, 13, 3, Execution::Parallel));
}

TEST(Moments, MatchTwoPassReference) {
  const auto v = noise(20000, 8);
  long double mean = 0;
  for (double x : v) mean += x;
  mean /= v.size();
  long double m2 = 0, m4 = 0;
  for (double x : v) {
    const long double d = x - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= v.size();
  m4 /= v.size();
  const auto m = central_moments(v, Execution::Serial);
  EXPECT_NEAR(m.mean, static_cast<double>(mean), 1e-12);
  EXPECT_NEAR(m.m2, static_cast<double>(m2), 1e-10 * static_cast<double>(m2));
  EXPECT_NEAR(m.m4, static_cast<double>(m4), 1e-10 * static_cast<double>(m4));
  EXPECT_NEAR(m.excess_kurtosis(), static_cast<double>(m4 / (m2 * m2)) - 3.0, 1e-9);
}

TEST(Histogram, EdgesAndOutOfRange) {
  const std::vector<double> v{-1.0, 0.0, 0.49, 0.5, 1.0, 1.5, NAN};
  const auto c = histogram(v, 0.0, 1.0, 2, Execution::Serial);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0], 2u);  // 0.0, 0.49
  EXPECT_EQ(c[1], 2u);  // 0.5, and hi itself
}

TEST(LaggedDifferences, CountsAndValues) {
  const std::vector<double> ramp{0, 1, 2, 3, 4};
  const auto z = lagged_differences(ramp, 2, 1, Execution::Serial);
  ASSERT_EQ(z.size(), 3u);
  for (double d : z) EXPECT_EQ(d, 2.0);
  EXPECT_EQ(lagged_differences(ramp, 2, 5, Execution::Serial).size(), 1u);
  EXPECT_TRUE(lagged_differences(ramp, 5, 1, Execution::Serial).empty());
}

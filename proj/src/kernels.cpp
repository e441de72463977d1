#include "scalemart/kernels.hpp"

#include <algorithm>
#include <variant>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace scalemart::kernels {

namespace {

std::size_t block_count(std::size_t n) { return (n + kBlockSize - 1) / kBlockSize; }

// Applies f(block_index, begin, end) to every block and keeps each result in
// its own slot, so the merge order never depends on scheduling.
template <class T, class F>
std::vector<T> per_block(std::size_t n, Execution exec, F f) {
  const std::size_t blocks = block_count(n);
  std::vector<T> partial(blocks);
  const auto nb = static_cast<std::ptrdiff_t>(blocks);
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < nb; ++b) {
      const auto ub = static_cast<std::size_t>(b);
      partial[ub] = f(ub * kBlockSize, std::min(n, (ub + 1) * kBlockSize));
    }
  } else {
    for (std::ptrdiff_t b = 0; b < nb; ++b) {
      const auto ub = static_cast<std::size_t>(b);
      partial[ub] = f(ub * kBlockSize, std::min(n, (ub + 1) * kBlockSize));
    }
  }
  return partial;
}

template <class F>
double block_sum(std::size_t n, Execution exec, F term) {
  auto partial = per_block<double>(n, exec, [&](std::size_t begin, std::size_t end) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += term(i);
    return s;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

template <class Vol>
bool run_paths(const StepPlan& plan, const Vol& vol, std::uint64_t seed, std::uint32_t domain,
               std::size_t first, std::size_t count, std::span<double> out, Execution exec) {
  const std::size_t m = plan.n_samples();
  auto one = [&](std::size_t i) {
    PathStream stream(seed, first + i, domain);
    auto row = out.subspan(i * m, m);
    integrate_path(plan, vol, stream, row);
    return std::all_of(row.begin(), row.end(), [](double v) { return std::isfinite(v); });
  };
  int bad = 0;
  const auto n = static_cast<std::ptrdiff_t>(count);
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic, 16) reduction(| : bad)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      if (!one(static_cast<std::size_t>(i))) bad |= 1;
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      if (!one(static_cast<std::size_t>(i))) bad |= 1;
    }
  }
  return bad == 0;
}

template <class Emit>
void walk_plan(std::span<const double> times, double two_h, int steps_per_unit, Emit emit) {
  double s_prev = 0.0;
  for (double t : times) {
    const double s = t == 0.0 ? 0.0 : std::pow(t, two_h);
    const double gap = s - s_prev;
    std::size_t steps = 0;
    if (gap > 0.0) {
      steps = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(gap * steps_per_unit - 1e-9)));
    }
    emit(s_prev, gap, steps);
    s_prev = s;
  }
}

}  // namespace

StepPlan make_step_plan(std::span<const double> times, double two_h, int steps_per_unit) {
  StepPlan plan;
  plan.sample_end.reserve(times.size());
  walk_plan(times, two_h, steps_per_unit, [&](double s0, double gap, std::size_t steps) {
    if (steps > 0) {
      const double ds = gap / static_cast<double>(steps);
      const double root = std::sqrt(ds);
      for (std::size_t j = 0; j < steps; ++j) {
        const double s = s0 + ds * static_cast<double>(j);
        plan.sqrt_ds.push_back(root);
        plan.inv_sqrt_s.push_back(s > 0.0 ? 1.0 / std::sqrt(s) : 0.0);
      }
    }
    plan.sample_end.push_back(plan.sqrt_ds.size());
  });
  return plan;
}

std::uint64_t count_steps(std::span<const double> times, double two_h, int steps_per_unit) {
  std::uint64_t total = 0;
  walk_plan(times, two_h, steps_per_unit,
            [&](double, double, std::size_t steps) { total += steps; });
  return total;
}

bool simulate_paths(const StepPlan& plan, const DiffusionShape& shape, HurstExponent h,
                    std::uint64_t seed, std::uint32_t domain, std::size_t first,
                    std::size_t count, std::span<double> out, Execution exec) {
  const double two_h = h.two_h();
  return std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantShape>) {
          return run_paths(plan, ConstantVol{std::sqrt(s.d0 / two_h)}, seed, domain, first,
                           count, out, exec);
        } else if constexpr (std::is_same_v<T, AffineShape>) {
          return run_paths(plan, AffineVol{s.slope(h.value()) / two_h}, seed, domain, first,
                           count, out, exec);
        } else {
          return run_paths(plan, TabulatedVol{&s, 1.0 / two_h}, seed, domain, first, count, out,
                           exec);
        }
      },
      shape);
}

std::vector<std::uint64_t> histogram(std::span<const double> values, double lo, double hi,
                                     std::size_t bins, Execution exec) {
  const double scale = static_cast<double>(bins) / (hi - lo);
  auto partial = per_block<std::vector<std::uint64_t>>(
      values.size(), exec, [&](std::size_t begin, std::size_t end) {
        std::vector<std::uint64_t> counts(bins, 0);
        for (std::size_t i = begin; i < end; ++i) {
          const double v = values[i];
          if (!(v >= lo && v <= hi)) continue;
          auto idx = static_cast<std::size_t>((v - lo) * scale);
          counts[std::min(idx, bins - 1)] += 1;
        }
        return counts;
      });
  std::vector<std::uint64_t> counts(bins, 0);
  for (const auto& p : partial) {
    for (std::size_t b = 0; b < bins; ++b) counts[b] += p[b];
  }
  return counts;
}

Moments central_moments(std::span<const double> values, Execution exec) {
  Moments m;
  m.n = values.size();
  if (m.n == 0) return m;
  const double n = static_cast<double>(m.n);
  m.mean = block_sum(values.size(), exec, [&](std::size_t i) { return values[i]; }) / n;
  struct Pair {
    double s2 = 0.0, s4 = 0.0;
  };
  auto partial = per_block<Pair>(values.size(), exec, [&](std::size_t begin, std::size_t end) {
    Pair p;
    for (std::size_t i = begin; i < end; ++i) {
      const double d = values[i] - m.mean;
      const double d2 = d * d;
      p.s2 += d2;
      p.s4 += d2 * d2;
    }
    return p;
  });
  double s2 = 0.0, s4 = 0.0;
  for (const auto& p : partial) {
    s2 += p.s2;
    s4 += p.s4;
  }
  m.m2 = s2 / n;
  m.m4 = s4 / n;
  return m;
}

double dot(std::span<const double> a, std::span<const double> b, Execution exec) {
  return block_sum(a.size(), exec, [&](std::size_t i) { return a[i] * b[i]; });
}

double sum_squares(std::span<const double> v, Execution exec) {
  return block_sum(v.size(), exec, [&](std::size_t i) { return v[i] * v[i]; });
}

double sum(std::span<const double> v, Execution exec) {
  return block_sum(v.size(), exec, [&](std::size_t i) { return v[i]; });
}

std::vector<double> lagged_differences(std::span<const double> x, std::size_t lag,
                                       std::size_t stride, Execution exec) {
  if (x.size() <= lag || stride == 0) return {};
  const std::size_t n = (x.size() - 1 - lag) / stride + 1;
  std::vector<double> z(n);
  const auto ni = static_cast<std::ptrdiff_t>(n);
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < ni; ++j) {
      const auto i = static_cast<std::size_t>(j) * stride;
      z[static_cast<std::size_t>(j)] = x[i + lag] - x[i];
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) z[j] = x[j * stride + lag] - x[j * stride];
  }
  return z;
}

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace scalemart::kernels

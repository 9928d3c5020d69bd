#pragma once

// Reference computations used by the tests. Each one recomputes a quantity
// by its definition, with no shared code path to the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace oracle {

// Full DFT X[k] for k = 0..N/2 by direct O(N^2) summation in long double,
// using a twiddle table indexed by (k * t) mod N.
struct Spectrum {
  std::vector<long double> re;
  std::vector<long double> im;
};

inline Spectrum dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  std::vector<long double> c(n);
  std::vector<long double> s(n);
  for (std::size_t r = 0; r < n; ++r) {
    c[r] = std::cos(two_pi * r / n);
    s[r] = std::sin(two_pi * r / n);
  }
  Spectrum out{std::vector<long double>(n / 2 + 1), std::vector<long double>(n / 2 + 1)};
  for (std::size_t k = 0; k <= n / 2; ++k) {
    long double re = 0.0L;
    long double im = 0.0L;
    std::size_t idx = 0;
    for (std::size_t t = 0; t < n; ++t) {
      re += x[t] * c[idx];
      im -= x[t] * s[idx];
      idx += k;
      if (idx >= n) idx -= n;
    }
    out.re[k] = re;
    out.im[k] = im;
  }
  return out;
}

// One-sided |X[k]|^2 / N.
inline std::vector<long double> dft_psd(const std::vector<double>& x) {
  Spectrum X = dft(x);
  std::vector<long double> psd(X.re.size());
  for (std::size_t k = 0; k < psd.size(); ++k) {
    psd[k] = (X.re[k] * X.re[k] + X.im[k] * X.im[k]) / x.size();
  }
  return psd;
}

// Adds amp * cos(2 pi k n / N + arg X[k]) for every bin k above the cutoff
// (2k/N > cutoff). Each term is phase-aligned with the existing X[k], so it
// raises |X[k]| and leaves every other bin unchanged.
inline std::vector<double> add_aligned_high_freq(const std::vector<double>& x, double cutoff,
                                                 std::mt19937_64& rng, double scale) {
  const std::size_t n = x.size();
  Spectrum X = dft(x);
  std::uniform_real_distribution<double> amp(0.1 * scale, scale);
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  std::vector<long double> c(n);
  std::vector<long double> s(n);
  for (std::size_t r = 0; r < n; ++r) {
    c[r] = std::cos(two_pi * r / n);
    s[r] = std::sin(two_pi * r / n);
  }
  std::vector<long double> acc(x.begin(), x.end());
  for (std::size_t k = 1; k <= n / 2; ++k) {
    if (2.0 * static_cast<double>(k) / static_cast<double>(n) <= cutoff) continue;
    // a * cos(theta + phase) = a * (cos theta cos phase - sin theta sin phase)
    const long double mag = std::hypot(X.re[k], X.im[k]);
    const long double cp = mag > 0 ? X.re[k] / mag : 1.0L;
    const long double sp = mag > 0 ? X.im[k] / mag : 0.0L;
    const long double a = amp(rng);
    std::size_t idx = 0;
    for (std::size_t t = 0; t < n; ++t) {
      acc[t] += a * (c[idx] * cp - s[idx] * sp);
      idx += k;
      if (idx >= n) idx -= n;
    }
  }
  return std::vector<double>(acc.begin(), acc.end());
}

inline long double logistic(long double p, long double a) {
  return 1.0L / (1.0L + std::exp(a * (p - 0.5L)));
}

// C_i = sum_{j<=i} f(j/m) * N_j with the last batch possibly short.
inline std::vector<long double> ideal_cumulative(std::uint64_t n1, std::uint64_t n2,
                                                 std::uint64_t batch, long double a) {
  const std::uint64_t total = n1 + n2;
  const std::uint64_t m = (total + batch - 1) / batch;
  std::vector<long double> c(m);
  long double sum = 0.0L;
  for (std::uint64_t i = 1; i <= m; ++i) {
    const std::uint64_t size = i < m ? batch : total - (m - 1) * batch;
    sum += logistic(static_cast<long double>(i) / m, a) * size;
    c[i - 1] = sum;
  }
  return c;
}

struct Item {
  double value;
  std::uint64_t weight;
  std::string id;
};

struct Cut {
  std::uint64_t gap;
  // Number of items on the low side.
  std::size_t low_count;
};

// Smallest achievable |low - high| over every cut of the (value, id) order,
// with each side's weight summed from scratch for every cut. Ties keep the
// smallest low side.
inline Cut best_balanced_cut(const std::vector<Item>& items) {
  std::vector<Item> sorted = items;
  std::sort(sorted.begin(), sorted.end(), [](const Item& a, const Item& b) {
    return a.value != b.value ? a.value < b.value : a.id < b.id;
  });
  Cut best{std::numeric_limits<std::uint64_t>::max(), 0};
  for (std::size_t cut = 1; cut < sorted.size(); ++cut) {
    std::uint64_t low = 0;
    std::uint64_t high = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) (i < cut ? low : high) += sorted[i].weight;
    const std::uint64_t gap = low > high ? low - high : high - low;
    if (gap < best.gap) best = {gap, cut};
  }
  return best;
}

inline std::uint64_t best_balanced_gap(const std::vector<Item>& items) {
  return best_balanced_cut(items).gap;
}

inline double mean(const std::vector<double>& v) {
  long double s = 0.0L;
  for (double x : v) s += x;
  return static_cast<double>(s / v.size());
}

}  // namespace oracle

#include "wldecode/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "wldecode/errors.hpp"

namespace wld {

namespace {

// Continued-fraction kernel for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;

  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                    b * std::log(1.0 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  if (!std::isfinite(t)) return t > 0.0 ? 1.0 : 0.0;
  double x = dof / (dof + t * t);
  double tail = 0.5 * incomplete_beta(dof / 2.0, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // n-1 denominator
  std::size_t n = 0;
};

Moments moments(std::span<const double> v) {
  Moments m;
  m.n = v.size();
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(m.n);
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(m.n - 1);
  return m;
}

}  // namespace

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw ValidationError("welch_t_test: each group needs at least 2 values");
  Moments ma = moments(a), mb = moments(b);
  double sa = ma.var / static_cast<double>(ma.n);
  double sb = mb.var / static_cast<double>(mb.n);
  double se = std::sqrt(sa + sb);

  TTestResult r;
  if (se == 0.0) {
    if (ma.mean == mb.mean) {
      r.t = 0.0;
      r.dof = static_cast<double>(ma.n + mb.n - 2);
      r.p = 1.0;
    } else {
      r.t = ma.mean > mb.mean ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity();
      r.dof = static_cast<double>(ma.n + mb.n - 2);
      r.p = 0.0;
    }
    return r;
  }
  r.t = (ma.mean - mb.mean) / se;
  r.dof = (sa + sb) * (sa + sb) /
          (sa * sa / static_cast<double>(ma.n - 1) + sb * sb / static_cast<double>(mb.n - 1));
  r.p = incomplete_beta(r.dof / 2.0, 0.5, r.dof / (r.dof + r.t * r.t));
  return r;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("paired_t_test: length mismatch");
  if (a.size() < 2) throw ValidationError("paired_t_test: needs at least 2 pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  Moments m = moments(d);

  TTestResult r;
  r.dof = static_cast<double>(m.n - 1);
  double se = std::sqrt(m.var / static_cast<double>(m.n));
  if (se == 0.0) {
    r.t = m.mean == 0.0 ? 0.0
                        : (m.mean > 0.0 ? std::numeric_limits<double>::infinity()
                                        : -std::numeric_limits<double>::infinity());
    r.p = m.mean == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = m.mean / se;
  r.p = incomplete_beta(r.dof / 2.0, 0.5, r.dof / (r.dof + r.t * r.t));
  return r;
}

WilcoxonResult wilcoxon_signed_rank_exact(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("wilcoxon: length mismatch");
  if (a.size() < 5) throw ValidationError("wilcoxon: needs at least 5 pairs");

  struct Diff {
    double mag;
    bool positive;
  };
  std::vector<Diff> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back({std::abs(d), d > 0.0});
  }
  if (diffs.empty())
    throw ValidationError("wilcoxon: all differences are zero (degenerate pairs)");
  const int n = static_cast<int>(diffs.size());
  if (n > 25) throw ConfigError("wilcoxon: exact enumeration limited to 25 pairs");

  std::sort(diffs.begin(), diffs.end(), [](const Diff& x, const Diff& y) { return x.mag < y.mag; });

  // Average ranks on ties; doubled so that every rank is an exact integer.
  std::vector<std::int64_t> rank2(static_cast<std::size_t>(n));
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && diffs[static_cast<std::size_t>(j + 1)].mag == diffs[static_cast<std::size_t>(i)].mag) ++j;
    std::int64_t doubled = static_cast<std::int64_t>(i + 1) + static_cast<std::int64_t>(j + 1);
    for (int k = i; k <= j; ++k) rank2[static_cast<std::size_t>(k)] = doubled;
    i = j + 1;
  }

  std::int64_t w_plus2 = 0, total2 = 0;
  for (int k = 0; k < n; ++k) {
    total2 += rank2[static_cast<std::size_t>(k)];
    if (diffs[static_cast<std::size_t>(k)].positive) w_plus2 += rank2[static_cast<std::size_t>(k)];
  }
  std::int64_t w_minus2 = total2 - w_plus2;
  std::int64_t w_min2 = std::min(w_plus2, w_minus2);

  // Exact null: every sign assignment equally likely; count W+ <= w_min.
  std::uint64_t count = 0;
  std::uint64_t assignments = 1ULL << n;
  for (std::uint64_t mask = 0; mask < assignments; ++mask) {
    std::int64_t w2 = 0;
    std::uint64_t m = mask;
    while (m) {
      int bit = std::countr_zero(m);
      w2 += rank2[static_cast<std::size_t>(bit)];
      m &= m - 1;
    }
    if (w2 <= w_min2) ++count;
  }

  WilcoxonResult r;
  r.w_plus = static_cast<double>(w_plus2) / 2.0;
  r.w_minus = static_cast<double>(w_minus2) / 2.0;
  r.n_used = n;
  r.p = std::min(1.0, 2.0 * static_cast<double>(count) / static_cast<double>(assignments));
  return r;
}

Aggregate aggregate(std::span<const double> values) {
  if (values.size() < 2)
    throw ValidationError("aggregate: needs at least 2 values for a sample std, got " +
                          std::to_string(values.size()));
  Moments m = moments(values);
  return {m.mean, std::sqrt(m.var)};
}

}  // namespace wld

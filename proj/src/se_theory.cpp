#include "tsimg/se_theory.hpp"

#include <cmath>
#include <numbers>

#include "tsimg/error.hpp"

namespace tsimg::se {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr std::size_t kMcBlock = 1 << 16;

// phi(x) - x * (1 - Phi(x)) for large x: phi(x) * sum_{n>=1} (-1)^{n+1} (2n-1)!! / x^{2n}.
double tail_excess_asymptotic(double x) {
  const double inv2 = 1.0 / (x * x);
  double term = inv2;
  double sum = 0.0;
  double prev = INFINITY;
  for (int n = 1; n < 60; ++n) {
    if (std::abs(term) >= prev) break;  // asymptotic series: stop at the smallest term
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    prev = std::abs(term);
    term *= -static_cast<double>(2 * n + 1) * inv2;
  }
  return normal_pdf(x) * sum;
}

}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

void BoundInput::validate() const {
  if (h < 2) throw ConfigError("h must be at least 2");
  if (!(max_scale > 0.0)) throw ConfigError("MS must be > 0");
  if (!(k > 0.0)) throw ConfigError("variance k must be > 0");
  if (channels < 1 || steps < 1) throw ConfigError("c and t must be positive");
}

double quantization_term(std::size_t h, double max_scale, double k) {
  const double x = max_scale / std::sqrt(k);
  // Phi(x) - Phi(-x) = erf(x / sqrt 2)
  return max_scale / static_cast<double>(h) * std::erf(x * kInvSqrt2);
}

double truncation_term(double max_scale, double k) {
  const double sk = std::sqrt(k);
  const double x = max_scale / sk;
  const double excess = x > 8.0 ? tail_excess_asymptotic(x) : normal_pdf(x) - x * normal_sf(x);
  return 2.0 * sk * excess;
}

double se_bound(const BoundInput& in) {
  in.validate();
  const double cell = quantization_term(in.h, in.max_scale, in.k) + truncation_term(in.max_scale, in.k);
  return static_cast<double>(in.channels) * static_cast<double>(in.steps) * cell;
}

McEstimate mc_system_error(const SpaceParams& params, double k, std::size_t n, RngStream rng) {
  params.validate();
  if (n < 1) throw ConfigError("Monte-Carlo sample count must be >= 1");
  if (!(k > 0.0)) throw ConfigError("variance k must be > 0");
  const double sd = std::sqrt(k);
  double sum = 0.0;
  double sum_sq = 0.0;
  const std::size_t blocks = (n + kMcBlock - 1) / kMcBlock;
  for (std::size_t b = 0; b < blocks; ++b) {
    Rng gen(rng.child(b));
    const std::size_t count = std::min(kMcBlock, n - b * kMcBlock);
    double block_sum = 0.0;
    double block_sq = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const double s = sd * gen.normal();
      const double err = std::abs(params.bin_center(static_cast<std::size_t>(value_to_row(s, params))) - s);
      block_sum += err;
      block_sq += err * err;
    }
    sum += block_sum;
    sum_sq += block_sq;
  }
  const double nn = static_cast<double>(n);
  const double m = sum / nn;
  const double var = n > 1 ? std::max(0.0, (sum_sq - nn * m * m) / (nn - 1.0)) : 0.0;
  return {m, std::sqrt(var / nn), n};
}

double optimality_residual(double ms, std::size_t h, double k) {
  const double hh = static_cast<double>(h);
  const double x = ms / std::sqrt(k);
  // -2 + 2 Phi(x) written as -2 (1 - Phi(x)) to keep precision in the tail.
  return std::erf(x * kInvSqrt2) / hh - 2.0 * normal_sf(x) +
         ms / hh * std::sqrt(2.0 / (std::numbers::pi * k)) * std::exp(-ms * ms / (2.0 * k));
}

OptimalScale optimal_ms(std::size_t h, double k) {
  if (h < 2) throw ConfigError("h must be at least 2");
  if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("variance k must be > 0");
  double lo = 1e-3;
  double hi = std::sqrt(k * (static_cast<double>(h) + 2.0)) + 10.0;
  double f_lo = optimality_residual(lo, h, k);
  double f_hi = optimality_residual(hi, h, k);
  if (!(f_lo < 0.0 && f_hi > 0.0)) throw InternalError("optimal MS root is not bracketed");

  constexpr double kTol = 1e-10;
  int it = 0;
  // Bisection until the bracket is narrow, then secant steps kept inside it.
  while (hi - lo > 1e-3 && it < 200) {
    const double mid = 0.5 * (lo + hi);
    const double f = optimality_residual(mid, h, k);
    ++it;
    if (f == 0.0) return {mid, 0.0, it};
    (f < 0.0 ? lo : hi) = mid;
    (f < 0.0 ? f_lo : f_hi) = f;
  }
  double x0 = lo, f0 = f_lo;
  double x1 = hi, f1 = f_hi;
  double best = std::abs(f0) < std::abs(f1) ? x0 : x1;
  double f_best = std::min(std::abs(f0), std::abs(f1));
  while (f_best >= kTol && it < 400) {
    double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
    if (!(x2 > lo && x2 < hi)) x2 = 0.5 * (lo + hi);
    const double f2 = optimality_residual(x2, h, k);
    ++it;
    (f2 < 0.0 ? lo : hi) = x2;
    if (std::abs(f2) < f_best) {
      best = x2;
      f_best = std::abs(f2);
    }
    x0 = x1, f0 = f1;
    x1 = x2, f1 = f2;
    if (hi - lo < 1e-15 * hi) break;
  }
  if (f_best >= kTol) throw InternalError("optimal MS solver did not converge");
  return {best, optimality_residual(best, h, k), it};
}

std::vector<double> bound_convergence_profile(double max_scale, std::span<const std::size_t> h_list) {
  std::vector<double> out;
  out.reserve(h_list.size());
  for (auto h : h_list) out.push_back(se_bound({h, max_scale, 1.0, 1, 1}));
  return out;
}

}  // namespace tsimg::se

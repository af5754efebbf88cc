#pragma once

// Expected reconstruction error of the value <-> row-bin mapping for
// N(0, k) data: analytic upper bound, Monte-Carlo estimate, and the
// bound-minimising maximum scale.

#include <cstddef>
#include <span>
#include <vector>

#include "tsimg/imgspace.hpp"
#include "tsimg/rng.hpp"

namespace tsimg::se {

double normal_pdf(double x);
/// Standard normal CDF, erfc-based.
double normal_cdf(double x);
/// Upper tail 1 - Phi(x) without cancellation.
double normal_sf(double x);

struct BoundInput {
  std::size_t h = 128;
  double max_scale = 3.5;
  /// Variance of the data distribution.
  double k = 1.0;
  std::size_t channels = 1;
  std::size_t steps = 1;

  void validate() const;
};

/// (MS/h) * P(|s| < MS): every in-range value is off by at most half a bin.
double quantization_term(std::size_t h, double max_scale, double k);
/// 2 * E[(s - MS)^+]: error mass of values clipped to the outermost bins.
/// Uses an asymptotic series past MS/sqrt(k) = 8.
double truncation_term(double max_scale, double k);

/// c * t * (quantization_term + truncation_term).
double se_bound(const BoundInput& input);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Mean |decode(encode(s)) - s| over n draws s ~ N(0, k), with its standard
/// error. Work is split into fixed blocks on child streams, reduced in order.
McEstimate mc_system_error(const SpaceParams& params, double k, std::size_t n, RngStream rng);

/// Left-hand side of the first-order optimality condition in MS.
double optimality_residual(double max_scale, std::size_t h, double k);

struct OptimalScale {
  double max_scale = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Unique root of optimality_residual on [1e-3, sqrt(k (h + 2)) + 10] by
/// bisection followed by safeguarded secant steps, to |residual| < 1e-10.
OptimalScale optimal_ms(std::size_t h, double k);

/// Unit-cell (c = t = 1, k = 1) bound at each resolution.
std::vector<double> bound_convergence_profile(double max_scale, std::span<const std::size_t> h_list);

}  // namespace tsimg::se

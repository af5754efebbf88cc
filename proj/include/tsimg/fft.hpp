#pragma once

#include <complex>
#include <span>
#include <vector>

namespace tsimg {

/// Forward real FFT, unnormalised: X_k = sum_t x_t e^{-2 pi i k t / n}, k = 0..n/2.
std::vector<std::complex<double>> rfft(std::span<const double> x);

/// Inverse of rfft: returns x of length n from its n/2+1 half spectrum,
/// x_t = (1/n) sum_k X_k e^{2 pi i k t / n} with Hermitian extension.
std::vector<double> irfft(std::span<const std::complex<double>> half, std::size_t n);

}  // namespace tsimg

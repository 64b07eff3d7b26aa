#pragma once

#include <Eigen/Dense>

namespace imphy {

/// In-place unitary DFT (scale 1/sqrt(N) in both directions). Radix-2 for
/// power-of-2 lengths, direct O(N^2) evaluation otherwise.
void fft_unitary(Eigen::VectorXcd& x, bool inverse);

Eigen::VectorXcd fft_unitary_copy(const Eigen::VectorXcd& x, bool inverse);

/// Unscaled frequency response H[k] = sum_l taps[l] * exp(-j*2*pi*k*l / n_f)
/// of a tap vector, evaluated on n_f bins.
Eigen::VectorXcd frequency_response(const Eigen::VectorXcd& taps, int n_f);

}  // namespace imphy

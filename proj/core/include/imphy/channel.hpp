#pragma once

#include <Eigen/Dense>
#include <vector>

#include "imphy/rng.hpp"

namespace imphy {

/// Flat Rayleigh MIMO realization: i.i.d. CN(0, 1) gains, one per
/// (receive, transmit) antenna pair, constant over a channel use.
struct FlatChannel {
    Eigen::MatrixXcd h;  // n_r x n_t
};

FlatChannel draw_flat(int n_r, int n_t, Rng& rng);

/// Frequency-selective Rayleigh realization with a uniform power delay
/// profile: every tap is CN(0, 1/taps), independent across taps and antenna
/// pairs, constant over an OFDM frame.
struct SelectiveChannel {
    int n_r = 0;
    int n_t = 0;
    Eigen::MatrixXcd taps;  // (n_r * n_t) x L, row r + n_r * t

    int tap_count() const { return static_cast<int>(taps.cols()); }

    /// Stacked per-subcarrier channel matrices: column k holds vec(H_k)
    /// with the receive index fastest. Recover H_k with
    /// Eigen::Map<const Eigen::MatrixXcd>(out.col(k).data(), n_r, n_t).
    Eigen::MatrixXcd frequency_response(int n_f) const;
};

SelectiveChannel draw_selective(int n_r, int n_t, int taps, Rng& rng);

/// Noise bookkeeping. snr_db is average received symbol energy per receive
/// antenna over n0; ebn0_db derives from bits per channel use (including
/// the cyclic-prefix penalty when an OFDM chain is active).
struct NoiseSpec {
    double n0 = 1.0;
    double snr_db = 0.0;
    double ebn0_db = 0.0;

    static NoiseSpec from_snr_db(double snr_db, double es_per_rx, double bits_per_channel_use);
};

/// y = H x + w with w ~ CN(0, n0 I).
Eigen::VectorXcd apply_flat(const FlatChannel& channel, const Eigen::VectorXcd& x, double n0,
                            Rng& rng);

/// Truncated linear convolution per antenna pair plus CN(0, n0) noise:
/// y_r[i] = sum_t sum_l taps(r,t)[l] x_t[i-l] + w_r[i], same length as the
/// input signals.
std::vector<Eigen::VectorXcd> apply_selective(const SelectiveChannel& channel,
                                              const std::vector<Eigen::VectorXcd>& tx, double n0,
                                              Rng& rng);

}  // namespace imphy

#include "imphy/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "imphy/fft.hpp"

namespace imphy {

FlatChannel draw_flat(int n_r, int n_t, Rng& rng) {
    if (n_r < 1 || n_t < 1) throw std::invalid_argument("channel dimensions must be >= 1");
    FlatChannel c{Eigen::MatrixXcd(n_r, n_t)};
    for (int t = 0; t < n_t; ++t)
        for (int r = 0; r < n_r; ++r) c.h(r, t) = rng.cgaussian(1.0);
    return c;
}

SelectiveChannel draw_selective(int n_r, int n_t, int taps, Rng& rng) {
    if (n_r < 1 || n_t < 1 || taps < 1)
        throw std::invalid_argument("channel dimensions and tap count must be >= 1");
    SelectiveChannel c{n_r, n_t, Eigen::MatrixXcd(n_r * n_t, taps)};
    const double tap_var = 1.0 / static_cast<double>(taps);
    for (int t = 0; t < n_t; ++t)
        for (int r = 0; r < n_r; ++r)
            for (int l = 0; l < taps; ++l) c.taps(r + n_r * t, l) = rng.cgaussian(tap_var);
    return c;
}

Eigen::MatrixXcd SelectiveChannel::frequency_response(int n_f) const {
    Eigen::MatrixXcd out(n_r * n_t, n_f);
    for (int row = 0; row < n_r * n_t; ++row)
        out.row(row) = imphy::frequency_response(taps.row(row).transpose(), n_f).transpose();
    return out;
}

NoiseSpec NoiseSpec::from_snr_db(double snr_db, double es_per_rx, double bits_per_channel_use) {
    if (es_per_rx <= 0.0 || bits_per_channel_use <= 0.0)
        throw std::invalid_argument("energy and rate must be positive");
    NoiseSpec spec;
    spec.snr_db = snr_db;
    spec.n0 = es_per_rx / std::pow(10.0, snr_db / 10.0);
    spec.ebn0_db = snr_db - 10.0 * std::log10(bits_per_channel_use);
    return spec;
}

Eigen::VectorXcd apply_flat(const FlatChannel& channel, const Eigen::VectorXcd& x, double n0,
                            Rng& rng) {
    if (x.size() != channel.h.cols()) throw std::invalid_argument("transmit dimension mismatch");
    Eigen::VectorXcd y = channel.h * x;
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) += rng.cgaussian(n0);
    return y;
}

std::vector<Eigen::VectorXcd> apply_selective(const SelectiveChannel& channel,
                                              const std::vector<Eigen::VectorXcd>& tx, double n0,
                                              Rng& rng) {
    if (static_cast<int>(tx.size()) != channel.n_t)
        throw std::invalid_argument("one transmit signal per transmit antenna required");
    const Eigen::Index len = tx.at(0).size();
    for (const auto& s : tx)
        if (s.size() != len) throw std::invalid_argument("transmit signals must share a length");

    const int taps = channel.tap_count();
    std::vector<Eigen::VectorXcd> rx(static_cast<std::size_t>(channel.n_r),
                                     Eigen::VectorXcd::Zero(len));
    for (int r = 0; r < channel.n_r; ++r) {
        auto& y = rx[static_cast<std::size_t>(r)];
        for (int t = 0; t < channel.n_t; ++t) {
            const auto& x = tx[static_cast<std::size_t>(t)];
            for (int l = 0; l < taps; ++l) {
                const auto gain = channel.taps(r + channel.n_r * t, l);
                for (Eigen::Index i = l; i < len; ++i) y(i) += gain * x(i - l);
            }
        }
        for (Eigen::Index i = 0; i < len; ++i) y(i) += rng.cgaussian(n0);
    }
    return rx;
}

}  // namespace imphy

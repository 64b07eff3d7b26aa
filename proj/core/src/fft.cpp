#include "imphy/fft.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace imphy {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

bool is_pow2(Eigen::Index v) { return v > 0 && (v & (v - 1)) == 0; }

void fft_radix2(Eigen::VectorXcd& x, bool inverse) {
    const auto n = static_cast<std::size_t>(x.size());
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x(static_cast<Eigen::Index>(i)), x(static_cast<Eigen::Index>(j)));
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        const std::complex<double> wlen{std::cos(angle), std::sin(angle)};
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w{1.0, 0.0};
            for (std::size_t j = 0; j < len / 2; ++j) {
                const auto a = x(static_cast<Eigen::Index>(i + j));
                const auto b = x(static_cast<Eigen::Index>(i + j + len / 2)) * w;
                x(static_cast<Eigen::Index>(i + j)) = a + b;
                x(static_cast<Eigen::Index>(i + j + len / 2)) = a - b;
                w *= wlen;
            }
        }
    }
}

void dft_direct(Eigen::VectorXcd& x, bool inverse) {
    const Eigen::Index n = x.size();
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
    const double sign = inverse ? 2.0 : -2.0;
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index i = 0; i < n; ++i) {
            const double angle = sign * kPi * static_cast<double>(k) * static_cast<double>(i) /
                                 static_cast<double>(n);
            out(k) += x(i) * std::complex<double>{std::cos(angle), std::sin(angle)};
        }
    x = std::move(out);
}

}  // namespace

void fft_unitary(Eigen::VectorXcd& x, bool inverse) {
    if (x.size() == 0) throw std::invalid_argument("empty transform");
    if (is_pow2(x.size()))
        fft_radix2(x, inverse);
    else
        dft_direct(x, inverse);
    x *= 1.0 / std::sqrt(static_cast<double>(x.size()));
}

Eigen::VectorXcd fft_unitary_copy(const Eigen::VectorXcd& x, bool inverse) {
    Eigen::VectorXcd y = x;
    fft_unitary(y, inverse);
    return y;
}

Eigen::VectorXcd frequency_response(const Eigen::VectorXcd& taps, int n_f) {
    if (taps.size() > n_f) throw std::invalid_argument("more taps than bins");
    Eigen::VectorXcd padded = Eigen::VectorXcd::Zero(n_f);
    padded.head(taps.size()) = taps;
    fft_unitary(padded, /*inverse=*/false);
    return std::sqrt(static_cast<double>(n_f)) * padded;
}

}  // namespace imphy

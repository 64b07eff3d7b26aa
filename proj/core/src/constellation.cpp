#include "imphy/constellation.hpp"

#include <cmath>
#include <stdexcept>

namespace imphy {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

int log2_exact(int v) {
    int n = 0;
    while ((1 << n) < v) ++n;
    return n;
}

// Descending amplitude levels {+(m-1), ..., +1, -1, ..., -(m-1)} so that the
// 2-level case maps label 0 -> +1, matching BPSK.
double pam_level(int label, int m) { return static_cast<double>(m - 1 - 2 * label); }

}  // namespace

int Constellation::bits_per_symbol() const { return log2_exact(order); }

int Constellation::nearest(cplx y) const {
    int best = 0;
    double best_d = std::norm(y - points[0]);
    for (int b = 1; b < order; ++b) {
        const double d = std::norm(y - points[static_cast<std::size_t>(b)]);
        if (d < best_d) {
            best_d = d;
            best = b;
        }
    }
    return best;
}

double Constellation::average_energy() const {
    double e = 0.0;
    for (const auto& p : points) e += std::norm(p);
    return e / static_cast<double>(order);
}

std::string Constellation::describe() const {
    switch (kind) {
        case ConstellationKind::PSK: return std::to_string(order) + "-PSK";
        case ConstellationKind::QAM: return std::to_string(order) + "-QAM";
        case ConstellationKind::PAM: return std::to_string(order) + "-PAM";
    }
    return "?";
}

Constellation make_psk(int order, double phase_offset) {
    if (order < 2 || !is_pow2(order))
        throw std::invalid_argument("PSK order must be a power of 2, >= 2");
    Constellation c{ConstellationKind::PSK, order, phase_offset, {}};
    c.points.reserve(static_cast<std::size_t>(order));
    auto snap = [](double v) { return std::abs(v) < 1e-15 ? 0.0 : v; };
    for (int b = 0; b < order; ++b) {
        const double phi = phase_offset + 2.0 * kPi * b / order;
        c.points.emplace_back(snap(std::cos(phi)), snap(std::sin(phi)));
    }
    return c;
}

Constellation make_qam(int order) {
    const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
    if (m * m != order || !is_pow2(m) || m < 2)
        throw std::invalid_argument("QAM order must be an even power of 2 (4, 16, 64, ...)");
    const double scale = std::sqrt(3.0 / (2.0 * (m * m - 1)));
    const int rail_bits = log2_exact(m);
    Constellation c{ConstellationKind::QAM, order, 0.0, {}};
    c.points.reserve(static_cast<std::size_t>(order));
    for (int b = 0; b < order; ++b) {
        const int i = b >> rail_bits;       // in-phase bits first
        const int q = b & (m - 1);
        c.points.emplace_back(pam_level(i, m) * scale, pam_level(q, m) * scale);
    }
    return c;
}

Constellation make_pam(int order) {
    if (order < 2 || !is_pow2(order))
        throw std::invalid_argument("PAM order must be a power of 2, >= 2");
    const double scale = std::sqrt(3.0 / (order * order - 1.0));
    Constellation c{ConstellationKind::PAM, order, 0.0, {}};
    c.points.reserve(static_cast<std::size_t>(order));
    for (int b = 0; b < order; ++b) c.points.emplace_back(pam_level(b, order) * scale, 0.0);
    return c;
}

}  // namespace imphy

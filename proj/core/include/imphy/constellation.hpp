#pragma once

#include <complex>
#include <string>
#include <vector>

#include "imphy/bits.hpp"

namespace imphy {

using cplx = std::complex<double>;

enum class ConstellationKind { PSK, QAM, PAM };

/// An ordered, unit-average-energy symbol alphabet with natural binary
/// labeling: points[b] is the symbol for label b.
struct Constellation {
    ConstellationKind kind;
    int order = 0;              // M
    double phase_offset = 0.0;  // PSK only
    std::vector<cplx> points;

    int bits_per_symbol() const;
    const cplx& point(int label) const { return points.at(static_cast<std::size_t>(label)); }

    /// Label of the point closest to y (minimum |y - p|^2, ties to the
    /// lowest label).
    int nearest(cplx y) const;

    /// Average of |p|^2 over all points (1 by construction).
    double average_energy() const;

    std::string describe() const;
};

/// M-PSK: point for label b is exp(j * (phase_offset + 2*pi*b / M)).
Constellation make_psk(int order, double phase_offset = 0.0);

/// Square M-QAM (M in {4, 16, 64, 256, 1024, ...}), scaled to unit average
/// energy. Labels split evenly between rails, in-phase bits first; each rail
/// uses the same descending level order as make_pam, so 2-PAM rails agree
/// with BPSK labeling.
Constellation make_qam(int order);

/// Real sqrt(M)-PAM with levels {..., +3, +1, -1, -3, ...} in descending
/// label order, scaled to unit average energy.
Constellation make_pam(int order);

}  // namespace imphy

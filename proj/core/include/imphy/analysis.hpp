#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "imphy/detection.hpp"
#include "imphy/spatial_mapper.hpp"

namespace imphy {

struct DminReport {
    std::string scheme;
    int bpcu = 0;
    int n_t = 0;
    double d_min = 0.0;
    std::size_t arg_i = 0;  // lowest-index minimizing pair
    std::size_t arg_j = 0;
};

/// Exact minimum squared Euclidean distance over all unordered codeword
/// pairs. Requires at least two codewords.
DminReport compute_d_min(const std::string& label, const std::vector<SpatialCodeword>& codebook);

/// ML-complexity reduction of single-active-antenna transmission against
/// equal-rate V-BLAST: 200 (n_t - 1) / (2 n_t + 1) percent.
double complexity_reduction_vs_vblast(int n_t);

enum class DetectorKind { JointMl, TwoStage };

struct ComplexityReport {
    std::string detector;
    std::uint64_t real_mults = 0;
    std::size_t search_space = 0;
};

/// Instrumented real-multiplication count from one actual detector run on a
/// seeded random instance.
ComplexityReport count_real_multiplications(DetectorKind kind, const SpatialScheme& scheme,
                                            int n_r, std::uint64_t seed);

/// The four bundled minimum-distance comparison configurations
/// (4/6/8/10 bpcu across SIMO, SM, ESM, QSM).
struct Fig2Entry {
    char config = 'a';
    SpatialScheme scheme;
};
std::vector<Fig2Entry> fig2_preset();

/// CSV columns: scheme,bpcu,n_T,d_min.
void write_dmin_csv(std::ostream& out, std::span<const DminReport> reports);

}  // namespace imphy

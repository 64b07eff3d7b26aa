#include "imphy/analysis.hpp"

#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "imphy/channel.hpp"
#include "imphy/rng.hpp"

namespace imphy {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

DminReport compute_d_min(const std::string& label, const std::vector<SpatialCodeword>& codebook) {
    if (codebook.size() < 2)
        throw std::invalid_argument("d_min needs at least two codewords");
    DminReport report;
    report.scheme = label;
    report.n_t = static_cast<int>(codebook[0].vector.size());
    report.bpcu = static_cast<int>(codebook[0].bits.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < codebook.size(); ++i)
        for (std::size_t j = i + 1; j < codebook.size(); ++j) {
            const double d = (codebook[i].vector - codebook[j].vector).squaredNorm();
            if (d < best) {
                best = d;
                report.arg_i = i;
                report.arg_j = j;
            }
        }
    report.d_min = best;
    return report;
}

double complexity_reduction_vs_vblast(int n_t) {
    if (n_t < 1) throw std::invalid_argument("n_t must be >= 1");
    return 200.0 * (n_t - 1) / (2.0 * n_t + 1.0);
}

ComplexityReport count_real_multiplications(DetectorKind kind, const SpatialScheme& scheme,
                                            int n_r, std::uint64_t seed) {
    Rng rng(seed);
    const FlatChannel channel = draw_flat(n_r, scheme.n_t, rng);
    const int bpcu = bits_per_use(scheme);
    const auto cw = encode(scheme, random_bits(rng, static_cast<std::size_t>(bpcu)));
    const Eigen::VectorXcd y = apply_flat(channel, cw.vector, /*n0=*/0.1, rng);

    MultCounter counter;
    ComplexityReport report;
    switch (kind) {
        case DetectorKind::JointMl: {
            const auto codebook = enumerate_codebook(scheme);
            ml_spatial(y, channel.h, codebook, &counter);
            report.detector = "ml";
            break;
        }
        case DetectorKind::TwoStage: {
            two_stage_sm(y, channel.h, scheme, &counter);
            report.detector = "two-stage";
            break;
        }
    }
    report.real_mults = counter.real_mults;
    report.search_space = counter.metric_evals;
    return report;
}

std::vector<Fig2Entry> fig2_preset() {
    const Constellation qpsk = make_psk(4, kPi / 4);
    std::vector<Fig2Entry> entries;
    entries.push_back({'a', SpatialScheme::simo(make_qam(16))});
    entries.push_back({'a', SpatialScheme::sm(2, make_psk(8, 0.0))});
    entries.push_back({'a', SpatialScheme::esm(esm_table_preset('a'))});
    entries.push_back({'a', SpatialScheme::qsm(2, qpsk)});
    entries.push_back({'b', SpatialScheme::simo(make_qam(64))});
    entries.push_back({'b', SpatialScheme::sm(4, make_qam(16))});
    entries.push_back({'b', SpatialScheme::esm(esm_table_preset('b'))});
    entries.push_back({'b', SpatialScheme::qsm(4, qpsk)});
    entries.push_back({'c', SpatialScheme::simo(make_qam(256))});
    entries.push_back({'c', SpatialScheme::sm(4, make_qam(64))});
    entries.push_back({'c', SpatialScheme::esm(esm_table_preset('c'))});
    entries.push_back({'c', SpatialScheme::qsm(4, make_qam(16))});
    entries.push_back({'d', SpatialScheme::simo(make_qam(1024))});
    entries.push_back({'d', SpatialScheme::sm(4, make_qam(256))});
    entries.push_back({'d', SpatialScheme::esm(esm_table_preset('d'))});
    entries.push_back({'d', SpatialScheme::qsm(4, make_qam(64))});
    return entries;
}

void write_dmin_csv(std::ostream& out, std::span<const DminReport> reports) {
    out << "scheme,bpcu,n_T,d_min\n";
    char line[128];
    for (const auto& r : reports) {
        std::snprintf(line, sizeof line, "%s,%d,%d,%.12g\n", r.scheme.c_str(), r.bpcu, r.n_t,
                      r.d_min);
        out << line;
    }
}

}  // namespace imphy

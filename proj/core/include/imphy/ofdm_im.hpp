#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <vector>

#include "imphy/constellation.hpp"
#include "imphy/index_combinatorics.hpp"

namespace imphy {

enum class OfdmVariant { IM, GIM1, GIM2 };

std::string to_string(OfdmVariant variant);

/// OFDM-IM framing parameters. n_f subcarriers split into g = n_f / n
/// subblocks of n subcarriers; k of n active per subblock (fixed-k variants).
///
/// Bit budgets per subblock:
///   IM     floor(log2(C(n,k))) + k*log2(m)
///   GIM-I  floor(log2(sum_K C(n,K) m^K)) = floor(log2((m+1)^n)), k free
///   GIM-II independent in-phase/quadrature rails of sqrt(m)-PAM symbols,
///          floor-of-log per rail: 2*(floor(log2(C(n,k))) + k*log2(sqrt(m)))
struct OfdmImConfig {
    int n_f = 0;
    int n = 0;
    int k = 0;
    int m = 0;
    OfdmVariant variant = OfdmVariant::IM;
    bool interleave = false;
    int cp_len = 0;
    Constellation constellation;  // m-ary symbols (BPSK / QPSK / square QAM)
    Constellation rail;           // sqrt(m)-PAM rail alphabet (GIM-II only)

    static OfdmImConfig make(int n_f, int n, int k, int m, OfdmVariant variant,
                             bool interleave = false, int cp_len = 0);

    int g() const { return n_f / n; }
    int p1() const;            // index bits per subblock (per rail for GIM-II)
    int p2() const;            // symbol bits per subblock (per rail for GIM-II)
    int rail_bits() const;     // GIM-II bits per rail
    int subblock_bits() const;
    long frame_bits() const;
    BigInt gim1_realization_count() const;  // (m+1)^n
};

IndexSelector make_selector(const OfdmImConfig& config);

/// Frequency-domain subblock for one subblock's worth of bits. Active
/// subcarriers carry unit-average-energy symbols; inactive ones are zero.
Eigen::VectorXcd build_subblock(BitSpan bits, const OfdmImConfig& config,
                                const IndexSelector& selector);

/// Inverse subblock maps used by the detectors: (pattern, symbol labels) back
/// to the transmitted bit string.
Bits im_subblock_bits(const OfdmImConfig& config, const IndexSelector& selector,
                      const ActivationPattern& pattern, std::span<const int> labels);
Bits gim1_subblock_bits(const OfdmImConfig& config, const ActivationPattern& pattern,
                        std::span<const int> labels);
Bits gim2_subblock_bits(const OfdmImConfig& config, const IndexSelector& selector,
                        const ActivationPattern& i_pattern, std::span<const int> i_labels,
                        const ActivationPattern& q_pattern, std::span<const int> q_labels);

/// All 2^p legal subblock realizations in bit order (guarded at 2^20).
struct SubblockCodebook {
    std::vector<Bits> bits;
    std::vector<Eigen::VectorXcd> symbols;
};
SubblockCodebook enumerate_subblocks(const OfdmImConfig& config, const IndexSelector& selector);

struct OfdmImFrame {
    std::vector<Eigen::VectorXcd> subblocks;
    std::vector<ActivationPattern> active_sets;  // energized subcarriers per subblock
    Eigen::VectorXcd x;                          // n_f frequency-domain frame
};

OfdmImFrame build_frame(BitSpan frame_bits, const OfdmImConfig& config,
                        const IndexSelector& selector);

/// Concatenation, then the g x n block interleaver when enabled: frame
/// position g_idx + G*n_idx takes subblock g_idx, element n_idx (row write,
/// column read).
Eigen::VectorXcd assemble_frame(const std::vector<Eigen::VectorXcd>& subblocks,
                                const OfdmImConfig& config);

/// Frame positions occupied by subblock g_idx (accounts for interleaving).
std::vector<int> subblock_positions(const OfdmImConfig& config, int g_idx);

/// Unitary inverse DFT plus cyclic prefix: n_f + cp_len samples.
Eigen::VectorXcd modulate(const Eigen::VectorXcd& frame, const OfdmImConfig& config);

/// Exact inverse of modulate: drop the prefix, forward unitary DFT.
Eigen::VectorXcd demodulate(const Eigen::VectorXcd& samples, const OfdmImConfig& config);

/// Reassembles the frame bit string from per-subblock detected bits.
Bits deframe(const OfdmImConfig& config, std::span<const Bits> per_subblock_bits);

/// CSV dump: subcarrier index, real, imaginary.
void write_frame_csv(std::ostream& out, const Eigen::VectorXcd& frame);

}  // namespace imphy

#include "imphy/ofdm_im.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "imphy/fft.hpp"

namespace imphy {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

int log2_exact(int v) {
    int n = 0;
    while ((1 << n) < v) ++n;
    if ((1 << n) != v) throw std::invalid_argument("value is not a power of 2");
    return n;
}

Constellation symbol_alphabet(int m) {
    if (m == 2) return make_psk(2, 0.0);
    if (m == 4) return make_psk(4, kPi / 4);
    return make_qam(m);
}

ActivationPattern pattern_of(const Eigen::VectorXcd& subblock) {
    ActivationPattern p{static_cast<int>(subblock.size()), {}};
    for (Eigen::Index i = 0; i < subblock.size(); ++i)
        if (std::abs(subblock(i)) > 1e-12) p.positions.push_back(static_cast<int>(i));
    return p;
}

}  // namespace

std::string to_string(OfdmVariant variant) {
    switch (variant) {
        case OfdmVariant::IM: return "im";
        case OfdmVariant::GIM1: return "gim1";
        case OfdmVariant::GIM2: return "gim2";
    }
    return "?";
}

OfdmImConfig OfdmImConfig::make(int n_f, int n, int k, int m, OfdmVariant variant, bool interleave,
                                int cp_len) {
    if (n < 1 || n_f < n || n_f % n != 0)
        throw std::invalid_argument("n_f must be a positive multiple of the subblock size n");
    if (k < 1 || k > n) throw std::invalid_argument("active count k must satisfy 1 <= k <= n");
    if (!is_pow2(m) || m < 2) throw std::invalid_argument("constellation order must be a power of 2");
    if (cp_len < 0 || cp_len >= n_f)
        throw std::invalid_argument("cyclic prefix length must satisfy 0 <= cp_len < n_f");

    OfdmImConfig cfg;
    cfg.n_f = n_f;
    cfg.n = n;
    cfg.k = k;
    cfg.m = m;
    cfg.variant = variant;
    cfg.interleave = interleave;
    cfg.cp_len = cp_len;
    cfg.constellation = symbol_alphabet(m);
    if (variant == OfdmVariant::GIM2) {
        const int m_sqrt = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
        if (m_sqrt * m_sqrt != m)
            throw std::invalid_argument("GIM-II requires a square constellation order");
        cfg.rail = make_pam(m_sqrt);
    }
    return cfg;
}

int OfdmImConfig::p1() const { return index_bits(n, k); }

int OfdmImConfig::p2() const {
    const int sym = log2_exact(m);
    return variant == OfdmVariant::GIM2 ? k * (sym / 2) : k * sym;
}

int OfdmImConfig::rail_bits() const {
    if (variant != OfdmVariant::GIM2) throw std::invalid_argument("rail bits are GIM-II only");
    return p1() + p2();
}

int OfdmImConfig::subblock_bits() const {
    switch (variant) {
        case OfdmVariant::IM: return p1() + p2();
        case OfdmVariant::GIM1: return floor_log2(gim1_realization_count());
        case OfdmVariant::GIM2: return 2 * rail_bits();
    }
    throw std::invalid_argument("unknown OFDM-IM variant");
}

long OfdmImConfig::frame_bits() const { return static_cast<long>(g()) * subblock_bits(); }

BigInt OfdmImConfig::gim1_realization_count() const {
    BigInt total = 1;
    for (int i = 0; i < n; ++i) total *= (m + 1);  // sum_K C(n,K) m^K
    return total;
}

IndexSelector make_selector(const OfdmImConfig& config) {
    return IndexSelector::combinadic(config.n, config.k);
}

namespace {

// GIM-I canonical realization order: active count ascending, activation
// patterns lexicographic within a count, symbol label digits natural with the
// first active position most significant.
Eigen::VectorXcd gim1_subblock_from_index(const OfdmImConfig& cfg, BigInt index) {
    for (int count = 0; count <= cfg.n; ++count) {
        BigInt m_pow = 1;
        for (int i = 0; i < count; ++i) m_pow *= cfg.m;
        const BigInt bucket = binomial(cfg.n, count) * m_pow;
        if (index >= bucket) {
            index -= bucket;
            continue;
        }
        const BigInt pattern_rank = index / m_pow;
        BigInt sym = index % m_pow;
        const auto pattern = unrank_pattern(pattern_rank, cfg.n, count);
        std::vector<int> labels(static_cast<std::size_t>(count), 0);
        for (int i = count - 1; i >= 0; --i) {
            labels[static_cast<std::size_t>(i)] = static_cast<int>(sym % cfg.m);
            sym /= cfg.m;
        }
        Eigen::VectorXcd sub = Eigen::VectorXcd::Zero(cfg.n);
        for (int i = 0; i < count; ++i)
            sub(pattern.positions[static_cast<std::size_t>(i)]) =
                cfg.constellation.point(labels[static_cast<std::size_t>(i)]);
        return sub;
    }
    throw std::domain_error("GIM-I realization index out of range");
}

BigInt gim1_index_of(const OfdmImConfig& cfg, const ActivationPattern& pattern,
                     std::span<const int> labels) {
    pattern.validate();
    BigInt prefix = 0;
    BigInt m_pow = 1;
    for (int count = 0; count < pattern.k(); ++count) {
        prefix += binomial(cfg.n, count) * m_pow;
        m_pow *= cfg.m;
    }
    BigInt sym = 0;
    for (int label : labels) sym = sym * cfg.m + label;
    return prefix + rank_pattern(pattern) * m_pow + sym;
}

Eigen::VectorXcd build_im_subblock(BitSpan bits, const OfdmImConfig& cfg,
                                   const IndexSelector& selector) {
    const int p1 = cfg.p1();
    const int sym_bits = cfg.constellation.bits_per_symbol();
    const auto pattern = selector.select(bits.subspan(0, static_cast<std::size_t>(p1)));
    Eigen::VectorXcd sub = Eigen::VectorXcd::Zero(cfg.n);
    std::size_t offset = static_cast<std::size_t>(p1);
    for (int pos : pattern.positions) {
        const int label =
            static_cast<int>(bits_to_uint(bits.subspan(offset, static_cast<std::size_t>(sym_bits))));
        sub(pos) = cfg.constellation.point(label);
        offset += static_cast<std::size_t>(sym_bits);
    }
    return sub;
}

// One GIM-II rail: an independent index-modulated sqrt(m)-PAM stream. Rail
// amplitudes are the rails of the unit-energy m-QAM alphabet, i.e. PAM/sqrt2.
Eigen::VectorXd build_gim2_rail(BitSpan bits, const OfdmImConfig& cfg,
                                const IndexSelector& selector) {
    const int p1 = cfg.p1();
    const int rail_sym_bits = cfg.rail.bits_per_symbol();
    const auto pattern = selector.select(bits.subspan(0, static_cast<std::size_t>(p1)));
    Eigen::VectorXd rail = Eigen::VectorXd::Zero(cfg.n);
    std::size_t offset = static_cast<std::size_t>(p1);
    for (int pos : pattern.positions) {
        const int label = static_cast<int>(
            bits_to_uint(bits.subspan(offset, static_cast<std::size_t>(rail_sym_bits))));
        rail(pos) = cfg.rail.point(label).real() * kInvSqrt2;
        offset += static_cast<std::size_t>(rail_sym_bits);
    }
    return rail;
}

}  // namespace

Eigen::VectorXcd build_subblock(BitSpan bits, const OfdmImConfig& config,
                                const IndexSelector& selector) {
    if (static_cast<int>(bits.size()) != config.subblock_bits())
        throw std::invalid_argument("subblock bit count mismatch");
    switch (config.variant) {
        case OfdmVariant::IM: return build_im_subblock(bits, config, selector);
        case OfdmVariant::GIM1: return gim1_subblock_from_index(config, bits_to_bigint(bits));
        case OfdmVariant::GIM2: {
            const auto rail_len = static_cast<std::size_t>(config.rail_bits());
            const Eigen::VectorXd i_rail = build_gim2_rail(bits.subspan(0, rail_len), config, selector);
            const Eigen::VectorXd q_rail = build_gim2_rail(bits.subspan(rail_len), config, selector);
            Eigen::VectorXcd sub(config.n);
            for (int i = 0; i < config.n; ++i) sub(i) = cplx{i_rail(i), q_rail(i)};
            return sub;
        }
    }
    throw std::invalid_argument("unknown OFDM-IM variant");
}

Bits im_subblock_bits(const OfdmImConfig& config, const IndexSelector& selector,
                      const ActivationPattern& pattern, std::span<const int> labels) {
    const auto index = selector.bits_for(pattern);
    if (!index) throw std::domain_error("pattern outside the selectable set");
    Bits bits = *index;
    for (int label : labels)
        append_uint(bits, static_cast<std::uint64_t>(label), config.constellation.bits_per_symbol());
    return bits;
}

Bits gim1_subblock_bits(const OfdmImConfig& config, const ActivationPattern& pattern,
                        std::span<const int> labels) {
    return bigint_to_bits(gim1_index_of(config, pattern, labels), config.subblock_bits());
}

Bits gim2_subblock_bits(const OfdmImConfig& config, const IndexSelector& selector,
                        const ActivationPattern& i_pattern, std::span<const int> i_labels,
                        const ActivationPattern& q_pattern, std::span<const int> q_labels) {
    const auto i_index = selector.bits_for(i_pattern);
    const auto q_index = selector.bits_for(q_pattern);
    if (!i_index || !q_index) throw std::domain_error("pattern outside the selectable set");
    Bits bits = *i_index;
    for (int label : i_labels)
        append_uint(bits, static_cast<std::uint64_t>(label), config.rail.bits_per_symbol());
    bits.insert(bits.end(), q_index->begin(), q_index->end());
    for (int label : q_labels)
        append_uint(bits, static_cast<std::uint64_t>(label), config.rail.bits_per_symbol());
    return bits;
}

SubblockCodebook enumerate_subblocks(const OfdmImConfig& config, const IndexSelector& selector) {
    const int p = config.subblock_bits();
    if (p > 20) throw std::length_error("subblock codebook enumeration is guarded at 2^20");
    SubblockCodebook book;
    book.bits.reserve(std::size_t{1} << p);
    book.symbols.reserve(std::size_t{1} << p);
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << p); ++v) {
        Bits bits = bits_from_uint(v, p);
        book.symbols.push_back(build_subblock(bits, config, selector));
        book.bits.push_back(std::move(bits));
    }
    return book;
}

OfdmImFrame build_frame(BitSpan frame_bits, const OfdmImConfig& config,
                        const IndexSelector& selector) {
    const int per = config.subblock_bits();
    if (static_cast<long>(frame_bits.size()) != config.frame_bits())
        throw std::invalid_argument("frame bit count mismatch");
    OfdmImFrame frame;
    frame.subblocks.reserve(static_cast<std::size_t>(config.g()));
    for (int g_idx = 0; g_idx < config.g(); ++g_idx) {
        frame.subblocks.push_back(build_subblock(
            frame_bits.subspan(static_cast<std::size_t>(g_idx) * static_cast<std::size_t>(per),
                               static_cast<std::size_t>(per)),
            config, selector));
        frame.active_sets.push_back(pattern_of(frame.subblocks.back()));
    }
    frame.x = assemble_frame(frame.subblocks, config);
    return frame;
}

Eigen::VectorXcd assemble_frame(const std::vector<Eigen::VectorXcd>& subblocks,
                                const OfdmImConfig& config) {
    if (static_cast<int>(subblocks.size()) != config.g())
        throw std::invalid_argument("expected exactly g subblocks");
    Eigen::VectorXcd x(config.n_f);
    const int g = config.g();
    for (int g_idx = 0; g_idx < g; ++g_idx) {
        const auto& sub = subblocks[static_cast<std::size_t>(g_idx)];
        if (sub.size() != config.n) throw std::invalid_argument("subblock length mismatch");
        for (int n_idx = 0; n_idx < config.n; ++n_idx)
            x(config.interleave ? g_idx + g * n_idx : g_idx * config.n + n_idx) = sub(n_idx);
    }
    return x;
}

std::vector<int> subblock_positions(const OfdmImConfig& config, int g_idx) {
    std::vector<int> pos(static_cast<std::size_t>(config.n));
    for (int n_idx = 0; n_idx < config.n; ++n_idx)
        pos[static_cast<std::size_t>(n_idx)] =
            config.interleave ? g_idx + config.g() * n_idx : g_idx * config.n + n_idx;
    return pos;
}

Eigen::VectorXcd modulate(const Eigen::VectorXcd& frame, const OfdmImConfig& config) {
    if (frame.size() != config.n_f) throw std::invalid_argument("frame length mismatch");
    Eigen::VectorXcd time = fft_unitary_copy(frame, /*inverse=*/true);
    Eigen::VectorXcd out(config.n_f + config.cp_len);
    out.head(config.cp_len) = time.tail(config.cp_len);
    out.tail(config.n_f) = time;
    return out;
}

Eigen::VectorXcd demodulate(const Eigen::VectorXcd& samples, const OfdmImConfig& config) {
    if (samples.size() != config.n_f + config.cp_len)
        throw std::invalid_argument("sample count mismatch");
    return fft_unitary_copy(samples.tail(config.n_f), /*inverse=*/false);
}

Bits deframe(const OfdmImConfig& config, std::span<const Bits> per_subblock_bits) {
    if (static_cast<int>(per_subblock_bits.size()) != config.g())
        throw std::invalid_argument("expected one decision per subblock");
    Bits out;
    out.reserve(static_cast<std::size_t>(config.frame_bits()));
    for (const auto& bits : per_subblock_bits) {
        if (static_cast<int>(bits.size()) != config.subblock_bits())
            throw std::invalid_argument("per-subblock bit count mismatch");
        out.insert(out.end(), bits.begin(), bits.end());
    }
    return out;
}

void write_frame_csv(std::ostream& out, const Eigen::VectorXcd& frame) {
    out << "subcarrier,real,imag\n";
    char line[96];
    for (Eigen::Index i = 0; i < frame.size(); ++i) {
        std::snprintf(line, sizeof line, "%lld,%.12g,%.12g\n", static_cast<long long>(i),
                      frame(i).real(), frame(i).imag());
        out << line;
    }
}

}  // namespace imphy

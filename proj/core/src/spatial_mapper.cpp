#include "imphy/spatial_mapper.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace imphy {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kDecodeTol = 1e-9;

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

int log2_exact(int v) {
    int n = 0;
    while ((1 << n) < v) ++n;
    if ((1 << n) != v) throw std::invalid_argument("value is not a power of 2");
    return n;
}

cplx rotated(const cplx& s, double theta) {
    if (theta == 0.0) return s;
    auto snap = [](double v) { return std::abs(v) < 1e-15 ? 0.0 : v; };
    const cplx z = s * cplx{std::cos(theta), std::sin(theta)};
    return {snap(z.real()), snap(z.imag())};
}

std::vector<std::vector<int>> antenna_pairs(int n_t) {
    std::vector<std::vector<int>> pairs;
    for (int a = 0; a < n_t; ++a)
        for (int b = a + 1; b < n_t; ++b) pairs.push_back({a, b});
    return pairs;
}

}  // namespace

std::string to_string(SpatialKind kind) {
    switch (kind) {
        case SpatialKind::SM: return "sm";
        case SpatialKind::GSM: return "gsm";
        case SpatialKind::MA_SM: return "masm";
        case SpatialKind::ESM: return "esm";
        case SpatialKind::QSM: return "qsm";
        case SpatialKind::SIMO: return "simo";
        case SpatialKind::VBLAST: return "vblast";
    }
    return "?";
}

int EsmTable::spatial_bits() const {
    return log2_exact(static_cast<int>(combinations.size()));
}

int EsmTable::symbol_bits() const {
    int bits = 0;
    const auto& combo = combinations.at(0);
    for (int t = 0; t < n_t; ++t)
        if (combo.constellation[static_cast<std::size_t>(t)] >= 0)
            bits += constellations[static_cast<std::size_t>(combo.constellation[static_cast<std::size_t>(t)])]
                        .bits_per_symbol();
    return bits;
}

void EsmTable::validate() const {
    if (n_t < 1) throw std::invalid_argument("ESM table requires n_t >= 1");
    if (combinations.empty() || !is_pow2(static_cast<int>(combinations.size())))
        throw std::invalid_argument("ESM table must have a power-of-2 number of combinations");
    const int s_bits = spatial_bits();

    for (const auto& c : constellations)
        if (std::abs(c.average_energy() - 1.0) > 1e-9)
            throw std::invalid_argument("ESM constellations must have unit average energy");

    std::set<std::uint64_t> seen;
    int symbol_bit_count = -1;
    for (const auto& combo : combinations) {
        if (static_cast<int>(combo.spatial_bits.size()) != s_bits)
            throw std::invalid_argument("ESM spatial bit strings must all have the same length");
        if (!seen.insert(bits_to_uint(combo.spatial_bits)).second)
            throw std::invalid_argument("duplicate ESM spatial bit string");
        if (static_cast<int>(combo.constellation.size()) != n_t ||
            static_cast<int>(combo.rotation.size()) != n_t)
            throw std::invalid_argument("ESM combination must list one entry per antenna");
        int active = 0;
        int bits = 0;
        for (int t = 0; t < n_t; ++t) {
            const int ci = combo.constellation[static_cast<std::size_t>(t)];
            if (ci < 0) continue;
            if (ci >= static_cast<int>(constellations.size()))
                throw std::invalid_argument("ESM combination references a missing constellation");
            ++active;
            bits += constellations[static_cast<std::size_t>(ci)].bits_per_symbol();
        }
        if (active == 0) throw std::invalid_argument("ESM combination must activate an antenna");
        if (symbol_bit_count < 0) symbol_bit_count = bits;
        if (bits != symbol_bit_count)
            throw std::invalid_argument("ESM combinations must carry equal constellation bits");
    }

    // Injectivity over the full codebook (pairwise distinct codewords).
    SpatialScheme scheme = SpatialScheme::esm(*this, /*validate=*/false);
    const int bpcu = bits_per_use(scheme);
    if (bpcu > 20) return;  // validation capped; larger tables are the caller's risk
    std::vector<Eigen::VectorXcd> words;
    words.reserve(std::size_t{1} << bpcu);
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << bpcu); ++v)
        words.push_back(encode(scheme, bits_from_uint(v, bpcu)).vector);
    for (std::size_t i = 0; i < words.size(); ++i)
        for (std::size_t j = i + 1; j < words.size(); ++j)
            if ((words[i] - words[j]).norm() <= 1e-9)
                throw std::invalid_argument("ESM table is not injective (two bit strings collide)");
}

EsmTable esm_table_preset(char config) {
    EsmTable t;
    switch (config) {
        case 'a':
        case 'b': {
            t.n_t = (config == 'a') ? 2 : 4;
            t.constellations = {make_psk(4, kPi / 4), make_psk(2, 0.0)};
            break;
        }
        case 'c': {
            t.n_t = 4;
            t.constellations = {make_qam(16), make_psk(4, kPi / 4)};
            break;
        }
        case 'd': {
            t.n_t = 4;
            t.constellations = {make_qam(64), make_psk(8, 0.0)};
            break;
        }
        default: throw std::invalid_argument("ESM preset must be one of a, b, c, d");
    }
    const double secondary_rotation = (config == 'a' || config == 'b') ? kPi / 2
                                      : (config == 'c')                ? kPi / 4
                                                                       : kPi / 8;
    const int n_t = t.n_t;
    const auto pairs = antenna_pairs(n_t);
    const int combo_count = n_t + 2 * static_cast<int>(pairs.size());  // 4 or 16
    const int s_bits = log2_exact(combo_count);
    int value = 0;
    auto blank = [&] {
        EsmCombination c;
        c.constellation.assign(static_cast<std::size_t>(n_t), -1);
        c.rotation.assign(static_cast<std::size_t>(n_t), 0.0);
        return c;
    };
    for (int a = 0; a < n_t; ++a) {  // primary constellation, single antenna
        EsmCombination c = blank();
        c.spatial_bits = bits_from_uint(static_cast<std::uint64_t>(value++), s_bits);
        c.constellation[static_cast<std::size_t>(a)] = 0;
        t.combinations.push_back(std::move(c));
    }
    for (int rot = 0; rot < 2; ++rot)  // secondary pairs, plain then rotated
        for (const auto& pair : pairs) {
            EsmCombination c = blank();
            c.spatial_bits = bits_from_uint(static_cast<std::uint64_t>(value++), s_bits);
            for (int a : pair) {
                c.constellation[static_cast<std::size_t>(a)] = 1;
                c.rotation[static_cast<std::size_t>(a)] = rot ? secondary_rotation : 0.0;
            }
            t.combinations.push_back(std::move(c));
        }
    t.validate();
    return t;
}

EsmTable esm_table_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open ESM table file: " + path);
    nlohmann::json doc = nlohmann::json::parse(in);
    EsmTable t;
    t.n_t = doc.at("n_t").get<int>();
    for (const auto& c : doc.at("constellations")) {
        const auto kind = c.at("kind").get<std::string>();
        const int m = c.at("m").get<int>();
        if (kind == "psk")
            t.constellations.push_back(make_psk(m, c.value("phase", 0.0)));
        else if (kind == "qam")
            t.constellations.push_back(make_qam(m));
        else if (kind == "pam")
            t.constellations.push_back(make_pam(m));
        else
            throw std::runtime_error("unknown constellation kind: " + kind);
    }
    for (const auto& e : doc.at("combinations")) {
        EsmCombination combo;
        combo.spatial_bits = bits_from_string(e.at("spatial_bits").get<std::string>());
        combo.constellation = e.at("constellation").get<std::vector<int>>();
        combo.rotation = e.value("rotation", std::vector<double>(static_cast<std::size_t>(t.n_t), 0.0));
        t.combinations.push_back(std::move(combo));
    }
    // Normalize combination order to spatial bit value.
    std::sort(t.combinations.begin(), t.combinations.end(),
              [](const EsmCombination& a, const EsmCombination& b) {
                  return bits_to_uint(a.spatial_bits) < bits_to_uint(b.spatial_bits);
              });
    t.validate();
    return t;
}

SpatialScheme SpatialScheme::sm(int n_t, Constellation c) {
    if (!is_pow2(n_t)) throw std::invalid_argument("SM requires a power-of-2 antenna count");
    return {SpatialKind::SM, n_t, 1, std::move(c), std::nullopt};
}

SpatialScheme SpatialScheme::gsm(int n_t, int n_a, Constellation c) {
    if (n_a < 1 || n_a > n_t) throw std::invalid_argument("GSM requires 1 <= n_a <= n_t");
    if (index_bits(n_t, n_a) < 1)
        throw std::invalid_argument("GSM requires floor(log2(C(n_t, n_a))) >= 1");
    return {SpatialKind::GSM, n_t, n_a, std::move(c), std::nullopt};
}

SpatialScheme SpatialScheme::ma_sm(int n_t, int n_a, Constellation c) {
    if (n_a < 1 || n_a > n_t) throw std::invalid_argument("MA-SM requires 1 <= n_a <= n_t");
    return {SpatialKind::MA_SM, n_t, n_a, std::move(c), std::nullopt};
}

SpatialScheme SpatialScheme::esm(EsmTable table, bool validate) {
    if (validate) table.validate();
    SpatialScheme s{SpatialKind::ESM, table.n_t, 0, table.constellations.at(0), std::nullopt};
    s.esm_table = std::move(table);
    return s;
}

SpatialScheme SpatialScheme::qsm(int n_t, Constellation c) {
    if (!is_pow2(n_t)) throw std::invalid_argument("QSM requires a power-of-2 antenna count");
    for (const auto& p : c.points)
        if (std::abs(p.real()) < 1e-12 || std::abs(p.imag()) < 1e-12)
            throw std::invalid_argument(
                "QSM requires constellation points with nonzero real and imaginary parts");
    return {SpatialKind::QSM, n_t, 1, std::move(c), std::nullopt};
}

SpatialScheme SpatialScheme::simo(Constellation c) {
    return {SpatialKind::SIMO, 1, 1, std::move(c), std::nullopt};
}

SpatialScheme SpatialScheme::vblast(int n_t, Constellation c) {
    if (n_t < 1) throw std::invalid_argument("V-BLAST requires n_t >= 1");
    return {SpatialKind::VBLAST, n_t, n_t, std::move(c), std::nullopt};
}

std::string SpatialScheme::label() const { return to_string(kind); }

int bits_per_use(const SpatialScheme& scheme) {
    const int sym = scheme.constellation.bits_per_symbol();
    switch (scheme.kind) {
        case SpatialKind::SM: return log2_exact(scheme.n_t) + sym;
        case SpatialKind::GSM: return index_bits(scheme.n_t, scheme.n_a) + sym;
        case SpatialKind::MA_SM: return index_bits(scheme.n_t, scheme.n_a) + scheme.n_a * sym;
        case SpatialKind::ESM:
            return scheme.esm_table->spatial_bits() + scheme.esm_table->symbol_bits();
        case SpatialKind::QSM: return 2 * log2_exact(scheme.n_t) + sym;
        case SpatialKind::SIMO: return sym;
        case SpatialKind::VBLAST: return scheme.n_t * sym;
    }
    throw std::invalid_argument("unknown spatial scheme");
}

SpatialCodeword encode(const SpatialScheme& scheme, BitSpan bits) {
    const int bpcu = bits_per_use(scheme);
    if (static_cast<int>(bits.size()) != bpcu)
        throw std::invalid_argument("encode expects exactly bits_per_use input bits");

    const int n_t = scheme.n_t;
    const int sym_bits = scheme.constellation.bits_per_symbol();
    SpatialCodeword cw;
    cw.bits.assign(bits.begin(), bits.end());
    cw.vector = Eigen::VectorXcd::Zero(n_t);
    cw.active.n = n_t;

    switch (scheme.kind) {
        case SpatialKind::SIMO: {
            const int label = static_cast<int>(bits_to_uint(bits));
            cw.vector(0) = scheme.constellation.point(label);
            cw.active.positions = {0};
            break;
        }
        case SpatialKind::SM: {
            const int a_bits = log2_exact(n_t);
            const int ant = static_cast<int>(bits_to_uint(bits.subspan(0, static_cast<std::size_t>(a_bits))));
            const int label = static_cast<int>(bits_to_uint(bits.subspan(static_cast<std::size_t>(a_bits))));
            cw.vector(ant) = scheme.constellation.point(label);
            cw.active.positions = {ant};
            break;
        }
        case SpatialKind::GSM:
        case SpatialKind::MA_SM: {
            const int p_bits = index_bits(n_t, scheme.n_a);
            const auto pattern =
                unrank_pattern(bits_to_bigint(bits.subspan(0, static_cast<std::size_t>(p_bits))), n_t,
                               scheme.n_a);
            const double scale = 1.0 / std::sqrt(static_cast<double>(scheme.n_a));
            if (scheme.kind == SpatialKind::GSM) {
                const int label =
                    static_cast<int>(bits_to_uint(bits.subspan(static_cast<std::size_t>(p_bits))));
                for (int ant : pattern.positions)
                    cw.vector(ant) = scale * scheme.constellation.point(label);
            } else {
                std::size_t offset = static_cast<std::size_t>(p_bits);
                for (int ant : pattern.positions) {
                    const int label = static_cast<int>(
                        bits_to_uint(bits.subspan(offset, static_cast<std::size_t>(sym_bits))));
                    cw.vector(ant) = scale * scheme.constellation.point(label);
                    offset += static_cast<std::size_t>(sym_bits);
                }
            }
            cw.active = pattern;
            break;
        }
        case SpatialKind::VBLAST: {
            const double scale = 1.0 / std::sqrt(static_cast<double>(n_t));
            std::size_t offset = 0;
            for (int ant = 0; ant < n_t; ++ant) {
                const int label = static_cast<int>(
                    bits_to_uint(bits.subspan(offset, static_cast<std::size_t>(sym_bits))));
                cw.vector(ant) = scale * scheme.constellation.point(label);
                cw.active.positions.push_back(ant);
                offset += static_cast<std::size_t>(sym_bits);
            }
            break;
        }
        case SpatialKind::QSM: {
            const int a_bits = log2_exact(n_t);
            const int re_ant =
                static_cast<int>(bits_to_uint(bits.subspan(0, static_cast<std::size_t>(a_bits))));
            const int im_ant = static_cast<int>(
                bits_to_uint(bits.subspan(static_cast<std::size_t>(a_bits), static_cast<std::size_t>(a_bits))));
            const int label =
                static_cast<int>(bits_to_uint(bits.subspan(static_cast<std::size_t>(2 * a_bits))));
            const cplx s = scheme.constellation.point(label);
            cw.vector(re_ant) += cplx{s.real(), 0.0};
            cw.vector(im_ant) += cplx{0.0, s.imag()};
            cw.active.positions = re_ant == im_ant ? std::vector<int>{re_ant}
                               : re_ant < im_ant   ? std::vector<int>{re_ant, im_ant}
                                                   : std::vector<int>{im_ant, re_ant};
            break;
        }
        case SpatialKind::ESM: {
            const EsmTable& table = *scheme.esm_table;
            const int s_bits = table.spatial_bits();
            const auto value =
                static_cast<std::size_t>(bits_to_uint(bits.subspan(0, static_cast<std::size_t>(s_bits))));
            const EsmCombination& combo = table.combinations[value];
            int active = 0;
            for (int ant = 0; ant < n_t; ++ant)
                active += (combo.constellation[static_cast<std::size_t>(ant)] >= 0);
            const double scale = 1.0 / std::sqrt(static_cast<double>(active));
            std::size_t offset = static_cast<std::size_t>(s_bits);
            for (int ant = 0; ant < n_t; ++ant) {
                const int ci = combo.constellation[static_cast<std::size_t>(ant)];
                if (ci < 0) continue;
                const Constellation& cons = table.constellations[static_cast<std::size_t>(ci)];
                const int label = static_cast<int>(bits_to_uint(
                    bits.subspan(offset, static_cast<std::size_t>(cons.bits_per_symbol()))));
                offset += static_cast<std::size_t>(cons.bits_per_symbol());
                cw.vector(ant) =
                    scale * rotated(cons.point(label), combo.rotation[static_cast<std::size_t>(ant)]);
                cw.active.positions.push_back(ant);
            }
            break;
        }
    }
    return cw;
}

namespace {

// Reconstructs the codeword for a bit candidate and accepts it when it sits
// within the decode tolerance of the observed vector.
std::optional<Bits> try_candidate(const SpatialScheme& scheme, const Eigen::VectorXcd& v,
                                  const Bits& bits) {
    const auto cw = encode(scheme, bits);
    if ((cw.vector - v).norm() <= kDecodeTol * (1.0 + v.norm())) return bits;
    return std::nullopt;
}

}  // namespace

Bits decode(const SpatialScheme& scheme, const Eigen::VectorXcd& vector) {
    if (vector.size() != scheme.n_t)
        throw std::invalid_argument("vector length must equal the antenna count");
    const int sym_bits = scheme.constellation.bits_per_symbol();
    const int n_t = scheme.n_t;

    // Support = entries carrying meaningful energy.
    std::vector<int> support;
    for (int t = 0; t < n_t; ++t)
        if (std::abs(vector(t)) > 1e-6) support.push_back(t);

    std::optional<Bits> result;
    switch (scheme.kind) {
        case SpatialKind::SIMO: {
            Bits bits = bits_from_uint(
                static_cast<std::uint64_t>(scheme.constellation.nearest(vector(0))), sym_bits);
            result = try_candidate(scheme, vector, bits);
            break;
        }
        case SpatialKind::SM: {
            if (support.size() == 1) {
                const int ant = support[0];
                Bits bits = bits_from_uint(static_cast<std::uint64_t>(ant), log2_exact(n_t));
                append_uint(bits, static_cast<std::uint64_t>(scheme.constellation.nearest(vector(ant))),
                            sym_bits);
                result = try_candidate(scheme, vector, bits);
            }
            break;
        }
        case SpatialKind::GSM:
        case SpatialKind::MA_SM: {
            if (static_cast<int>(support.size()) == scheme.n_a) {
                ActivationPattern pattern{n_t, support};
                const double scale = std::sqrt(static_cast<double>(scheme.n_a));
                Bits bits = bigint_to_bits(rank_pattern(pattern), index_bits(n_t, scheme.n_a));
                if (scheme.kind == SpatialKind::GSM) {
                    append_uint(bits,
                                static_cast<std::uint64_t>(
                                    scheme.constellation.nearest(vector(support[0]) * scale)),
                                sym_bits);
                } else {
                    for (int ant : support)
                        append_uint(bits,
                                    static_cast<std::uint64_t>(
                                        scheme.constellation.nearest(vector(ant) * scale)),
                                    sym_bits);
                }
                result = try_candidate(scheme, vector, bits);
            }
            break;
        }
        case SpatialKind::VBLAST: {
            const double scale = std::sqrt(static_cast<double>(n_t));
            Bits bits;
            for (int ant = 0; ant < n_t; ++ant)
                append_uint(bits,
                            static_cast<std::uint64_t>(scheme.constellation.nearest(vector(ant) * scale)),
                            sym_bits);
            result = try_candidate(scheme, vector, bits);
            break;
        }
        case SpatialKind::QSM: {
            const int a_bits = log2_exact(n_t);
            for (int re_ant = 0; re_ant < n_t && !result; ++re_ant)
                for (int im_ant = 0; im_ant < n_t && !result; ++im_ant) {
                    const cplx s{vector(re_ant).real(), vector(im_ant).imag()};
                    Bits bits = bits_from_uint(static_cast<std::uint64_t>(re_ant), a_bits);
                    append_uint(bits, static_cast<std::uint64_t>(im_ant), a_bits);
                    append_uint(bits, static_cast<std::uint64_t>(scheme.constellation.nearest(s)),
                                sym_bits);
                    result = try_candidate(scheme, vector, bits);
                }
            break;
        }
        case SpatialKind::ESM: {
            const EsmTable& table = *scheme.esm_table;
            for (const auto& combo : table.combinations) {
                int active = 0;
                for (int ant = 0; ant < n_t; ++ant)
                    active += (combo.constellation[static_cast<std::size_t>(ant)] >= 0);
                const double scale = std::sqrt(static_cast<double>(active));
                Bits bits = combo.spatial_bits;
                for (int ant = 0; ant < n_t; ++ant) {
                    const int ci = combo.constellation[static_cast<std::size_t>(ant)];
                    if (ci < 0) continue;
                    const Constellation& cons = table.constellations[static_cast<std::size_t>(ci)];
                    const cplx z = rotated(vector(ant) * scale,
                                           -combo.rotation[static_cast<std::size_t>(ant)]);
                    append_uint(bits, static_cast<std::uint64_t>(cons.nearest(z)),
                                cons.bits_per_symbol());
                }
                result = try_candidate(scheme, vector, bits);
                if (result) break;
            }
            break;
        }
    }
    if (!result) throw std::invalid_argument("not a codeword of the given scheme");
    return *result;
}

std::vector<SpatialCodeword> enumerate_codebook(const SpatialScheme& scheme) {
    const int bpcu = bits_per_use(scheme);
    if (bpcu > 24)
        throw std::length_error("codebook enumeration is guarded at 24 bits per channel use");
    std::vector<SpatialCodeword> book;
    book.reserve(std::size_t{1} << bpcu);
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << bpcu); ++v)
        book.push_back(encode(scheme, bits_from_uint(v, bpcu)));
    return book;
}

}  // namespace imphy

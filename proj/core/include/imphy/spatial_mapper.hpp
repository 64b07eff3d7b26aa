#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "imphy/constellation.hpp"
#include "imphy/index_combinatorics.hpp"

namespace imphy {

enum class SpatialKind { SM, GSM, MA_SM, ESM, QSM, SIMO, VBLAST };

std::string to_string(SpatialKind kind);

/// One ESM codebook row family: a spatial bit pattern selecting which
/// antennas are active and, per active antenna, which constellation is used
/// and with what extra rotation. Inactive antennas carry -1.
struct EsmCombination {
    Bits spatial_bits;
    std::vector<int> constellation;  // index into EsmTable::constellations, -1 = off
    std::vector<double> rotation;    // radians, per antenna
};

/// A full ESM combination alphabet. The bundled presets follow the
/// single-antenna-primary / antenna-pair-secondary / rotated-pair pattern;
/// alternatives can be supplied as JSON data.
struct EsmTable {
    int n_t = 0;
    std::vector<Constellation> constellations;
    std::vector<EsmCombination> combinations;

    int spatial_bits() const;  // log2(#combinations)
    int symbol_bits() const;   // constellation bits, constant across combinations
    /// Throws std::invalid_argument unless combinations are complete,
    /// consistent in bit counts, unit energy, and injective.
    void validate() const;
};

/// Bundled ESM alphabets:
///   'a'  n_t=2, QPSK primary / BPSK secondary           (4 bpcu)
///   'b'  n_t=4, QPSK primary / BPSK secondary           (6 bpcu)
///   'c'  n_t=4, 16-QAM primary / QPSK secondary         (8 bpcu)
///   'd'  n_t=4, 64-QAM primary / 8-PSK secondary        (10 bpcu)
/// Only 'a' is pinned by published transmission vectors; 'b'-'d' generalize
/// its construction and are replaceable via esm_table_from_json_file.
EsmTable esm_table_preset(char config);

/// JSON document:
/// {"n_t": 2,
///  "constellations": [{"kind": "psk", "m": 4, "phase": 0.785398}, ...],
///  "combinations": [{"spatial_bits": "00", "constellation": [0, -1],
///                    "rotation": [0.0, 0.0]}, ...]}
EsmTable esm_table_from_json_file(const std::string& path);

struct SpatialScheme {
    SpatialKind kind = SpatialKind::SIMO;
    int n_t = 1;
    int n_a = 1;  // active antennas (GSM / MA-SM)
    Constellation constellation;
    std::optional<EsmTable> esm_table;

    static SpatialScheme sm(int n_t, Constellation c);
    static SpatialScheme gsm(int n_t, int n_a, Constellation c);
    static SpatialScheme ma_sm(int n_t, int n_a, Constellation c);
    static SpatialScheme esm(EsmTable table, bool validate = true);
    static SpatialScheme qsm(int n_t, Constellation c);
    static SpatialScheme simo(Constellation c);
    static SpatialScheme vblast(int n_t, Constellation c);

    std::string label() const;
};

struct SpatialCodeword {
    Eigen::VectorXcd vector;
    Bits bits;
    ActivationPattern active;
};

int bits_per_use(const SpatialScheme& scheme);

/// Maps a bits_per_use-long bit string to a unit-energy transmit vector.
/// Spatial/index bits come first, constellation bits after.
SpatialCodeword encode(const SpatialScheme& scheme, BitSpan bits);

/// Exact inverse of encode for vectors within 1e-9 of a codeword; throws
/// std::invalid_argument("not a codeword...") otherwise.
Bits decode(const SpatialScheme& scheme, const Eigen::VectorXcd& vector);

/// All 2^bpcu codewords in bit order. Guarded at bits_per_use <= 24.
std::vector<SpatialCodeword> enumerate_codebook(const SpatialScheme& scheme);

}  // namespace imphy

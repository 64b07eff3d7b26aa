#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imphy/bits.hpp"

namespace imphy {

using BigInt = boost::multiprecision::cpp_int;

/// Exact C(n, k) with arbitrary precision. Throws std::domain_error for k > n.
BigInt binomial(int n, int k);

/// floor(log2(C(n, k))), computed exactly from the bit length.
int index_bits(int n, int k);

/// floor(log2(v)) for v >= 1.
int floor_log2(const BigInt& v);

BigInt bits_to_bigint(BitSpan bits);
Bits bigint_to_bits(const BigInt& value, int width);

/// k active positions out of n, strictly increasing.
struct ActivationPattern {
    int n = 0;
    std::vector<int> positions;

    int k() const { return static_cast<int>(positions.size()); }
    void validate() const;  // throws std::domain_error on malformed patterns
    bool operator==(const ActivationPattern&) const = default;
};

/// The rank-th k-subset of [0, n) in lexicographic order of increasing
/// position lists. Bijective with rank over [0, C(n, k)).
ActivationPattern unrank_pattern(const BigInt& rank, int n, int k);

/// Inverse of unrank_pattern.
BigInt rank_pattern(const ActivationPattern& pattern);

/// Maps p1 = floor(log2(C(n,k))) index-selection bits to activation patterns.
/// Two modes: combinadic (rank/unrank arithmetic, any n) and lookup table
/// (explicit bit-pattern map, loaded from file for small n).
class IndexSelector {
  public:
    enum class Mode { Combinadic, LookupTable };

    static IndexSelector combinadic(int n, int k);
    /// patterns[i] is the pattern selected by bit value i; exactly 2^p1
    /// distinct entries are required.
    static IndexSelector lookup_table(int n, int k, std::vector<ActivationPattern> patterns);
    /// JSON document: {"n": N, "k": K, "entries": [{"bits": "01", "positions": [0, 2]}, ...]}
    static IndexSelector from_json_file(const std::string& path);

    Mode mode() const { return mode_; }
    int n() const { return n_; }
    int k() const { return k_; }
    int index_bits() const { return p1_; }

    /// Pattern for a p1-bit selection string.
    ActivationPattern select(BitSpan bits) const;

    /// Inverse map; std::nullopt when the pattern is outside the 2^p1
    /// selectable set (an illegal pattern at the detector).
    std::optional<Bits> bits_for(const ActivationPattern& pattern) const;

    bool is_legal(const ActivationPattern& pattern) const { return bits_for(pattern).has_value(); }

    /// The selectable pattern maximizing the sum of per-position scores
    /// (deterministic tie-break toward the lower-rank pattern). Used to
    /// repair illegal detected patterns.
    ActivationPattern best_legal(std::span<const double> scores) const;

    const std::vector<ActivationPattern>* table() const {
        return mode_ == Mode::LookupTable ? &table_ : nullptr;
    }

  private:
    IndexSelector() = default;

    Mode mode_ = Mode::Combinadic;
    int n_ = 0;
    int k_ = 0;
    int p1_ = 0;
    std::vector<ActivationPattern> table_;  // lookup mode only
};

}  // namespace imphy

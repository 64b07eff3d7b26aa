#include "imphy/index_combinatorics.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace imphy {

BigInt binomial(int n, int k) {
    if (n < 0 || k < 0 || k > n) throw std::domain_error("binomial requires 0 <= k <= n");
    if (k > n - k) k = n - k;
    BigInt c = 1;
    for (int i = 1; i <= k; ++i) {
        c *= (n - k + i);
        c /= i;  // exact at every step
    }
    return c;
}

int floor_log2(const BigInt& v) {
    if (v < 1) throw std::domain_error("floor_log2 requires v >= 1");
    return static_cast<int>(boost::multiprecision::msb(v));
}

int index_bits(int n, int k) { return floor_log2(binomial(n, k)); }

BigInt bits_to_bigint(BitSpan bits) {
    BigInt v = 0;
    for (auto b : bits) {
        v <<= 1;
        v |= static_cast<int>(b);
    }
    return v;
}

Bits bigint_to_bits(const BigInt& value, int width) {
    if (value < 0 || value >= (BigInt(1) << width))
        throw std::domain_error("value does not fit in the requested width");
    Bits out(static_cast<std::size_t>(width), 0);
    for (int i = 0; i < width; ++i)
        out[static_cast<std::size_t>(width - 1 - i)] =
            static_cast<std::uint8_t>(boost::multiprecision::bit_test(value, static_cast<unsigned>(i)));
    return out;
}

void ActivationPattern::validate() const {
    if (n < 0 || static_cast<int>(positions.size()) > n)
        throw std::domain_error("activation pattern has more positions than slots");
    int prev = -1;
    for (int p : positions) {
        if (p <= prev || p >= n)
            throw std::domain_error("activation positions must be strictly increasing in [0, n)");
        prev = p;
    }
}

ActivationPattern unrank_pattern(const BigInt& rank, int n, int k) {
    if (k < 0 || k > n) throw std::domain_error("unrank requires 0 <= k <= n");
    if (rank < 0 || rank >= binomial(n, k)) throw std::domain_error("rank out of range");
    ActivationPattern pattern{n, {}};
    pattern.positions.reserve(static_cast<std::size_t>(k));
    BigInt r = rank;
    int c = 0;
    for (int slot = 0; slot < k; ++slot) {
        for (;; ++c) {
            const BigInt count = binomial(n - 1 - c, k - 1 - slot);
            if (r < count) {
                pattern.positions.push_back(c);
                ++c;
                break;
            }
            r -= count;
        }
    }
    return pattern;
}

BigInt rank_pattern(const ActivationPattern& pattern) {
    pattern.validate();
    const int n = pattern.n;
    const int k = pattern.k();
    BigInt r = 0;
    int start = 0;
    for (int slot = 0; slot < k; ++slot) {
        for (int c = start; c < pattern.positions[static_cast<std::size_t>(slot)]; ++c)
            r += binomial(n - 1 - c, k - 1 - slot);
        start = pattern.positions[static_cast<std::size_t>(slot)] + 1;
    }
    return r;
}

IndexSelector IndexSelector::combinadic(int n, int k) {
    if (k < 1 || k > n) throw std::invalid_argument("selector requires 1 <= k <= n");
    IndexSelector s;
    s.mode_ = Mode::Combinadic;
    s.n_ = n;
    s.k_ = k;
    s.p1_ = imphy::index_bits(n, k);
    return s;
}

IndexSelector IndexSelector::lookup_table(int n, int k, std::vector<ActivationPattern> patterns) {
    IndexSelector s = combinadic(n, k);
    s.mode_ = Mode::LookupTable;
    const std::size_t expected = std::size_t{1} << s.p1_;
    if (patterns.size() != expected)
        throw std::invalid_argument("lookup table must have exactly 2^p1 entries");
    std::set<std::vector<int>> seen;
    for (const auto& p : patterns) {
        p.validate();
        if (p.n != n || p.k() != k)
            throw std::invalid_argument("lookup table entry has wrong (n, k)");
        if (!seen.insert(p.positions).second)
            throw std::invalid_argument("lookup table entries must be distinct");
    }
    s.table_ = std::move(patterns);
    return s;
}

IndexSelector IndexSelector::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open index table file: " + path);
    nlohmann::json doc = nlohmann::json::parse(in);
    const int n = doc.at("n").get<int>();
    const int k = doc.at("k").get<int>();
    const int p1 = imphy::index_bits(n, k);
    std::vector<ActivationPattern> patterns(std::size_t{1} << p1);
    std::vector<bool> filled(patterns.size(), false);
    for (const auto& entry : doc.at("entries")) {
        const Bits bits = bits_from_string(entry.at("bits").get<std::string>());
        if (static_cast<int>(bits.size()) != p1)
            throw std::runtime_error("index table entry bits must have length p1");
        const auto value = static_cast<std::size_t>(bits_to_uint(bits));
        if (filled[value]) throw std::runtime_error("duplicate bits entry in index table");
        filled[value] = true;
        ActivationPattern p{n, entry.at("positions").get<std::vector<int>>()};
        patterns[value] = std::move(p);
    }
    if (!std::all_of(filled.begin(), filled.end(), [](bool f) { return f; }))
        throw std::runtime_error("index table must cover all 2^p1 bit strings");
    return lookup_table(n, k, std::move(patterns));
}

ActivationPattern IndexSelector::select(BitSpan bits) const {
    if (static_cast<int>(bits.size()) != p1_)
        throw std::invalid_argument("selection bit string must have length p1");
    if (mode_ == Mode::LookupTable)
        return table_[static_cast<std::size_t>(bits_to_uint(bits))];
    return unrank_pattern(bits_to_bigint(bits), n_, k_);
}

std::optional<Bits> IndexSelector::bits_for(const ActivationPattern& pattern) const {
    pattern.validate();
    if (pattern.n != n_ || pattern.k() != k_) return std::nullopt;
    if (mode_ == Mode::LookupTable) {
        for (std::size_t i = 0; i < table_.size(); ++i)
            if (table_[i].positions == pattern.positions)
                return bits_from_uint(i, p1_);
        return std::nullopt;
    }
    const BigInt r = rank_pattern(pattern);
    if (r >= (BigInt(1) << p1_)) return std::nullopt;
    return bigint_to_bits(r, p1_);
}

namespace {

// Sum of the j largest scores among positions in (from, n); ties broken
// toward lower positions. Returns nullopt when fewer than j remain.
std::optional<double> best_free_sum(std::span<const double> scores, int from, int j) {
    const int n = static_cast<int>(scores.size());
    if (n - from - 1 < j) return std::nullopt;
    if (j == 0) return 0.0;
    std::vector<int> idx(static_cast<std::size_t>(n - from - 1));
    std::iota(idx.begin(), idx.end(), from + 1);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)]; });
    double sum = 0.0;
    for (int i = 0; i < j; ++i) sum += scores[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    return sum;
}

std::vector<int> best_free_set(std::span<const double> scores, int from, int j) {
    const int n = static_cast<int>(scores.size());
    std::vector<int> idx(static_cast<std::size_t>(n - from - 1));
    std::iota(idx.begin(), idx.end(), from + 1);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)]; });
    idx.resize(static_cast<std::size_t>(j));
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

ActivationPattern IndexSelector::best_legal(std::span<const double> scores) const {
    if (static_cast<int>(scores.size()) != n_)
        throw std::invalid_argument("score vector must have one entry per position");

    if (mode_ == Mode::LookupTable) {
        std::size_t best = 0;
        double best_sum = -1e308;
        for (std::size_t i = 0; i < table_.size(); ++i) {
            double sum = 0.0;
            for (int p : table_[i].positions) sum += scores[static_cast<std::size_t>(p)];
            if (sum > best_sum) {
                best_sum = sum;
                best = i;
            }
        }
        return table_[best];
    }

    // Combinadic mode: the selectable set is the lexicographic prefix of all
    // k-subsets up to rank 2^p1 - 1. A subset is legal iff it is <= the last
    // selectable pattern P*. Candidates: P* itself, or "match P* up to slot
    // i, pick a strictly smaller position there, fill the rest greedily".
    const BigInt last_rank = (BigInt(1) << p1_) - 1;
    const ActivationPattern bound = unrank_pattern(last_rank, n_, k_);
    if (last_rank == binomial(n_, k_) - 1) {
        // Whole pattern space selectable: unconstrained top-k.
        ActivationPattern p{n_, best_free_set(scores, -1, k_)};
        return p;
    }

    ActivationPattern best = bound;
    double best_sum = 0.0;
    for (int p : bound.positions) best_sum += scores[static_cast<std::size_t>(p)];

    double prefix_sum = 0.0;
    int prev = -1;
    for (int slot = 0; slot < k_; ++slot) {
        const int bound_pos = bound.positions[static_cast<std::size_t>(slot)];
        for (int c = prev + 1; c < bound_pos; ++c) {
            const auto free_sum = best_free_sum(scores, c, k_ - slot - 1);
            if (!free_sum) continue;
            const double total = prefix_sum + scores[static_cast<std::size_t>(c)] + *free_sum;
            if (total > best_sum) {
                best_sum = total;
                best.positions.assign(bound.positions.begin(), bound.positions.begin() + slot);
                best.positions.push_back(c);
                const auto tail = best_free_set(scores, c, k_ - slot - 1);
                best.positions.insert(best.positions.end(), tail.begin(), tail.end());
            }
        }
        prefix_sum += scores[static_cast<std::size_t>(bound_pos)];
        prev = bound_pos;
    }
    best.n = n_;
    return best;
}

}  // namespace imphy

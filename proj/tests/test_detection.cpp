#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "imphy/channel.hpp"
#include "imphy/detection.hpp"

using namespace imphy;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

// Independent argmin oracle: a plain loop that recomputes ||y - Hx||^2 with
// Eigen products, no shared code with the detector's metric path.
std::size_t brute_force_argmin(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                               const std::vector<SpatialCodeword>& book) {
    std::size_t best = 0;
    double best_metric = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < book.size(); ++i) {
        const double m = (y - h * book[i].vector).squaredNorm();
        if (m < best_metric) {
            best_metric = m;
            best = i;
        }
    }
    return best;
}

std::size_t brute_force_subblock(const Eigen::VectorXcd& y, const Eigen::VectorXcd& h,
                                 const SubblockCodebook& book) {
    std::size_t best = 0;
    double best_metric = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < book.symbols.size(); ++i) {
        const double m = (y - h.cwiseProduct(book.symbols[i])).squaredNorm();
        if (m < best_metric) {
            best_metric = m;
            best = i;
        }
    }
    return best;
}
}  // namespace

TEST_CASE("noiseless joint ML recovers every codeword with zero metric") {
    const auto scheme = SpatialScheme::sm(2, make_psk(8, 0.0));
    const auto book = enumerate_codebook(scheme);
    Rng rng(21);
    const auto channel = draw_flat(2, 2, rng);
    for (const auto& cw : book) {
        const Eigen::VectorXcd y = channel.h * cw.vector;
        const auto d = ml_spatial(y, channel.h, book);
        CHECK(d.bits == cw.bits);
        CHECK(d.metric < 1e-20);
    }
}

TEST_CASE("joint ML equals the brute-force oracle on 1000 noisy instances") {
    const auto scheme = SpatialScheme::sm(2, make_psk(8, 0.0));
    const auto book = enumerate_codebook(scheme);
    Rng rng(22);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto channel = draw_flat(2, 2, rng);
        const auto cw = book[static_cast<std::size_t>(rng.next_u64() % book.size())];
        const auto y = apply_flat(channel, cw.vector, 0.5, rng);
        const auto d = ml_spatial(y, channel.h, book);
        CHECK(d.bits == book[brute_force_argmin(y, channel.h, book)].bits);
    }
}

TEST_CASE("equidistant observation resolves to the lower codeword index") {
    // Identity channel, y at the midpoint of codewords 0 and 1.
    const auto scheme = SpatialScheme::simo(make_psk(2, 0.0));  // points +1, -1
    const auto book = enumerate_codebook(scheme);
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Identity(1, 1);
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(1);  // midpoint of +1 and -1
    const auto d = ml_spatial(y, h, book);
    CHECK(d.bits == book[0].bits);
}

TEST_CASE("two-stage SM agrees with joint ML in the noise-free case") {
    const auto scheme = SpatialScheme::sm(2, make_psk(8, 0.0));
    const auto book = enumerate_codebook(scheme);
    Rng rng(23);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto channel = draw_flat(2, 2, rng);
        for (const auto& cw : book) {
            const Eigen::VectorXcd y = channel.h * cw.vector;
            const auto d = two_stage_sm(y, channel.h, scheme);
            CHECK(d.bits == cw.bits);
        }
    }
}

TEST_CASE("two-stage SM at 30 dB tracks ML on at least 95 percent of decisions") {
    // Regression guard for the suboptimal detector, not a published value.
    const auto scheme = SpatialScheme::sm(2, make_psk(8, 0.0));
    const auto book = enumerate_codebook(scheme);
    const double n0 = 1e-3;  // 30 dB with unit received symbol energy
    Rng rng(24);
    int agree = 0;
    const int trials = 10000;
    for (int trial = 0; trial < trials; ++trial) {
        const auto channel = draw_flat(2, 2, rng);
        const auto cw = book[static_cast<std::size_t>(rng.next_u64() % book.size())];
        const auto y = apply_flat(channel, cw.vector, n0, rng);
        agree += two_stage_sm(y, channel.h, scheme).bits == ml_spatial(y, channel.h, book).bits;
    }
    CHECK(agree >= static_cast<int>(0.95 * trials));
}

TEST_CASE("orthogonal channel columns give the true antenna in stage one") {
    const auto scheme = SpatialScheme::sm(2, make_psk(8, 0.0));
    Eigen::MatrixXcd h(2, 2);
    h << cplx{2, 0}, cplx{0, 0}, cplx{0, 0}, cplx{0, 3};
    for (const auto& cw : enumerate_codebook(scheme)) {
        const Eigen::VectorXcd y = h * cw.vector;
        const auto d = two_stage_sm(y, h, scheme);
        CHECK(d.bits == cw.bits);
        CHECK(d.branch_metrics.size() == 2);
    }
}

TEST_CASE("two-stage rejects non-SM schemes") {
    const auto scheme = SpatialScheme::qsm(2, make_psk(4, kPi / 4));
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Identity(2, 2);
    CHECK_THROWS_AS(two_stage_sm(Eigen::VectorXcd::Zero(2), h, scheme), std::invalid_argument);
}

TEST_CASE("subblock ML: noiseless loopback over all 16 realizations") {
    const auto cfg = OfdmImConfig::make(4, 4, 2, 2, OfdmVariant::IM);
    const auto sel = make_selector(cfg);
    const auto book = enumerate_subblocks(cfg, sel);
    REQUIRE(book.bits.size() == 16);
    Rng rng(25);
    Eigen::VectorXcd h(4);
    for (int i = 0; i < 4; ++i) h(i) = rng.cgaussian(1.0);
    for (std::size_t i = 0; i < book.bits.size(); ++i) {
        const Eigen::VectorXcd y = h.cwiseProduct(book.symbols[i]);
        CHECK(ml_subblock(y, h, book).bits == book.bits[i]);
    }
}

TEST_CASE("subblock ML equals the brute-force oracle on 1000 noisy instances") {
    const auto cfg = OfdmImConfig::make(4, 4, 2, 2, OfdmVariant::IM);
    const auto sel = make_selector(cfg);
    const auto book = enumerate_subblocks(cfg, sel);
    Rng rng(26);
    for (int trial = 0; trial < 1000; ++trial) {
        Eigen::VectorXcd h(4), y(4);
        const auto& x = book.symbols[static_cast<std::size_t>(rng.next_u64() % book.symbols.size())];
        for (int i = 0; i < 4; ++i) {
            h(i) = rng.cgaussian(1.0);
            y(i) = h(i) * x(i) + rng.cgaussian(0.3);
        }
        CHECK(ml_subblock(y, h, book).bits == book.bits[brute_force_subblock(y, h, book)]);
    }
}

TEST_CASE("subblock ML with k = n reduces to per-subcarrier symbol ML") {
    const auto cfg = OfdmImConfig::make(4, 4, 4, 2, OfdmVariant::IM);
    const auto sel = make_selector(cfg);
    const auto book = enumerate_subblocks(cfg, sel);
    Rng rng(27);
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::VectorXcd h(4), y(4);
        for (int i = 0; i < 4; ++i) {
            h(i) = rng.cgaussian(1.0);
            y(i) = rng.cgaussian(2.0);
        }
        const auto d = ml_subblock(y, h, book);
        Bits expected;
        for (int i = 0; i < 4; ++i) {
            int best = 0;
            double best_m = std::numeric_limits<double>::infinity();
            for (int label = 0; label < 2; ++label) {
                const double m = std::norm(y(i) - h(i) * cfg.constellation.point(label));
                if (m < best_m) {
                    best_m = m;
                    best = label;
                }
            }
            expected.push_back(static_cast<std::uint8_t>(best));
        }
        CHECK(d.bits == expected);
    }
}

TEST_CASE("LLR detection matches subblock ML in the noiseless limit") {
    const auto cfg = OfdmImConfig::make(4, 4, 2, 2, OfdmVariant::IM);
    const auto sel = make_selector(cfg);
    const auto book = enumerate_subblocks(cfg, sel);
    Rng rng(28);
    Eigen::VectorXcd h(4);
    for (int i = 0; i < 4; ++i) h(i) = rng.cgaussian(1.0);
    for (std::size_t i = 0; i < book.bits.size(); ++i) {
        const Eigen::VectorXcd y = h.cwiseProduct(book.symbols[i]);
        const auto d = llr_subblock(y, h, cfg, sel, 1e-9);
        CHECK(d.bits == book.bits[i]);
        CHECK_FALSE(d.illegal_pattern);
    }
}

TEST_CASE("LLR detection agrees with ML on at least 99 percent of subblocks at 30 dB") {
    const auto cfg = OfdmImConfig::make(4, 4, 2, 2, OfdmVariant::IM);
    const auto sel = make_selector(cfg);
    const auto book = enumerate_subblocks(cfg, sel);
    const double n0 = 1e-3;
    Rng rng(29);
    int agree = 0;
    const int trials = 10000;
    for (int trial = 0; trial < trials; ++trial) {
        Eigen::VectorXcd h(4), y(4);
        const auto& x = book.symbols[static_cast<std::size_t>(rng.next_u64() % book.symbols.size())];
        for (int i = 0; i < 4; ++i) {
            h(i) = rng.cgaussian(1.0);
            y(i) = h(i) * x(i) + rng.cgaussian(n0);
        }
        agree += llr_subblock(y, h, cfg, sel, n0).bits == ml_subblock(y, h, book).bits;
    }
    CHECK(agree >= static_cast<int>(0.99 * trials));
}

TEST_CASE("k = 1 activity ranking is monotone in |y|") {
    const auto cfg = OfdmImConfig::make(2, 2, 1, 2, OfdmVariant::IM);
    const auto sel = make_selector(cfg);
    Eigen::VectorXcd h = Eigen::VectorXcd::Ones(2);
    Eigen::VectorXcd y(2);
    y << cplx{0.9, 0}, cplx{0.3, 0};
    const auto d = llr_subblock(y, h, cfg, sel, 0.5);
    CHECK(d.branch_metrics[0] > d.branch_metrics[1]);  // position 0 wins
    CHECK(d.bits[0] == 0);                             // pattern rank 0 = {0}
}

TEST_CASE("the active set is exactly the top-k lambda ranking") {
    // Only ranks matter: adding a constant to every lambda cannot change the
    // selection, so the decision must coincide with the top-k of the
    // reported branch metrics under the same tie rule.
    const auto cfg = OfdmImConfig::make(8, 8, 3, 2, OfdmVariant::IM);
    const auto sel = make_selector(cfg);
    Rng rng(30);
    for (int trial = 0; trial < 500; ++trial) {
        Eigen::VectorXcd h(8), y(8);
        for (int i = 0; i < 8; ++i) {
            h(i) = rng.cgaussian(1.0);
            y(i) = rng.cgaussian(1.0);
        }
        const auto d = llr_subblock(y, h, cfg, sel, 0.25);
        if (d.illegal_pattern) continue;  // repaired patterns deviate by design
        std::vector<int> order(8);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return d.branch_metrics[static_cast<std::size_t>(a)] >
                   d.branch_metrics[static_cast<std::size_t>(b)];
        });
        std::vector<int> expected(order.begin(), order.begin() + 3);
        std::sort(expected.begin(), expected.end());
        const auto pattern = sel.select(BitSpan(d.bits).subspan(0, static_cast<std::size_t>(cfg.p1())));
        CHECK(pattern.positions == expected);
    }
}

TEST_CASE("illegal patterns are flagged and repaired to the best legal set") {
    const auto cfg = OfdmImConfig::make(4, 4, 2, 2, OfdmVariant::IM);
    const auto sel = make_selector(cfg);
    // Strong energy on positions {2, 3}: rank 5, outside the 4 selectable.
    Eigen::VectorXcd h = Eigen::VectorXcd::Ones(4);
    Eigen::VectorXcd y(4);
    y << cplx{0.01, 0}, cplx{0.02, 0}, cplx{1, 0}, cplx{-1, 0};
    const auto d = llr_subblock(y, h, cfg, sel, 0.05);
    CHECK(d.illegal_pattern);
    CHECK(static_cast<int>(d.bits.size()) == cfg.subblock_bits());
    // repair keeps the strongest legal combination, which must include
    // subcarrier 2 or 3
    const auto pattern = sel.select(BitSpan(d.bits).subspan(0, 2));
    CHECK(sel.is_legal(pattern));
    double repaired_sum = 0, best_legal_sum = -1e300;
    for (int pos : pattern.positions) repaired_sum += d.branch_metrics[static_cast<std::size_t>(pos)];
    for (std::uint64_t v = 0; v < 4; ++v) {
        const auto p = sel.select(bits_from_uint(v, 2));
        double s = 0;
        for (int pos : p.positions) s += d.branch_metrics[static_cast<std::size_t>(pos)];
        best_legal_sum = std::max(best_legal_sum, s);
    }
    CHECK(repaired_sum == doctest::Approx(best_legal_sum));
}

TEST_CASE("LLR rejects invalid noise variances and non-IM variants") {
    const auto cfg = OfdmImConfig::make(4, 4, 2, 2, OfdmVariant::IM);
    const auto sel = make_selector(cfg);
    Eigen::VectorXcd z = Eigen::VectorXcd::Zero(4);
    CHECK_THROWS_AS(llr_subblock(z, z, cfg, sel, 0.0), std::invalid_argument);
    const auto gim = OfdmImConfig::make(4, 4, 1, 2, OfdmVariant::GIM1);
    CHECK_THROWS_AS(llr_subblock(z, z, gim, make_selector(gim), 0.1), std::invalid_argument);
}

TEST_CASE("detectors are deterministic") {
    const auto cfg = OfdmImConfig::make(4, 4, 2, 2, OfdmVariant::IM);
    const auto sel = make_selector(cfg);
    Rng rng(31);
    Eigen::VectorXcd h(4), y(4);
    for (int i = 0; i < 4; ++i) {
        h(i) = rng.cgaussian(1.0);
        y(i) = rng.cgaussian(1.0);
    }
    const auto a = llr_subblock(y, h, cfg, sel, 0.3);
    const auto b = llr_subblock(y, h, cfg, sel, 0.3);
    CHECK(a.bits == b.bits);
    CHECK(a.metric == b.metric);
}

TEST_CASE("1x1 MMSE-LLR reduces to plain LLR detection") {
    const auto cfg = OfdmImConfig::make(8, 4, 2, 2, OfdmVariant::IM);
    const auto sel = make_selector(cfg);
    Rng rng(32);
    for (int trial = 0; trial < 200; ++trial) {
        const auto channel = draw_selective(1, 1, 3, rng);
        const Eigen::MatrixXcd h_freq = channel.frequency_response(8);
        Eigen::MatrixXcd y(1, 8);
        const auto bits = random_bits(rng, static_cast<std::size_t>(cfg.frame_bits()));
        const auto frame = build_frame(bits, cfg, sel);
        const double n0 = 0.05;
        for (int k = 0; k < 8; ++k) y(0, k) = h_freq(0, k) * frame.x(k) + rng.cgaussian(n0);

        const auto mimo = mmse_llr_mimo(y, h_freq, 1, 1, cfg, sel, n0);
        for (int g_idx = 0; g_idx < cfg.g(); ++g_idx) {
            const auto positions = subblock_positions(cfg, g_idx);
            Eigen::VectorXcd y_sub(4), h_sub(4);
            for (int i = 0; i < 4; ++i) {
                y_sub(i) = y(0, positions[static_cast<std::size_t>(i)]);
                h_sub(i) = h_freq(0, positions[static_cast<std::size_t>(i)]);
            }
            const auto direct = llr_subblock(y_sub, h_sub, cfg, sel, n0);
            CHECK(mimo.streams[0][static_cast<std::size_t>(g_idx)].bits == direct.bits);
        }
    }
}

TEST_CASE("noiseless well-conditioned MIMO detection recovers all streams") {
    const auto cfg = OfdmImConfig::make(8, 4, 2, 2, OfdmVariant::IM, /*interleave=*/true);
    const auto sel = make_selector(cfg);
    Rng rng(33);
    int exact = 0;
    const int trials = 1000;
    for (int trial = 0; trial < trials; ++trial) {
        const auto channel = draw_selective(2, 2, 1, rng);
        const Eigen::MatrixXcd h_freq = channel.frequency_response(8);
        std::vector<Bits> tx_bits;
        Eigen::MatrixXcd x(2, 8);
        for (int t = 0; t < 2; ++t) {
            tx_bits.push_back(random_bits(rng, static_cast<std::size_t>(cfg.frame_bits())));
            x.row(t) = build_frame(tx_bits.back(), cfg, sel).x.transpose();
        }
        Eigen::MatrixXcd y(2, 8);
        for (int k = 0; k < 8; ++k)
            y.col(k) = Eigen::Map<const Eigen::MatrixXcd>(h_freq.col(k).data(), 2, 2) * x.col(k);

        const auto result = mmse_llr_mimo(y, h_freq, 2, 2, cfg, sel, /*n0=*/1e-11);
        bool ok = true;
        for (int t = 0; t < 2; ++t) {
            std::vector<Bits> parts;
            for (const auto& d : result.streams[static_cast<std::size_t>(t)]) parts.push_back(d.bits);
            ok = ok && (deframe(cfg, parts) == tx_bits[static_cast<std::size_t>(t)]);
        }
        exact += ok;
    }
    CHECK(exact == trials);
}

TEST_CASE("MIMO BER falls with SNR on a coarse sweep") {
    const auto cfg = OfdmImConfig::make(32, 4, 2, 2, OfdmVariant::IM, /*interleave=*/true, 8);
    const auto sel = make_selector(cfg);
    double ber_low = 0, ber_high = 0;
    for (const double snr_db : {5.0, 30.0}) {
        Rng rng(34);
        const double es = 2.0 * cfg.k / cfg.n;
        const double n0 = es / std::pow(10.0, snr_db / 10.0);
        long errors = 0, bits_total = 0;
        for (int trial = 0; trial < 400; ++trial) {
            const auto channel = draw_selective(2, 2, 4, rng);
            const Eigen::MatrixXcd h_freq = channel.frequency_response(32);
            std::vector<Bits> tx_bits;
            Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(2, 32);
            for (int t = 0; t < 2; ++t) {
                tx_bits.push_back(random_bits(rng, static_cast<std::size_t>(cfg.frame_bits())));
                const auto frame = build_frame(tx_bits.back(), cfg, sel);
                for (int k = 0; k < 32; ++k)
                    y.col(k) += Eigen::Map<const Eigen::MatrixXcd>(h_freq.col(k).data(), 2, 2)
                                    .col(t) *
                                frame.x(k);
            }
            for (int k = 0; k < 32; ++k)
                for (int r = 0; r < 2; ++r) y(r, k) += rng.cgaussian(n0);
            const auto result = mmse_llr_mimo(y, h_freq, 2, 2, cfg, sel, n0);
            for (int t = 0; t < 2; ++t) {
                std::vector<Bits> parts;
                for (const auto& d : result.streams[static_cast<std::size_t>(t)])
                    parts.push_back(d.bits);
                errors += static_cast<long>(
                    count_bit_errors(tx_bits[static_cast<std::size_t>(t)], deframe(cfg, parts)));
                bits_total += cfg.frame_bits();
            }
        }
        (snr_db < 10 ? ber_low : ber_high) = static_cast<double>(errors) / bits_total;
    }
    CHECK(ber_high < ber_low);
}

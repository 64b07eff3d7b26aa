#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "imphy/channel.hpp"
#include "imphy/fft.hpp"

using namespace imphy;
using cplx = std::complex<double>;

TEST_CASE("fixed seeds draw bit-identical realizations") {
    Rng a(42), b(42);
    const auto ha = draw_flat(3, 2, a);
    const auto hb = draw_flat(3, 2, b);
    CHECK(ha.h == hb.h);

    Rng c(42), d(43);
    CHECK(draw_flat(3, 2, c).h != draw_flat(3, 2, d).h);
}

TEST_CASE("flat channel moments over 1e6 draws") {
    // Monte Carlo moment estimator: per-entry mean within 3 sigma of 0,
    // second moment within 3 sigma of 1, rail variances about 1/2 each.
    Rng rng(7);
    const int draws = 250000;  // 4 entries per draw -> 1e6 samples
    double sum_re = 0, sum_im = 0, sum_sq = 0, sum_re_sq = 0, sum_im_sq = 0, sum_cross = 0;
    const double n = 4.0 * draws;
    for (int i = 0; i < draws; ++i) {
        const auto c = draw_flat(2, 2, rng);
        for (int r = 0; r < 2; ++r)
            for (int t = 0; t < 2; ++t) {
                const auto v = c.h(r, t);
                sum_re += v.real();
                sum_im += v.imag();
                sum_sq += std::norm(v);
                sum_re_sq += v.real() * v.real();
                sum_im_sq += v.imag() * v.imag();
                sum_cross += v.real() * v.imag();
            }
    }
    // mean: sigma_per_rail = sqrt(0.5/n)
    const double sigma_mean = std::sqrt(0.5 / n);
    CHECK(std::abs(sum_re / n) < 3 * sigma_mean);
    CHECK(std::abs(sum_im / n) < 3 * sigma_mean);
    // second moment of |v|^2: var = 1 (exponential), sigma = 1/sqrt(n)
    CHECK(std::abs(sum_sq / n - 1.0) < 3.0 / std::sqrt(n));
    // rail variances ~ 1/2 (var of re^2 is 2*(1/2)^2 = 1/2)
    CHECK(std::abs(sum_re_sq / n - 0.5) < 3.0 * std::sqrt(0.5 / n));
    CHECK(std::abs(sum_im_sq / n - 0.5) < 3.0 * std::sqrt(0.5 / n));
    // circular symmetry: re/im cross moment near 0 (sigma = 0.5/sqrt(n))
    CHECK(std::abs(sum_cross / n) < 3.0 * 0.5 / std::sqrt(n));
}

TEST_CASE("selective channel: single tap reduces to flat statistics") {
    Rng rng(11);
    const int draws = 100000;
    double sum_sq = 0;
    for (int i = 0; i < draws; ++i) {
        const auto c = draw_selective(1, 1, 1, rng);
        sum_sq += std::norm(c.taps(0, 0));
    }
    CHECK(std::abs(sum_sq / draws - 1.0) < 3.0 / std::sqrt(double(draws)));
}

TEST_CASE("uniform profile: tap powers sum to one on average") {
    Rng rng(13);
    const int draws = 100000;
    double sum = 0;
    for (int i = 0; i < draws; ++i) {
        const auto c = draw_selective(1, 1, 10, rng);
        sum += c.taps.row(0).squaredNorm();
    }
    // |h|^2 is a sum of 10 exponentials with rate 10: var = 10/100 = 0.1
    CHECK(std::abs(sum / draws - 1.0) < 3.0 * std::sqrt(0.1 / draws));
}

TEST_CASE("frequency response has unit average power per subcarrier") {
    Rng rng(17);
    const int draws = 20000;
    const int n_f = 16;
    Eigen::VectorXd power = Eigen::VectorXd::Zero(n_f);
    for (int i = 0; i < draws; ++i) {
        const auto c = draw_selective(1, 1, 10, rng);
        const auto h = c.frequency_response(n_f);
        for (int k = 0; k < n_f; ++k) power(k) += std::norm(h(0, k));
    }
    for (int k = 0; k < n_f; ++k)
        CHECK(std::abs(power(k) / draws - 1.0) < 4.0 / std::sqrt(double(draws)));
}

TEST_CASE("apply_flat: identity channel and zero noise pass the signal through") {
    Rng rng(1);
    FlatChannel c{Eigen::MatrixXcd::Identity(2, 2)};
    Eigen::VectorXcd x(2);
    x << cplx{0.3, -0.4}, cplx{-1.0, 0.25};
    const auto y = apply_flat(c, x, 0.0, rng);
    CHECK((y - x).norm() == 0.0);
}

TEST_CASE("apply_flat: zero input leaves noise with power n_r * n0") {
    Rng rng(3);
    FlatChannel c{Eigen::MatrixXcd::Identity(4, 1)};
    const Eigen::VectorXcd x = Eigen::VectorXcd::Zero(1);
    const double n0 = 0.7;
    const int draws = 50000;
    double sum = 0;
    for (int i = 0; i < draws; ++i) sum += apply_flat(c, x, n0, rng).squaredNorm();
    const double expected = 4 * n0;
    // |w|^2 over 4 entries: variance 4 * n0^2
    CHECK(std::abs(sum / draws - expected) < 3.0 * std::sqrt(4.0 * n0 * n0 / draws));
}

TEST_CASE("apply_selective: single unit tap is AWGN") {
    SelectiveChannel c{1, 1, Eigen::MatrixXcd::Ones(1, 1)};
    Rng rng(5);
    Eigen::VectorXcd x(4);
    x << cplx{1, 0}, cplx{0, 1}, cplx{-1, 0}, cplx{0.5, 0.5};
    const auto y = apply_selective(c, {x}, 0.0, rng);
    CHECK((y[0] - x).norm() == 0.0);
}

TEST_CASE("apply_selective convolves") {
    // h = [1, 0.5]: y[i] = x[i] + 0.5 x[i-1], truncated to the input length.
    SelectiveChannel c{1, 1, Eigen::MatrixXcd(1, 2)};
    c.taps(0, 0) = 1.0;
    c.taps(0, 1) = 0.5;
    Rng rng(5);
    Eigen::VectorXcd x(3);
    x << cplx{1, 0}, cplx{2, 0}, cplx{4, 0};
    const auto y = apply_selective(c, {x}, 0.0, rng);
    CHECK(std::abs(y[0](0) - cplx{1, 0}) < 1e-15);
    CHECK(std::abs(y[0](1) - cplx{2.5, 0}) < 1e-15);
    CHECK(std::abs(y[0](2) - cplx{5, 0}) < 1e-15);
}

TEST_CASE("noise spec bookkeeping") {
    const auto spec = NoiseSpec::from_snr_db(10.0, 1.0, 4.0);
    CHECK(spec.n0 == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(spec.ebn0_db == doctest::Approx(10.0 - 10.0 * std::log10(4.0)).epsilon(1e-12));
    CHECK_THROWS_AS(NoiseSpec::from_snr_db(0.0, -1.0, 1.0), std::invalid_argument);
}

TEST_CASE("dimension mismatches raise usage errors") {
    Rng rng(1);
    FlatChannel c{Eigen::MatrixXcd::Identity(2, 2)};
    CHECK_THROWS_AS(apply_flat(c, Eigen::VectorXcd::Zero(3), 0.1, rng), std::invalid_argument);
    SelectiveChannel s{2, 2, Eigen::MatrixXcd::Ones(4, 1)};
    CHECK_THROWS_AS(apply_selective(s, {Eigen::VectorXcd::Zero(4)}, 0.1, rng),
                    std::invalid_argument);
}

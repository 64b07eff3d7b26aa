#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "imphy/analysis.hpp"
#include "imphy/rng.hpp"

using namespace imphy;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

std::vector<SpatialCodeword> as_codebook(const std::vector<Eigen::VectorXcd>& vectors) {
    std::vector<SpatialCodeword> book;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        SpatialCodeword cw;
        cw.vector = vectors[i];
        cw.bits = bits_from_uint(i, 4);
        book.push_back(std::move(cw));
    }
    return book;
}
}  // namespace

TEST_CASE("two orthonormal codewords have squared distance 2") {
    Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(2), e2 = Eigen::VectorXcd::Zero(2);
    e1(0) = 1.0;
    e2(1) = 1.0;
    const auto report = compute_d_min("pair", as_codebook({e1, e2}));
    CHECK(report.d_min == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(report.arg_i == 0);
    CHECK(report.arg_j == 1);
}

TEST_CASE("SIMO 16-QAM reaches the brute-force 0.4") {
    const auto scheme = SpatialScheme::simo(make_qam(16));
    const auto report = compute_d_min("simo", enumerate_codebook(scheme));
    CHECK(report.d_min == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("ESM and QSM agree at 4 bpcu") {
    const auto esm = compute_d_min(
        "esm", enumerate_codebook(SpatialScheme::esm(esm_table_preset('a'))));
    const auto qsm = compute_d_min(
        "qsm", enumerate_codebook(SpatialScheme::qsm(2, make_psk(4, kPi / 4))));
    CHECK(std::abs(esm.d_min - qsm.d_min) < 1e-9);
}

TEST_CASE("d_min is invariant under codeword permutation and common rotation") {
    const auto scheme = SpatialScheme::qsm(2, make_psk(4, kPi / 4));
    auto book = enumerate_codebook(scheme);
    const double reference = compute_d_min("ref", book).d_min;

    std::reverse(book.begin(), book.end());
    CHECK(compute_d_min("perm", book).d_min == doctest::Approx(reference).epsilon(1e-12));

    // common unitary rotation (Householder-orthonormalized random matrix)
    Rng rng(99);
    Eigen::MatrixXcd a(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) a(i, j) = rng.cgaussian(1.0);
    const Eigen::MatrixXcd q = Eigen::HouseholderQR<Eigen::MatrixXcd>(a).householderQ();
    for (auto& cw : book) cw.vector = q * cw.vector;
    CHECK(compute_d_min("rot", book).d_min == doctest::Approx(reference).epsilon(1e-9));
}

TEST_CASE("d_min requires two codewords") {
    Eigen::VectorXcd e1 = Eigen::VectorXcd::Ones(1);
    CHECK_THROWS_AS(compute_d_min("tiny", as_codebook({e1})), std::invalid_argument);
}

TEST_CASE("complexity reduction formula") {
    CHECK(complexity_reduction_vs_vblast(1) == doctest::Approx(0.0));
    CHECK(complexity_reduction_vs_vblast(2) == doctest::Approx(40.0));
    CHECK(complexity_reduction_vs_vblast(4) == doctest::Approx(66.67).epsilon(0.0002));
    CHECK(complexity_reduction_vs_vblast(1024) > 99.8);
    CHECK_THROWS_AS(complexity_reduction_vs_vblast(0), std::invalid_argument);
}

TEST_CASE("instrumented search-space sizes") {
    const auto scheme = SpatialScheme::sm(2, make_psk(8, 0.0));
    const auto ml = count_real_multiplications(DetectorKind::JointMl, scheme, 2, 7);
    CHECK(ml.search_space == 16);  // n_t * M
    CHECK(ml.real_mults > 0);
    const auto two = count_real_multiplications(DetectorKind::TwoStage, scheme, 2, 7);
    CHECK(two.search_space == 10);  // n_t + M
    CHECK(two.real_mults < ml.real_mults);
}

TEST_CASE("ML multiplication count doubles when M doubles") {
    const auto m8 = count_real_multiplications(DetectorKind::JointMl,
                                               SpatialScheme::sm(2, make_psk(8, 0.0)), 2, 7);
    const auto m16 = count_real_multiplications(DetectorKind::JointMl,
                                                SpatialScheme::sm(2, make_qam(16)), 2, 7);
    CHECK(m16.real_mults == 2 * m8.real_mults);
}

TEST_CASE("fig2 preset shape and CSV emission") {
    const auto entries = fig2_preset();
    REQUIRE(entries.size() == 16);
    std::vector<DminReport> reports;
    for (const auto& e : entries)
        reports.push_back(compute_d_min(e.scheme.label(), enumerate_codebook(e.scheme)));
    std::ostringstream out;
    write_dmin_csv(out, reports);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "scheme,bpcu,n_T,d_min");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 16);
}

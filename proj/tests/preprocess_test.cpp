#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dsaflow/preprocess.hpp"
#include "test_util.hpp"

using namespace dsaflow;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = normal(rng);
    return m;
}

}  // namespace

TEST_CASE("vectorize: row-major flattening and shape") {
    ImageSeries s;
    Image f(2, 2);
    f.at(0, 0) = 0.1;
    f.at(0, 1) = 0.2;
    f.at(1, 0) = 0.3;
    f.at(1, 1) = 0.4;
    s.frames.push_back(f);

    const DataMatrix m = vectorize(s);
    CHECK(m.values.rows() == 1);
    CHECK(m.values.cols() == 4);
    CHECK(m.values(0, 0) == 0.1);
    CHECK(m.values(0, 1) == 0.2);
    CHECK(m.values(0, 2) == 0.3);
    CHECK(m.values(0, 3) == 0.4);

    const ImageSeries big = testutil::random_series(3, 128, 128, 1);
    const DataMatrix mb = vectorize(big);
    CHECK(mb.values.rows() == 3);
    CHECK(mb.values.cols() == 16384);
    CHECK(mb.frame_rows == 128);
    CHECK(mb.frame_cols == 128);
}

TEST_CASE("devectorize inverts vectorize bit-exactly") {
    const ImageSeries s = testutil::random_series(4, 9, 7, 2);
    const DataMatrix m = vectorize(s);
    for (int t = 0; t < 4; ++t) {
        const Image back = devectorize(m.values.row(t).transpose(), 9, 7);
        CHECK(testutil::max_abs_diff(back, s.frames[t]) == 0.0);
    }
}

TEST_CASE("devectorize: brute-force index oracle and errors") {
    Eigen::VectorXd row(6);
    row << 1, 2, 3, 4, 5, 6;
    const Image img = devectorize(row, 2, 3);
    // oracle: element k lands at (k / cols, k % cols)
    for (int k = 0; k < 6; ++k) CHECK(img.at(k / 3, k % 3) == row(k));

    CHECK_THROWS_AS(devectorize(row, 2, 2), std::invalid_argument);

    Eigen::VectorXd zeros = Eigen::VectorXd::Zero(4);
    const Image zimg = devectorize(zeros, 2, 2);
    for (double v : zimg.data) CHECK(v == 0.0);
}

TEST_CASE("center: removes per-pixel temporal mean") {
    SUBCASE("two identical rows vanish") {
        Eigen::MatrixXd m(2, 3);
        m << 1, 2, 3, 1, 2, 3;
        auto [centered, mean] = center(m);
        CHECK(centered.cwiseAbs().maxCoeff() == 0.0);
        CHECK(mean(1) == 2.0);
    }
    SUBCASE("rows 0 and 1 center to -0.5 / +0.5") {
        Eigen::MatrixXd m(2, 4);
        m.row(0).setZero();
        m.row(1).setOnes();
        auto [centered, mean] = center(m);
        CHECK(centered.row(0).isApproxToConstant(-0.5));
        CHECK(centered.row(1).isApproxToConstant(0.5));
        CHECK(mean.isApproxToConstant(0.5));
    }
    SUBCASE("random 5x10: column means below 1e-12") {
        const Eigen::MatrixXd m = random_matrix(5, 10, 3);
        auto [centered, mean] = center(m);
        CHECK(centered.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("single row rejected") {
        CHECK_THROWS_AS(center(Eigen::MatrixXd::Ones(1, 5)), std::invalid_argument);
    }
}

TEST_CASE("whiten: identity covariance, descending eigenvalues") {
    SUBCASE("already-white rows stay white at p=d") {
        // whiten consumes whatever matrix it is given; feed a full-rank
        // near-white matrix directly (centering first would project away one
        // temporal dimension and make p=d rank deficient by construction)
        Eigen::MatrixXd m = random_matrix(4, 5000, 4);
        auto [z, wt] = whiten(m, Eigen::VectorXd::Zero(5000), 4);
        const Eigen::MatrixXd cov = row_covariance(z);
        CHECK((cov - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("random full-rank 6x1000 at p=3 against explicit covariance oracle") {
        const Eigen::MatrixXd m = random_matrix(6, 1000, 5);
        auto [centered, mean] = center(m);
        auto [z, wt] = whiten(centered, mean, 3);
        CHECK(z.rows() == 3);
        CHECK(z.cols() == 1000);
        // oracle: explicit covariance of the output rows
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                double acc = 0.0;
                for (int i = 0; i < 1000; ++i) acc += z(a, i) * z(b, i);
                cov(a, b) = acc / 1000.0;
            }
        CHECK((cov - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-8);
        for (int i = 1; i < wt.eigenvalues.size(); ++i)
            CHECK(wt.eigenvalues(i) <= wt.eigenvalues(i - 1));
    }
    SUBCASE("rank-1 matrix with p=2 reports rank deficiency") {
        Eigen::MatrixXd m(3, 100);
        const Eigen::VectorXd base = random_matrix(1, 100, 6).row(0).transpose();
        m.row(0) = base.transpose();
        m.row(1) = 2.0 * base.transpose();
        m.row(2) = -base.transpose();
        auto [centered, mean] = center(m);
        CHECK_THROWS_WITH_AS(whiten(centered, mean, 2), doctest::Contains("rank deficiency"),
                             std::runtime_error);
    }
    SUBCASE("p out of range") {
        const Eigen::MatrixXd m = random_matrix(4, 100, 7);
        auto [centered, mean] = center(m);
        CHECK_THROWS_AS(whiten(centered, mean, 5), std::invalid_argument);
        CHECK_THROWS_AS(whiten(centered, mean, 0), std::invalid_argument);
    }
}

TEST_CASE("whiten: reconstruction through pinv(K) recovers the top-p projection") {
    const Eigen::MatrixXd m = random_matrix(8, 600, 8);
    auto [centered, mean] = center(m);
    auto [z, wt] = whiten(centered, mean, 5);

    // pinv(K) = K^T (K K^T)^{-1}
    const Eigen::MatrixXd k = wt.projection;
    const Eigen::MatrixXd pinv_k =
        k.transpose() * (k * k.transpose()).llt().solve(Eigen::MatrixXd::Identity(5, 5));
    const Eigen::MatrixXd reconstructed = pinv_k * z;

    // oracle: projection onto the top-5 eigenspace computed from scratch
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(row_covariance(centered));
    const Eigen::MatrixXd top = solver.eigenvectors().rightCols(5);
    const Eigen::MatrixXd projected = top * top.transpose() * centered;

    const double rel = (reconstructed - projected).norm() / projected.norm();
    CHECK(rel < 1e-6);
}

TEST_CASE("whitening identity holds across random sizes") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const int d = 4 + static_cast<int>(rng() % 35);
        const int p = 1 + static_cast<int>(rng() % d);
        const Eigen::MatrixXd m = random_matrix(d, 2048, 1000 + trial);
        auto [z, wt] = whiten(m, Eigen::VectorXd::Zero(2048), p);
        CHECK((row_covariance(z) - Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff() <=
              1e-8);
    }
}

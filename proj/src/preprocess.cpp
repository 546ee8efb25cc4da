#include "dsaflow/preprocess.hpp"

#include <stdexcept>
#include <string>

namespace dsaflow {

DataMatrix vectorize(const ImageSeries& series) {
    if (series.frames.empty()) throw std::invalid_argument("vectorize: empty series");
    const int d = series.frame_count();
    const int h = series.height(), w = series.width();
    const Eigen::Index n = static_cast<Eigen::Index>(h) * w;
    DataMatrix out;
    out.values.resize(d, n);
    out.frame_rows = h;
    out.frame_cols = w;
    for (int r = 0; r < d; ++r)
        for (Eigen::Index i = 0; i < n; ++i) out.values(r, i) = series.frames[r].data[i];
    return out;
}

Image devectorize(const Eigen::VectorXd& row, int rows, int cols) {
    if (row.size() != static_cast<Eigen::Index>(rows) * cols)
        throw std::invalid_argument("devectorize: length " + std::to_string(row.size()) +
                                    " != " + std::to_string(rows) + "x" + std::to_string(cols));
    Image img(rows, cols);
    for (Eigen::Index i = 0; i < row.size(); ++i) img.data[i] = row(i);
    return img;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> center(const Eigen::MatrixXd& matrix) {
    if (matrix.rows() < 2) throw std::invalid_argument("center: need at least 2 rows");
    Eigen::VectorXd mean = matrix.colwise().mean();
    Eigen::MatrixXd centered = matrix.rowwise() - mean.transpose();
    return {std::move(centered), std::move(mean)};
}

Eigen::MatrixXd row_covariance(const Eigen::MatrixXd& m) {
    return m * m.transpose() / static_cast<double>(m.cols());
}

std::pair<Eigen::MatrixXd, WhiteningTransform> whiten(const Eigen::MatrixXd& centered,
                                                      const Eigen::VectorXd& mean, int p) {
    const Eigen::Index d = centered.rows();
    if (d < 2) throw std::invalid_argument("whiten: need at least 2 rows");
    if (p < 1 || p > d)
        throw std::invalid_argument("whiten: component count " + std::to_string(p) +
                                    " exceeds frame count " + std::to_string(d));
    if (!centered.allFinite()) throw std::invalid_argument("whiten: non-finite values");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(row_covariance(centered));
    if (solver.info() != Eigen::Success) throw std::runtime_error("whiten: eigensolver failed");

    // Eigen returns ascending order; flip to descending.
    Eigen::VectorXd lambda = solver.eigenvalues().reverse();
    Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();

    // Canonical eigenvector orientation: largest-|entry| coefficient positive.
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        Eigen::Index imax = 0;
        vectors.col(j).cwiseAbs().maxCoeff(&imax);
        if (vectors(imax, j) < 0.0) vectors.col(j) = -vectors.col(j);
    }

    const double floor = kRankEpsilon * std::max(lambda(0), 0.0);
    if (!(lambda(0) > 0.0) || lambda(p - 1) <= floor)
        throw std::runtime_error("whiten: rank deficiency, eigenvalue " +
                                 std::to_string(lambda(p - 1)) + " below threshold for p=" +
                                 std::to_string(p));

    WhiteningTransform wt;
    wt.mean = mean;
    wt.eigenvalues = lambda;
    wt.projection = lambda.head(p).cwiseSqrt().cwiseInverse().asDiagonal() *
                    vectors.leftCols(p).transpose();
    Eigen::MatrixXd whitened = wt.projection * centered;
    return {std::move(whitened), std::move(wt)};
}

}  // namespace dsaflow

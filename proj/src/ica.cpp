#include "dsaflow/ica.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace dsaflow {

std::string to_string(Contrast c) {
    switch (c) {
        case Contrast::LogCosh: return "logcosh";
        case Contrast::Exp: return "exp";
        case Contrast::Cube: return "cube";
    }
    return "logcosh";
}

Contrast contrast_from_string(const std::string& s) {
    if (s == "logcosh") return Contrast::LogCosh;
    if (s == "exp") return Contrast::Exp;
    if (s == "cube") return Contrast::Cube;
    throw std::invalid_argument("unknown contrast '" + s + "' (expected logcosh|exp|cube)");
}

void IcaConfig::validate() const {
    if (components < 2) throw std::invalid_argument("IcaConfig: components must be >= 2");
    if (!(tol > 0.0)) throw std::invalid_argument("IcaConfig: tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("IcaConfig: max_iter must be >= 1");
    if (restarts < 1) throw std::invalid_argument("IcaConfig: restarts must be >= 1");
}

std::pair<Eigen::ArrayXd, Eigen::ArrayXd> contrast_eval(Contrast c, const Eigen::ArrayXd& u) {
    switch (c) {
        case Contrast::LogCosh: {
            Eigen::ArrayXd g = u.tanh();
            return {g, 1.0 - g.square()};
        }
        case Contrast::Exp: {
            Eigen::ArrayXd e = (-u.square() / 2.0).exp();
            return {u * e, (1.0 - u.square()) * e};
        }
        case Contrast::Cube:
            return {u.cube(), 3.0 * u.square()};
    }
    throw std::invalid_argument("contrast_eval: unknown contrast");
}

namespace {

// Matrix kernels of the per-contrast nonlinearity; same formulas as
// contrast_eval but evaluated in place on the projection matrix.
void apply_contrast(Contrast c, const Eigen::MatrixXd& u, Eigen::MatrixXd& g,
                    Eigen::MatrixXd& gp) {
    switch (c) {
        case Contrast::LogCosh:
            g = u.array().tanh();
            gp = 1.0 - g.array().square();
            return;
        case Contrast::Exp: {
            Eigen::ArrayXXd e = (-u.array().square() / 2.0).exp();
            g = u.array() * e;
            gp = (1.0 - u.array().square()) * e;
            return;
        }
        case Contrast::Cube:
            g = u.array().cube();
            gp = 3.0 * u.array().square();
            return;
    }
}

// Gaussian expectation of the antiderivative G, used by the negentropy
// proxy J(w) = (E[G(w'z)] - E[G(nu)])^2 that ranks restarts.
double gauss_expectation(Contrast c) {
    switch (c) {
        case Contrast::LogCosh: return 0.374567207491438;  // E[log cosh(nu)]
        case Contrast::Exp: return -1.0 / std::sqrt(2.0);  // E[-exp(-nu^2/2)]
        case Contrast::Cube: return 0.75;                  // E[nu^4] / 4
    }
    return 0.0;
}

double negentropy_objective(Contrast c, const Eigen::MatrixXd& w, const Eigen::MatrixXd& z) {
    const Eigen::MatrixXd u = w * z;
    Eigen::ArrayXd eg;
    switch (c) {
        case Contrast::LogCosh:
            // log cosh u = |u| + log1p(e^{-2|u|}) - log 2, stable for large |u|
            eg = (u.array().abs() + (-2.0 * u.array().abs()).exp().log1p() - M_LN2)
                     .rowwise()
                     .mean();
            break;
        case Contrast::Exp:
            eg = (-(-u.array().square() / 2.0).exp()).rowwise().mean();
            break;
        case Contrast::Cube:
            eg = (u.array().pow(4) / 4.0).rowwise().mean();
            break;
    }
    return (eg - gauss_expectation(c)).square().sum();
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Eigen::MatrixXd random_normal(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = normal(rng);
    return m;
}

struct SingleRun {
    Eigen::MatrixXd w;
    int iterations = 0;
    bool converged = false;
    double final_delta = std::numeric_limits<double>::infinity();
};

SingleRun run_symmetric(const Eigen::MatrixXd& z, const IcaConfig& config, std::uint64_t seed) {
    const int p = config.components;
    const double n = static_cast<double>(z.cols());
    SingleRun run;
    run.w = symmetric_decorrelate(random_normal(p, p, seed));

    Eigen::MatrixXd g, gp;
    for (int it = 1; it <= config.max_iter; ++it) {
        const Eigen::MatrixXd u = run.w * z;
        apply_contrast(config.contrast, u, g, gp);
        Eigen::MatrixXd w_next =
            g * z.transpose() / n - gp.rowwise().mean().asDiagonal() * run.w;
        w_next = symmetric_decorrelate(w_next);
        const double delta =
            (1.0 - (w_next.array() * run.w.array()).rowwise().sum().abs()).abs().maxCoeff();
        if (!w_next.allFinite() || !std::isfinite(delta))
            throw std::runtime_error("fastica: non-finite values encountered");
        run.w = w_next;
        run.iterations = it;
        run.final_delta = delta;
        if (config.iteration_hook) config.iteration_hook(it, run.w, delta);
        if (delta < config.tol) {
            run.converged = true;
            break;
        }
    }
    return run;
}

SingleRun run_deflation(const Eigen::MatrixXd& z, const IcaConfig& config, std::uint64_t seed) {
    const int p = config.components;
    const double n = static_cast<double>(z.cols());
    const Eigen::MatrixXd init = random_normal(p, p, seed);

    SingleRun run;
    run.w = Eigen::MatrixXd::Zero(p, p);
    run.converged = true;
    run.final_delta = 0.0;

    for (int i = 0; i < p; ++i) {
        Eigen::VectorXd w = init.row(i).transpose();
        // project out previously found rows, then normalize
        for (int j = 0; j < i; ++j) w -= run.w.row(j).dot(w) * run.w.row(j).transpose();
        w.normalize();

        double delta = std::numeric_limits<double>::infinity();
        int it = 0;
        for (it = 1; it <= config.max_iter; ++it) {
            const Eigen::ArrayXd u = (w.transpose() * z).transpose().array();
            auto [g, gp] = contrast_eval(config.contrast, u);
            Eigen::VectorXd w_next = z * g.matrix() / n - gp.mean() * w;
            for (int j = 0; j < i; ++j)
                w_next -= run.w.row(j).dot(w_next) * run.w.row(j).transpose();
            const double norm = w_next.norm();
            if (!(norm > 0.0) || !w_next.allFinite())
                throw std::runtime_error("fastica: degenerate deflation step");
            w_next /= norm;
            delta = std::abs(1.0 - std::abs(w_next.dot(w)));
            w = w_next;
            if (delta < config.tol) break;
        }
        run.w.row(i) = w.transpose();
        run.iterations = std::max(run.iterations, std::min(it, config.max_iter));
        run.final_delta = std::max(run.final_delta, delta);
        if (!(delta < config.tol)) run.converged = false;
    }
    return run;
}

}  // namespace

Eigen::MatrixXd symmetric_decorrelate(const Eigen::MatrixXd& w) {
    if (w.rows() != w.cols()) throw std::invalid_argument("symmetric_decorrelate: W not square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(w * w.transpose());
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("symmetric_decorrelate: eigensolver failed");
    const Eigen::VectorXd lambda = solver.eigenvalues();
    if (lambda.minCoeff() <= 0.0)
        throw std::runtime_error("symmetric_decorrelate: singular W W^T");
    return solver.eigenvectors() * lambda.cwiseSqrt().cwiseInverse().asDiagonal() *
           solver.eigenvectors().transpose() * w;
}

SourceSet build_source_set(const Eigen::MatrixXd& w, const WhiteningTransform& whitening,
                           const Eigen::MatrixXd& whitened, int frame_rows, int frame_cols) {
    const int p = static_cast<int>(w.rows());
    const double n = static_cast<double>(whitened.cols());
    Eigen::MatrixXd raw = w * whitened;  // p x n, unit second moment rows

    // pinv(W K) = K^T (K K^T)^{-1} W^T; exact because W K has full row rank.
    const Eigen::MatrixXd& k = whitening.projection;
    const Eigen::MatrixXd kkt = k * k.transpose();
    Eigen::MatrixXd mixing =
        k.transpose() * kkt.llt().solve(Eigen::MatrixXd::Identity(p, p)) * w.transpose();

    SourceSet set;
    set.mixing = std::move(mixing);
    set.sources.reserve(p);
    for (int j = 0; j < p; ++j) {
        const double m = raw.row(j).mean();
        const double var = raw.row(j).squaredNorm() / n - m * m;
        if (!(var > 0.0)) throw std::runtime_error("fastica: degenerate source " + std::to_string(j));
        const double sigma = std::sqrt(var);
        Eigen::VectorXd s = raw.row(j).transpose() / sigma;
        set.mixing.col(j) *= sigma;

        const double sm = m / sigma;
        const double skew = ((s.array() - sm).cube()).mean();
        if (skew < 0.0) {
            s = -s;
            set.mixing.col(j) = -set.mixing.col(j);
        }
        set.sources.push_back(devectorize(s, frame_rows, frame_cols));
    }
    return set;
}

std::pair<UnmixingModel, SourceSet> fastica(const Eigen::MatrixXd& whitened,
                                            const WhiteningTransform& whitening,
                                            int frame_rows, int frame_cols,
                                            const IcaConfig& config) {
    config.validate();
    const int p = config.components;
    if (whitened.rows() != p)
        throw std::invalid_argument("fastica: component count " + std::to_string(p) +
                                    " exceeds whitened rank " + std::to_string(whitened.rows()));
    if (static_cast<Eigen::Index>(frame_rows) * frame_cols != whitened.cols())
        throw std::invalid_argument("fastica: frame shape does not match pixel count");
    if (!whitened.allFinite())
        throw std::runtime_error("fastica: non-finite values encountered");

    SingleRun best;
    double best_objective = 0.0;
    int best_restart = 0;
    for (int r = 0; r < config.restarts; ++r) {
        const std::uint64_t seed = splitmix64(config.seed + static_cast<std::uint64_t>(r));
        SingleRun run = config.scheme == IcaScheme::Symmetric
                            ? run_symmetric(whitened, config, seed)
                            : run_deflation(whitened, config, seed);
        const double objective = negentropy_objective(config.contrast, run.w, whitened);
        // converged runs outrank stalled ones, then the larger objective wins
        const bool better = r == 0 || (run.converged && !best.converged) ||
                            (run.converged == best.converged && objective > best_objective);
        if (better) {
            best = std::move(run);
            best_objective = objective;
            best_restart = r;
        }
    }

    UnmixingModel model;
    model.W = best.w;
    model.whitening = whitening;
    model.contrast = config.contrast;
    model.iterations_run = best.iterations;
    model.converged = best.converged;
    model.final_delta = best.final_delta;
    model.selected_restart = best_restart;

    SourceSet set = build_source_set(model.W, whitening, whitened, frame_rows, frame_cols);
    return {std::move(model), std::move(set)};
}

double amari_index(const Eigen::MatrixXd& a_est, const Eigen::MatrixXd& a_true) {
    if (a_est.rows() != a_true.rows() || a_est.cols() != a_true.cols())
        throw std::invalid_argument("amari_index: shape mismatch");
    const int p = static_cast<int>(a_est.cols());
    if (p < 2) throw std::invalid_argument("amari_index: need at least 2 columns");

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_est(a_est);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_true(a_true);
    if (cod_est.rank() < p || cod_true.rank() < p)
        throw std::invalid_argument("amari_index: rank-deficient mixing matrix");

    const Eigen::MatrixXd perm = (cod_est.pseudoInverse() * a_true).cwiseAbs();
    double total = 0.0;
    for (int i = 0; i < p; ++i)
        total += perm.row(i).sum() / perm.row(i).maxCoeff() - 1.0;
    for (int j = 0; j < p; ++j)
        total += perm.col(j).sum() / perm.col(j).maxCoeff() - 1.0;
    return total / (2.0 * p * (p - 1));
}

}  // namespace dsaflow

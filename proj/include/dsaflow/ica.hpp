#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "dsaflow/image.hpp"
#include "dsaflow/preprocess.hpp"

namespace dsaflow {

enum class Contrast { LogCosh, Exp, Cube };

std::string to_string(Contrast c);
Contrast contrast_from_string(const std::string& s);

enum class IcaScheme { Symmetric, Deflation };

struct IcaConfig {
    int components = 3;
    Contrast contrast = Contrast::LogCosh;
    double tol = 1e-4;
    int max_iter = 200;
    std::uint64_t seed = 0;
    IcaScheme scheme = IcaScheme::Symmetric;

    /// Independent seeded initializations; the run with the highest
    /// negentropy objective wins. Guards against saddle stalls of the
    /// fixed-point iteration on short series.
    int restarts = 6;

    /// Test/debug observer, called after every outer iteration of the
    /// symmetric scheme with (iteration, W, delta).
    std::function<void(int, const Eigen::MatrixXd&, double)> iteration_hook;

    void validate() const;
};

/// g = W o K o center: the estimated unmixing on whitened coordinates.
struct UnmixingModel {
    Eigen::MatrixXd W;  // p x p, orthonormal rows
    WhiteningTransform whitening;
    Contrast contrast = Contrast::LogCosh;
    int iterations_run = 0;
    bool converged = false;
    double final_delta = 0.0;
    int selected_restart = 0;
};

/// Recovered source images plus the estimated mixing matrix. Each source
/// is scaled to unit pixel variance and sign-fixed to nonnegative skewness;
/// mixing column j is the temporal signature of source j, scaled so that
/// mixing * vectorized-sources reproduces the whitened-subspace projection.
struct SourceSet {
    std::vector<Image> sources;
    Eigen::MatrixXd mixing;  // d x p
};

/// Elementwise contrast nonlinearity and its derivative.
/// logcosh: g=tanh(u); exp: g=u*exp(-u^2/2); cube: g=u^3.
std::pair<Eigen::ArrayXd, Eigen::ArrayXd> contrast_eval(Contrast c, const Eigen::ArrayXd& u);

/// W' = (W W^T)^{-1/2} W via eigendecomposition of W W^T.
Eigen::MatrixXd symmetric_decorrelate(const Eigen::MatrixXd& W);

/// Fixed-point ICA on whitened data (rows = components, cols = pixels).
/// frame_rows x frame_cols gives the back-projection shape for sources.
std::pair<UnmixingModel, SourceSet> fastica(const Eigen::MatrixXd& whitened,
                                            const WhiteningTransform& whitening,
                                            int frame_rows, int frame_cols,
                                            const IcaConfig& config);

/// Deterministic reconstruction of the SourceSet from a stored model;
/// shared by fastica and the model-reload path so both produce
/// bit-identical sources.
SourceSet build_source_set(const Eigen::MatrixXd& W, const WhiteningTransform& whitening,
                           const Eigen::MatrixXd& whitened, int frame_rows, int frame_cols);

/// Normalized Amari error of P = pinv(A_est) * A_true, rescaled to [0,1].
/// Zero iff A_est equals A_true up to column permutation and nonzero scaling.
double amari_index(const Eigen::MatrixXd& a_est, const Eigen::MatrixXd& a_true);

}  // namespace dsaflow

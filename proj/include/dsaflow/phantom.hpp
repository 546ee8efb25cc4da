#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "dsaflow/imageio.hpp"
#include "dsaflow/recompose.hpp"
#include "dsaflow/segment.hpp"

namespace dsaflow {

enum class PhaseGeometry { CurveArtery, BlobNidus, CurveVein };

std::string to_string(PhaseGeometry g);

struct BolusParams {
    double t0 = 0.0;        // onset, frames
    double alpha = 2.0;     // shape
    double beta = 1.5;      // scale, frames
    double amplitude = 0.6; // peak value
};

struct PhantomPhase {
    PhaseGeometry geometry = PhaseGeometry::CurveArtery;
    BolusParams bolus;
};

struct PhantomSpec {
    int height = 128;
    int width = 128;
    int frames = 24;
    double fps = 3.0;
    std::vector<PhantomPhase> phases;
    double noise_sigma = 0.01;
    std::uint64_t seed = 42;

    /// Three-phase spec with onsets 2/6/10 frames, alpha=2, beta=1.5.
    static PhantomSpec defaults(std::uint64_t seed = 42);

    void validate() const;
};

/// Ground truth of a generated series: the series equals
/// mixing * vectorized(sources) + noise by construction.
struct PhantomTruth {
    std::vector<Image> sources;      // binary phase geometries
    Eigen::MatrixXd mixing;          // d x p sampled bolus curves
    VesselMask vessel_mask;          // union of the geometries
    std::vector<Phase> phase_order;  // ground-truth label per component
};

/// Peak-normalized bolus curve: 0 for t <= t0, then
/// amplitude * ((t-t0)/(alpha*beta))^alpha * exp(alpha - (t-t0)/beta),
/// maximum = amplitude at t = t0 + alpha*beta.
double gamma_variate(double t, double t0, double alpha, double beta, double amplitude);

/// Deterministic binary geometry for one phase: arterial tube entering at
/// the left border, irregular nidus blob near center, venous tube exiting
/// the top border. Tube widths span 3-5 px.
Image render_geometry(PhaseGeometry kind, int h, int w, std::uint64_t seed);

std::pair<ImageSeries, PhantomTruth> generate_phantom(const PhantomSpec& spec);

}  // namespace dsaflow

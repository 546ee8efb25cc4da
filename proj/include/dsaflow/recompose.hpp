#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dsaflow/ica.hpp"
#include "dsaflow/segment.hpp"

namespace dsaflow {

enum class Phase : std::uint8_t { Arterial, Nidal, Venous, Unassigned };

std::string to_string(Phase p);

/// Intensity-versus-frame profile, min-max normalized to [0,1].
struct TimeDensityCurve {
    std::vector<double> samples;
    double fps = 0.0;
    double miv = 0.0;      // max of the normalized samples
    int ttp_frames = 0;    // argmax, ties toward the earliest frame
    double ttp_seconds = 0.0;
};

/// Component -> phase labeling derived from temporal peaks.
struct PhaseAssignment {
    std::vector<Phase> labels;       // per component
    std::vector<int> peak_frames;    // per component
    std::vector<int> order;          // component indices sorted by peak time
};

/// Per-pixel phase labels; Unassigned renders as grayscale.
struct LabelImage {
    int rows = 0;
    int cols = 0;
    std::vector<Phase> labels;

    LabelImage() = default;
    LabelImage(int r, int c)
        : rows(r), cols(c), labels(static_cast<std::size_t>(r) * c, Phase::Unassigned) {}
    Phase at(int r, int c) const { return labels[static_cast<std::size_t>(r) * cols + c]; }
};

enum class VisMode { Static, Progressive };

VisMode vis_mode_from_string(const std::string& s);

struct Visualization {
    std::vector<RgbImage> frames;
};

/// Normalizes a mixing column to [0,1] (constant columns map to zeros) and
/// reads off peak value and time-to-peak.
TimeDensityCurve component_tdc(const Eigen::VectorXd& column, double fps);

/// Orders components by time-to-peak of their mixing columns; earliest is
/// Arterial, the middle one Nidal (p=3 only), the latest Venous. Ties break
/// by larger raw peak value, then lower component index.
PhaseAssignment order_phases(const SourceSet& set, double fps);

/// Per-component binary masks of the sign-fixed sources. Sources are
/// min-max rescaled before thresholding so the otsu split is invariant to
/// their affine range.
std::vector<BinarizeResult> threshold_sources(const SourceSet& set, const BinarizeMethod& method);

/// Inside the vessel mask, each pixel takes the phase of the thresholded
/// source that claims it; conflicts go to the component with the largest
/// source value (exact ties to the earlier phase). Unclaimed in-mask pixels
/// stay Unassigned.
LabelImage assign_pixels(const std::vector<BinarizeResult>& source_masks, const SourceSet& set,
                         const PhaseAssignment& assignment, const VesselMask& vessel_mask);

/// Color-coded output frames: Arterial red, Nidal green, Venous blue over
/// the original grayscale. Progressive mode activates a labeled pixel in
/// frame t once its signal-positive intensity exceeds tau times its
/// temporal maximum; static mode keeps labels on in every frame. Colored
/// pixels blend (1-blend)*gray + blend*color.
Visualization compose_visualization(const ImageSeries& series, const LabelImage& labels,
                                    VisMode mode, double tau = 0.2, double blend = 0.6);

}  // namespace dsaflow

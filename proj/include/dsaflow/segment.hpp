#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dsaflow/image.hpp"
#include "dsaflow/imageio.hpp"

namespace dsaflow {

/// Per-pixel vessel evidence in [0,1].
using ProbabilityMap = Image;

enum class MaskSource { Vesselness, External };

struct VesselMask {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> values;
    MaskSource source = MaskSource::Vesselness;

    VesselMask() = default;
    VesselMask(int r, int c, MaskSource s = MaskSource::Vesselness)
        : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, 0), source(s) {}

    bool at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c] != 0; }
    void set(int r, int c, bool v) {
        values[static_cast<std::size_t>(r) * cols + c] = v ? 1 : 0;
    }
    std::size_t count() const;
    Image to_image() const;
};

struct Patch {
    Image pixels;
    int frame = 0;
    int row = 0;
    int col = 0;
    double entropy = 0.0;
};

struct MaskMetrics {
    double dice = 0.0;
    double recall = 0.0;
    double precision = 0.0;
};

struct BinarizeMethod {
    enum class Kind { Otsu, Quantile };
    Kind kind = Kind::Otsu;
    double q = 0.9;  // quantile only

    static BinarizeMethod otsu() { return {Kind::Otsu, 0.0}; }
    static BinarizeMethod quantile(double q) { return {Kind::Quantile, q}; }
};

BinarizeMethod binarize_method_from_string(const std::string& s);
std::string to_string(const BinarizeMethod& m);

struct BinarizeResult {
    VesselMask mask;
    double threshold = 0.0;
    bool degenerate = false;  // constant map under otsu: empty mask, warning
};

/// Multiscale Hessian tubularness of a signal-positive (vessels bright)
/// frame. For each scale: sigma^2-normalized Gaussian Hessian, eigenvalues
/// |l1| <= |l2|, blobness R = l1/l2, structure energy S = sqrt(l1^2+l2^2),
/// response exp(-R^2/2b^2) * (1-exp(-S^2/2g^2)) with b = 0.5 and g = half
/// the max S at that scale, zeroed where l2 > 0. Max over scales, then
/// rescaled to [0,1].
ProbabilityMap vesselness(const Image& frame, const std::vector<double>& scales);

/// Threshold a probability map. Otsu maximizes between-class variance over
/// a 256-bin histogram; quantile thresholds at the q-th intensity quantile.
BinarizeResult binarize(const ProbabilityMap& map, const BinarizeMethod& method);

/// Pixel-wise OR of same-shaped masks.
VesselMask temporal_union(const std::vector<VesselMask>& masks);

/// Single-channel image file; nonzero = vessel. Must match (rows, cols).
VesselMask load_external_mask(const std::filesystem::path& path, int rows, int cols);

/// Shannon entropy (bits) of the 64-bin intensity histogram over [0,1].
double range_entropy(const Image& patch);

/// Sliding-window patches with entropy >= min_entropy, sorted by
/// descending entropy (stable on ties by frame, row, col).
std::vector<Patch> extract_patches(const ImageSeries& series, int size, int stride,
                                   double min_entropy);

/// dice = 2|P&T| / (|P|+|T|), recall = |P&T|/|T|, precision = |P&T|/|P|;
/// empty-vs-empty conventions resolve 0/0 to 1.
MaskMetrics mask_metrics(const VesselMask& pred, const VesselMask& truth);

}  // namespace dsaflow

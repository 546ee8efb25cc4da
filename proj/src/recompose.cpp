#include "dsaflow/recompose.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dsaflow {

std::string to_string(Phase p) {
    switch (p) {
        case Phase::Arterial: return "arterial";
        case Phase::Nidal: return "nidal";
        case Phase::Venous: return "venous";
        case Phase::Unassigned: return "unassigned";
    }
    return "unassigned";
}

VisMode vis_mode_from_string(const std::string& s) {
    if (s == "static") return VisMode::Static;
    if (s == "progressive") return VisMode::Progressive;
    throw std::invalid_argument("unknown mode '" + s + "' (static|progressive)");
}

TimeDensityCurve component_tdc(const Eigen::VectorXd& column, double fps) {
    if (column.size() < 1) throw std::invalid_argument("component_tdc: empty column");
    if (!(fps > 0.0)) throw std::invalid_argument("component_tdc: fps must be positive");

    TimeDensityCurve tdc;
    tdc.fps = fps;
    const double lo = column.minCoeff();
    const double hi = column.maxCoeff();
    const double range = hi - lo;
    tdc.samples.resize(column.size());
    for (Eigen::Index i = 0; i < column.size(); ++i)
        tdc.samples[i] = range > 0.0 ? (column(i) - lo) / range : 0.0;

    int best = 0;
    for (std::size_t i = 1; i < tdc.samples.size(); ++i)
        if (tdc.samples[i] > tdc.samples[best]) best = static_cast<int>(i);  // earliest tie wins
    tdc.ttp_frames = best;
    tdc.miv = tdc.samples[best];
    tdc.ttp_seconds = best / fps;
    return tdc;
}

PhaseAssignment order_phases(const SourceSet& set, double fps) {
    const int p = static_cast<int>(set.sources.size());
    if (p != 2 && p != 3)
        throw std::invalid_argument("order_phases: supported component counts are 2 and 3, got " +
                                    std::to_string(p));
    if (set.mixing.cols() != p) throw std::invalid_argument("order_phases: mixing matrix missing");

    PhaseAssignment out;
    out.peak_frames.resize(p);
    std::vector<double> raw_peak(p);
    for (int j = 0; j < p; ++j) {
        out.peak_frames[j] = component_tdc(set.mixing.col(j), fps).ttp_frames;
        raw_peak[j] = set.mixing.col(j).maxCoeff();
    }

    out.order.resize(p);
    std::iota(out.order.begin(), out.order.end(), 0);
    std::sort(out.order.begin(), out.order.end(), [&](int a, int b) {
        if (out.peak_frames[a] != out.peak_frames[b])
            return out.peak_frames[a] < out.peak_frames[b];
        if (raw_peak[a] != raw_peak[b]) return raw_peak[a] > raw_peak[b];
        return a < b;
    });

    out.labels.assign(p, Phase::Unassigned);
    out.labels[out.order.front()] = Phase::Arterial;
    out.labels[out.order.back()] = Phase::Venous;
    if (p == 3) out.labels[out.order[1]] = Phase::Nidal;
    return out;
}

std::vector<BinarizeResult> threshold_sources(const SourceSet& set, const BinarizeMethod& method) {
    std::vector<BinarizeResult> out;
    out.reserve(set.sources.size());
    for (const Image& src : set.sources) {
        ProbabilityMap map(src.rows, src.cols);
        const double lo = *std::min_element(src.data.begin(), src.data.end());
        const double hi = *std::max_element(src.data.begin(), src.data.end());
        const double range = hi - lo;
        if (range > 0.0)
            for (std::size_t i = 0; i < src.size(); ++i) map.data[i] = (src.data[i] - lo) / range;
        out.push_back(binarize(map, method));
    }
    return out;
}

LabelImage assign_pixels(const std::vector<BinarizeResult>& source_masks, const SourceSet& set,
                         const PhaseAssignment& assignment, const VesselMask& vessel_mask) {
    const int p = static_cast<int>(set.sources.size());
    if (static_cast<int>(source_masks.size()) != p ||
        static_cast<int>(assignment.labels.size()) != p)
        throw std::invalid_argument("assign_pixels: component count mismatch");
    for (const BinarizeResult& r : source_masks)
        if (r.mask.rows != vessel_mask.rows || r.mask.cols != vessel_mask.cols)
            throw std::invalid_argument("assign_pixels: dimension mismatch");
    for (const Image& s : set.sources)
        if (s.rows != vessel_mask.rows || s.cols != vessel_mask.cols)
            throw std::invalid_argument("assign_pixels: dimension mismatch");

    LabelImage out(vessel_mask.rows, vessel_mask.cols);
    for (std::size_t i = 0; i < out.labels.size(); ++i) {
        if (!vessel_mask.values[i]) continue;
        int chosen = -1;
        for (int j = 0; j < p; ++j) {
            if (!source_masks[j].mask.values[i]) continue;
            if (chosen < 0) {
                chosen = j;
                continue;
            }
            const double vj = set.sources[j].data[i], vc = set.sources[chosen].data[i];
            // largest source value wins; exact ties to the earlier phase so the
            // result is invariant under component permutation
            if (vj > vc ||
                (vj == vc && static_cast<int>(assignment.labels[j]) <
                                 static_cast<int>(assignment.labels[chosen])))
                chosen = j;
        }
        if (chosen >= 0) out.labels[i] = assignment.labels[chosen];
    }
    return out;
}

namespace {
constexpr double kPalette[3][3] = {
    {1.0, 0.0, 0.0},  // arterial
    {0.0, 1.0, 0.0},  // nidal
    {0.0, 0.0, 1.0},  // venous
};
}

Visualization compose_visualization(const ImageSeries& series, const LabelImage& labels,
                                    VisMode mode, double tau, double blend) {
    if (series.frames.empty()) throw std::invalid_argument("compose_visualization: empty series");
    if (labels.rows != series.height() || labels.cols != series.width())
        throw std::invalid_argument("compose_visualization: dimension mismatch");
    if (!(tau >= 0.0) || !(blend >= 0.0 && blend <= 1.0))
        throw std::invalid_argument("compose_visualization: bad tau/blend");

    const bool dark = series.polarity == ContrastPolarity::DarkContrast;
    const std::size_t n = series.frames.front().size();

    std::vector<double> temporal_max(n, 0.0);
    if (mode == VisMode::Progressive) {
        for (const Image& f : series.frames)
            for (std::size_t i = 0; i < n; ++i) {
                const double signal = dark ? 1.0 - f.data[i] : f.data[i];
                temporal_max[i] = std::max(temporal_max[i], signal);
            }
    }

    Visualization vis;
    vis.frames.reserve(series.frames.size());
    for (const Image& f : series.frames) {
        RgbImage rgb(f.rows, f.cols);
        for (std::size_t i = 0; i < n; ++i) {
            const double gray = f.data[i];
            const Phase phase = labels.labels[i];
            bool active = phase != Phase::Unassigned;
            if (active && mode == VisMode::Progressive) {
                const double signal = dark ? 1.0 - gray : gray;
                active = signal > tau * temporal_max[i] && temporal_max[i] > 0.0;
            }
            if (active) {
                const double* color = kPalette[static_cast<int>(phase)];
                for (int ch = 0; ch < 3; ++ch)
                    rgb.data[i * 3 + ch] = (1.0 - blend) * gray + blend * color[ch];
            } else {
                for (int ch = 0; ch < 3; ++ch) rgb.data[i * 3 + ch] = gray;
            }
        }
        vis.frames.push_back(std::move(rgb));
    }
    return vis;
}

}  // namespace dsaflow

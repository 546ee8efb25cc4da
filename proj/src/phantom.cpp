#include "dsaflow/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace dsaflow {

std::string to_string(PhaseGeometry g) {
    switch (g) {
        case PhaseGeometry::CurveArtery: return "curve_artery";
        case PhaseGeometry::BlobNidus: return "blob_nidus";
        case PhaseGeometry::CurveVein: return "curve_vein";
    }
    return "curve_artery";
}

PhantomSpec PhantomSpec::defaults(std::uint64_t seed) {
    PhantomSpec spec;
    spec.seed = seed;
    spec.phases = {
        {PhaseGeometry::CurveArtery, {2.0, 2.0, 1.5, 0.65}},
        {PhaseGeometry::BlobNidus, {6.0, 2.0, 1.5, 0.60}},
        {PhaseGeometry::CurveVein, {10.0, 2.0, 1.5, 0.65}},
    };
    return spec;
}

void PhantomSpec::validate() const {
    if (height < 16 || width < 16) throw std::invalid_argument("PhantomSpec: frame too small");
    const int p = static_cast<int>(phases.size());
    if (p < 2 || p > 3) throw std::invalid_argument("PhantomSpec: need 2 or 3 phases");
    if (frames < 2 * p)
        throw std::invalid_argument("PhantomSpec: frames must be >= 2 * phase count");
    if (!(fps > 0.0)) throw std::invalid_argument("PhantomSpec: fps must be positive");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("PhantomSpec: negative noise");
    for (int j = 0; j < p; ++j) {
        const BolusParams& b = phases[j].bolus;
        if (!(b.alpha > 0.0) || !(b.beta > 0.0))
            throw std::invalid_argument("PhantomSpec: bolus shape/scale must be positive");
        if (!(b.amplitude > 0.0))
            throw std::invalid_argument("PhantomSpec: bolus amplitude must be positive");
        if (j > 0 && !(b.t0 > phases[j - 1].bolus.t0))
            throw std::invalid_argument("PhantomSpec: bolus onsets must be strictly increasing");
    }
}

double gamma_variate(double t, double t0, double alpha, double beta, double amplitude) {
    if (!(alpha > 0.0) || !(beta > 0.0))
        throw std::invalid_argument("gamma_variate: shape and scale must be positive");
    if (t <= t0) return 0.0;
    const double u = (t - t0) / (alpha * beta);
    return amplitude * std::pow(u, alpha) * std::exp(alpha - (t - t0) / beta);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

void stamp_disc(Image& img, double cy, double cx, double radius) {
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
    const int y1 = std::min(img.rows - 1, static_cast<int>(std::ceil(cy + radius)));
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
    const int x1 = std::min(img.cols - 1, static_cast<int>(std::ceil(cx + radius)));
    const double r2 = radius * radius;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r2) img.at(y, x) = 1.0;
}

Image render_tube(int h, int w, const std::vector<std::pair<double, double>>& pts,
                  double radius) {
    Image img(h, w);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double dy = pts[i + 1].first - pts[i].first;
        const double dx = pts[i + 1].second - pts[i].second;
        const int steps = static_cast<int>(std::ceil(std::hypot(dy, dx) * 2.0)) + 1;
        for (int s = 0; s <= steps; ++s) {
            const double t = static_cast<double>(s) / steps;
            stamp_disc(img, pts[i].first + t * dy, pts[i].second + t * dx, radius);
        }
    }
    return img;
}

}  // namespace

Image render_geometry(PhaseGeometry kind, int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    switch (kind) {
        case PhaseGeometry::CurveArtery: {
            double y = h * (0.40 + 0.20 * uni(rng));
            std::vector<std::pair<double, double>> pts{{y, 0.0}};
            double x = 0.0;
            while (x < w * 0.42) {
                x += w * 0.14;
                y += h * 0.16 * (uni(rng) - 0.5);
                y = std::clamp(y, h * 0.15, h * 0.85);
                pts.emplace_back(y, x);
            }
            return render_tube(h, w, pts, 1.5 + uni(rng));
        }
        case PhaseGeometry::BlobNidus: {
            const double cy = h * (0.46 + 0.08 * uni(rng));
            const double cx = w * (0.52 + 0.08 * uni(rng));
            const double r0 = 0.075 * std::min(h, w) * (1.0 + 0.3 * uni(rng));
            double phase[3], amp[3];
            for (int k = 0; k < 3; ++k) phase[k] = 2.0 * M_PI * uni(rng);
            for (int k = 0; k < 3; ++k) amp[k] = 0.12 + 0.12 * uni(rng);
            Image img(h, w);
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) {
                    const double dy = yy - cy, dx = xx - cx;
                    const double theta = std::atan2(dy, dx);
                    double r = r0;
                    for (int k = 0; k < 3; ++k)
                        r += r0 * amp[k] * std::sin((k + 2) * theta + phase[k]);
                    if (dy * dy + dx * dx <= r * r) img.at(yy, xx) = 1.0;
                }
            return img;
        }
        case PhaseGeometry::CurveVein: {
            double y = h * (0.40 + 0.10 * uni(rng));
            double x = w * (0.62 + 0.10 * uni(rng));
            std::vector<std::pair<double, double>> pts{{y, x}};
            while (y > 0.0) {
                y -= h * 0.15;
                x += w * 0.12 * (uni(rng) - 0.5);
                x = std::clamp(x, w * 0.1, w * 0.9);
                pts.emplace_back(y, x);
            }
            return render_tube(h, w, pts, 1.5 + uni(rng));
        }
    }
    throw std::invalid_argument("render_geometry: unknown kind");
}

std::pair<ImageSeries, PhantomTruth> generate_phantom(const PhantomSpec& spec) {
    spec.validate();
    const int p = static_cast<int>(spec.phases.size());
    const int h = spec.height, w = spec.width, d = spec.frames;
    const std::size_t n = static_cast<std::size_t>(h) * w;

    // Geometry rejection loop: regenerate the whole set with a perturbed
    // sub-seed until pairwise overlap stays below 10% of the smaller shape.
    std::vector<Image> sources;
    bool accepted = false;
    for (int attempt = 0; attempt < 100 && !accepted; ++attempt) {
        const std::uint64_t base = spec.seed * 1000003ULL + static_cast<std::uint64_t>(attempt);
        sources.clear();
        for (int j = 0; j < p; ++j)
            sources.push_back(
                render_geometry(spec.phases[j].geometry, h, w, splitmix64(base) + j));
        accepted = true;
        for (int i = 0; i < p && accepted; ++i)
            for (int j = i + 1; j < p && accepted; ++j) {
                std::size_t overlap = 0, area_i = 0, area_j = 0;
                for (std::size_t k = 0; k < n; ++k) {
                    const bool a = sources[i].data[k] > 0.0, b = sources[j].data[k] > 0.0;
                    overlap += (a && b);
                    area_i += a;
                    area_j += b;
                }
                const std::size_t smaller = std::min(area_i, area_j);
                if (smaller == 0 || overlap >= 0.10 * smaller) accepted = false;
            }
    }
    if (!accepted)
        throw std::runtime_error("generate_phantom: overlap constraint unsatisfied after 100 attempts");

    PhantomTruth truth;
    truth.sources = sources;
    truth.mixing.resize(d, p);
    for (int t = 0; t < d; ++t)
        for (int j = 0; j < p; ++j) {
            const BolusParams& b = spec.phases[j].bolus;
            truth.mixing(t, j) = gamma_variate(t, b.t0, b.alpha, b.beta, b.amplitude);
        }

    truth.vessel_mask = VesselMask(h, w);
    for (int j = 0; j < p; ++j)
        for (std::size_t k = 0; k < n; ++k)
            if (sources[j].data[k] > 0.0) truth.vessel_mask.values[k] = 1;

    truth.phase_order.resize(p);
    for (int j = 0; j < p; ++j) {
        switch (spec.phases[j].geometry) {
            case PhaseGeometry::CurveArtery: truth.phase_order[j] = Phase::Arterial; break;
            case PhaseGeometry::BlobNidus: truth.phase_order[j] = Phase::Nidal; break;
            case PhaseGeometry::CurveVein: truth.phase_order[j] = Phase::Venous; break;
        }
    }

    ImageSeries series;
    series.fps = spec.fps;
    series.polarity = ContrastPolarity::BrightContrast;
    series.frames.reserve(d);
    std::mt19937_64 noise_rng(splitmix64(spec.seed ^ 0x6E6F697365ULL));  // "noise"
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int t = 0; t < d; ++t) {
        Image frame(h, w);
        for (std::size_t k = 0; k < n; ++k) {
            double v = 0.0;
            for (int j = 0; j < p; ++j) v += truth.mixing(t, j) * sources[j].data[k];
            if (spec.noise_sigma > 0.0) v += spec.noise_sigma * gauss(noise_rng);
            frame.data[k] = std::clamp(v, 0.0, 1.0);
        }
        series.frames.push_back(std::move(frame));
    }
    return {std::move(series), std::move(truth)};
}

}  // namespace dsaflow

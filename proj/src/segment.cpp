#include "dsaflow/segment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dsaflow {

std::size_t VesselMask::count() const {
    return static_cast<std::size_t>(std::count(values.begin(), values.end(), 1));
}

Image VesselMask::to_image() const {
    Image img(rows, cols);
    for (std::size_t i = 0; i < values.size(); ++i) img.data[i] = values[i] ? 1.0 : 0.0;
    return img;
}

BinarizeMethod binarize_method_from_string(const std::string& s) {
    if (s == "otsu") return BinarizeMethod::otsu();
    if (s.rfind("quantile:", 0) == 0) {
        const double q = std::stod(s.substr(9));
        if (!(q >= 0.0 && q <= 1.0))
            throw std::invalid_argument("quantile must be in [0,1]: " + s);
        return BinarizeMethod::quantile(q);
    }
    if (s == "quantile") return BinarizeMethod::quantile(0.9);
    throw std::invalid_argument("unknown threshold method '" + s + "' (otsu|quantile:q)");
}

std::string to_string(const BinarizeMethod& m) {
    if (m.kind == BinarizeMethod::Kind::Otsu) return "otsu";
    return "quantile:" + std::to_string(m.q);
}

namespace {

// Sampled Gaussian and its derivatives, radius 4*sigma, zeroth order
// normalized to unit sum.
std::vector<double> gauss_kernel(double sigma, int order) {
    const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double g = std::exp(-(i * i) / (2.0 * sigma * sigma));
        k[i + radius] = g;
        sum += g;
    }
    for (double& v : k) v /= sum;
    const double s2 = sigma * sigma;
    if (order == 1) {
        for (int i = -radius; i <= radius; ++i) k[i + radius] *= -i / s2;
    } else if (order == 2) {
        for (int i = -radius; i <= radius; ++i) k[i + radius] *= (i * i - s2) / (s2 * s2);
        // truncation leaves a small DC term; remove it so constant inputs
        // produce an exactly zero Hessian
        double dc = 0.0;
        for (double v : k) dc += v;
        for (double& v : k) v -= dc / static_cast<double>(k.size());
    }
    return k;
}

int reflect(int i, int n) {
    // symmetric boundary: -1 -> 0, n -> n-1
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

Image conv_rows(const Image& img, const std::vector<double>& k) {
    const int radius = static_cast<int>(k.size()) / 2;
    Image out(img.rows, img.cols);
    for (int r = 0; r < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * img.at(reflect(r + i, img.rows), c);
            out.at(r, c) = acc;
        }
    return out;
}

Image conv_cols(const Image& img, const std::vector<double>& k) {
    const int radius = static_cast<int>(k.size()) / 2;
    Image out(img.rows, img.cols);
    for (int r = 0; r < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * img.at(r, reflect(c + i, img.cols));
            out.at(r, c) = acc;
        }
    return out;
}

constexpr int kHistogramBins = 256;

int histogram_bin(double v, double lo, double hi) {
    const int b = static_cast<int>((v - lo) / (hi - lo) * kHistogramBins);
    return std::clamp(b, 0, kHistogramBins - 1);
}

}  // namespace

ProbabilityMap vesselness(const Image& frame, const std::vector<double>& scales) {
    if (scales.empty()) throw std::invalid_argument("vesselness: empty scale list");
    for (double s : scales)
        if (!(s >= 0.5)) throw std::invalid_argument("vesselness: scale below 0.5 px");
    if (frame.empty()) throw std::invalid_argument("vesselness: empty frame");

    constexpr double beta = 0.5;
    Image out(frame.rows, frame.cols, 0.0);

    const auto [lo, hi] = std::minmax_element(frame.data.begin(), frame.data.end());
    if (*lo == *hi) return out;  // no structure, and nothing for the rescale to amplify

    for (double sigma : scales) {
        const auto g0 = gauss_kernel(sigma, 0);
        const auto g1 = gauss_kernel(sigma, 1);
        const auto g2 = gauss_kernel(sigma, 2);
        const double s2 = sigma * sigma;  // gamma-normalized derivatives

        Image ixx = conv_rows(conv_cols(frame, g2), g0);
        Image iyy = conv_rows(conv_cols(frame, g0), g2);
        Image ixy = conv_rows(conv_cols(frame, g1), g1);

        Image big(frame.rows, frame.cols), small(frame.rows, frame.cols);
        double max_energy = 0.0;
        for (std::size_t i = 0; i < frame.size(); ++i) {
            const double xx = ixx.data[i] * s2, yy = iyy.data[i] * s2, xy = ixy.data[i] * s2;
            const double half_tr = (xx + yy) / 2.0;
            const double det = xx * yy - xy * xy;
            const double disc = std::sqrt(std::max(half_tr * half_tr - det, 0.0));
            double a = half_tr - disc, b = half_tr + disc;
            if (std::abs(a) < std::abs(b)) std::swap(a, b);  // |a| >= |b|
            big.data[i] = a;
            small.data[i] = b;
            max_energy = std::max(max_energy, std::sqrt(a * a + b * b));
        }
        const double gamma = max_energy / 2.0;
        if (!(gamma > 0.0)) continue;  // constant frame at this scale

        for (std::size_t i = 0; i < frame.size(); ++i) {
            const double l2 = big.data[i], l1 = small.data[i];
            if (l2 >= 0.0) continue;  // bright tubes require a negative principal curvature
            const double energy2 = l1 * l1 + l2 * l2;
            const double ratio = l1 / l2;
            const double resp = std::exp(-(ratio * ratio) / (2.0 * beta * beta)) *
                                (1.0 - std::exp(-energy2 / (2.0 * gamma * gamma)));
            out.data[i] = std::max(out.data[i], resp);
        }
    }

    const double peak = *std::max_element(out.data.begin(), out.data.end());
    if (peak > 0.0)
        for (double& v : out.data) v /= peak;
    return out;
}

BinarizeResult binarize(const ProbabilityMap& map, const BinarizeMethod& method) {
    if (map.empty()) throw std::invalid_argument("binarize: empty map");
    BinarizeResult result;
    result.mask = VesselMask(map.rows, map.cols, MaskSource::Vesselness);

    if (method.kind == BinarizeMethod::Kind::Quantile) {
        std::vector<double> sorted = map.data;
        std::sort(sorted.begin(), sorted.end());
        const auto idx = static_cast<std::size_t>(method.q * (sorted.size() - 1));
        result.threshold = sorted[idx];
        for (std::size_t i = 0; i < map.size(); ++i)
            result.mask.values[i] = map.data[i] > result.threshold ? 1 : 0;
        return result;
    }

    // Otsu over a fixed 256-bin histogram of the [0,1] domain.
    std::vector<std::size_t> hist(kHistogramBins, 0);
    for (double v : map.data) ++hist[histogram_bin(v, 0.0, 1.0)];

    const double total = static_cast<double>(map.size());
    double grand_sum = 0.0;
    for (int b = 0; b < kHistogramBins; ++b) grand_sum += (b + 0.5) * hist[b];

    double best = -1.0;
    int best_bin = -1;
    double w0 = 0.0, sum0 = 0.0;
    for (int b = 0; b < kHistogramBins - 1; ++b) {
        w0 += static_cast<double>(hist[b]);
        sum0 += (b + 0.5) * hist[b];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double mu0 = sum0 / w0, mu1 = (grand_sum - sum0) / w1;
        const double variance = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (variance > best) {
            best = variance;
            best_bin = b;
        }
    }

    if (best_bin < 0) {  // all mass in one bin: no between-class variance
        result.degenerate = true;
        result.threshold = 1.0;
        return result;
    }
    result.threshold = (best_bin + 1) / static_cast<double>(kHistogramBins);
    for (std::size_t i = 0; i < map.size(); ++i)
        result.mask.values[i] = histogram_bin(map.data[i], 0.0, 1.0) > best_bin ? 1 : 0;
    return result;
}

VesselMask temporal_union(const std::vector<VesselMask>& masks) {
    if (masks.empty()) throw std::invalid_argument("temporal_union: no masks");
    VesselMask out = masks.front();
    for (std::size_t m = 1; m < masks.size(); ++m) {
        if (masks[m].rows != out.rows || masks[m].cols != out.cols)
            throw std::invalid_argument("temporal_union: dimension mismatch");
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] = out.values[i] | masks[m].values[i];
    }
    return out;
}

VesselMask load_external_mask(const std::filesystem::path& path, int rows, int cols) {
    const Image img = load_gray_image(path);
    if (img.rows != rows || img.cols != cols)
        throw std::runtime_error("external mask " + path.string() + " is " +
                                 std::to_string(img.rows) + "x" + std::to_string(img.cols) +
                                 ", series is " + std::to_string(rows) + "x" +
                                 std::to_string(cols));
    VesselMask mask(rows, cols, MaskSource::External);
    for (std::size_t i = 0; i < img.size(); ++i) mask.values[i] = img.data[i] > 0.0 ? 1 : 0;
    return mask;
}

double range_entropy(const Image& patch) {
    if (patch.empty()) throw std::invalid_argument("range_entropy: empty patch");
    constexpr int bins = 64;
    std::array<std::size_t, bins> hist{};
    for (double v : patch.data) {
        const int b = std::clamp(static_cast<int>(v * bins), 0, bins - 1);
        ++hist[b];
    }
    const double n = static_cast<double>(patch.size());
    double entropy = 0.0;
    for (std::size_t c : hist) {
        if (c == 0) continue;
        const double pr = c / n;
        entropy -= pr * std::log2(pr);
    }
    return entropy;
}

std::vector<Patch> extract_patches(const ImageSeries& series, int size, int stride,
                                   double min_entropy) {
    if (size < 16) throw std::invalid_argument("extract_patches: size below minimum 16");
    if (stride < 1) throw std::invalid_argument("extract_patches: stride must be >= 1");
    const int h = series.height(), w = series.width();
    if (size > h || size > w)
        throw std::invalid_argument("extract_patches: patch size " + std::to_string(size) +
                                    " exceeds frame " + std::to_string(h) + "x" +
                                    std::to_string(w));

    std::vector<Patch> patches;
    for (int f = 0; f < series.frame_count(); ++f) {
        const Image& frame = series.frames[f];
        for (int r = 0; r + size <= h; r += stride)
            for (int c = 0; c + size <= w; c += stride) {
                Image px(size, size);
                for (int i = 0; i < size; ++i)
                    for (int j = 0; j < size; ++j) px.at(i, j) = frame.at(r + i, c + j);
                const double e = range_entropy(px);
                if (e >= min_entropy)
                    patches.push_back(Patch{std::move(px), f, r, c, e});
            }
    }
    std::stable_sort(patches.begin(), patches.end(),
                     [](const Patch& a, const Patch& b) { return a.entropy > b.entropy; });
    return patches;
}

MaskMetrics mask_metrics(const VesselMask& pred, const VesselMask& truth) {
    if (pred.rows != truth.rows || pred.cols != truth.cols)
        throw std::invalid_argument("mask_metrics: dimension mismatch");
    std::size_t inter = 0;
    for (std::size_t i = 0; i < pred.values.size(); ++i)
        inter += (pred.values[i] & truth.values[i]);
    const double np = static_cast<double>(pred.count());
    const double nt = static_cast<double>(truth.count());
    const double ni = static_cast<double>(inter);
    MaskMetrics m;
    m.dice = (np + nt) == 0.0 ? 1.0 : 2.0 * ni / (np + nt);
    m.recall = nt == 0.0 ? 1.0 : ni / nt;
    m.precision = np == 0.0 ? 1.0 : ni / np;
    return m;
}

}  // namespace dsaflow

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <queue>

#include "dsaflow/phantom.hpp"
#include "test_util.hpp"

using namespace dsaflow;

namespace {

int connected_components_4(const Image& img) {
    std::vector<char> seen(img.size(), 0);
    int components = 0;
    for (int r = 0; r < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c) {
            const std::size_t idx = static_cast<std::size_t>(r) * img.cols + c;
            if (img.data[idx] <= 0.0 || seen[idx]) continue;
            ++components;
            std::queue<std::pair<int, int>> queue;
            queue.push({r, c});
            seen[idx] = 1;
            while (!queue.empty()) {
                auto [y, x] = queue.front();
                queue.pop();
                const int dy[] = {1, -1, 0, 0}, dx[] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int ny = y + dy[k], nx = x + dx[k];
                    if (ny < 0 || ny >= img.rows || nx < 0 || nx >= img.cols) continue;
                    const std::size_t nidx = static_cast<std::size_t>(ny) * img.cols + nx;
                    if (img.data[nidx] > 0.0 && !seen[nidx]) {
                        seen[nidx] = 1;
                        queue.push({ny, nx});
                    }
                }
            }
        }
    return components;
}

}  // namespace

TEST_CASE("gamma_variate: onset, peak normalization, hand-computed value") {
    CHECK(gamma_variate(2.0, 2.0, 2.0, 1.5, 0.7) == 0.0);
    CHECK(gamma_variate(1.0, 2.0, 2.0, 1.5, 0.7) == 0.0);

    // peak-normalized form: exactly amplitude at t0 + alpha*beta
    CHECK(gamma_variate(2.0 + 3.0, 2.0, 2.0, 1.5, 0.7) == doctest::Approx(0.7).epsilon(1e-15));

    // hand oracle at t = t0 + 1: (1/3)^2 * e^{2 - 2/3} = e^{4/3} / 9
    CHECK(gamma_variate(1.0, 0.0, 2.0, 1.5, 1.0) ==
          doctest::Approx(0.4215186549647975).epsilon(1e-14));

    CHECK_THROWS_AS(gamma_variate(1.0, 0.0, -2.0, 1.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(gamma_variate(1.0, 0.0, 2.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("render_geometry: determinism and shape classes") {
    for (PhaseGeometry kind :
         {PhaseGeometry::CurveArtery, PhaseGeometry::BlobNidus, PhaseGeometry::CurveVein}) {
        const Image a = render_geometry(kind, 128, 128, 77);
        const Image b = render_geometry(kind, 128, 128, 77);
        CHECK(a.data == b.data);
        const Image c = render_geometry(kind, 128, 128, 78);
        CHECK(a.data != c.data);
        double area = 0.0;
        for (double v : a.data) area += v;
        CHECK(area > 50.0);
    }

    const Image blob = render_geometry(PhaseGeometry::BlobNidus, 128, 128, 5);
    CHECK(connected_components_4(blob) == 1);

    const Image artery = render_geometry(PhaseGeometry::CurveArtery, 128, 128, 5);
    bool touches_left = false;
    for (int r = 0; r < 128; ++r) touches_left |= artery.at(r, 0) > 0.0;
    CHECK(touches_left);

    const Image vein = render_geometry(PhaseGeometry::CurveVein, 128, 128, 5);
    bool touches_top = false;
    for (int c = 0; c < 128; ++c) touches_top |= vein.at(0, c) > 0.0;
    CHECK(touches_top);
}

TEST_CASE("generate_phantom: pairwise overlap below 10% of the smaller shape") {
    for (std::uint64_t seed : {42ULL, 1ULL, 6ULL, 18ULL}) {
        auto [series, truth] = generate_phantom(PhantomSpec::defaults(seed));
        const int p = static_cast<int>(truth.sources.size());
        for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j) {
                double overlap = 0, ai = 0, aj = 0;
                for (std::size_t k = 0; k < truth.sources[i].size(); ++k) {
                    const bool a = truth.sources[i].data[k] > 0;
                    const bool b = truth.sources[j].data[k] > 0;
                    overlap += a && b;
                    ai += a;
                    aj += b;
                }
                CHECK(overlap / std::min(ai, aj) < 0.10);
            }
    }
}

TEST_CASE("generate_phantom: zero-noise series equals the linear model exactly") {
    PhantomSpec spec = PhantomSpec::defaults(9);
    spec.noise_sigma = 0.0;
    auto [series, truth] = generate_phantom(spec);

    double worst = 0.0;
    double max_value = 0.0;
    for (int t = 0; t < spec.frames; ++t)
        for (std::size_t i = 0; i < series.frames[t].size(); ++i) {
            double model = 0.0;
            for (int j = 0; j < 3; ++j) model += truth.mixing(t, j) * truth.sources[j].data[i];
            worst = std::max(worst, std::abs(series.frames[t].data[i] - model));
            max_value = std::max(max_value, model);
        }
    CHECK(worst == 0.0);      // no clamping engaged at default amplitudes
    CHECK(max_value <= 1.0);  // documented pre-clamp range constraint
    CHECK(series.polarity == ContrastPolarity::BrightContrast);
}

TEST_CASE("generate_phantom: determinism over (spec, seed)") {
    const PhantomSpec spec = PhantomSpec::defaults(33);
    auto [s1, t1] = generate_phantom(spec);
    auto [s2, t2] = generate_phantom(spec);
    REQUIRE(s1.frame_count() == s2.frame_count());
    for (int t = 0; t < s1.frame_count(); ++t) CHECK(s1.frames[t].data == s2.frames[t].data);
    CHECK(t1.mixing == t2.mixing);
    CHECK(t1.vessel_mask.values == t2.vessel_mask.values);
}

TEST_CASE("generate_phantom: bolus peak order follows onset order with shared alpha/beta") {
    PhantomSpec spec = PhantomSpec::defaults(21);
    auto [series, truth] = generate_phantom(spec);
    std::vector<int> peaks(3);
    for (int j = 0; j < 3; ++j) {
        Eigen::Index arg = 0;
        truth.mixing.col(j).maxCoeff(&arg);
        peaks[j] = static_cast<int>(arg);
    }
    CHECK(peaks[0] < peaks[1]);
    CHECK(peaks[1] < peaks[2]);
    CHECK(truth.phase_order ==
          std::vector<Phase>{Phase::Arterial, Phase::Nidal, Phase::Venous});
}

TEST_CASE("PhantomSpec validation") {
    PhantomSpec spec = PhantomSpec::defaults(1);

    spec.frames = 5;  // below 2 * p
    CHECK_THROWS_AS(generate_phantom(spec), std::invalid_argument);

    spec = PhantomSpec::defaults(1);
    spec.phases[1].bolus.t0 = spec.phases[0].bolus.t0;  // onsets must increase
    CHECK_THROWS_AS(generate_phantom(spec), std::invalid_argument);

    spec = PhantomSpec::defaults(1);
    spec.noise_sigma = -0.1;
    CHECK_THROWS_AS(generate_phantom(spec), std::invalid_argument);

    spec = PhantomSpec::defaults(1);
    spec.phases[2].bolus.amplitude = 0.0;
    CHECK_THROWS_AS(generate_phantom(spec), std::invalid_argument);
}

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "dsaflow/imageio.hpp"

namespace testutil {

/// Fresh scratch directory under the system temp root, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0;; ++i) {
            path_ = base / (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(i));
            if (!std::filesystem::exists(path_)) break;
        }
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline dsaflow::Image random_image(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    dsaflow::Image img(rows, cols);
    for (double& v : img.data) v = uni(rng);
    return img;
}

inline dsaflow::ImageSeries random_series(int d, int rows, int cols, std::uint64_t seed,
                                          double fps = 3.0) {
    dsaflow::ImageSeries s;
    s.fps = fps;
    for (int t = 0; t < d; ++t) s.frames.push_back(random_image(rows, cols, seed + t));
    return s;
}

inline double max_abs_diff(const dsaflow::Image& a, const dsaflow::Image& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    return worst;
}

}  // namespace testutil

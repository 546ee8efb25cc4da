#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dsaflow {

/// Dense grayscale image, row-major, double precision.
struct Image {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Image() = default;
    Image(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("Image: negative dimensions");
    }

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
    bool same_shape(const Image& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

/// Interleaved RGB image, row-major, channels in [0,1].
struct RgbImage {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // rows*cols*3

    RgbImage() = default;
    RgbImage(int r, int c)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c * 3, 0.0) {}

    double& at(int r, int c, int ch) {
        return data[(static_cast<std::size_t>(r) * cols + c) * 3 + ch];
    }
    double at(int r, int c, int ch) const {
        return data[(static_cast<std::size_t>(r) * cols + c) * 3 + ch];
    }
};

}  // namespace dsaflow

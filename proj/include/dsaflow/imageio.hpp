#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dsaflow/image.hpp"

namespace dsaflow {

enum class ContrastPolarity { DarkContrast, BrightContrast };

std::string to_string(ContrastPolarity p);
ContrastPolarity polarity_from_string(const std::string& s);

/// Axis-aligned region of interest in pixel coordinates.
struct RoiRect {
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;
};

/// A temporally ordered grayscale series with acquisition metadata.
/// Intensities are normalized to [0,1]; all frames share one shape.
struct ImageSeries {
    std::vector<Image> frames;
    double fps = 3.0;
    ContrastPolarity polarity = ContrastPolarity::DarkContrast;
    std::optional<RoiRect> roi;  // sidecar suggestion, applied by callers

    int frame_count() const { return static_cast<int>(frames.size()); }
    int height() const { return frames.empty() ? 0 : frames.front().rows; }
    int width() const { return frames.empty() ? 0 : frames.front().cols; }

    /// Throws if any invariant (nonempty, uniform shape, [0,1], fps>0) fails.
    void validate() const;
};

/// Loads .png/.pgm single-channel frames from a directory, ordered by
/// lexicographic filename sort unless the sidecar lists them explicitly.
/// The sidecar (series.json next to the frames, or an explicit path)
/// may carry fps, polarity, roi and a frame list.
ImageSeries load_series(const std::filesystem::path& directory,
                        const std::optional<std::filesystem::path>& sidecar_path = {});

/// Keeps frames [start_index, end_index); metadata preserved.
ImageSeries trim(const ImageSeries& series, int start_index, int end_index);

/// Crops every frame to the given rectangle.
ImageSeries crop_roi(const ImageSeries& series, const RoiRect& roi);

/// Maps every intensity i to 1-i and flips the polarity flag.
ImageSeries invert_polarity(const ImageSeries& series);

/// Writes 8-bit grayscale PNGs named frame_0000.png, frame_0001.png, ...
void write_gray_series(const ImageSeries& series, const std::filesystem::path& directory);

/// Writes 8-bit RGB PNGs named frame_0000.png, frame_0001.png, ...
void write_rgb_series(const std::vector<RgbImage>& frames,
                      const std::filesystem::path& directory);

/// Single-image helpers shared with the segmentation module.
Image load_gray_image(const std::filesystem::path& path);
void write_gray_image(const Image& image, const std::filesystem::path& path);
void write_rgb_image(const RgbImage& image, const std::filesystem::path& path);

}  // namespace dsaflow

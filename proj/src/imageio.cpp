#include "dsaflow/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace dsaflow {

std::string to_string(ContrastPolarity p) {
    return p == ContrastPolarity::DarkContrast ? "dark" : "bright";
}

ContrastPolarity polarity_from_string(const std::string& s) {
    if (s == "dark") return ContrastPolarity::DarkContrast;
    if (s == "bright") return ContrastPolarity::BrightContrast;
    throw std::invalid_argument("unknown polarity '" + s + "' (expected dark|bright)");
}

void ImageSeries::validate() const {
    if (frames.empty()) throw std::invalid_argument("ImageSeries: no frames");
    if (!(fps > 0.0)) throw std::invalid_argument("ImageSeries: fps must be positive");
    const Image& first = frames.front();
    for (const Image& f : frames) {
        if (!f.same_shape(first))
            throw std::invalid_argument("ImageSeries: frames differ in shape");
        for (double v : f.data)
            if (!(v >= 0.0 && v <= 1.0))
                throw std::invalid_argument("ImageSeries: intensity outside [0,1]");
    }
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// 16-bit samples arrive scaled by 1/65535, 8-bit by 1/255.
Image read_png(const fs::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw std::runtime_error("cannot open " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("libpng init failure");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("libpng init failure");
    }

    std::vector<std::uint8_t> raw;
    std::vector<png_bytep> row_ptrs;
    png_uint_32 width = 0, height = 0;
    int bit_depth = 0, color_type = 0;
    volatile bool bad_channels = false;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        if (bad_channels)
            throw std::runtime_error("multi-channel input not supported: " + path.string());
        throw std::runtime_error("corrupt or unreadable PNG: " + path.string());
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);
    png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);

    if (color_type != PNG_COLOR_TYPE_GRAY) {
        bad_channels = true;
        longjmp(png_jmpbuf(png), 1);
    }
    if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    raw.resize(rowbytes * height);
    row_ptrs.resize(height);
    for (png_uint_32 r = 0; r < height; ++r) row_ptrs[r] = raw.data() + r * rowbytes;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(static_cast<int>(height), static_cast<int>(width));
    if (bit_depth == 16) {
        for (std::size_t i = 0; i < img.size(); ++i) {
            const std::uint16_t v =
                static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);  // network order
            img.data[i] = v / 65535.0;
        }
    } else {
        for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = raw[i] / 255.0;
    }
    return img;
}

Image read_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P5")
        throw std::runtime_error("unsupported PGM variant '" + magic + "' in " + path.string());

    auto next_int = [&in, &path]() {
        // skip whitespace and '#' comment lines
        int c = in.peek();
        while (c == '#' || std::isspace(c)) {
            if (c == '#') in.ignore(65536, '\n');
            else in.get();
            c = in.peek();
        }
        long v = -1;
        in >> v;
        if (!in || v < 0) throw std::runtime_error("malformed PGM header: " + path.string());
        return v;
    };

    const long width = next_int();
    const long height = next_int();
    const long maxval = next_int();
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
        throw std::runtime_error("malformed PGM header: " + path.string());
    in.get();  // single whitespace byte before raster

    const bool wide = maxval > 255;
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(width) * height * (wide ? 2 : 1));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw std::runtime_error("truncated PGM raster: " + path.string());

    Image img(static_cast<int>(height), static_cast<int>(width));
    const double scale = 1.0 / static_cast<double>(maxval);
    if (wide) {
        for (std::size_t i = 0; i < img.size(); ++i) {
            const std::uint16_t v =
                static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);  // PGM is big-endian
            img.data[i] = std::min(1.0, v * scale);
        }
    } else {
        for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = raw[i] * scale;
    }
    return img;
}

void write_png_bytes(const fs::path& path, int rows, int cols, int channels,
                     const std::vector<std::uint8_t>& bytes) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot write " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("libpng init failure");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("libpng init failure");
    }

    std::vector<png_bytep> row_ptrs(rows);
    const std::size_t rowbytes = static_cast<std::size_t>(cols) * channels;
    for (int r = 0; r < rows; ++r)
        row_ptrs[r] = const_cast<png_bytep>(bytes.data() + r * rowbytes);

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("PNG write failure: " + path.string());
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, cols, rows, 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);  // fixed for byte-stable outputs
    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::uint8_t quantize8(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

Image read_frame(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") return read_png(path);
    if (ext == ".pgm") return read_pgm(path);
    throw std::runtime_error("unsupported frame format: " + path.string());
}

bool is_frame_file(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".pgm";
}

std::string frame_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%04d.png", index);
    return buf;
}

}  // namespace

ImageSeries load_series(const fs::path& directory,
                        const std::optional<fs::path>& sidecar_path) {
    if (!fs::is_directory(directory))
        throw std::runtime_error("not a directory: " + directory.string());

    ImageSeries series;

    // Sidecar: explicit path wins, else series.json beside the frames.
    fs::path sidecar = sidecar_path.value_or(directory / "series.json");
    std::vector<std::string> explicit_frames;
    if (fs::exists(sidecar)) {
        std::ifstream in(sidecar);
        if (!in) throw std::runtime_error("cannot read sidecar " + sidecar.string());
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw std::runtime_error("malformed sidecar " + sidecar.string() + ": " + e.what());
        }
        if (j.contains("fps")) series.fps = j.at("fps").get<double>();
        if (j.contains("polarity"))
            series.polarity = polarity_from_string(j.at("polarity").get<std::string>());
        if (j.contains("roi")) {
            const auto& r = j.at("roi");
            if (!r.is_array() || r.size() != 4)
                throw std::runtime_error("sidecar roi must be [x0,y0,w,h]");
            series.roi = RoiRect{r[0].get<int>(), r[1].get<int>(), r[2].get<int>(), r[3].get<int>()};
        }
        if (j.contains("frames"))
            explicit_frames = j.at("frames").get<std::vector<std::string>>();
    } else if (sidecar_path) {
        throw std::runtime_error("sidecar not found: " + sidecar_path->string());
    }
    if (!(series.fps > 0.0)) throw std::invalid_argument("sidecar fps must be positive");

    std::vector<fs::path> files;
    if (!explicit_frames.empty()) {
        for (const std::string& name : explicit_frames) files.push_back(directory / name);
    } else {
        for (const auto& entry : fs::directory_iterator(directory))
            if (entry.is_regular_file() && is_frame_file(entry.path()))
                files.push_back(entry.path());
        std::sort(files.begin(), files.end(),
                  [](const fs::path& a, const fs::path& b) {
                      return a.filename().string() < b.filename().string();
                  });
    }
    if (files.empty())
        throw std::runtime_error("no .png/.pgm frames in " + directory.string());

    for (const fs::path& f : files) {
        Image img = read_frame(f);
        if (!series.frames.empty() && !img.same_shape(series.frames.front()))
            throw std::runtime_error("mixed frame dimensions at " + f.string());
        series.frames.push_back(std::move(img));
    }
    series.validate();
    return series;
}

ImageSeries trim(const ImageSeries& series, int start_index, int end_index) {
    const int d = series.frame_count();
    if (start_index < 0 || end_index > d || start_index >= end_index)
        throw std::invalid_argument("trim: empty or out-of-bounds range [" +
                                    std::to_string(start_index) + "," +
                                    std::to_string(end_index) + ") for d=" + std::to_string(d));
    ImageSeries out;
    out.fps = series.fps;
    out.polarity = series.polarity;
    out.roi = series.roi;
    out.frames.assign(series.frames.begin() + start_index, series.frames.begin() + end_index);
    return out;
}

ImageSeries crop_roi(const ImageSeries& series, const RoiRect& roi) {
    const int h = series.height(), w = series.width();
    if (roi.width < 8 || roi.height < 8)
        throw std::invalid_argument("crop_roi: roi below minimum size 8x8");
    if (roi.x0 < 0 || roi.y0 < 0 || roi.x0 + roi.width > w || roi.y0 + roi.height > h)
        throw std::invalid_argument("crop_roi: roi out of bounds");
    ImageSeries out;
    out.fps = series.fps;
    out.polarity = series.polarity;
    out.frames.reserve(series.frames.size());
    for (const Image& f : series.frames) {
        Image c(roi.height, roi.width);
        for (int r = 0; r < roi.height; ++r)
            for (int cx = 0; cx < roi.width; ++cx)
                c.at(r, cx) = f.at(roi.y0 + r, roi.x0 + cx);
        out.frames.push_back(std::move(c));
    }
    return out;
}

ImageSeries invert_polarity(const ImageSeries& series) {
    ImageSeries out = series;
    for (Image& f : out.frames)
        for (double& v : f.data) v = 1.0 - v;
    out.polarity = series.polarity == ContrastPolarity::DarkContrast
                       ? ContrastPolarity::BrightContrast
                       : ContrastPolarity::DarkContrast;
    return out;
}

void write_gray_series(const ImageSeries& series, const fs::path& directory) {
    if (series.frames.empty()) throw std::invalid_argument("write_gray_series: empty series");
    fs::create_directories(directory);
    for (int i = 0; i < series.frame_count(); ++i)
        write_gray_image(series.frames[i], directory / frame_name(i));
}

void write_rgb_series(const std::vector<RgbImage>& frames, const fs::path& directory) {
    if (frames.empty()) throw std::invalid_argument("write_rgb_series: empty series");
    fs::create_directories(directory);
    for (std::size_t i = 0; i < frames.size(); ++i)
        write_rgb_image(frames[i], directory / frame_name(static_cast<int>(i)));
}

Image load_gray_image(const fs::path& path) { return read_frame(path); }

void write_gray_image(const Image& image, const fs::path& path) {
    if (image.empty()) throw std::invalid_argument("write_gray_image: empty image");
    std::vector<std::uint8_t> bytes(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) bytes[i] = quantize8(image.data[i]);
    write_png_bytes(path, image.rows, image.cols, 1, bytes);
}

void write_rgb_image(const RgbImage& image, const fs::path& path) {
    if (image.data.empty()) throw std::invalid_argument("write_rgb_image: empty image");
    std::vector<std::uint8_t> bytes(image.data.size());
    for (std::size_t i = 0; i < image.data.size(); ++i) bytes[i] = quantize8(image.data[i]);
    write_png_bytes(path, image.rows, image.cols, 3, bytes);
}

}  // namespace dsaflow

#include "pestdet/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "pestdet/error.hpp"

namespace pestdet {

GrayImage::GrayImage(uint32_t width, uint32_t height, uint8_t fill)
    : width_(width), height_(height) {
    if (width == 0 || height == 0)
        fail(ErrorCode::InvalidArgument, "image dimensions must be >= 1");
    pixels_.assign(size_t(width) * height, fill);
}

GrayImage::GrayImage(uint32_t width, uint32_t height, std::vector<uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width == 0 || height == 0)
        fail(ErrorCode::InvalidArgument, "image dimensions must be >= 1");
    if (pixels_.size() != size_t(width) * height)
        fail(ErrorCode::InvalidArgument,
             "pixel buffer holds " + std::to_string(pixels_.size()) + " bytes, expected " +
                 std::to_string(size_t(width) * height));
}

GrayImage GrayImage::crop(const Rect& r) const {
    if (!r.fits(width_, height_))
        fail(ErrorCode::OutOfBounds, "crop rectangle outside image");
    GrayImage out(r.w, r.h);
    for (uint32_t y = 0; y < r.h; ++y) {
        const uint8_t* src = &pixels_[size_t(r.y + y) * width_ + r.x];
        std::copy(src, src + r.w, &out.at(0, y));
    }
    return out;
}

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

    // Reads one decimal token, skipping whitespace and '#' comments.
    uint64_t number(const char* what) {
        skip_space_and_comments();
        if (pos_ >= bytes_.size())
            fail(ErrorCode::MalformedHeader, std::string("PGM header ends before ") + what);
        if (!std::isdigit(bytes_[pos_]))
            fail(ErrorCode::MalformedHeader, std::string("PGM header: expected ") + what);
        uint64_t v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 0xFFFFFFFFull)
                fail(ErrorCode::MalformedHeader, std::string("PGM header: ") + what + " too large");
            ++pos_;
        }
        return v;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    void single_space() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            fail(ErrorCode::MalformedHeader, "PGM header: missing separator before raster");
        ++pos_;
    }

    size_t pos() const { return pos_; }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n')
                    ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const uint8_t> bytes_;
    size_t pos_ = 2;
};

} // namespace

GrayImage load_pgm(std::span<const uint8_t> content) {
    if (content.size() < 2 || content[0] != 'P' || content[1] != '5')
        fail(ErrorCode::MalformedHeader, "not a binary PGM (missing P5 magic)");
    HeaderReader rd(content);
    const uint64_t w = rd.number("width");
    const uint64_t h = rd.number("height");
    const uint64_t maxval = rd.number("maxval");
    if (w == 0 || h == 0)
        fail(ErrorCode::MalformedHeader, "PGM dimensions must be >= 1");
    if (maxval == 0 || maxval > 65535)
        fail(ErrorCode::MalformedHeader, "PGM maxval out of range");
    if (maxval != 255)
        fail(ErrorCode::MaxvalUnsupported,
             "PGM maxval " + std::to_string(maxval) + " unsupported (only 255)");
    rd.single_space();
    const size_t need = size_t(w) * size_t(h);
    if (content.size() - rd.pos() < need)
        fail(ErrorCode::TruncatedData, "PGM raster truncated: expected " + std::to_string(need) +
                                           " bytes, found " +
                                           std::to_string(content.size() - rd.pos()));
    auto first = content.begin() + std::ptrdiff_t(rd.pos());
    return GrayImage(uint32_t(w), uint32_t(h),
                     std::vector<uint8_t>(first, first + std::ptrdiff_t(need)));
}

std::vector<uint8_t> save_pgm(const GrayImage& img) {
    const std::string header = "P5\n" + std::to_string(img.width()) + " " +
                               std::to_string(img.height()) + "\n255\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels().begin(), img.pixels().end());
    return out;
}

GrayImage read_pgm_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorCode::Io, "cannot open " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return load_pgm(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void write_pgm_file(const GrayImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(ErrorCode::Io, "cannot write " + path.string());
    const auto bytes = save_pgm(img);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out)
        fail(ErrorCode::Io, "write failed: " + path.string());
}

GrayImage sensor_degrade(const GrayImage& img, double sigma, uint64_t seed) {
    if (!(sigma >= 0.0))
        fail(ErrorCode::InvalidArgument, "noise sigma must be >= 0");
    if (sigma == 0.0)
        return img;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    GrayImage out = img;
    for (auto& p : out.pixels()) {
        const double v = std::round(double(p) + noise(rng));
        p = uint8_t(std::clamp(v, 0.0, 255.0));
    }
    return out;
}

GrayImage downscale(const GrayImage& img, uint32_t new_width, uint32_t new_height) {
    if (new_width == 0 || new_height == 0)
        fail(ErrorCode::InvalidArgument, "target dimensions must be >= 1");
    if (new_width > img.width() || new_height > img.height())
        fail(ErrorCode::InvalidArgument, "downscale cannot enlarge an image");
    if (new_width == img.width() && new_height == img.height())
        return img;

    const double sx = double(img.width()) / new_width;
    const double sy = double(img.height()) / new_height;
    const double max_x = img.width() - 1;
    const double max_y = img.height() - 1;

    // Horizontal taps are shared by every output row.
    std::vector<uint32_t> x0(new_width), x1(new_width);
    std::vector<double> fx(new_width);
    for (uint32_t x = 0; x < new_width; ++x) {
        const double src = std::clamp((x + 0.5) * sx - 0.5, 0.0, max_x);
        x0[x] = uint32_t(std::floor(src));
        x1[x] = std::min<uint32_t>(x0[x] + 1, img.width() - 1);
        fx[x] = src - x0[x];
    }

    GrayImage out(new_width, new_height);
    for (uint32_t y = 0; y < new_height; ++y) {
        const double src_y = std::clamp((y + 0.5) * sy - 0.5, 0.0, max_y);
        const uint32_t y0 = uint32_t(std::floor(src_y));
        const uint32_t y1 = std::min<uint32_t>(y0 + 1, img.height() - 1);
        const double fy = src_y - y0;
        for (uint32_t x = 0; x < new_width; ++x) {
            const double top = img.at(x0[x], y0) * (1.0 - fx[x]) + img.at(x1[x], y0) * fx[x];
            const double bot = img.at(x0[x], y1) * (1.0 - fx[x]) + img.at(x1[x], y1) * fx[x];
            const double v = top * (1.0 - fy) + bot * fy;
            out.at(x, y) = uint8_t(std::clamp(std::round(v), 0.0, 255.0));
        }
    }
    return out;
}

} // namespace pestdet

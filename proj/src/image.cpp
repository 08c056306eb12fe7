#include "msurfel/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include <png.h>

#include "msurfel/shading.hpp"

namespace msurfel {

ImageF to_imagef(const RenderFrame& frame) {
    ImageF img;
    img.width = frame.width;
    img.height = frame.height;
    const size_t n = static_cast<size_t>(frame.width) * frame.height;
    img.rgba.resize(n * 4);
    for (size_t i = 0; i < n; ++i) {
        img.rgba[i * 4 + 0] = frame.color[i * 3 + 0];
        img.rgba[i * 4 + 1] = frame.color[i * 3 + 1];
        img.rgba[i * 4 + 2] = frame.color[i * 3 + 2];
        img.rgba[i * 4 + 3] = frame.alpha[i];
    }
    return img;
}

ImageU8 to_u8(const ImageF& img) {
    ImageU8 out;
    out.width = img.width;
    out.height = img.height;
    out.rgba.resize(img.rgba.size());
    for (size_t i = 0; i < img.rgba.size(); ++i)
        out.rgba[i] = static_cast<uint8_t>(std::lround(clamp01(img.rgba[i]) * 255.0f));
    return out;
}

ImageF to_f(const ImageU8& img) {
    ImageF out;
    out.width = img.width;
    out.height = img.height;
    out.rgba.resize(img.rgba.size());
    for (size_t i = 0; i < img.rgba.size(); ++i)
        out.rgba[i] = static_cast<float>(img.rgba[i]) / 255.0f;
    return out;
}

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

void save_png(const ImageU8& img, const std::string& path) {
    if (img.width <= 0 || img.height <= 0 ||
        img.rgba.size() != static_cast<size_t>(img.width) * img.height * 4)
        throw std::invalid_argument("save_png: inconsistent image dimensions");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot open for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng write error: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGBA,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, const_cast<png_bytep>(&img.rgba[static_cast<size_t>(y) * img.width * 4]));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

ImageU8 load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("cannot open: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("libpng read error: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    // Normalize any input to 8-bit RGBA.
    png_set_expand(png);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    const png_byte color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_filler(png, 0xFF, PNG_FILLER_AFTER);
    png_read_update_info(png, info);

    ImageU8 img;
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.rgba.resize(static_cast<size_t>(img.width) * img.height * 4);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = &img.rgba[static_cast<size_t>(y) * img.width * 4];
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void save_raw(const float* data, int width, int height, int channels,
              const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(sizeof(float)) * width * height * channels);
    if (!out) throw std::runtime_error("short write: " + path);

    nlohmann::json j;
    j["width"] = width;
    j["height"] = height;
    j["channels"] = channels;
    j["dtype"] = "float32";
    j["endianness"] = "little";
    j["layout"] = "row-major, channels interleaved";
    std::ofstream side(path + ".json");
    if (!side) throw std::runtime_error("cannot open for writing: " + path + ".json");
    side << j.dump(2) << '\n';
}

void save_raw(const ImageF& img, const std::string& path) {
    save_raw(img.rgba.data(), img.width, img.height, 4, path);
}

ImageF load_raw(const std::string& path) {
    std::ifstream side(path + ".json");
    if (!side) throw std::runtime_error("cannot open: " + path + ".json");
    nlohmann::json j;
    side >> j;
    const int w = j.at("width").get<int>();
    const int h = j.at("height").get<int>();
    const int c = j.at("channels").get<int>();
    if (c != 4) throw std::runtime_error("load_raw: expected 4 channels in " + path);

    ImageF img;
    img.width = w;
    img.height = h;
    img.rgba.resize(static_cast<size_t>(w) * h * 4);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    in.read(reinterpret_cast<char*>(img.rgba.data()),
            static_cast<std::streamsize>(img.rgba.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(img.rgba.size() * sizeof(float)))
        throw std::runtime_error("raw image truncated: " + path);
    return img;
}

}  // namespace msurfel

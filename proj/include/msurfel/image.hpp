#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msurfel/rasterizer.hpp"

namespace msurfel {

/// 8-bit RGBA, straight (non-premultiplied) alpha, row-major (y*W+x)*4+c.
struct ImageU8 {
    int width = 0, height = 0;
    std::vector<uint8_t> rgba;
};

/// Float RGBA, same layout, nominally in [0,1].
struct ImageF {
    int width = 0, height = 0;
    std::vector<float> rgba;
};

ImageF to_imagef(const RenderFrame& frame);
ImageU8 to_u8(const ImageF& img);  // round(clamp01(v) * 255)
ImageF to_f(const ImageU8& img);   // v / 255

void save_png(const ImageU8& img, const std::string& path);
ImageU8 load_png(const std::string& path);

/// Flat float32 little-endian blob plus "<path>.json" sidecar recording
/// width/height/channels/dtype/layout.
void save_raw(const float* data, int width, int height, int channels,
              const std::string& path);
void save_raw(const ImageF& img, const std::string& path);
ImageF load_raw(const std::string& path);

}  // namespace msurfel

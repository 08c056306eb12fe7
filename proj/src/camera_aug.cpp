#include "msurfel/camera_aug.hpp"

#include <cmath>
#include <stdexcept>

namespace msurfel {

PinholeCamera augment_intrinsics(const PinholeCamera& cam, const AugmentSpec& spec) {
    if (!(spec.s > 0.0)) throw std::invalid_argument("augment_intrinsics: scale must be > 0");
    const double s = spec.s;
    const double dx = (cam.width - s * cam.width) / 2.0;
    const double dy = (cam.height - s * cam.height) / 2.0;
    PinholeCamera out = cam;
    out.fx = static_cast<float>(cam.fx / s);
    out.fy = static_cast<float>(cam.fy / s);
    out.cx = static_cast<float>((cam.cx - dx) / s);
    out.cy = static_cast<float>((cam.cy - dy) / s);
    return out;
}

namespace {

inline const float* texel_or_null(const ImageF& img, int x, int y) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return nullptr;
    return &img.rgba[(static_cast<size_t>(y) * img.width + x) * 4];
}

}  // namespace

ImageF augment_image(const ImageF& img, const AugmentSpec& spec) {
    if (!(spec.s > 0.0)) throw std::invalid_argument("augment_image: scale must be > 0");
    const double s = spec.s;
    const double dx = (img.width - s * img.width) / 2.0;
    const double dy = (img.height - s * img.height) / 2.0;

    ImageF out;
    out.width = img.width;
    out.height = img.height;
    out.rgba.assign(img.rgba.size(), 0.0f);

    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const double px = s * (x + 0.5) + dx;
            const double py = s * (y + 0.5) + dy;
            float* dst = &out.rgba[(static_cast<size_t>(y) * out.width + x) * 4];
            if (spec.filter == ResampleFilter::kNearest) {
                const float* src = texel_or_null(img, static_cast<int>(std::floor(px)),
                                                 static_cast<int>(std::floor(py)));
                if (src)
                    for (int c = 0; c < 4; ++c) dst[c] = src[c];
            } else {
                const double tx = px - 0.5, ty = py - 0.5;
                const double fx = std::floor(tx), fy = std::floor(ty);
                const double ax = tx - fx, ay = ty - fy;
                const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
                const double w[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay,
                                     ax * ay};
                const float* t[4] = {texel_or_null(img, x0, y0), texel_or_null(img, x0 + 1, y0),
                                     texel_or_null(img, x0, y0 + 1),
                                     texel_or_null(img, x0 + 1, y0 + 1)};
                for (int c = 0; c < 4; ++c) {
                    double acc = 0.0;  // missing taps contribute transparent black
                    for (int k = 0; k < 4; ++k)
                        if (t[k]) acc += w[k] * t[k][c];
                    dst[c] = static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

ImageU8 augment_image(const ImageU8& img, const AugmentSpec& spec) {
    if (spec.s == 1.0) return img;  // identity is byte-exact by definition
    return to_u8(augment_image(to_f(img), spec));
}

}  // namespace msurfel

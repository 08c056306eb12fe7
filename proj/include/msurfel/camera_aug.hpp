#pragma once

#include "msurfel/camera.hpp"
#include "msurfel/image.hpp"

namespace msurfel {

enum class ResampleFilter { kNearest, kBilinear };

struct AugmentSpec {
    double s = 1.0;  // distance scale; <1 moves closer (crop), >1 farther (pad)
    ResampleFilter filter = ResampleFilter::kBilinear;
};

/// dx = (W - s*W)/2, dy likewise; fx' = fx/s, cx' = (cx - dx)/s, and the
/// same for y. Output resolution stays W x H. Throws on s <= 0.
PinholeCamera augment_intrinsics(const PinholeCamera& cam, const AugmentSpec& spec);

/// Output pixel center (x+0.5, y+0.5) samples the original at
/// (s*(x+0.5) + dx, s*(y+0.5) + dy); coordinates outside the source are
/// transparent black, which realizes the central crop (s < 1) and the
/// black-padded zoom-out (s > 1) in one mapping.
ImageF augment_image(const ImageF& img, const AugmentSpec& spec);
ImageU8 augment_image(const ImageU8& img, const AugmentSpec& spec);

}  // namespace msurfel

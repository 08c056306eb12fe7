#pragma once

#include <cassert>
#include <cmath>

#include "msurfel/math_types.hpp"
#include "msurfel/scene.hpp"

namespace msurfel {

inline constexpr double kSh0 = 0.2820948;
inline constexpr double kSh1 = 0.4886025;

template <class S>
struct ShadeSample {
    Vec3<S> rgb;  // in [0,1]
    S alpha;      // in [0,1]
    S omega;
};

/// omega = clamp(r / S_H, 0, 1): footprints smaller than a high-res texel
/// per pixel fade the high texture out.
template <class S>
inline S lod_weight(S r) {
    assert(r >= S(0));
    const S w = r / S(kHighTexSize);
    return w < S(0) ? S(0) : (w > S(1) ? S(1) : w);
}

/// Texel indices (premultiplied by 4 channels) and weights for one bilinear
/// read at tx = (u+1)/2*size - 0.5 with clamp-to-edge addressing. Shared by
/// the forward pass and the gradient scatter so both agree texel-for-texel.
template <class S>
struct BilinearTap {
    int i00, i10, i01, i11;
    S w00, w10, w01, w11;
};

template <class S>
inline BilinearTap<S> bilinear_tap(int size, S u, S v) {
    const S tx = (u + S(1)) * S(0.5) * S(size) - S(0.5);
    const S ty = (v + S(1)) * S(0.5) * S(size) - S(0.5);
    const S fx = std::floor(tx);
    const S fy = std::floor(ty);
    const S ax = tx - fx;
    const S ay = ty - fy;
    const int xf = static_cast<int>(fx);
    const int yf = static_cast<int>(fy);
    const int x0 = std::min(std::max(xf, 0), size - 1);
    const int y0 = std::min(std::max(yf, 0), size - 1);
    const int x1 = std::min(std::max(xf + 1, 0), size - 1);
    const int y1 = std::min(std::max(yf + 1, 0), size - 1);
    BilinearTap<S> t;
    t.i00 = (y0 * size + x0) * 4;
    t.i10 = (y0 * size + x1) * 4;
    t.i01 = (y1 * size + x0) * 4;
    t.i11 = (y1 * size + x1) * 4;
    t.w00 = (S(1) - ax) * (S(1) - ay);
    t.w10 = ax * (S(1) - ay);
    t.w01 = (S(1) - ax) * ay;
    t.w11 = ax * ay;
    return t;
}

template <class S>
inline Vec4<S> sample_tap(const float* grid, const BilinearTap<S>& t) {
    Vec4<S> out;
    for (int c = 0; c < 4; ++c) {
        out[c] = t.w00 * S(grid[t.i00 + c]) + t.w10 * S(grid[t.i10 + c]) +
                 t.w01 * S(grid[t.i01 + c]) + t.w11 * S(grid[t.i11 + c]);
    }
    return out;
}

template <class S>
inline Vec4<S> sample_bilinear(const float* grid, int size, S u, S v) {
    return sample_tap(grid, bilinear_tap(size, u, v));
}

/// Degree-1 real SH basis, 3DGS order: Y00, then (-y, z, -x) scaled by the
/// degree-1 constant.
template <class S>
inline Vec4<S> sh_basis(const Vec3<S>& dir) {
    return Vec4<S>(S(kSh0), S(kSh1) * -dir.y(), S(kSh1) * dir.z(), S(kSh1) * -dir.x());
}

/// coeffs layout is sh[k*3 + channel].
template <class S>
inline Vec3<S> eval_sh(const std::array<float, 12>& coeffs, const Vec3<S>& dir) {
    const Vec4<S> b = sh_basis(dir);
    Vec3<S> out;
    for (int c = 0; c < 3; ++c) {
        out[c] = b[0] * S(coeffs[c]) + b[1] * S(coeffs[3 + c]) + b[2] * S(coeffs[6 + c]) +
                 b[3] * S(coeffs[9 + c]);
    }
    return out;
}

template <class S>
inline S clamp01(S x) {
    return x < S(0) ? S(0) : (x > S(1) ? S(1) : x);
}

/// Everything shade computes, pre-clamp values included, so the backward
/// pass can replay the exact arithmetic and see which clamps engaged.
template <class S>
struct ShadeParts {
    BilinearTap<S> low_tap, high_tap;
    Vec4<S> low, high_raw, high;  // high = tanh(high_raw)
    Vec3<S> sh_rgb;
    Vec3<S> rgb_pre;
    S alpha_pre;
    ShadeSample<S> sample;
};

template <class S>
inline ShadeParts<S> shade_parts(const Surfel& surfel, S u, S v, const Vec3<S>& view_dir,
                                 S omega, S dc) {
    ShadeParts<S> p;
    p.low_tap = bilinear_tap(kLowTexSize, u, v);
    p.high_tap = bilinear_tap(kHighTexSize, u, v);
    p.low = sample_tap(surfel.tex.low.data(), p.low_tap);
    if (omega == S(0)) {
        // omega * tanh(x) == 0 for any finite x, so the high level can be
        // skipped without changing a single output value.
        p.high_raw = Vec4<S>::Zero();
        p.high = Vec4<S>::Zero();
    } else {
        p.high_raw = sample_tap(surfel.tex.high.data(), p.high_tap);
        for (int c = 0; c < 4; ++c) p.high[c] = std::tanh(p.high_raw[c]);
    }
    p.sh_rgb = eval_sh(surfel.sh, view_dir);
    for (int c = 0; c < 3; ++c) p.rgb_pre[c] = p.sh_rgb[c] + p.low[c] + omega * p.high[c];
    p.alpha_pre = p.low[3] + omega * p.high[3] + dc;
    p.sample.rgb = Vec3<S>(clamp01(p.rgb_pre[0]), clamp01(p.rgb_pre[1]), clamp01(p.rgb_pre[2]));
    p.sample.alpha = clamp01(p.alpha_pre);
    p.sample.omega = omega;
    return p;
}

template <class S>
inline ShadeSample<S> shade(const Surfel& surfel, S u, S v, const Vec3<S>& view_dir, S omega,
                            S dc) {
    return shade_parts(surfel, u, v, view_dir, omega, dc).sample;
}

}  // namespace msurfel

#pragma once

// Shared fixtures for the unit and acceptance suites: randomized-but-valid
// scenes and simple axis-aligned cameras.

#include <cmath>

#include "msurfel/camera.hpp"
#include "msurfel/rng.hpp"
#include "msurfel/scene.hpp"

namespace msurfel::testutil {

inline Quatf random_rotation(Rng& rng) {
    // Uniform-ish: random axis, random angle.
    Vec3f axis(static_cast<float>(rng.normal()), static_cast<float>(rng.normal()),
               static_cast<float>(rng.normal()));
    if (axis.norm() < 1e-6f) axis = Vec3f::UnitZ();
    axis.normalize();
    const float angle = static_cast<float>(rng.uniform(0.0, 2.0 * M_PI));
    Quatf q(Eigen::AngleAxisf(angle, axis));
    q.normalize();
    if (q.w() < 0.0f) q.coeffs() = -q.coeffs();
    return q;
}

struct SceneParams {
    int count = 20;
    float extent = 0.5f;      // positions fill [-extent, extent]^3
    float scale_min = 0.03f;
    float scale_max = 0.10f;
    float alpha_min = 0.1f;
    float alpha_max = 0.9f;
    float high_amp = 1.5f;    // raw (pre-tanh) high-texture range
    float sh_amp = 0.15f;
};

inline Scene make_random_scene(Rng& rng, const SceneParams& p = {}) {
    Scene scene;
    scene.name = "random";
    scene.surfels.resize(p.count);
    for (int i = 0; i < p.count; ++i) {
        Surfel& s = scene.surfels[i];
        s.id = i;
        for (int a = 0; a < 3; ++a)
            s.mu[a] = static_cast<float>(rng.uniform(-p.extent, p.extent));
        s.scale = Vec2f(static_cast<float>(rng.uniform(p.scale_min, p.scale_max)),
                        static_cast<float>(rng.uniform(p.scale_min, p.scale_max)));
        s.rot = random_rotation(rng);
        for (auto& c : s.sh) c = static_cast<float>(rng.uniform(-p.sh_amp, p.sh_amp));
        for (int t = 0; t < kLowTexSize * kLowTexSize; ++t) {
            for (int c = 0; c < 3; ++c)
                s.tex.low[t * 4 + c] = static_cast<float>(rng.uniform(-0.4, 0.9));
            s.tex.low[t * 4 + 3] =
                static_cast<float>(rng.uniform(p.alpha_min, p.alpha_max));
        }
        for (auto& v : s.tex.high)
            v = static_cast<float>(rng.uniform(-p.high_amp, p.high_amp));
    }
    return scene;
}

/// Identity-rotation camera at distance `d` in front of the origin, looking
/// along +z, principal point at the image center.
inline PinholeCamera make_camera(int width, int height, float fx, float d) {
    PinholeCamera cam;
    cam.width = width;
    cam.height = height;
    cam.fx = fx;
    cam.fy = fx;
    cam.cx = width / 2.0f;
    cam.cy = height / 2.0f;
    cam.R = Mat3f::Identity();
    cam.t = Vec3f(0.0f, 0.0f, d);
    return cam;
}

/// One fronto-parallel surfel at the origin with constant textures; handy
/// for hand-computable compositing cases.
inline Surfel flat_surfel(int id, float z, float half_extent, const Vec3f& rgb, float alpha) {
    Surfel s;
    s.id = id;
    s.mu = Vec3f(0.0f, 0.0f, z);
    s.scale = Vec2f(half_extent, half_extent);
    s.rot = Quatf::Identity();
    s.sh.fill(0.0f);
    for (int t = 0; t < kLowTexSize * kLowTexSize; ++t) {
        for (int c = 0; c < 3; ++c) s.tex.low[t * 4 + c] = rgb[c];
        s.tex.low[t * 4 + 3] = alpha;
    }
    s.tex.high.fill(0.0f);
    return s;
}

}  // namespace msurfel::testutil

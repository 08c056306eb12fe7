#pragma once

#include <optional>
#include <vector>

#include "msurfel/animation.hpp"
#include "msurfel/camera.hpp"
#include "msurfel/geometry.hpp"
#include "msurfel/math_types.hpp"
#include "msurfel/scene.hpp"

namespace msurfel {

struct RenderSettings {
    int tile_size = 16;
    float transmittance_floor = 1e-4f;
    float alpha_cutoff = 1.0f / 255.0f;
    std::optional<float> force_omega;  // LOD override for ablations
    int thread_count = 0;              // 0 = runtime default
    bool record_hits = false;          // render_brute always records
};

template <class S>
struct HitRecord {
    int32_t id;
    S alpha;
    S depth;
};

/// Buffers are row-major, (y*W + x); color/normal have 3 interleaved
/// channels. `depth` stores unnormalized alpha-weighted depth (sum T*a*d);
/// expected depth is depth/alpha where alpha > 0. `normal` accumulates
/// world normals flipped toward the camera, weighted the same way.
template <class S>
struct RenderFrameT {
    int width = 0, height = 0;
    std::vector<S> color;
    std::vector<S> alpha;
    std::vector<S> depth;
    std::vector<S> normal;
    std::vector<std::vector<HitRecord<S>>> per_pixel_hits;  // empty unless recorded
};
using RenderFrame = RenderFrameT<float>;

/// Per-frame render-ready surfel: world frame, camera depth, LOD weight,
/// and a conservative inclusive pixel bbox (full frame when a footprint
/// corner fails to project).
template <class S>
struct PreparedSurfel {
    Vec3<S> mu, t_axis, b_axis, n;
    Vec2<S> scale;
    S z_cam;
    S omega;
    S dc;
    int32_t id;
    const Surfel* src;
    int x0, y0, x1, y1;
};

/// Prepared surfels for every posed surfel whose center is in front of the
/// camera, sorted ascending by (center depth, id). The same list drives the
/// tiled renderer and the brute-force oracle, fixing the summation order.
template <class S>
std::vector<PreparedSurfel<S>> prepare_surfels(const std::vector<PosedSurfel>& posed,
                                               const PinholeCamera& cam,
                                               const RenderSettings& settings);

/// Indices into scene.surfels, front-to-back by posed center depth,
/// ties by ascending id. Surfels behind the camera are excluded.
std::vector<int> sort_surfels(const Scene& scene, const PinholeCamera& cam,
                              const SkeletonPose* pose);

/// Camera ray through the center of pixel (ix, iy); direction normalized
/// in double before narrowing.
template <class S>
Ray<S> pixel_ray(const PinholeCamera& cam, int ix, int iy);

/// Tiled front-to-back over-compositing. Per pixel: intersect candidates in
/// sorted order, shade with the per-surfel LOD weight, skip hits with
/// alpha < alpha_cutoff, stop once transmittance < transmittance_floor.
/// Background is transparent black.
template <class S>
RenderFrameT<S> render(const Scene& scene, const PinholeCamera& cam, const SkeletonPose* pose,
                       const RenderSettings& settings);

/// Same math, serial, no culling: every pixel tests every sorted surfel.
/// Always records per_pixel_hits.
template <class S>
RenderFrameT<S> render_brute(const Scene& scene, const PinholeCamera& cam,
                             const SkeletonPose* pose, const RenderSettings& settings);

}  // namespace msurfel

#include "msurfel/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <omp.h>

#include "msurfel/detail/composite.hpp"
#include "msurfel/shading.hpp"

namespace msurfel {

using detail::composite_surfel;
using detail::PixelState;

namespace {

/// Shared ray construction: both the public pixel_ray and the render loops
/// go through here so rays agree bitwise.
template <class S>
struct RayGen {
    Eigen::Vector3d c0, c1, c2, origin;
    double fx, fy, cx, cy;

    explicit RayGen(const PinholeCamera& cam) {
        const Eigen::Matrix3d Rt = cam.R.cast<double>().transpose();
        c0 = Rt.col(0);
        c1 = Rt.col(1);
        c2 = Rt.col(2);
        origin = -(Rt * cam.t.cast<double>());
        fx = cam.fx;
        fy = cam.fy;
        cx = cam.cx;
        cy = cam.cy;
    }

    Ray<S> ray(int ix, int iy) const {
        const double xd = (ix + 0.5 - cx) / fx;
        const double yd = (iy + 0.5 - cy) / fy;
        Eigen::Vector3d d = xd * c0 + yd * c1 + c2;
        d.normalize();
        return Ray<S>{origin.cast<S>(), d.cast<S>()};
    }
};

template <class S>
inline void store_pixel(RenderFrameT<S>& f, int idx, const PixelState<S>& st) {
    f.color[idx * 3 + 0] = st.rgb[0];
    f.color[idx * 3 + 1] = st.rgb[1];
    f.color[idx * 3 + 2] = st.rgb[2];
    f.alpha[idx] = st.alpha;
    f.depth[idx] = st.depth;
    f.normal[idx * 3 + 0] = st.normal[0];
    f.normal[idx * 3 + 1] = st.normal[1];
    f.normal[idx * 3 + 2] = st.normal[2];
}

template <class S>
RenderFrameT<S> make_frame(const PinholeCamera& cam, bool with_hits) {
    RenderFrameT<S> f;
    f.width = cam.width;
    f.height = cam.height;
    const size_t n = static_cast<size_t>(cam.width) * cam.height;
    f.color.assign(n * 3, S(0));
    f.alpha.assign(n, S(0));
    f.depth.assign(n, S(0));
    f.normal.assign(n * 3, S(0));
    if (with_hits) f.per_pixel_hits.resize(n);
    return f;
}

}  // namespace

template <class S>
std::vector<PreparedSurfel<S>> prepare_surfels(const std::vector<PosedSurfel>& posed,
                                               const PinholeCamera& cam,
                                               const RenderSettings& settings) {
    std::vector<PreparedSurfel<S>> out;
    out.reserve(posed.size());
    const int W = cam.width, H = cam.height;

    for (const PosedSurfel& p : posed) {
        const auto center = project_point<S>(cam, p.mu.cast<S>());
        if (!center) continue;  // center behind the near plane: culled from the sort

        PreparedSurfel<S> ps;
        ps.mu = p.mu.cast<S>();
        const Mat3<S> R = p.rot.cast<S>().toRotationMatrix();
        ps.t_axis = R.col(0);
        ps.b_axis = R.col(1);
        ps.n = R.col(2);
        ps.scale = p.scale.cast<S>();
        ps.z_cam = S(center->z_cam);
        ps.dc = S(p.dc);
        ps.id = p.src->id;
        ps.src = p.src;

        if (settings.force_omega) {
            ps.omega = S(*settings.force_omega);
        } else {
            const double r = screen_radius<S>(cam, ps.mu, ps.t_axis, ps.b_axis, ps.scale);
            ps.omega = S(lod_weight(r));
        }

        // Conservative pixel bbox from the projected footprint corners; the
        // projected quad is their convex hull, so +-1 px slop absorbs
        // rounding. Any corner behind the near plane falls back to the full
        // frame.
        double min_x = center->x, max_x = center->x;
        double min_y = center->y, max_y = center->y;
        bool fallback = false;
        for (int sx = -1; sx <= 1 && !fallback; sx += 2) {
            for (int sy = -1; sy <= 1; sy += 2) {
                const Vec3<S> corner =
                    ps.mu + S(sx) * ps.scale.x() * ps.t_axis + S(sy) * ps.scale.y() * ps.b_axis;
                const auto pc = project_point<S>(cam, corner);
                if (!pc) {
                    fallback = true;
                    break;
                }
                min_x = std::min(min_x, pc->x);
                max_x = std::max(max_x, pc->x);
                min_y = std::min(min_y, pc->y);
                max_y = std::max(max_y, pc->y);
            }
        }
        if (fallback) {
            ps.x0 = 0;
            ps.y0 = 0;
            ps.x1 = W - 1;
            ps.y1 = H - 1;
        } else {
            ps.x0 = std::max(0, static_cast<int>(std::floor(min_x - 1.0)));
            ps.y0 = std::max(0, static_cast<int>(std::floor(min_y - 1.0)));
            ps.x1 = std::min(W - 1, static_cast<int>(std::ceil(max_x + 1.0)));
            ps.y1 = std::min(H - 1, static_cast<int>(std::ceil(max_y + 1.0)));
        }
        out.push_back(ps);
    }

    std::sort(out.begin(), out.end(), [](const PreparedSurfel<S>& a, const PreparedSurfel<S>& b) {
        if (a.z_cam != b.z_cam) return a.z_cam < b.z_cam;
        return a.id < b.id;
    });
    return out;
}

std::vector<int> sort_surfels(const Scene& scene, const PinholeCamera& cam,
                              const SkeletonPose* pose) {
    const std::vector<PosedSurfel> posed = pose_scene(scene, pose);
    RenderSettings st;
    st.force_omega = 0.0f;  // skip radius work; order only needs depth
    const auto prepared = prepare_surfels<float>(posed, cam, st);
    std::vector<int> order;
    order.reserve(prepared.size());
    for (const auto& ps : prepared)
        order.push_back(static_cast<int>(ps.src - scene.surfels.data()));
    return order;
}

template <class S>
Ray<S> pixel_ray(const PinholeCamera& cam, int ix, int iy) {
    return RayGen<S>(cam).ray(ix, iy);
}

template <class S>
RenderFrameT<S> render(const Scene& scene, const PinholeCamera& cam, const SkeletonPose* pose,
                       const RenderSettings& settings) {
    const std::vector<PosedSurfel> posed = pose_scene(scene, pose);
    const auto prepared = prepare_surfels<S>(posed, cam, settings);
    RenderFrameT<S> frame = make_frame<S>(cam, settings.record_hits);

    const int W = cam.width, H = cam.height;
    const int ts = settings.tile_size;
    const int tiles_x = (W + ts - 1) / ts;
    const int tiles_y = (H + ts - 1) / ts;

    // Bin sorted surfels per tile; bins preserve the sorted order because
    // surfels are visited in it.
    std::vector<std::vector<int>> bins(static_cast<size_t>(tiles_x) * tiles_y);
    for (int i = 0; i < static_cast<int>(prepared.size()); ++i) {
        const auto& ps = prepared[i];
        if (ps.x0 > ps.x1 || ps.y0 > ps.y1) continue;  // fully off-screen
        for (int ty = ps.y0 / ts; ty <= ps.y1 / ts; ++ty)
            for (int tx = ps.x0 / ts; tx <= ps.x1 / ts; ++tx)
                bins[static_cast<size_t>(ty) * tiles_x + tx].push_back(i);
    }

    const RayGen<S> gen(cam);
    const S cutoff = S(settings.alpha_cutoff);
    const S floor_t = S(settings.transmittance_floor);
    const int n_tiles = tiles_x * tiles_y;
    const int threads =
        settings.thread_count > 0 ? settings.thread_count : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (int tile = 0; tile < n_tiles; ++tile) {
        const auto& bin = bins[tile];
        if (bin.empty()) continue;
        const int tx = tile % tiles_x, ty = tile / tiles_x;
        const int px0 = tx * ts, px1 = std::min(W, px0 + ts);
        const int py0 = ty * ts, py1 = std::min(H, py0 + ts);
        for (int iy = py0; iy < py1; ++iy) {
            for (int ix = px0; ix < px1; ++ix) {
                const Ray<S> ray = gen.ray(ix, iy);
                const int idx = iy * W + ix;
                PixelState<S> st;
                auto* hits = settings.record_hits ? &frame.per_pixel_hits[idx] : nullptr;
                for (int i : bin) {
                    const auto& ps = prepared[i];
                    if (ix < ps.x0 || ix > ps.x1 || iy < ps.y0 || iy > ps.y1) continue;
                    if (composite_surfel(ps, ray, cutoff, floor_t, st, hits)) break;
                }
                store_pixel(frame, idx, st);
            }
        }
    }
    return frame;
}

template <class S>
RenderFrameT<S> render_brute(const Scene& scene, const PinholeCamera& cam,
                             const SkeletonPose* pose, const RenderSettings& settings) {
    const std::vector<PosedSurfel> posed = pose_scene(scene, pose);
    const auto prepared = prepare_surfels<S>(posed, cam, settings);
    RenderFrameT<S> frame = make_frame<S>(cam, /*with_hits=*/true);

    const RayGen<S> gen(cam);
    const S cutoff = S(settings.alpha_cutoff);
    const S floor_t = S(settings.transmittance_floor);
    for (int iy = 0; iy < cam.height; ++iy) {
        for (int ix = 0; ix < cam.width; ++ix) {
            const Ray<S> ray = gen.ray(ix, iy);
            const int idx = iy * cam.width + ix;
            PixelState<S> st;
            for (const auto& ps : prepared) {
                if (composite_surfel(ps, ray, cutoff, floor_t, st, &frame.per_pixel_hits[idx]))
                    break;
            }
            store_pixel(frame, idx, st);
        }
    }
    return frame;
}

template std::vector<PreparedSurfel<float>> prepare_surfels<float>(
    const std::vector<PosedSurfel>&, const PinholeCamera&, const RenderSettings&);
template std::vector<PreparedSurfel<double>> prepare_surfels<double>(
    const std::vector<PosedSurfel>&, const PinholeCamera&, const RenderSettings&);
template Ray<float> pixel_ray<float>(const PinholeCamera&, int, int);
template Ray<double> pixel_ray<double>(const PinholeCamera&, int, int);
template RenderFrameT<float> render<float>(const Scene&, const PinholeCamera&,
                                           const SkeletonPose*, const RenderSettings&);
template RenderFrameT<double> render<double>(const Scene&, const PinholeCamera&,
                                             const SkeletonPose*, const RenderSettings&);
template RenderFrameT<float> render_brute<float>(const Scene&, const PinholeCamera&,
                                                 const SkeletonPose*, const RenderSettings&);
template RenderFrameT<double> render_brute<double>(const Scene&, const PinholeCamera&,
                                                   const SkeletonPose*, const RenderSettings&);

}  // namespace msurfel

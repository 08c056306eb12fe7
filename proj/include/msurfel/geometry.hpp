#pragma once

#include <optional>
#include <vector>

#include "msurfel/camera.hpp"
#include "msurfel/math_types.hpp"
#include "msurfel/scene.hpp"

namespace msurfel {

/// Orthonormal right-handed frame; rot is the quaternion of R = [t b n].
struct SurfelFrame {
    Vec3f n = Vec3f(0, 0, 1);
    Vec3f t = Vec3f(1, 0, 0);
    Vec3f b = Vec3f(0, 1, 0);
    Quatf rot = Quatf::Identity();
};

template <class S>
struct Ray {
    Vec3<S> origin;
    Vec3<S> dir;  // unit
};

struct FrameEstimate {
    std::vector<SurfelFrame> frames;
    std::vector<Diagnostic> diagnostics;
};

/// Per point: k nearest neighbors (ties broken by index), edge vectors
/// e^m = mu^m - mu, normal = mean of e^m x e^((m mod k)+1), tangent from
/// up = (0,1,0) (fallback (1,0,0) when nearly parallel, recorded as
/// "fallback up vector"). A vanishing normal yields the identity frame and
/// a "degenerate neighborhood" diagnostic.
FrameEstimate estimate_surfel_frames(const std::vector<Vec3f>& positions, int k = 3);

template <class S>
struct RaySurfelHit {
    S u, v;   // local coords over [-1,1]
    S depth;  // distance along the ray
};

/// Plane intersection against the splat through mu with unit axes
/// (t_axis, b_axis, n) and half-extents `scale`. Hit only when
/// |u| <= 1, |v| <= 1 and depth > kNearEps; parallel rays miss.
template <class S>
std::optional<RaySurfelHit<S>> intersect_ray_surfel(const Ray<S>& ray, const Vec3<S>& mu,
                                                    const Vec3<S>& t_axis, const Vec3<S>& b_axis,
                                                    const Vec3<S>& n, const Vec2<S>& scale) {
    const S denom = ray.dir.dot(n);
    if (std::abs(static_cast<double>(denom)) < 1e-9) return std::nullopt;
    const S depth = (mu - ray.origin).dot(n) / denom;
    if (!(static_cast<double>(depth) > kNearEps)) return std::nullopt;
    const Vec3<S> d = ray.origin + depth * ray.dir - mu;
    const S u = d.dot(t_axis) / scale.x();
    const S v = d.dot(b_axis) / scale.y();
    if (!(u >= S(-1) && u <= S(1) && v >= S(-1) && v <= S(1))) return std::nullopt;
    return RaySurfelHit<S>{u, v, depth};
}

template <class S>
std::optional<RaySurfelHit<S>> intersect_ray_surfel(const Ray<S>& ray, const Surfel& surfel) {
    const Mat3<S> R = surfel.rot.template cast<S>().toRotationMatrix();
    return intersect_ray_surfel<S>(ray, surfel.mu.template cast<S>(), Vec3<S>(R.col(0)),
                                   Vec3<S>(R.col(1)), Vec3<S>(R.col(2)),
                                   surfel.scale.template cast<S>());
}

/// Radius (px) of the circle around the projected footprint: max distance
/// from the projected center to any of the four projected corners
/// mu +- t*sx +- b*sy. Corners (or a center) behind the near plane are
/// skipped; 0 when nothing projects.
template <class S>
double screen_radius(const PinholeCamera& cam, const Vec3<S>& mu, const Vec3<S>& t_axis,
                     const Vec3<S>& b_axis, const Vec2<S>& scale) {
    const auto center = project_point<S>(cam, mu);
    if (!center) return 0.0;
    double r = 0.0;
    for (int sx = -1; sx <= 1; sx += 2) {
        for (int sy = -1; sy <= 1; sy += 2) {
            const Vec3<S> corner =
                mu + S(sx) * scale.x() * t_axis + S(sy) * scale.y() * b_axis;
            const auto p = project_point<S>(cam, corner);
            if (!p) continue;
            const double dx = p->x - center->x;
            const double dy = p->y - center->y;
            r = std::max(r, std::sqrt(dx * dx + dy * dy));
        }
    }
    return r;
}

template <class S>
double screen_radius(const PinholeCamera& cam, const Surfel& surfel) {
    const Mat3<S> R = surfel.rot.template cast<S>().toRotationMatrix();
    return screen_radius<S>(cam, surfel.mu.template cast<S>(), Vec3<S>(R.col(0)),
                            Vec3<S>(R.col(1)), surfel.scale.template cast<S>());
}

}  // namespace msurfel

#pragma once

#include <optional>
#include <string>

#include "msurfel/math_types.hpp"

namespace msurfel {

/// Near-plane epsilon shared by projection and ray-splat intersection,
/// in world units.
inline constexpr double kNearEps = 1e-4;

/// Pinhole camera. world_to_cam maps world points into camera space as
/// p_cam = R * p + t; the camera looks down +z. Pixel (ix, iy) covers
/// [ix, ix+1) x [iy, iy+1) with its center at (ix+0.5, iy+0.5) in the
/// continuous projection coordinates produced by project_point.
struct PinholeCamera {
    float fx = 1.0f, fy = 1.0f;
    float cx = 0.0f, cy = 0.0f;
    int width = 0, height = 0;
    Mat3f R = Mat3f::Identity();
    Vec3f t = Vec3f::Zero();

    Vec3f center() const { return -(R.transpose() * t); }
    bool valid() const { return fx > 0.0f && fy > 0.0f && width > 0 && height > 0; }
};

struct Projected {
    double x = 0.0, y = 0.0;  // px
    double z_cam = 0.0;
};

/// x = fx*X/Z + cx, y = fy*Y/Z + cy for camera-space (X,Y,Z).
/// Empty when Z <= kNearEps.
template <class S>
std::optional<Projected> project_point(const PinholeCamera& cam, const Vec3<S>& p_world) {
    const Vec3<S> pc = cam.R.template cast<S>() * p_world + cam.t.template cast<S>();
    if (!(static_cast<double>(pc.z()) > kNearEps)) return std::nullopt;
    Projected out;
    out.z_cam = static_cast<double>(pc.z());
    out.x = static_cast<double>(cam.fx) * static_cast<double>(pc.x()) / out.z_cam +
            static_cast<double>(cam.cx);
    out.y = static_cast<double>(cam.fy) * static_cast<double>(pc.y()) / out.z_cam +
            static_cast<double>(cam.cy);
    return out;
}

/// Camera JSON: {fx, fy, cx, cy, W, H, R (3x3 row-major), t (3)}.
PinholeCamera load_camera(const std::string& path);
void save_camera(const PinholeCamera& cam, const std::string& path);

}  // namespace msurfel

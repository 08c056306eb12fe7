#pragma once

#include <vector>

#include "msurfel/math_types.hpp"
#include "msurfel/scene.hpp"

namespace msurfel {

/// World-space surfel after skinning and per-frame offsets. Geometry only;
/// textures and SH stay with the canonical surfel behind `src`.
struct PosedSurfel {
    const Surfel* src = nullptr;
    Vec3f mu = Vec3f::Zero();
    Quatf rot = Quatf::Identity();
    Vec2f scale = Vec2f::Ones();
    float dc = 0.0f;  // opacity offset, consumed by shading
};

/// Linear blend skinning: B = sum_j w_j * A_j, position mapped
/// homogeneously, orientation re-orthonormalized from the images of the
/// canonical axes (Gram-Schmidt in t, b, n order). A near-singular blend
/// (|det| < 1e-8) keeps the canonical rotation and emits a diagnostic.
std::vector<PosedSurfel> lbs_pose(const std::vector<Surfel>& surfels, const SkeletonPose& pose,
                                  std::vector<Diagnostic>* diagnostics = nullptr);

/// mu += dx; rot = dr * rot (renormalized); scale = max(scale + ds, 1e-4);
/// dc accumulates into the shading opacity offset.
PosedSurfel apply_offsets(const PosedSurfel& surfel, const PoseOffsets& off);

/// Canonical pass-through when pose is null or has no joints; otherwise LBS,
/// then per-surfel offsets when the pose carries them (one per surfel).
std::vector<PosedSurfel> pose_scene(const Scene& scene, const SkeletonPose* pose,
                                    std::vector<Diagnostic>* diagnostics = nullptr);

inline constexpr float kMinScale = 1e-4f;

}  // namespace msurfel

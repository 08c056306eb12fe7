#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "msurfel/math_types.hpp"

namespace msurfel {

inline constexpr int kLowTexSize = 16;
inline constexpr int kHighTexSize = 32;
inline constexpr int kMaxSkinJoints = 4;

inline constexpr int kLowTexFloats = kLowTexSize * kLowTexSize * 4;
inline constexpr int kHighTexFloats = kHighTexSize * kHighTexSize * 4;
// id, mu(3), scale(2), rot wxyz(4), sh(12), skin joints(4), skin weights(4)
inline constexpr int kBaseFloatsPerSurfel = 30;
inline constexpr int kFloatsPerSurfel =
    kBaseFloatsPerSurfel + kLowTexFloats + kHighTexFloats;

inline constexpr float kUnitQuatTol = 1e-6f;
inline constexpr float kSkinWeightTol = 1e-6f;

/// Two texture levels per surfel, RGBA channel-interleaved, row-major
/// (index = (y*S + x)*4 + c).
///
/// `low` stores display-space values: RGB offset channels in [-1, 1] and an
/// alpha channel in [0, 1]. `high` stores raw pre-activation values; only
/// tanh(high) ever enters shading.
struct MultiScaleTexture {
    std::array<float, kLowTexFloats> low{};
    std::array<float, kHighTexFloats> high{};
};

struct SkinPair {
    std::int32_t joint = -1;
    float weight = 0.0f;
};

/// One textured planar primitive. `scale` holds half-extents along the local
/// x/y axes; the texture domain is (u,v) in [-1,1]^2 over that footprint.
/// `sh` is 4 degree-1 coefficients per RGB channel, laid out sh[k*3 + channel].
struct Surfel {
    std::int32_t id = 0;
    Vec3f mu = Vec3f::Zero();
    Vec2f scale = Vec2f::Ones();
    Quatf rot = Quatf::Identity();  // (w,x,y,z) on disk
    std::array<float, 12> sh{};
    MultiScaleTexture tex;
    std::array<SkinPair, kMaxSkinJoints> skin{};
    int skin_count = 0;
};

/// Pose-dependent per-surfel deltas. All-zero offsets (dr = identity) are a
/// no-op. dc is carried through to shading as an additive opacity offset.
struct PoseOffsets {
    Vec3f dx = Vec3f::Zero();
    Quatf dr = Quatf::Identity();
    Vec2f ds = Vec2f::Zero();
    float dc = 0.0f;
};

/// Per-joint affine transforms mapping canonical space to posed space,
/// plus optional per-surfel offsets applied after skinning.
struct SkeletonPose {
    struct Joint {
        Mat3f linear = Mat3f::Identity();
        Vec3f translation = Vec3f::Zero();
    };
    std::vector<Joint> joints;
    std::vector<PoseOffsets> offsets;  // empty, or one entry per surfel
};

struct Scene {
    std::vector<Surfel> surfels;
    std::int32_t joint_count = 0;
    std::string name;
    std::string metadata_json = "{}";  // creation parameters, free-form
};

struct Diagnostic {
    std::int32_t surfel_id = -1;
    std::string rule;
};

/// Empty result iff every type invariant holds. Each diagnostic names the
/// offending surfel and the violated rule.
std::vector<Diagnostic> validate_scene(const Scene& scene);

/// Writes the `.mss` container: a UTF-8 JSON header terminated by "\n\0",
/// then one float32 little-endian blob with three sections
/// (base records, low grids, high grids). Byte-identical for identical
/// scenes. Throws std::invalid_argument naming the surfel id if the scene
/// violates an invariant, std::runtime_error on I/O failure.
void save_scene(const Scene& scene, const std::string& path);

/// Inverse of save_scene. Rejects truncated blobs, header/blob size
/// mismatches and invariant violations (e.g. non-unit rotations).
Scene load_scene(const std::string& path);

nlohmann::json scene_header_json(const Scene& scene);

}  // namespace msurfel

#include "msurfel/animation.hpp"

#include <stdexcept>

namespace msurfel {

namespace {

Quatf canonical_sign(Quatf q) {
    q.normalize();
    if (q.w() < 0.0f) q.coeffs() = -q.coeffs();
    return q;
}

}  // namespace

std::vector<PosedSurfel> lbs_pose(const std::vector<Surfel>& surfels, const SkeletonPose& pose,
                                  std::vector<Diagnostic>* diagnostics) {
    std::vector<PosedSurfel> out;
    out.reserve(surfels.size());
    const int joint_count = static_cast<int>(pose.joints.size());

    for (const Surfel& s : surfels) {
        Mat3f lin = Mat3f::Zero();
        Vec3f trans = Vec3f::Zero();
        for (int k = 0; k < s.skin_count; ++k) {
            const SkinPair& sp = s.skin[k];
            if (sp.joint < 0 || sp.joint >= joint_count)
                throw std::invalid_argument("lbs_pose: skin joint index out of range");
            lin += sp.weight * pose.joints[sp.joint].linear;
            trans += sp.weight * pose.joints[sp.joint].translation;
        }

        PosedSurfel p;
        p.src = &s;
        p.scale = s.scale;
        p.mu = lin * s.mu + trans;

        if (std::abs(lin.determinant()) < 1e-8f) {
            p.rot = s.rot;  // blend collapsed; orientation left canonical
            if (diagnostics) diagnostics->push_back({s.id, "singular skinning blend"});
        } else {
            const Mat3f axes = lin * s.rot.toRotationMatrix();
            Vec3f t = axes.col(0).normalized();
            Vec3f b = axes.col(1) - axes.col(1).dot(t) * t;
            b.normalize();
            const Vec3f n = t.cross(b);
            Mat3f R;
            R.col(0) = t;
            R.col(1) = b;
            R.col(2) = n;
            p.rot = canonical_sign(Quatf(R));
        }
        out.push_back(p);
    }
    return out;
}

PosedSurfel apply_offsets(const PosedSurfel& surfel, const PoseOffsets& off) {
    PosedSurfel p = surfel;
    p.mu += off.dx;
    p.rot = canonical_sign(off.dr * p.rot);
    p.scale = (p.scale + off.ds).cwiseMax(kMinScale);
    p.dc += off.dc;
    return p;
}

std::vector<PosedSurfel> pose_scene(const Scene& scene, const SkeletonPose* pose,
                                    std::vector<Diagnostic>* diagnostics) {
    std::vector<PosedSurfel> posed;
    if (pose != nullptr && !pose->joints.empty()) {
        posed = lbs_pose(scene.surfels, *pose, diagnostics);
    } else {
        posed.reserve(scene.surfels.size());
        for (const Surfel& s : scene.surfels) posed.push_back({&s, s.mu, s.rot, s.scale, 0.0f});
    }
    if (pose != nullptr && !pose->offsets.empty()) {
        if (pose->offsets.size() != posed.size())
            throw std::invalid_argument("pose_scene: offsets count != surfel count");
        for (size_t i = 0; i < posed.size(); ++i)
            posed[i] = apply_offsets(posed[i], pose->offsets[i]);
    }
    return posed;
}

}  // namespace msurfel

#include "msurfel/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace msurfel {

FrameEstimate estimate_surfel_frames(const std::vector<Vec3f>& positions, int k) {
    const int n_pts = static_cast<int>(positions.size());
    if (k < 2) throw std::invalid_argument("estimate_surfel_frames: k must be >= 2");
    if (n_pts < k + 1)
        throw std::invalid_argument("estimate_surfel_frames: need at least k+1 points");

    FrameEstimate out;
    out.frames.resize(n_pts);

    std::vector<std::pair<float, int>> order(n_pts);
    std::vector<Vec3f> edges(k);
    for (int i = 0; i < n_pts; ++i) {
        for (int j = 0; j < n_pts; ++j)
            order[j] = {(positions[j] - positions[i]).squaredNorm(), j};
        order[i].first = std::numeric_limits<float>::infinity();  // exclude self
        std::partial_sort(order.begin(), order.begin() + k, order.end());

        for (int m = 0; m < k; ++m) edges[m] = positions[order[m].second] - positions[i];
        Vec3f normal = Vec3f::Zero();
        for (int m = 0; m < k; ++m) normal += edges[m].cross(edges[(m + 1) % k]);
        normal /= static_cast<float>(k);

        SurfelFrame frame;  // identity defaults
        if (normal.norm() < 1e-9f) {
            out.diagnostics.push_back({i, "degenerate neighborhood"});
        } else {
            frame.n = normal.normalized();
            Vec3f up(0.0f, 1.0f, 0.0f);
            if (up.cross(frame.n).norm() < 1e-6f) {
                up = Vec3f(1.0f, 0.0f, 0.0f);
                out.diagnostics.push_back({i, "fallback up vector"});
            }
            frame.t = up.cross(frame.n).normalized();
            frame.b = frame.n.cross(frame.t).normalized();
            Mat3f R;
            R.col(0) = frame.t;
            R.col(1) = frame.b;
            R.col(2) = frame.n;
            frame.rot = Quatf(R).normalized();
            if (frame.rot.w() < 0.0f) frame.rot.coeffs() = -frame.rot.coeffs();
        }
        out.frames[i] = frame;
    }
    return out;
}

}  // namespace msurfel

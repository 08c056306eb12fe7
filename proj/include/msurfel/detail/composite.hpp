#pragma once

#include <type_traits>
#include <vector>

#include "msurfel/geometry.hpp"
#include "msurfel/rasterizer.hpp"
#include "msurfel/shading.hpp"

// The single definition of per-pixel front-to-back compositing. The tiled
// renderer, the brute-force oracle, the analytic backward pass, and the
// finite-difference window all instantiate this, which is what makes their
// outputs bitwise comparable.

namespace msurfel::detail {

template <class S>
struct PixelState {
    Vec3<S> rgb = Vec3<S>::Zero();
    S alpha = S(0);
    S depth = S(0);
    Vec3<S> normal = Vec3<S>::Zero();
    S T = S(1);
};

/// Collector receiving every composited hit (gradient plumbing); the
/// default compiles to nothing.
struct NullCollector {
    static constexpr bool kCollects = false;
    template <class S>
    void operator()(const PreparedSurfel<S>&, const RaySurfelHit<S>&, const ShadeParts<S>&,
                    S /*T_before*/) {}
};

/// One surfel against one pixel ray. Returns true when transmittance fell
/// below the floor and the pixel is finished.
template <class S, class Collector = NullCollector>
inline bool composite_surfel(const PreparedSurfel<S>& ps, const Ray<S>& ray, S cutoff,
                             S floor_t, PixelState<S>& st,
                             std::type_identity_t<std::vector<HitRecord<S>>*> hits,
                             Collector&& collect = Collector{}) {
    const auto hit = intersect_ray_surfel(ray, ps.mu, ps.t_axis, ps.b_axis, ps.n, ps.scale);
    if (!hit) return false;
    const ShadeParts<S> parts = shade_parts(*ps.src, hit->u, hit->v, ray.dir, ps.omega, ps.dc);
    const ShadeSample<S>& sm = parts.sample;
    if (sm.alpha < cutoff) return false;
    if constexpr (std::remove_reference_t<Collector>::kCollects)
        collect(ps, *hit, parts, st.T);
    const S w = st.T * sm.alpha;
    st.rgb += w * sm.rgb;
    st.alpha += w;
    st.depth += w * hit->depth;
    st.normal += w * ((ray.dir.dot(ps.n) > S(0)) ? Vec3<S>(-ps.n) : ps.n);
    if (hits) hits->push_back({ps.id, sm.alpha, hit->depth});
    st.T *= S(1) - sm.alpha;
    return st.T < floor_t;
}

}  // namespace msurfel::detail

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "msurfel/animation.hpp"
#include "msurfel/detail/composite.hpp"
#include "msurfel/metrics.hpp"
#include "msurfel/optim.hpp"

namespace msurfel {

namespace {

// Everything the chain rule needs about one composited hit, captured from
// the forward pass itself so the two sides cannot drift apart.
template <class S>
struct BHit {
    const PreparedSurfel<S>* ps;
    ShadeParts<S> parts;
    S T_before;
};

template <class S>
struct HitCollector {
    static constexpr bool kCollects = true;
    std::vector<BHit<S>>* out;
    void operator()(const PreparedSurfel<S>& ps, const RaySurfelHit<S>&,
                    const ShadeParts<S>& parts, S T_before) {
        out->push_back({&ps, parts, T_before});
    }
};

// Per-surfel gradient block offsets inside the flat chunk buffer:
// [ low (1024) | high (4096) | sh (12) | dc (1) ] per surfel.
constexpr size_t kLowOff = 0;
constexpr size_t kHighOff = kLowTexFloats;
constexpr size_t kShOff = kHighOff + kHighTexFloats;
constexpr size_t kDcOff = kShOff + 12;
constexpr size_t kGradStride = kDcOff + 1;

// Clamp subgradient gate: gradients pass while the pre-clamp value is inside
// [0, 1] including the endpoints, so a texel resting exactly on a bound (the
// all-zero fresh-texture init in particular) can still be pulled into the
// interior; only strictly saturated values are flat.
inline bool unit_range(double x) { return x >= 0.0 && x <= 1.0; }

template <class S>
void scatter_tap(double* dst, const BilinearTap<S>& tap, int channel, double g) {
    dst[tap.i00 + channel] += g * static_cast<double>(tap.w00);
    dst[tap.i10 + channel] += g * static_cast<double>(tap.w10);
    dst[tap.i01 + channel] += g * static_cast<double>(tap.w01);
    dst[tap.i11 + channel] += g * static_cast<double>(tap.w11);
}

}  // namespace

template <class S>
ColorGrads backward(const Scene& scene, const PinholeCamera& cam, const SkeletonPose* pose,
                    const ImageF& gt, const FitConfig& cfg, int step,
                    const RenderSettings& settings) {
    const int W = cam.width, H = cam.height;
    if (gt.width != W || gt.height != H)
        throw std::invalid_argument("backward: frame/ground-truth dimension mismatch");
    const int N = static_cast<int>(scene.surfels.size());

    ColorGrads out;
    out.surfel_count = N;
    out.low.assign(static_cast<size_t>(N) * kLowTexFloats, 0.0);
    out.high.assign(static_cast<size_t>(N) * kHighTexFloats, 0.0);
    out.sh.assign(static_cast<size_t>(N) * 12, 0.0);
    out.dc.assign(static_cast<size_t>(N), 0.0);

    const std::vector<uint8_t> mask = alpha_mask(gt);
    int64_t masked = 0;
    for (uint8_t m : mask) masked += m ? 1 : 0;
    if (masked == 0 || N == 0) return out;

    const std::vector<PosedSurfel> posed = pose_scene(scene, pose);
    const std::vector<PreparedSurfel<S>> prepared = prepare_surfels<S>(posed, cam, settings);

    const PixelLossKind kind = pixel_kind_at(step, cfg);
    const double norm = 1.0 / (3.0 * static_cast<double>(masked));
    const double ms_scale = cfg.lambda_ms_ssim * 2.0 * norm;
    const S cutoff = S(settings.alpha_cutoff);
    const S floor_t = S(settings.transmittance_floor);

    // Chunks are tile-height pixel rows; each is accumulated serially into
    // its own dense buffer, and buffers merge in chunk order. That fixes the
    // floating-point reduction tree, so any thread count produces the same
    // bits.
    const int tile = std::max(1, settings.tile_size);
    const int n_chunks = (H + tile - 1) / tile;
    int threads = settings.thread_count > 0 ? settings.thread_count : omp_get_max_threads();
    threads = std::max(1, std::min(threads, n_chunks));

    std::vector<std::vector<int>> chunk_bins(n_chunks);
    for (int i = 0; i < static_cast<int>(prepared.size()); ++i) {
        const auto& ps = prepared[i];
        const int c0 = std::max(0, ps.y0 / tile);
        const int c1 = std::min(n_chunks - 1, ps.y1 / tile);
        for (int c = c0; c <= c1; ++c) chunk_bins[c].push_back(i);
    }

    const size_t buf_size = static_cast<size_t>(N) * kGradStride;
    std::vector<std::vector<double>> bufs(threads);
    std::vector<double> loss_parts(threads);
    for (auto& b : bufs) b.resize(buf_size);

    for (int batch = 0; batch < n_chunks; batch += threads) {
        const int batch_n = std::min(threads, n_chunks - batch);
#pragma omp parallel for schedule(static) num_threads(threads)
        for (int bi = 0; bi < batch_n; ++bi) {
            const int chunk = batch + bi;
            std::vector<double>& buf = bufs[bi];
            std::fill(buf.begin(), buf.end(), 0.0);
            loss_parts[bi] = 0.0;
            const std::vector<int>& bin = chunk_bins[chunk];

            std::vector<BHit<S>> hits;
            const int y_end = std::min(H, (chunk + 1) * tile);
            for (int y = chunk * tile; y < y_end; ++y) {
                for (int x = 0; x < W; ++x) {
                    const size_t px = static_cast<size_t>(y) * W + x;
                    if (!mask[px]) continue;

                    const Ray<S> ray = pixel_ray<S>(cam, x, y);
                    detail::PixelState<S> st;
                    hits.clear();
                    HitCollector<S> collector{&hits};
                    for (int i : bin) {
                        const auto& ps = prepared[i];
                        if (x < ps.x0 || x > ps.x1 || y < ps.y0 || y > ps.y1) continue;
                        if (detail::composite_surfel(ps, ray, cutoff, floor_t, st, nullptr,
                                                     collector))
                            break;
                    }

                    // d(loss)/d(pixel channel), including the straight-through
                    // MS-SSIM surrogate (MSE-shaped).
                    double g[3];
                    for (int c = 0; c < 3; ++c) {
                        const double diff = static_cast<double>(st.rgb[c]) -
                                            static_cast<double>(gt.rgba[px * 4 + c]);
                        const double gp = kind == PixelLossKind::kL1
                                              ? static_cast<double>((diff > 0.0) - (diff < 0.0))
                                              : 2.0 * diff;
                        g[c] = gp * norm + diff * ms_scale;
                        loss_parts[bi] +=
                            (kind == PixelLossKind::kL1 ? std::abs(diff) : diff * diff) * norm;
                    }

                    const Vec4<S> basis = sh_basis(ray.dir);

                    // Back-to-front: Sb is the already-composited suffix color.
                    double Sb[3] = {0.0, 0.0, 0.0};
                    for (size_t k = hits.size(); k-- > 0;) {
                        const BHit<S>& h = hits[k];
                        const ShadeParts<S>& p = h.parts;
                        const double T = static_cast<double>(h.T_before);
                        const double a = static_cast<double>(p.sample.alpha);
                        const double omega = static_cast<double>(p.sample.omega);
                        double* dst = buf.data() + static_cast<size_t>(h.ps->id) * kGradStride;

                        double dL_da = 0.0;
                        for (int c = 0; c < 3; ++c) {
                            const double ck = static_cast<double>(p.sample.rgb[c]);
                            dL_da += g[c] * T * (ck - Sb[c]);

                            if (unit_range(static_cast<double>(p.rgb_pre[c]))) {
                                const double gc = g[c] * T * a;
                                for (int i = 0; i < 4; ++i)
                                    dst[kShOff + 3 * i + c] +=
                                        gc * static_cast<double>(basis[i]);
                                scatter_tap(dst + kLowOff, p.low_tap, c, gc);
                                if (omega > 0.0) {
                                    const double th = static_cast<double>(p.high[c]);
                                    scatter_tap(dst + kHighOff, p.high_tap, c,
                                                gc * omega * (1.0 - th * th));
                                }
                            }
                            Sb[c] = a * ck + (1.0 - a) * Sb[c];
                        }

                        if (unit_range(static_cast<double>(p.alpha_pre))) {
                            scatter_tap(dst + kLowOff, p.low_tap, 3, dL_da);
                            if (omega > 0.0) {
                                const double th = static_cast<double>(p.high[3]);
                                scatter_tap(dst + kHighOff, p.high_tap, 3,
                                            dL_da * omega * (1.0 - th * th));
                            }
                            dst[kDcOff] += dL_da;
                        }
                    }
                }
            }
        }

        for (int bi = 0; bi < batch_n; ++bi) {
            const std::vector<double>& buf = bufs[bi];
            out.loss_pixel += loss_parts[bi];
            for (int s = 0; s < N; ++s) {
                const double* src = buf.data() + static_cast<size_t>(s) * kGradStride;
                double* low = out.low.data() + static_cast<size_t>(s) * kLowTexFloats;
                double* high = out.high.data() + static_cast<size_t>(s) * kHighTexFloats;
                double* sh = out.sh.data() + static_cast<size_t>(s) * 12;
                for (size_t i = 0; i < kLowTexFloats; ++i) low[i] += src[kLowOff + i];
                for (size_t i = 0; i < kHighTexFloats; ++i) high[i] += src[kHighOff + i];
                for (size_t i = 0; i < 12; ++i) sh[i] += src[kShOff + i];
                out.dc[s] += src[kDcOff];
            }
        }
    }
    return out;
}

template ColorGrads backward<float>(const Scene&, const PinholeCamera&, const SkeletonPose*,
                                    const ImageF&, const FitConfig&, int,
                                    const RenderSettings&);
template ColorGrads backward<double>(const Scene&, const PinholeCamera&, const SkeletonPose*,
                                     const ImageF&, const FitConfig&, int,
                                     const RenderSettings&);

}  // namespace msurfel

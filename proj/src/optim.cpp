#include "msurfel/optim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "msurfel/animation.hpp"
#include "msurfel/detail/composite.hpp"

namespace msurfel {

// --- config -----------------------------------------------------------

namespace {

template <class T>
void read_key(const nlohmann::json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

}  // namespace

FitConfig load_fit_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open fit config: " + path);
    nlohmann::json j;
    in >> j;

    static const std::set<std::string> known = {
        "total_steps",       "lr_low_tex",         "lr_high_tex",
        "lr_sh",             "lr_positions",       "lr_rotations",
        "lr_scales",         "lr_offsets",         "lambda_ms_ssim",
        "lambda_perceptual", "lambda_c",           "lambda_s",
        "lambda_n",          "lambda_d",           "pixel_switch_frac",
        "tex_freeze_frac",   "sh_only_frac",       "norm_reg_start_frac",
        "depth_reg_start_frac", "neighbor_k",      "batch_size",
        "full_fd"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key))
            throw std::runtime_error("unknown fit config key: " + key);

    FitConfig c;
    read_key(j, "total_steps", c.total_steps);
    read_key(j, "lr_low_tex", c.lr_low_tex);
    read_key(j, "lr_high_tex", c.lr_high_tex);
    read_key(j, "lr_sh", c.lr_sh);
    read_key(j, "lr_positions", c.lr_positions);
    read_key(j, "lr_rotations", c.lr_rotations);
    read_key(j, "lr_scales", c.lr_scales);
    read_key(j, "lr_offsets", c.lr_offsets);
    read_key(j, "lambda_ms_ssim", c.lambda_ms_ssim);
    read_key(j, "lambda_perceptual", c.lambda_perceptual);
    read_key(j, "lambda_c", c.lambda_c);
    read_key(j, "lambda_s", c.lambda_s);
    read_key(j, "lambda_n", c.lambda_n);
    read_key(j, "lambda_d", c.lambda_d);
    read_key(j, "pixel_switch_frac", c.pixel_switch_frac);
    read_key(j, "tex_freeze_frac", c.tex_freeze_frac);
    read_key(j, "sh_only_frac", c.sh_only_frac);
    read_key(j, "norm_reg_start_frac", c.norm_reg_start_frac);
    read_key(j, "depth_reg_start_frac", c.depth_reg_start_frac);
    read_key(j, "neighbor_k", c.neighbor_k);
    read_key(j, "batch_size", c.batch_size);
    read_key(j, "full_fd", c.full_fd);

    if (c.total_steps < 1) throw std::runtime_error("fit config: total_steps must be >= 1");
    for (double f : {c.pixel_switch_frac, c.tex_freeze_frac, c.sh_only_frac,
                     c.norm_reg_start_frac, c.depth_reg_start_frac})
        if (f < 0.0 || f > 1.0)
            throw std::runtime_error("fit config: schedule fractions must be in [0,1]");
    for (double l : {c.lambda_ms_ssim, c.lambda_perceptual, c.lambda_c, c.lambda_s, c.lambda_n,
                     c.lambda_d})
        if (l < 0.0) throw std::runtime_error("fit config: lambdas must be >= 0");
    return c;
}

void save_fit_config(const FitConfig& c, const std::string& path) {
    nlohmann::json j;
    j["total_steps"] = c.total_steps;
    j["lr_low_tex"] = c.lr_low_tex;
    j["lr_high_tex"] = c.lr_high_tex;
    j["lr_sh"] = c.lr_sh;
    j["lr_positions"] = c.lr_positions;
    j["lr_rotations"] = c.lr_rotations;
    j["lr_scales"] = c.lr_scales;
    j["lr_offsets"] = c.lr_offsets;
    j["lambda_ms_ssim"] = c.lambda_ms_ssim;
    j["lambda_perceptual"] = c.lambda_perceptual;
    j["lambda_c"] = c.lambda_c;
    j["lambda_s"] = c.lambda_s;
    j["lambda_n"] = c.lambda_n;
    j["lambda_d"] = c.lambda_d;
    j["pixel_switch_frac"] = c.pixel_switch_frac;
    j["tex_freeze_frac"] = c.tex_freeze_frac;
    j["sh_only_frac"] = c.sh_only_frac;
    j["norm_reg_start_frac"] = c.norm_reg_start_frac;
    j["depth_reg_start_frac"] = c.depth_reg_start_frac;
    j["neighbor_k"] = c.neighbor_k;
    j["batch_size"] = c.batch_size;
    j["full_fd"] = c.full_fd;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write fit config: " + path);
    out << j.dump(2) << '\n';
}

// --- schedule ----------------------------------------------------------

int step_of(double frac, int total_steps) {
    return static_cast<int>(std::llround(frac * total_steps));
}

PixelLossKind pixel_kind_at(int step, const FitConfig& cfg) {
    return step >= step_of(cfg.pixel_switch_frac, cfg.total_steps) ? PixelLossKind::kMse
                                                                   : PixelLossKind::kL1;
}

FitPhase phase_at(int step, const FitConfig& cfg) {
    const int freeze_end = step_of(cfg.tex_freeze_frac, cfg.total_steps);
    const int sh_start =
        std::max(freeze_end, cfg.total_steps - step_of(cfg.sh_only_frac, cfg.total_steps));
    if (step < freeze_end) return FitPhase::kTexFrozen;
    if (step < sh_start) return FitPhase::kAll;
    return FitPhase::kShOnly;
}

bool norm_reg_active(int step, const FitConfig& cfg) {
    return step >= step_of(cfg.norm_reg_start_frac, cfg.total_steps);
}

bool depth_reg_active(int step, const FitConfig& cfg) {
    return step >= step_of(cfg.depth_reg_start_frac, cfg.total_steps);
}

double lr_schedule(double lr0, int step, const FitConfig& cfg) {
    return lr0 * std::pow(cfg.gamma(), step);
}

// --- losses ------------------------------------------------------------

template <class S>
double pixel_loss(const RenderFrameT<S>& pred, const ImageF& gt, PixelLossKind kind,
                  const std::vector<uint8_t>& mask, std::vector<Diagnostic>* diagnostics) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw std::invalid_argument("pixel_loss: dimension mismatch");
    const size_t n = static_cast<size_t>(pred.width) * pred.height;
    if (!mask.empty() && mask.size() != n)
        throw std::invalid_argument("pixel_loss: mask size mismatch");

    double acc = 0.0;
    int64_t count = 0;
    for (size_t i = 0; i < n; ++i) {
        if (!mask.empty() && !mask[i]) continue;
        ++count;
        for (int c = 0; c < 3; ++c) {
            const double d = static_cast<double>(pred.color[i * 3 + c]) -
                             static_cast<double>(gt.rgba[i * 4 + c]);
            acc += kind == PixelLossKind::kL1 ? std::abs(d) : d * d;
        }
    }
    if (count == 0) {
        if (diagnostics) diagnostics->push_back({-1, "pixel loss over empty mask"});
        return 0.0;
    }
    return acc / (3.0 * static_cast<double>(count));
}

std::vector<std::pair<int, int>> build_neighbor_pairs(const std::vector<Vec3f>& positions,
                                                      int k) {
    const int n = static_cast<int>(positions.size());
    std::vector<std::pair<int, int>> pairs;
    if (n < 2 || k < 1) return pairs;
    const int kk = std::min(k, n - 1);
    pairs.reserve(static_cast<size_t>(n) * kk);
    std::vector<std::pair<float, int>> order(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            order[j] = {(positions[j] - positions[i]).squaredNorm(), j};
        order[i].first = std::numeric_limits<float>::infinity();
        std::partial_sort(order.begin(), order.begin() + kk, order.end());
        for (int m = 0; m < kk; ++m) pairs.emplace_back(i, order[m].second);
    }
    return pairs;
}

double reg_ctrl(const std::vector<Vec3f>& dx, const std::vector<std::pair<int, int>>& pairs) {
    double acc = 0.0;
    for (const auto& [i, j] : pairs)
        acc += static_cast<double>((dx[i] - dx[j]).norm());
    return acc;
}

double reg_scale(const std::vector<Vec2f>& scales) {
    double acc = 0.0;
    for (const Vec2f& s : scales)
        acc += std::max(0.01, static_cast<double>(s.x())) +
               std::max(0.01, static_cast<double>(s.y()));
    return acc;
}

template <class S>
double reg_normal(const RenderFrameT<S>& frame, const PinholeCamera& cam, float alpha_cutoff) {
    const int W = frame.width, H = frame.height;
    const double cut = alpha_cutoff;

    // Expected-depth world points, or nan when background.
    std::vector<Eigen::Vector3d> pts(static_cast<size_t>(W) * H,
                                     Eigen::Vector3d::Constant(std::nan("")));
    std::vector<Eigen::Vector3d> dirs(static_cast<size_t>(W) * H);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const size_t i = static_cast<size_t>(y) * W + x;
            const Ray<double> r = pixel_ray<double>(cam, x, y);
            dirs[i] = r.dir;
            const double a = static_cast<double>(frame.alpha[i]);
            if (a <= cut) continue;
            const double d = static_cast<double>(frame.depth[i]) / a;
            pts[i] = r.origin + d * r.dir;
        }
    }

    double num = 0.0, den = 0.0;
    for (int y = 1; y + 1 < H; ++y) {
        for (int x = 1; x + 1 < W; ++x) {
            const size_t i = static_cast<size_t>(y) * W + x;
            const double a = static_cast<double>(frame.alpha[i]);
            if (a <= cut) continue;
            const auto& l = pts[i - 1];
            const auto& r = pts[i + 1];
            const auto& u = pts[i - W];
            const auto& d = pts[i + W];
            if (!l.allFinite() || !r.allFinite() || !u.allFinite() || !d.allFinite()) continue;
            Eigen::Vector3d N = (r - l).cross(d - u);
            const double nn = N.norm();
            if (nn < 1e-12) continue;
            N /= nn;
            if (N.dot(dirs[i]) > 0.0) N = -N;  // camera-facing

            Eigen::Vector3d acc(frame.normal[i * 3 + 0], frame.normal[i * 3 + 1],
                                frame.normal[i * 3 + 2]);
            const double an = acc.norm();
            if (an < 1e-12) continue;
            acc /= an;

            num += a * (1.0 - acc.dot(N));
            den += a;
        }
    }
    return den > 0.0 ? num / den : 0.0;
}

template <class S>
double reg_depth(const RenderFrameT<S>& frame) {
    if (frame.per_pixel_hits.empty())
        throw std::invalid_argument("reg_depth: frame has no recorded hits");
    double acc = 0.0;
    std::vector<double> w;
    for (const auto& hits : frame.per_pixel_hits) {
        if (hits.size() < 2) continue;
        w.resize(hits.size());
        double T = 1.0;
        for (size_t k = 0; k < hits.size(); ++k) {
            const double a = static_cast<double>(hits[k].alpha);
            w[k] = T * a;
            T *= 1.0 - a;
        }
        double px = 0.0;
        for (size_t i = 0; i < hits.size(); ++i)
            for (size_t j = i + 1; j < hits.size(); ++j)
                px += 2.0 * w[i] * w[j] *
                      std::abs(static_cast<double>(hits[i].depth) -
                               static_cast<double>(hits[j].depth));
        acc += px;
    }
    return acc / static_cast<double>(frame.per_pixel_hits.size());
}

template <class S>
LossBreakdown total_loss(const RenderFrameT<S>& frame, const ImageF& gt, const Scene& scene,
                         const SkeletonPose* pose, const PinholeCamera& cam, int step,
                         const FitConfig& cfg,
                         const std::vector<std::pair<int, int>>& neighbor_pairs) {
    LossBreakdown b;
    b.kind = pixel_kind_at(step, cfg);
    b.norm_active = norm_reg_active(step, cfg);
    b.depth_active = depth_reg_active(step, cfg);

    const std::vector<uint8_t> mask = alpha_mask(gt);
    b.pixel = pixel_loss(frame, gt, b.kind, mask);

    if (cfg.lambda_ms_ssim > 0.0) {
        ImageF pred;
        pred.width = frame.width;
        pred.height = frame.height;
        const size_t n = static_cast<size_t>(frame.width) * frame.height;
        pred.rgba.resize(n * 4);
        for (size_t i = 0; i < n; ++i) {
            for (int c = 0; c < 3; ++c)
                pred.rgba[i * 4 + c] = static_cast<float>(frame.color[i * 3 + c]);
            pred.rgba[i * 4 + 3] = static_cast<float>(frame.alpha[i]);
        }
        b.ms_ssim_term = 1.0 - ms_ssim(pred, gt);
    }

    if (pose != nullptr && !pose->offsets.empty() && cfg.lambda_c > 0.0) {
        std::vector<Vec3f> dx;
        dx.reserve(pose->offsets.size());
        for (const auto& o : pose->offsets) dx.push_back(o.dx);
        b.ctrl = reg_ctrl(dx, neighbor_pairs);
    }

    if (cfg.lambda_s > 0.0) {
        std::vector<Vec2f> scales;
        scales.reserve(scene.surfels.size());
        for (const auto& s : scene.surfels) scales.push_back(s.scale);
        b.scale = reg_scale(scales);
    }

    if (b.norm_active && cfg.lambda_n > 0.0) b.norm = reg_normal(frame, cam);
    if (b.depth_active && cfg.lambda_d > 0.0) b.depth = reg_depth(frame);

    b.total = b.pixel + cfg.lambda_ms_ssim * b.ms_ssim_term +
              cfg.lambda_perceptual * b.perceptual + cfg.lambda_c * b.ctrl +
              cfg.lambda_s * b.scale + (b.norm_active ? cfg.lambda_n * b.norm : 0.0) +
              (b.depth_active ? cfg.lambda_d * b.depth : 0.0);
    return b;
}

// --- adam --------------------------------------------------------------

void adam_update_span(float* params, const double* grads, double* m, double* v, size_t count,
                      double lr, int64_t t, double beta1, double beta2, double eps) {
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < count; ++i) {
        const double g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        params[i] =
            static_cast<float>(static_cast<double>(params[i]) - lr * mhat / (std::sqrt(vhat) + eps));
    }
}

bool adam_step(float* params, const double* grads, size_t count, ParamGroupState& state,
               double lr, std::vector<Diagnostic>* diagnostics, double beta1, double beta2,
               double eps) {
    if (state.frozen) return false;
    if (state.m.size() != count) {
        state.m.assign(count, 0.0);
        state.v.assign(count, 0.0);
    }
    for (size_t i = 0; i < count; ++i) {
        if (!std::isfinite(grads[i])) {
            if (diagnostics) diagnostics->push_back({-1, "non-finite gradient; group skipped"});
            return false;
        }
    }
    ++state.t;
    adam_update_span(params, grads, state.m.data(), state.v.data(), count, lr, state.t, beta1,
                     beta2, eps);
    return true;
}

void project_low_texture(MultiScaleTexture& tex) {
    for (int i = 0; i < kLowTexSize * kLowTexSize; ++i) {
        for (int c = 0; c < 3; ++c)
            tex.low[i * 4 + c] = std::clamp(tex.low[i * 4 + c], -1.0f, 1.0f);
        tex.low[i * 4 + 3] = std::clamp(tex.low[i * 4 + 3], 0.0f, 1.0f);
    }
}

void init_textures(Scene& scene) {
    constexpr double sigma = kLowTexSize / 4.0;
    constexpr double center = (kLowTexSize - 1) / 2.0;
    for (Surfel& s : scene.surfels) {
        s.tex.high.fill(0.0f);
        for (int y = 0; y < kLowTexSize; ++y) {
            for (int x = 0; x < kLowTexSize; ++x) {
                const int i = (y * kLowTexSize + x) * 4;
                s.tex.low[i + 0] = 0.0f;
                s.tex.low[i + 1] = 0.0f;
                s.tex.low[i + 2] = 0.0f;
                const double d2 = (x - center) * (x - center) + (y - center) * (y - center);
                s.tex.low[i + 3] = static_cast<float>(0.9 * std::exp(-d2 / (2.0 * sigma * sigma)));
            }
        }
    }
}

// --- finite differences -------------------------------------------------

namespace {

float* param_ptr(Scene& scene, SkeletonPose* pose, const ParamRef& ref) {
    Surfel& s = scene.surfels.at(ref.surfel);
    switch (ref.kind) {
        case ParamKind::kLowTex:
            return &s.tex.low.at(ref.index);
        case ParamKind::kHighTex:
            return &s.tex.high.at(ref.index);
        case ParamKind::kSh:
            return &s.sh.at(ref.index);
        case ParamKind::kDc:
            if (pose == nullptr || pose->offsets.size() <= static_cast<size_t>(ref.surfel))
                throw std::invalid_argument("fd_gradient: dc needs a pose with offsets");
            return &pose->offsets[ref.surfel].dc;
        case ParamKind::kMu:
            return &s.mu[ref.index];
        case ParamKind::kRot:
            return &s.rot.coeffs()[ref.index];  // (x, y, z, w)
        case ParamKind::kScale:
            return &s.scale[ref.index];
    }
    throw std::logic_error("fd_gradient: bad param kind");
}

bool is_color_param(ParamKind k) {
    return k == ParamKind::kLowTex || k == ParamKind::kHighTex || k == ParamKind::kSh ||
           k == ParamKind::kDc;
}

/// Pixel-term contribution summed over the surfel's footprint (unnormalized;
/// exact because color-side parameters cannot move geometry).
template <class S>
double window_pixel_sum(Scene& scene, SkeletonPose* pose, const PinholeCamera& cam,
                        const ImageF& gt, const std::vector<uint8_t>& mask, PixelLossKind kind,
                        const RenderSettings& settings, int surfel) {
    const std::vector<PosedSurfel> posed = pose_scene(scene, pose);
    const auto prepared = prepare_surfels<S>(posed, cam, settings);
    const PreparedSurfel<S>* target = nullptr;
    for (const auto& ps : prepared)
        if (ps.src == &scene.surfels[surfel]) target = &ps;
    if (target == nullptr) return 0.0;  // culled: no influence on the frame

    const S cutoff = S(settings.alpha_cutoff);
    const S floor_t = S(settings.transmittance_floor);
    double acc = 0.0;
    for (int iy = target->y0; iy <= target->y1; ++iy) {
        for (int ix = target->x0; ix <= target->x1; ++ix) {
            const size_t idx = static_cast<size_t>(iy) * cam.width + ix;
            if (!mask.empty() && !mask[idx]) continue;
            const Ray<S> ray = pixel_ray<S>(cam, ix, iy);
            detail::PixelState<S> st;
            for (const auto& ps : prepared) {
                if (ix < ps.x0 || ix > ps.x1 || iy < ps.y0 || iy > ps.y1) continue;
                if (detail::composite_surfel(ps, ray, cutoff, floor_t, st, nullptr)) break;
            }
            for (int c = 0; c < 3; ++c) {
                const double d = static_cast<double>(st.rgb[c]) -
                                 static_cast<double>(gt.rgba[idx * 4 + c]);
                acc += kind == PixelLossKind::kL1 ? std::abs(d) : d * d;
            }
        }
    }
    return acc;
}

template <class S>
double full_total(Scene& scene, SkeletonPose* pose, const PinholeCamera& cam, const ImageF& gt,
                  const FitConfig& cfg, int step, const RenderSettings& settings) {
    RenderSettings st = settings;
    st.record_hits = st.record_hits || depth_reg_active(step, cfg);
    const RenderFrameT<S> frame = render<S>(scene, cam, pose, st);
    static const std::vector<std::pair<int, int>> no_pairs;
    std::vector<std::pair<int, int>> pairs;
    if (pose != nullptr && !pose->offsets.empty() && cfg.lambda_c > 0.0) {
        std::vector<Vec3f> positions;
        positions.reserve(scene.surfels.size());
        for (const auto& s : scene.surfels) positions.push_back(s.mu);
        pairs = build_neighbor_pairs(positions, cfg.neighbor_k);
    }
    return total_loss(frame, gt, scene, pose, cam, step, cfg, pairs.empty() ? no_pairs : pairs)
        .total;
}

}  // namespace

template <class S>
double fd_gradient(Scene& scene, SkeletonPose* pose, const PinholeCamera& cam,
                   const ImageF& gt, const FitConfig& cfg, int step,
                   const RenderSettings& settings, ParamRef ref, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("fd_gradient: eps must be > 0");
    float* p = param_ptr(scene, pose, ref);
    const float p0 = *p;
    const float p_plus = static_cast<float>(static_cast<double>(p0) + eps);
    const float p_minus = static_cast<float>(static_cast<double>(p0) - eps);
    const double delta = static_cast<double>(p_plus) - static_cast<double>(p_minus);
    if (delta == 0.0) throw std::invalid_argument("fd_gradient: eps below float resolution");

    const bool renorm = ref.kind == ParamKind::kRot;
    const Quatf rot0 = renorm ? scene.surfels[ref.surfel].rot : Quatf::Identity();

    double e_plus, e_minus;
    if (is_color_param(ref.kind)) {
        const std::vector<uint8_t> mask = alpha_mask(gt);
        int64_t count = 0;
        for (uint8_t m : mask) count += m ? 1 : 0;
        const PixelLossKind kind = pixel_kind_at(step, cfg);

        *p = p_plus;
        e_plus = window_pixel_sum<S>(scene, pose, cam, gt, mask, kind, settings, ref.surfel);
        *p = p_minus;
        e_minus = window_pixel_sum<S>(scene, pose, cam, gt, mask, kind, settings, ref.surfel);
        *p = p0;
        if (count == 0) return 0.0;
        return (e_plus - e_minus) / (3.0 * static_cast<double>(count)) / delta;
    }

    *p = p_plus;
    if (renorm) scene.surfels[ref.surfel].rot.normalize();
    e_plus = full_total<S>(scene, pose, cam, gt, cfg, step, settings);
    if (renorm) scene.surfels[ref.surfel].rot = rot0;
    *p = p_minus;
    if (renorm) scene.surfels[ref.surfel].rot.normalize();
    e_minus = full_total<S>(scene, pose, cam, gt, cfg, step, settings);
    if (renorm)
        scene.surfels[ref.surfel].rot = rot0;
    else
        *p = p0;
    return (e_plus - e_minus) / delta;
}

// --- explicit instantiations --------------------------------------------

template double pixel_loss<float>(const RenderFrameT<float>&, const ImageF&, PixelLossKind,
                                  const std::vector<uint8_t>&, std::vector<Diagnostic>*);
template double pixel_loss<double>(const RenderFrameT<double>&, const ImageF&, PixelLossKind,
                                   const std::vector<uint8_t>&, std::vector<Diagnostic>*);
template double reg_normal<float>(const RenderFrameT<float>&, const PinholeCamera&, float);
template double reg_normal<double>(const RenderFrameT<double>&, const PinholeCamera&, float);
template double reg_depth<float>(const RenderFrameT<float>&);
template double reg_depth<double>(const RenderFrameT<double>&);
template LossBreakdown total_loss<float>(const RenderFrameT<float>&, const ImageF&,
                                         const Scene&, const SkeletonPose*,
                                         const PinholeCamera&, int, const FitConfig&,
                                         const std::vector<std::pair<int, int>>&);
template LossBreakdown total_loss<double>(const RenderFrameT<double>&, const ImageF&,
                                          const Scene&, const SkeletonPose*,
                                          const PinholeCamera&, int, const FitConfig&,
                                          const std::vector<std::pair<int, int>>&);
template double fd_gradient<float>(Scene&, SkeletonPose*, const PinholeCamera&, const ImageF&,
                                   const FitConfig&, int, const RenderSettings&, ParamRef,
                                   double);
template double fd_gradient<double>(Scene&, SkeletonPose*, const PinholeCamera&, const ImageF&,
                                    const FitConfig&, int, const RenderSettings&, ParamRef,
                                    double);

}  // namespace msurfel

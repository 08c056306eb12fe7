#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "msurfel/optim.hpp"
#include "msurfel/rng.hpp"

namespace msurfel {

namespace {

const char* phase_name(FitPhase p) {
    switch (p) {
        case FitPhase::kTexFrozen: return "tex_frozen";
        case FitPhase::kAll: return "all";
        case FitPhase::kShOnly: return "sh_only";
    }
    return "?";
}

const char* kind_name(PixelLossKind k) { return k == PixelLossKind::kL1 ? "l1" : "mse"; }

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// Shared-t Adam over a parameter group whose slices live inside the scene.
// One bad (non-finite) gradient vector skips the whole group for the step.
struct GroupUpdate {
    ParamGroupState state;

    bool step(double lr, const std::vector<double>& grads, size_t slice,
              const std::function<float*(int)>& slice_ptr, std::vector<Diagnostic>* diags,
              const char* label) {
        if (!all_finite(grads)) {
            if (diags)
                diags->push_back({-1, std::string("non-finite gradient; ") + label +
                                          " group skipped"});
            return false;
        }
        if (state.m.size() != grads.size()) {
            state.m.assign(grads.size(), 0.0);
            state.v.assign(grads.size(), 0.0);
        }
        ++state.t;
        const int n = static_cast<int>(grads.size() / slice);
        for (int s = 0; s < n; ++s) {
            const size_t off = static_cast<size_t>(s) * slice;
            adam_update_span(slice_ptr(s), grads.data() + off, state.m.data() + off,
                             state.v.data() + off, slice, lr, state.t);
        }
        return true;
    }
};

// Gradients for one geometry group, each scalar by central differences of
// the full objective.
std::vector<double> fd_group(Scene& scene, SkeletonPose* pose, const PinholeCamera& cam,
                             const ImageF& gt, const FitConfig& cfg, int step,
                             const RenderSettings& settings, ParamKind kind, int per_surfel) {
    std::vector<double> g(scene.surfels.size() * per_surfel);
    for (int s = 0; s < static_cast<int>(scene.surfels.size()); ++s)
        for (int i = 0; i < per_surfel; ++i)
            g[static_cast<size_t>(s) * per_surfel + i] =
                fd_gradient<float>(scene, pose, cam, gt, cfg, step, settings,
                                   {kind, s, i}, 1e-3);
    return g;
}

}  // namespace

FitResult fit(Scene& scene, std::vector<FitView>& views, const FitConfig& cfg, uint64_t seed,
              const RenderSettings& settings) {
    if (views.empty()) throw std::invalid_argument("fit: needs at least one view");
    const int N = static_cast<int>(scene.surfels.size());
    for (const FitView& v : views) {
        if (v.gt.width != v.camera.width || v.gt.height != v.camera.height)
            throw std::invalid_argument("fit: view image does not match its camera");
        if (v.has_pose && !v.pose.offsets.empty() &&
            v.pose.offsets.size() != static_cast<size_t>(N))
            throw std::invalid_argument("fit: pose offsets sized unlike the scene");
    }

    FitResult res;
    Rng rng(seed);

    // Control-point pairs come from the canonical layout once, up front.
    std::vector<Vec3f> positions;
    positions.reserve(N);
    for (const auto& s : scene.surfels) positions.push_back(s.mu);
    const std::vector<std::pair<int, int>> pairs =
        build_neighbor_pairs(positions, cfg.neighbor_k);

    const bool train_dc = cfg.lr_offsets > 0.0;
    if (train_dc)
        for (FitView& v : views)
            if (v.has_pose && v.pose.offsets.empty()) v.pose.offsets.resize(N);

    GroupUpdate low, high, sh, mu, rot, scl;
    std::vector<GroupUpdate> dc_states(views.size());  // lazy: step only when sampled

    const bool fd_geom = cfg.full_fd && (cfg.lr_positions > 0.0 || cfg.lr_rotations > 0.0 ||
                                         cfg.lr_scales > 0.0);

    FitPhase last_phase{};
    PixelLossKind last_kind{};
    bool last_norm = false, last_depth = false;

    for (int step = 0; step < cfg.total_steps; ++step) {
        const FitPhase phase = phase_at(step, cfg);
        const PixelLossKind kind = pixel_kind_at(step, cfg);
        const bool norm_on = norm_reg_active(step, cfg);
        const bool depth_on = depth_reg_active(step, cfg);

        if (step == 0 || phase != last_phase)
            res.log.push_back(nlohmann::json{{"event", "phase"},
                                             {"step", step},
                                             {"phase", phase_name(phase)}}
                                  .dump());
        if (step == 0 || kind != last_kind)
            res.log.push_back(nlohmann::json{{"event", "pixel_loss"},
                                             {"step", step},
                                             {"kind", kind_name(kind)}}
                                  .dump());
        if (norm_on && (step == 0 || !last_norm))
            res.log.push_back(
                nlohmann::json{{"event", "norm_reg"}, {"step", step}}.dump());
        if (depth_on && (step == 0 || !last_depth))
            res.log.push_back(
                nlohmann::json{{"event", "depth_reg"}, {"step", step}}.dump());
        last_phase = phase;
        last_kind = kind;
        last_norm = norm_on;
        last_depth = depth_on;

        const int batch = std::max(1, cfg.batch_size);
        ColorGrads acc;
        LossBreakdown first_loss;
        int first_view = -1;
        bool diverged = false;

        for (int b = 0; b < batch && !diverged; ++b) {
            const int vi = rng.uniform_int(0, static_cast<int>(views.size()) - 1);
            FitView& view = views[vi];
            SkeletonPose* pose = view.has_pose ? &view.pose : nullptr;

            RenderSettings rs = settings;
            rs.record_hits = depth_on && cfg.lambda_d > 0.0;
            const RenderFrame frame = render<float>(scene, view.camera, pose, rs);
            const LossBreakdown loss =
                total_loss(frame, view.gt, scene, pose, view.camera, step, cfg, pairs);
            if (!std::isfinite(loss.total)) {
                res.diverged_at = step;
                res.diagnostics.push_back({-1, "non-finite loss; fit aborted"});
                res.log.push_back(nlohmann::json{{"event", "diverged"},
                                                 {"step", step},
                                                 {"view", vi},
                                                 {"loss", loss.total}}
                                      .dump());
                diverged = true;
                break;
            }
            if (b == 0) {
                first_loss = loss;
                first_view = vi;
            }

            ColorGrads g =
                backward<float>(scene, view.camera, pose, view.gt, cfg, step, rs);
            const double inv = 1.0 / batch;
            if (b == 0) {
                acc = std::move(g);
                if (batch > 1) {
                    for (double& x : acc.low) x *= inv;
                    for (double& x : acc.high) x *= inv;
                    for (double& x : acc.sh) x *= inv;
                }
            } else {
                for (size_t i = 0; i < acc.low.size(); ++i) acc.low[i] += g.low[i] * inv;
                for (size_t i = 0; i < acc.high.size(); ++i) acc.high[i] += g.high[i] * inv;
                for (size_t i = 0; i < acc.sh.size(); ++i) acc.sh[i] += g.sh[i] * inv;
            }

            // The per-view color offsets train on their own view's gradient at
            // full strength whenever that view is drawn.
            if (train_dc && view.has_pose && phase != FitPhase::kShOnly)
                dc_states[vi].step(lr_schedule(cfg.lr_offsets, step, cfg),
                                   b == 0 ? acc.dc : g.dc, 1,
                                   [&](int s) { return &view.pose.offsets[s].dc; },
                                   &res.diagnostics, "color offset");
        }
        if (diverged) break;

        res.log.push_back(nlohmann::json{{"step", step},
                                         {"phase", phase_name(phase)},
                                         {"kind", kind_name(kind)},
                                         {"view", first_view},
                                         {"loss", first_loss.total},
                                         {"pixel", first_loss.pixel},
                                         {"ms_ssim", first_loss.ms_ssim_term},
                                         {"ctrl", first_loss.ctrl},
                                         {"scale", first_loss.scale},
                                         {"norm", first_loss.norm},
                                         {"depth", first_loss.depth},
                                         {"norm_active", norm_on},
                                         {"depth_active", depth_on}}
                              .dump());

        const bool tex_on = phase == FitPhase::kAll;

        if (tex_on && cfg.lr_low_tex > 0.0) {
            if (low.step(lr_schedule(cfg.lr_low_tex, step, cfg), acc.low, kLowTexFloats,
                         [&](int s) { return scene.surfels[s].tex.low.data(); },
                         &res.diagnostics, "low texture"))
                for (Surfel& s : scene.surfels) project_low_texture(s.tex);
        }
        if (tex_on && cfg.lr_high_tex > 0.0)
            high.step(lr_schedule(cfg.lr_high_tex, step, cfg), acc.high, kHighTexFloats,
                      [&](int s) { return scene.surfels[s].tex.high.data(); },
                      &res.diagnostics, "high texture");
        if (cfg.lr_sh > 0.0)  // SH trains in every phase
            sh.step(lr_schedule(cfg.lr_sh, step, cfg), acc.sh, 12,
                    [&](int s) { return scene.surfels[s].sh.data(); }, &res.diagnostics,
                    "sh");

        if (fd_geom && phase != FitPhase::kShOnly) {
            FitView& view = views[first_view];
            SkeletonPose* pose = view.has_pose ? &view.pose : nullptr;
            if (cfg.lr_positions > 0.0) {
                const auto g = fd_group(scene, pose, view.camera, view.gt, cfg, step,
                                        settings, ParamKind::kMu, 3);
                mu.step(lr_schedule(cfg.lr_positions, step, cfg), g, 3,
                        [&](int s) { return scene.surfels[s].mu.data(); },
                        &res.diagnostics, "position");
            }
            if (cfg.lr_rotations > 0.0) {
                const auto g = fd_group(scene, pose, view.camera, view.gt, cfg, step,
                                        settings, ParamKind::kRot, 4);
                if (rot.step(lr_schedule(cfg.lr_rotations, step, cfg), g, 4,
                             [&](int s) { return scene.surfels[s].rot.coeffs().data(); },
                             &res.diagnostics, "rotation"))
                    for (Surfel& s : scene.surfels) s.rot.normalize();
            }
            if (cfg.lr_scales > 0.0) {
                const auto g = fd_group(scene, pose, view.camera, view.gt, cfg, step,
                                        settings, ParamKind::kScale, 2);
                if (scl.step(lr_schedule(cfg.lr_scales, step, cfg), g, 2,
                             [&](int s) { return scene.surfels[s].scale.data(); },
                             &res.diagnostics, "scale"))
                    for (Surfel& s : scene.surfels)
                        s.scale = s.scale.cwiseMax(kMinScale);
            }
        }

        res.steps_run = step + 1;
    }
    return res;
}

}  // namespace msurfel

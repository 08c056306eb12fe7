#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "msurfel/camera.hpp"
#include "msurfel/image.hpp"
#include "msurfel/metrics.hpp"
#include "msurfel/rasterizer.hpp"
#include "msurfel/rng.hpp"
#include "msurfel/scene.hpp"

namespace msurfel {

enum class PixelLossKind { kL1, kMse };
enum class FitPhase { kTexFrozen, kAll, kShOnly };

struct FitConfig {
    int total_steps = 4000;

    // Per-group base learning rates. Geometry groups train only in full-FD
    // mode and default to off.
    double lr_low_tex = 0.05;
    double lr_high_tex = 0.05;
    double lr_sh = 0.025;
    double lr_positions = 0.0;
    double lr_rotations = 0.0;
    double lr_scales = 0.0;
    double lr_offsets = 0.0;

    double lambda_ms_ssim = 0.2;
    double lambda_perceptual = 0.1;  // slot kept; the perceptual term itself is 0
    double lambda_c = 0.1;
    double lambda_s = 0.1;
    double lambda_n = 0.05;
    double lambda_d = 100.0;

    // Schedule boundaries as fractions of total_steps; the absolute values
    // they descend from live at the 400k-step scale.
    double pixel_switch_frac = 7000.0 / 400000.0;
    double tex_freeze_frac = 5000.0 / 400000.0;
    double sh_only_frac = 20000.0 / 400000.0;
    double norm_reg_start_frac = 7000.0 / 400000.0;
    double depth_reg_start_frac = 3000.0 / 400000.0;

    int neighbor_k = 4;
    int batch_size = 1;
    bool full_fd = false;  // finite-difference updates for geometry groups

    double gamma() const { return std::pow(0.01, 1.0 / total_steps); }
};

FitConfig load_fit_config(const std::string& path);
void save_fit_config(const FitConfig& cfg, const std::string& path);

/// Fraction-to-step conversion used by every schedule boundary; a boundary
/// step belongs to the later phase (half-open intervals).
int step_of(double frac, int total_steps);
PixelLossKind pixel_kind_at(int step, const FitConfig& cfg);
FitPhase phase_at(int step, const FitConfig& cfg);
bool norm_reg_active(int step, const FitConfig& cfg);
bool depth_reg_active(int step, const FitConfig& cfg);

/// lr(step) = lr0 * gamma^step, so lr(total_steps) = 0.01 * lr0.
double lr_schedule(double lr0, int step, const FitConfig& cfg);

/// Masked mean absolute/squared error over RGB; mean over 3 * |mask|
/// samples. An empty mask yields 0 and a diagnostic.
template <class S>
double pixel_loss(const RenderFrameT<S>& pred, const ImageF& gt, PixelLossKind kind,
                  const std::vector<uint8_t>& mask,
                  std::vector<Diagnostic>* diagnostics = nullptr);

/// Directed k-NN pairs (i -> each of its k nearest canonical neighbors).
std::vector<std::pair<int, int>> build_neighbor_pairs(const std::vector<Vec3f>& positions,
                                                      int k);

/// Sum over directed pairs of |dx_i - dx_j|.
double reg_ctrl(const std::vector<Vec3f>& dx, const std::vector<std::pair<int, int>>& pairs);

/// Sum over surfels and axes of max(0.01, s_axis).
double reg_scale(const std::vector<Vec2f>& scales);

/// Alpha-weighted mean of (1 - n_accum . N_depth) over foreground pixels;
/// N_depth from central differences of expected depth back-projected along
/// the pixel rays, oriented toward the camera.
template <class S>
double reg_normal(const RenderFrameT<S>& frame, const PinholeCamera& cam,
                  float alpha_cutoff = 1.0f / 255.0f);

/// Mean over all pixels of sum_{i != j} w_i w_j |d_i - d_j|, weights
/// replayed from the recorded hit alphas.
template <class S>
double reg_depth(const RenderFrameT<S>& frame);

struct LossBreakdown {
    double pixel = 0.0;
    double ms_ssim_term = 0.0;  // 1 - MS-SSIM score
    double perceptual = 0.0;    // reserved slot, always 0
    double ctrl = 0.0;
    double scale = 0.0;
    double norm = 0.0;
    double depth = 0.0;
    double total = 0.0;
    PixelLossKind kind = PixelLossKind::kL1;
    bool norm_active = false;
    bool depth_active = false;
};

/// Weighted total with schedule gates. The depth term needs recorded hits
/// when active. `pose` supplies the dx offsets for the control term (null =
/// no offsets = 0).
template <class S>
LossBreakdown total_loss(const RenderFrameT<S>& frame, const ImageF& gt, const Scene& scene,
                         const SkeletonPose* pose, const PinholeCamera& cam, int step,
                         const FitConfig& cfg,
                         const std::vector<std::pair<int, int>>& neighbor_pairs);

/// Gradients of the pixel loss (plus the MS-SSIM straight-through surrogate
/// when lambda_ms_ssim > 0) w.r.t. the color-side parameters. Accumulated
/// in double regardless of the render scalar type.
struct ColorGrads {
    int surfel_count = 0;
    std::vector<double> low;   // N * 1024, texel layout as in the scene
    std::vector<double> high;  // N * 4096
    std::vector<double> sh;    // N * 12
    std::vector<double> dc;    // N
    double loss_pixel = 0.0;   // value of the differentiated pixel term
};

template <class S>
ColorGrads backward(const Scene& scene, const PinholeCamera& cam, const SkeletonPose* pose,
                    const ImageF& gt, const FitConfig& cfg, int step,
                    const RenderSettings& settings);

enum class ParamKind { kLowTex, kHighTex, kSh, kDc, kMu, kRot, kScale };

struct ParamRef {
    ParamKind kind;
    int surfel;
    int index;  // element within the parameter block (0 for kDc)
};

/// Central difference of the loss at the float-quantized points
/// p +- eps, divided by the actual (p+ - p-). Color-side parameters use an
/// exact window restricted to the surfel's footprint and cover the pixel
/// term only (valid whenever the other lambdas are 0); geometry parameters
/// re-render the full frame and difference total_loss.
template <class S>
double fd_gradient(Scene& scene, SkeletonPose* pose, const PinholeCamera& cam,
                   const ImageF& gt, const FitConfig& cfg, int step,
                   const RenderSettings& settings, ParamRef ref, double eps);

/// Adam accumulators for one parameter group.
struct ParamGroupState {
    std::vector<double> m, v;
    int64_t t = 0;
    bool frozen = false;
};

/// Bias-corrected Adam on float parameters with double moments. Non-finite
/// gradients skip the whole group and emit a diagnostic. Returns true when
/// the update was applied.
bool adam_step(float* params, const double* grads, size_t count, ParamGroupState& state,
               double lr, std::vector<Diagnostic>* diagnostics = nullptr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

/// One Adam update over a raw span with caller-owned moments. Lets a group
/// spread across non-contiguous per-surfel slices share one step counter.
void adam_update_span(float* params, const double* grads, double* m, double* v, size_t count,
                      double lr, int64_t t, double beta1 = 0.9, double beta2 = 0.999,
                      double eps = 1e-8);

/// Post-step projection for low-texture texels: alpha to [0,1], RGB to
/// [-1,1].
void project_low_texture(MultiScaleTexture& tex);

/// Fresh-fit texture state: high all zeros; low RGB zeros; low alpha a
/// centered Gaussian bump, peak 0.9, sigma = S_L/4 texels.
void init_textures(Scene& scene);

struct FitView {
    PinholeCamera camera;
    ImageF gt;
    SkeletonPose pose;  // empty joints/offsets = canonical
    bool has_pose = false;
};

struct FitResult {
    int steps_run = 0;
    std::optional<int> diverged_at;  // step whose loss went non-finite, if any
    std::vector<std::string> log;    // line-delimited JSON records
    std::vector<Diagnostic> diagnostics;
};

/// Staged fit: [0, tex_freeze) textures frozen, then everything, then SH
/// only. One uniformly sampled view per step, annealed per-group Adam,
/// divergence guard on non-finite loss.
FitResult fit(Scene& scene, std::vector<FitView>& views, const FitConfig& cfg, uint64_t seed,
              const RenderSettings& settings);

}  // namespace msurfel

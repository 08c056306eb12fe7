#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "msurfel/optim.hpp"
#include "msurfel/shading.hpp"

using namespace msurfel;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
    const std::string path = "/tmp/" + name;
    std::ofstream out(path);
    out << body;
    return path;
}

ImageF const_gt(int width, int height, float rgb, float alpha = 1.0f) {
    ImageF img;
    img.width = width;
    img.height = height;
    img.rgba.resize(static_cast<size_t>(width) * height * 4);
    for (size_t p = 0; p < img.rgba.size() / 4; ++p) {
        for (int c = 0; c < 3; ++c) img.rgba[p * 4 + c] = rgb;
        img.rgba[p * 4 + 3] = alpha;
    }
    return img;
}

// One half-opaque gray card filling a small frame: every pixel is hit once
// with alpha 0.5 and unclamped color 0.5, which makes the chain rule fully
// hand-computable.
struct CardSetup {
    Scene scene;
    PinholeCamera cam;
    CardSetup() {
        scene.surfels.push_back(
            testutil::flat_surfel(0, 0.0f, 0.9f, Vec3f(0.5f, 0.5f, 0.5f), 0.5f));
        cam = testutil::make_camera(9, 9, 9.0f, 1.0f);
    }
};

}  // namespace

TEST_CASE("schedule boundaries at the default step count") {
    FitConfig cfg;  // 4000 steps
    CHECK(step_of(cfg.tex_freeze_frac, cfg.total_steps) == 50);
    CHECK(step_of(cfg.pixel_switch_frac, cfg.total_steps) == 70);

    CHECK(phase_at(0, cfg) == FitPhase::kTexFrozen);
    CHECK(phase_at(49, cfg) == FitPhase::kTexFrozen);
    CHECK(phase_at(50, cfg) == FitPhase::kAll);
    CHECK(phase_at(3799, cfg) == FitPhase::kAll);
    CHECK(phase_at(3800, cfg) == FitPhase::kShOnly);  // 4000 - 200
    CHECK(phase_at(3999, cfg) == FitPhase::kShOnly);

    CHECK(pixel_kind_at(69, cfg) == PixelLossKind::kL1);
    CHECK(pixel_kind_at(70, cfg) == PixelLossKind::kMse);

    CHECK_FALSE(norm_reg_active(69, cfg));
    CHECK(norm_reg_active(70, cfg));
    CHECK_FALSE(depth_reg_active(29, cfg));
    CHECK(depth_reg_active(30, cfg));
}

TEST_CASE("fraction-to-step conversion rounds half away from zero") {
    CHECK(step_of(0.0, 7) == 0);
    CHECK(step_of(1.0, 7) == 7);
    CHECK(step_of(0.5, 5) == 3);  // 2.5 rounds up
}

TEST_CASE("the tex-frozen phase never outlives the SH-only start") {
    FitConfig cfg;
    cfg.total_steps = 100;
    cfg.tex_freeze_frac = 0.9;
    cfg.sh_only_frac = 0.5;  // would start at 50, before the freeze ends
    CHECK(phase_at(89, cfg) == FitPhase::kTexFrozen);
    CHECK(phase_at(90, cfg) == FitPhase::kShOnly);  // kAll is squeezed out
}

TEST_CASE("learning rate decays to one percent across the run") {
    FitConfig cfg;
    cfg.total_steps = 137;
    const double lr0 = 0.05;
    CHECK(lr_schedule(lr0, 0, cfg) == lr0);
    CHECK(lr_schedule(lr0, cfg.total_steps, cfg) ==
          doctest::Approx(0.01 * lr0).epsilon(1e-9));
    CHECK(lr_schedule(lr0, 60, cfg) < lr_schedule(lr0, 59, cfg));
}

TEST_CASE("pixel loss agrees with hand sums") {
    RenderFrameT<float> pred;
    pred.width = 2;
    pred.height = 1;
    pred.color = {0.2f, 0.4f, 0.6f, 1.0f, 1.0f, 1.0f};
    ImageF gt;
    gt.width = 2;
    gt.height = 1;
    gt.rgba = {0.1f, 0.1f, 0.1f, 1.0f, 0.5f, 0.5f, 0.5f, 1.0f};

    CHECK(pixel_loss(pred, gt, PixelLossKind::kL1, {}) ==
          doctest::Approx(2.4 / 6.0).epsilon(1e-6));
    CHECK(pixel_loss(pred, gt, PixelLossKind::kMse, {}) ==
          doctest::Approx(1.1 / 6.0).epsilon(1e-6));

    const std::vector<uint8_t> first_only = {1, 0};
    CHECK(pixel_loss(pred, gt, PixelLossKind::kL1, first_only) ==
          doctest::Approx(0.9 / 3.0).epsilon(1e-6));

    std::vector<Diagnostic> diags;
    CHECK(pixel_loss(pred, gt, PixelLossKind::kL1, {0, 0}, &diags) == 0.0);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].rule == "pixel loss over empty mask");

    CHECK_THROWS_AS(pixel_loss(pred, gt, PixelLossKind::kL1, {1}), std::invalid_argument);
    ImageF wrong = gt;
    wrong.width = 1;
    CHECK_THROWS_AS(pixel_loss(pred, wrong, PixelLossKind::kL1, {}), std::invalid_argument);
}

TEST_CASE("neighbor pairs are directed k-nearest links") {
    const std::vector<Vec3f> pos = {Vec3f(0, 0, 0), Vec3f(3, 0, 0), Vec3f(4, 0, 0)};
    const auto pairs = build_neighbor_pairs(pos, 1);
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0] == std::pair<int, int>(0, 1));
    CHECK(pairs[1] == std::pair<int, int>(1, 2));
    CHECK(pairs[2] == std::pair<int, int>(2, 1));

    // k larger than n-1 clamps.
    CHECK(build_neighbor_pairs(pos, 10).size() == 6);
    CHECK(build_neighbor_pairs({Vec3f::Zero()}, 3).empty());
    CHECK(build_neighbor_pairs(pos, 0).empty());
}

TEST_CASE("control and scale regularizers") {
    const std::vector<Vec3f> dx = {Vec3f::Zero(), Vec3f(10, 0, 0), Vec3f(5, 0, 0)};
    CHECK(reg_ctrl(dx, {{0, 1}, {1, 2}}) == doctest::Approx(15.0).epsilon(1e-6));
    CHECK(reg_ctrl(dx, {}) == 0.0);

    CHECK(reg_scale({Vec2f(0.005f, 0.02f)}) == doctest::Approx(0.03).epsilon(1e-6));
    CHECK(reg_scale({Vec2f(0.005f, 0.02f), Vec2f(0.5f, 0.001f)}) ==
          doctest::Approx(0.54).epsilon(1e-6));
}

TEST_CASE("depth spread from replayed hit weights") {
    RenderFrameT<float> frame;
    frame.width = 2;
    frame.height = 1;
    frame.per_pixel_hits.resize(2);
    frame.per_pixel_hits[0] = {{0, 0.5f, 1.0f}, {1, 0.5f, 2.0f}};
    frame.per_pixel_hits[1] = {{2, 0.9f, 3.0f}};  // single hit: no spread

    // Pixel 0: w = (0.5, 0.25), 2*0.5*0.25*|1-2| = 0.25; mean over 2 pixels.
    CHECK(reg_depth(frame) == doctest::Approx(0.125).epsilon(1e-9));

    RenderFrameT<float> bare;
    bare.width = bare.height = 1;
    CHECK_THROWS_AS(reg_depth(bare), std::invalid_argument);
}

TEST_CASE("a fronto-parallel card has zero normal penalty") {
    const CardSetup c;
    const RenderFrame f = render<float>(c.scene, c.cam, nullptr, {});
    CHECK(reg_normal(f, c.cam) == doctest::Approx(0.0).epsilon(1e-4));
}

TEST_CASE("total loss gates terms by schedule and recorded state") {
    const CardSetup c;
    // Window metrics need at least 11 pixels per side.
    const PinholeCamera cam = testutil::make_camera(16, 16, 16.0f, 1.0f);
    FitConfig cfg;
    RenderSettings rs;
    rs.record_hits = true;
    const RenderFrame f = render<float>(c.scene, cam, nullptr, rs);
    const ImageF gt = const_gt(16, 16, 0.0f);

    // Step 0: depth (step 30) and normal (step 70) regs are still off.
    const LossBreakdown b0 = total_loss(f, gt, c.scene, nullptr, cam, 0, cfg, {});
    CHECK(b0.kind == PixelLossKind::kL1);
    CHECK_FALSE(b0.depth_active);
    CHECK_FALSE(b0.norm_active);
    CHECK(b0.ctrl == 0.0);  // no pose
    CHECK(b0.total == doctest::Approx(b0.pixel + cfg.lambda_ms_ssim * b0.ms_ssim_term +
                                      cfg.lambda_s * b0.scale));

    const LossBreakdown b100 = total_loss(f, gt, c.scene, nullptr, cam, 100, cfg, {});
    CHECK(b100.kind == PixelLossKind::kMse);
    CHECK(b100.depth_active);
    CHECK(b100.norm_active);
    CHECK(b100.total == doctest::Approx(b100.pixel + cfg.lambda_ms_ssim * b100.ms_ssim_term +
                                        cfg.lambda_s * b100.scale +
                                        cfg.lambda_n * b100.norm +
                                        cfg.lambda_d * b100.depth));

    // A depth-active step demands recorded hits.
    const RenderFrame no_hits = render<float>(c.scene, cam, nullptr, {});
    CHECK_THROWS_AS(total_loss(no_hits, gt, c.scene, nullptr, cam, 100, cfg, {}),
                    std::invalid_argument);
}

TEST_CASE("adam first step moves by roughly the learning rate") {
    float p[1] = {1.0f};
    const double g[1] = {2.0};
    ParamGroupState st;
    CHECK(adam_step(p, g, 1, st, 0.1));
    CHECK(st.t == 1);
    // mhat = g, vhat = g^2 after bias correction: step = lr * sign(g).
    CHECK(p[0] == doctest::Approx(0.9f).epsilon(1e-5));

    float q[1] = {1.0f};
    const double small[1] = {-1e-3};
    ParamGroupState st2;
    adam_step(q, small, 1, st2, 0.1);
    CHECK(q[0] == doctest::Approx(1.1f).epsilon(1e-4));  // sign, not magnitude
}

TEST_CASE("adam skips frozen groups and non-finite gradients") {
    float p[2] = {1.0f, 2.0f};
    const double bad[2] = {0.5, std::nan("")};
    ParamGroupState st;
    std::vector<Diagnostic> diags;
    CHECK_FALSE(adam_step(p, bad, 2, st, 0.1, &diags));
    CHECK(p[0] == 1.0f);
    CHECK(p[1] == 2.0f);
    CHECK(st.t == 0);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].rule == "non-finite gradient; group skipped");

    const double good[2] = {0.5, 0.5};
    st.frozen = true;
    CHECK_FALSE(adam_step(p, good, 2, st, 0.1, &diags));
    CHECK(p[0] == 1.0f);
    st.frozen = false;
    CHECK(adam_step(p, good, 2, st, 0.1, &diags));
    CHECK(p[0] != 1.0f);
}

TEST_CASE("span updates with a shared counter match adam_step") {
    float a[2] = {1.0f, -0.5f};
    const double g[2] = {0.3, -0.7};
    ParamGroupState st;
    adam_step(a, g, 2, st, 0.05);

    float b[2] = {1.0f, -0.5f};
    double m[2] = {0.0, 0.0}, v[2] = {0.0, 0.0};
    adam_update_span(b, g, m, v, 1, 0.05, 1);          // slice 1
    adam_update_span(b + 1, g + 1, m + 1, v + 1, 1, 0.05, 1);  // slice 2
    CHECK(a[0] == b[0]);
    CHECK(a[1] == b[1]);
}

TEST_CASE("fit config round-trips and rejects bad input") {
    FitConfig cfg;
    cfg.total_steps = 123;
    cfg.lr_sh = 0.011;
    cfg.lambda_d = 42.0;
    cfg.sh_only_frac = 0.25;
    cfg.full_fd = true;
    cfg.neighbor_k = 7;
    const std::string path = "/tmp/msurfel_cfg_roundtrip.json";
    save_fit_config(cfg, path);
    const FitConfig back = load_fit_config(path);
    CHECK(back.total_steps == 123);
    CHECK(back.lr_sh == cfg.lr_sh);
    CHECK(back.lambda_d == cfg.lambda_d);
    CHECK(back.sh_only_frac == cfg.sh_only_frac);
    CHECK(back.full_fd == true);
    CHECK(back.neighbor_k == 7);
    CHECK(back.lr_low_tex == cfg.lr_low_tex);  // untouched default survives
    std::remove(path.c_str());

    CHECK_THROWS_AS(
        load_fit_config(write_temp("msurfel_cfg_unknown.json", R"({"learning_rate": 1.0})")),
        std::runtime_error);
    CHECK_THROWS_AS(
        load_fit_config(write_temp("msurfel_cfg_steps.json", R"({"total_steps": 0})")),
        std::runtime_error);
    CHECK_THROWS_AS(load_fit_config(write_temp("msurfel_cfg_frac.json",
                                               R"({"tex_freeze_frac": 1.5})")),
                    std::runtime_error);
    CHECK_THROWS_AS(load_fit_config(write_temp("msurfel_cfg_lambda.json",
                                               R"({"lambda_s": -0.1})")),
                    std::runtime_error);
    CHECK_THROWS_AS(load_fit_config("/tmp/msurfel_cfg_missing_98127.json"),
                    std::runtime_error);
}

TEST_CASE("fresh textures are a centered alpha bump") {
    Rng rng(60);
    Scene scene = testutil::make_random_scene(rng, {.count = 2});
    init_textures(scene);
    for (const Surfel& s : scene.surfels) {
        for (float v : s.tex.high) CHECK(v == 0.0f);
        // sigma = 4 texels, center 7.5: alpha(7,7) = 0.9*exp(-0.5/32).
        const auto alpha = [&](int x, int y) {
            return s.tex.low[(y * kLowTexSize + x) * 4 + 3];
        };
        CHECK(alpha(7, 7) == doctest::Approx(0.9 * std::exp(-0.5 / 32.0)).epsilon(1e-6));
        CHECK(alpha(7, 7) == alpha(8, 8));
        CHECK(alpha(0, 0) == doctest::Approx(0.9 * std::exp(-112.5 / 32.0)).epsilon(1e-6));
        CHECK(alpha(7, 7) > alpha(5, 7));
        for (int t = 0; t < kLowTexSize * kLowTexSize; ++t)
            for (int c = 0; c < 3; ++c) CHECK(s.tex.low[t * 4 + c] == 0.0f);
    }
}

TEST_CASE("low-texture projection clamps display ranges") {
    MultiScaleTexture tex;
    tex.low[0] = 2.0f;    // r
    tex.low[1] = -3.0f;   // g
    tex.low[3] = 1.5f;    // a
    tex.low[7] = -0.25f;  // a of texel 1
    project_low_texture(tex);
    CHECK(tex.low[0] == 1.0f);
    CHECK(tex.low[1] == -1.0f);
    CHECK(tex.low[3] == 1.0f);
    CHECK(tex.low[7] == 0.0f);
}

TEST_CASE("backward gradients of the gray card match the chain rule") {
    CardSetup c;
    FitConfig cfg;
    cfg.lambda_ms_ssim = 0.0;  // isolate the pixel term

    // The card composites to T*a*c = 0.5*0.5 = 0.25 on every pixel. L1 at
    // step 0: diff = +0.25 at all 81 pixels, g_c = 1/(3*81) each.
    const ImageF gt_black = const_gt(9, 9, 0.0f);
    const ColorGrads gl1 = backward<float>(c.scene, c.cam, nullptr, gt_black, cfg, 0, {});
    REQUIRE(gl1.surfel_count == 1);
    CHECK(gl1.loss_pixel == doctest::Approx(0.25).epsilon(1e-5));

    const auto sum_low_channel = [&](const ColorGrads& g, int channel) {
        double acc = 0.0;
        for (int t = 0; t < kLowTexSize * kLowTexSize; ++t) acc += g.low[t * 4 + channel];
        return acc;
    };
    // d pred_c / d L_c = 1 through the taps; per pixel T*a = 0.5, so the
    // total low-texture RGB gradient is 81 * (1/243) * 0.5 = 1/6.
    for (int ch = 0; ch < 3; ++ch)
        CHECK(sum_low_channel(gl1, ch) == doctest::Approx(1.0 / 6.0).epsilon(1e-4));
    // Alpha route: dL/da = sum_c g_c * T * (c_k - 0) = 3*(1/243)*0.5 per
    // pixel; 81 pixels make 0.5, reached by both the alpha texels and dc.
    CHECK(sum_low_channel(gl1, 3) == doctest::Approx(0.5).epsilon(1e-4));
    REQUIRE(gl1.dc.size() == 1);
    CHECK(gl1.dc[0] == doctest::Approx(0.5).epsilon(1e-4));
    // The constant SH basis feeds every pixel equally: kSh0 * 1/6.
    for (int ch = 0; ch < 3; ++ch)
        CHECK(gl1.sh[0 * 3 + ch] == doctest::Approx(kSh0 / 6.0).epsilon(1e-4));

    // MSE at step 100 against gt = 0.2: diff = 0.05, g_c = 2*0.05/243, so
    // the RGB sum is 81 * (0.1/243) * 0.5 = 1/60.
    const ImageF gt_gray = const_gt(9, 9, 0.2f);
    const ColorGrads gmse = backward<float>(c.scene, c.cam, nullptr, gt_gray, cfg, 100, {});
    CHECK(gmse.loss_pixel == doctest::Approx(0.0025).epsilon(1e-4));
    for (int ch = 0; ch < 3; ++ch)
        CHECK(sum_low_channel(gmse, ch) == doctest::Approx(1.0 / 60.0).epsilon(1e-4));
}

TEST_CASE("backward matches finite differences on SH coefficients") {
    Rng rng(61);
    Scene scene = testutil::make_random_scene(rng, {.count = 5, .extent = 0.25f});
    const Scene target = testutil::make_random_scene(rng, {.count = 5, .extent = 0.25f});
    const PinholeCamera cam = testutil::make_camera(32, 32, 40.0f, 1.5f);

    FitConfig cfg;
    cfg.lambda_ms_ssim = 0.0;  // the windowed FD covers the pixel term only
    const int step = 100;      // MSE: smooth, no L1 kink at zero diffs
    const RenderFrame gtf = render<float>(target, cam, nullptr, {});
    ImageF gt;
    gt.width = gtf.width;
    gt.height = gtf.height;
    gt.rgba.resize(static_cast<size_t>(gt.width) * gt.height * 4);
    for (size_t i = 0; i < gt.rgba.size() / 4; ++i) {
        for (int c = 0; c < 3; ++c) gt.rgba[i * 4 + c] = gtf.color[i * 3 + c];
        gt.rgba[i * 4 + 3] = gtf.alpha[i];
    }

    // Double precision end to end keeps central differences quiet enough to
    // resolve gradients down to 1e-4.
    const ColorGrads g = backward<double>(scene, cam, nullptr, gt, cfg, step, {});
    int checked = 0;
    for (int s = 0; s < 5; ++s) {
        for (int k = 0; k < 12; ++k) {
            const double ga = g.sh[s * 12 + k];
            if (std::abs(ga) < 1e-4) continue;  // too small for a stable ratio
            const double gfd = fd_gradient<double>(scene, nullptr, cam, gt, cfg, step, {},
                                                   {ParamKind::kSh, s, k}, 1e-4);
            CHECK(std::abs(ga - gfd) / std::max(std::abs(ga), std::abs(gfd)) < 5e-3);
            ++checked;
        }
    }
    CHECK(checked >= 6);  // the scene must actually exercise the check
}

TEST_CASE("finite differences demand a pose for opacity offsets") {
    CardSetup c;
    FitConfig cfg;
    const ImageF gt = const_gt(9, 9, 0.0f);
    CHECK_THROWS_AS(fd_gradient<float>(c.scene, nullptr, c.cam, gt, cfg, 0, {},
                                       {ParamKind::kDc, 0, 0}, 1e-4),
                    std::invalid_argument);
    CHECK_THROWS_AS(fd_gradient<float>(c.scene, nullptr, c.cam, gt, cfg, 0, {},
                                       {ParamKind::kSh, 0, 0}, 0.0),
                    std::invalid_argument);
}

TEST_CASE("fit aborts cleanly when the loss turns non-finite") {
    CardSetup c;
    const std::array<float, kLowTexFloats> before = c.scene.surfels[0].tex.low;

    std::vector<FitView> views(1);
    views[0].camera = c.cam;
    views[0].gt = const_gt(9, 9, std::numeric_limits<float>::quiet_NaN());

    FitConfig cfg;
    cfg.total_steps = 5;
    cfg.lambda_ms_ssim = 0.0;  // 9x9 is too small for windowed terms
    Scene scene = c.scene;
    const FitResult res = fit(scene, views, cfg, 1, {});

    REQUIRE(res.diverged_at.has_value());
    CHECK(*res.diverged_at == 0);
    CHECK(res.steps_run == 0);
    CHECK(scene.surfels[0].tex.low == before);  // no update was applied
    bool flagged = false;
    for (const Diagnostic& d : res.diagnostics)
        if (d.rule.find("non-finite loss") != std::string::npos) flagged = true;
    CHECK(flagged);
}

TEST_CASE("a short fit pulls a card toward its target") {
    CardSetup c;
    std::vector<FitView> views(1);
    views[0].camera = c.cam;
    views[0].gt = const_gt(9, 9, 0.8f);

    FitConfig cfg;
    cfg.total_steps = 30;
    cfg.lambda_ms_ssim = 0.0;  // 9x9 is too small for windowed terms
    cfg.lambda_n = 0.0;
    cfg.lambda_d = 0.0;
    Scene scene = c.scene;
    const auto err = [&](const Scene& s) {
        const RenderFrame f = render<float>(s, c.cam, nullptr, {});
        double e = 0.0;
        for (float v : f.color) e += std::abs(v - 0.8);
        return e / f.color.size();
    };
    const double err0 = err(scene);
    const FitResult res = fit(scene, views, cfg, 3, {});
    CHECK(res.steps_run == 30);
    CHECK_FALSE(res.diverged_at.has_value());
    CHECK(err(scene) < 0.5 * err0);
}

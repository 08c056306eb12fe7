// msurfel: one binary covering scene bootstrap, rendering, camera
// augmentation, fitting, evaluation, and render benchmarking.
//
// Exit codes: 0 success, 1 usage, 2 validation, 3 runtime. Errors go to
// stderr as one-line JSON records.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "msurfel/animation.hpp"
#include "msurfel/camera.hpp"
#include "msurfel/camera_aug.hpp"
#include "msurfel/geometry.hpp"
#include "msurfel/hash.hpp"
#include "msurfel/image.hpp"
#include "msurfel/metrics.hpp"
#include "msurfel/optim.hpp"
#include "msurfel/rasterizer.hpp"
#include "msurfel/scene.hpp"

namespace {

using nlohmann::json;
using namespace msurfel;

void print_error(const char* kind, const std::string& what) {
    std::cerr << json{{"error", kind}, {"message", what}}.dump() << '\n';
}

void print_diagnostics(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags)
        std::cerr << json{{"diagnostic", d.rule}, {"surfel", d.surfel_id}}.dump() << '\n';
}

struct UsageError : std::exception {
    std::string msg;
    explicit UsageError(std::string m) : msg(std::move(m)) {}
    const char* what() const noexcept override { return msg.c_str(); }
};

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return j;
}

Scene load_valid_scene(const std::string& path) {
    Scene scene = load_scene(path);
    const auto diags = validate_scene(scene);
    if (!diags.empty()) {
        print_diagnostics(diags);
        throw std::invalid_argument("scene fails validation: " + path);
    }
    return scene;
}

SkeletonPose load_pose(const std::string& path) {
    const json j = load_json_file(path);
    SkeletonPose pose;
    if (j.contains("joints")) {
        for (const auto& jj : j.at("joints")) {
            SkeletonPose::Joint joint;
            const auto lin = jj.at("linear").get<std::vector<float>>();
            if (lin.size() != 9)
                throw std::invalid_argument(path + ": joint linear must have 9 entries");
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) joint.linear(r, c) = lin[r * 3 + c];
            const auto tr = jj.at("translation").get<std::vector<float>>();
            if (tr.size() != 3)
                throw std::invalid_argument(path + ": joint translation must have 3 entries");
            joint.translation = Vec3f(tr[0], tr[1], tr[2]);
            pose.joints.push_back(joint);
        }
    }
    if (j.contains("offsets")) {
        for (const auto& jo : j.at("offsets")) {
            PoseOffsets o;
            if (jo.contains("dx")) {
                const auto v = jo.at("dx").get<std::vector<float>>();
                if (v.size() != 3) throw std::invalid_argument(path + ": dx must have 3 entries");
                o.dx = Vec3f(v[0], v[1], v[2]);
            }
            if (jo.contains("dr")) {
                const auto v = jo.at("dr").get<std::vector<float>>();
                if (v.size() != 4)
                    throw std::invalid_argument(path + ": dr must have 4 entries (w,x,y,z)");
                o.dr = Quatf(v[0], v[1], v[2], v[3]);
            }
            if (jo.contains("ds")) {
                const auto v = jo.at("ds").get<std::vector<float>>();
                if (v.size() != 2) throw std::invalid_argument(path + ": ds must have 2 entries");
                o.ds = Vec2f(v[0], v[1]);
            }
            if (jo.contains("dc")) o.dc = jo.at("dc").get<float>();
            pose.offsets.push_back(o);
        }
    }
    return pose;
}

json metric_json(const MetricReport& m) {
    json j;
    j["psnr"] = std::isfinite(m.psnr) ? json(m.psnr) : json("inf");
    j["ssim"] = m.ssim;
    j["ms_ssim"] = m.ms_ssim;
    j["pixels"] = m.pixels;
    return j;
}

char hex_digit(uint64_t v) { return "0123456789abcdef"[v & 0xf]; }

std::string hash_string(uint64_t h) {
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[i] = hex_digit(h);
    return s;
}

// ---- init ---------------------------------------------------------------

struct InitArgs {
    std::string points, out, name = "scene";
    double scale = 0.05;
    int neighbors = 3;
};

int run_init(const InitArgs& a) {
    const json j = load_json_file(a.points);
    const json& arr = j.is_object() ? j.at("points") : j;
    std::vector<Vec3f> points;
    for (const auto& p : arr) {
        const auto v = p.get<std::vector<float>>();
        if (v.size() != 3)
            throw std::invalid_argument(a.points + ": each point must have 3 coordinates");
        points.emplace_back(v[0], v[1], v[2]);
    }

    const FrameEstimate est = estimate_surfel_frames(points, a.neighbors);
    print_diagnostics(est.diagnostics);

    Scene scene;
    scene.name = a.name;
    scene.metadata_json =
        json{{"source", a.points}, {"scale", a.scale}, {"neighbors", a.neighbors}}.dump();
    scene.surfels.resize(points.size());
    for (size_t i = 0; i < points.size(); ++i) {
        Surfel& s = scene.surfels[i];
        s.id = static_cast<int32_t>(i);
        s.mu = points[i];
        s.scale = Vec2f(static_cast<float>(a.scale), static_cast<float>(a.scale));
        s.rot = est.frames[i].rot;
    }
    init_textures(scene);

    const auto diags = validate_scene(scene);
    if (!diags.empty()) {
        print_diagnostics(diags);
        throw std::invalid_argument("constructed scene fails validation");
    }
    save_scene(scene, a.out);
    std::cout << json{{"surfels", scene.surfels.size()}, {"out", a.out}}.dump() << '\n';
    return 0;
}

// ---- render / bench -----------------------------------------------------

struct RenderArgs {
    std::string scene, camera, out, pose, raw;
    std::optional<double> force_omega;
    int threads = 0;
    bool brute = false;
};

RenderSettings settings_of(const RenderArgs& a) {
    RenderSettings s;
    if (a.force_omega) s.force_omega = static_cast<float>(*a.force_omega);
    s.thread_count = a.threads;
    return s;
}

void check_omega(const std::optional<double>& w) {
    if (w && (*w < 0.0 || *w > 1.0)) throw UsageError("--force-omega must lie in [0,1]");
}

int run_render(const RenderArgs& a) {
    check_omega(a.force_omega);
    const Scene scene = load_valid_scene(a.scene);
    const PinholeCamera cam = load_camera(a.camera);
    std::optional<SkeletonPose> pose;
    if (!a.pose.empty()) pose = load_pose(a.pose);

    const RenderSettings settings = settings_of(a);
    const RenderFrame frame =
        a.brute ? render_brute<float>(scene, cam, pose ? &*pose : nullptr, settings)
                : render<float>(scene, cam, pose ? &*pose : nullptr, settings);

    const ImageF img = to_imagef(frame);
    if (!a.out.empty()) save_png(to_u8(img), a.out);
    if (!a.raw.empty()) save_raw(img, a.raw);
    std::cout << json{{"hash", hash_string(frame_hash(frame))}}.dump() << '\n';
    return 0;
}

struct BenchArgs {
    RenderArgs r;
    int frames = 10;
};

int run_bench(const BenchArgs& a) {
    check_omega(a.r.force_omega);
    const Scene scene = load_valid_scene(a.r.scene);
    const PinholeCamera cam = load_camera(a.r.camera);
    const RenderSettings settings = settings_of(a.r);
    if (a.frames < 1) throw UsageError("--frames must be >= 1");

    auto once = [&] {
        return a.r.brute ? render_brute<float>(scene, cam, nullptr, settings)
                         : render<float>(scene, cam, nullptr, settings);
    };
    const RenderFrame warm = once();  // also the hashed reference frame

    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < a.frames; ++i) once();
    const auto stop = std::chrono::steady_clock::now();
    const double ms =
        std::chrono::duration<double, std::milli>(stop - start).count() / a.frames;

    std::cout << json{{"frames", a.frames},
                      {"ms_per_frame", ms},
                      {"fps", 1000.0 / ms},
                      {"threads", settings.thread_count},
                      {"width", cam.width},
                      {"height", cam.height},
                      {"surfels", scene.surfels.size()},
                      {"hash", hash_string(frame_hash(warm))}}
                     .dump()
              << '\n';
    return 0;
}

// ---- augment --------------------------------------------------------------

struct AugmentArgs {
    std::string camera, out_camera, image, out_image;
    double scale = 1.0;
    std::string filter = "bilinear";
};

int run_augment(const AugmentArgs& a) {
    if (a.scale <= 0.0) throw UsageError("--scale must be > 0");
    if (a.camera.empty() && a.image.empty())
        throw UsageError("augment needs --camera and/or --image");
    if (a.camera.empty() != a.out_camera.empty())
        throw UsageError("--camera and --out-camera go together");
    if (a.image.empty() != a.out_image.empty())
        throw UsageError("--image and --out-image go together");

    AugmentSpec spec;
    spec.s = a.scale;
    if (a.filter == "nearest")
        spec.filter = ResampleFilter::kNearest;
    else if (a.filter == "bilinear")
        spec.filter = ResampleFilter::kBilinear;
    else
        throw UsageError("--filter must be nearest or bilinear");

    json report;
    if (!a.camera.empty()) {
        const PinholeCamera cam = load_camera(a.camera);
        save_camera(augment_intrinsics(cam, spec), a.out_camera);
        report["camera"] = a.out_camera;
    }
    if (!a.image.empty()) {
        save_png(augment_image(load_png(a.image), spec), a.out_image);
        report["image"] = a.out_image;
    }
    std::cout << report.dump() << '\n';
    return 0;
}

// ---- fit ------------------------------------------------------------------

struct FitArgs {
    std::string scene, views, out, config, log;
    uint64_t seed = 1;
    int threads = 0;
    bool init_tex = false;
};

int run_fit(const FitArgs& a) {
    Scene scene = load_valid_scene(a.scene);
    FitConfig cfg;
    if (!a.config.empty()) cfg = load_fit_config(a.config);

    const json manifest = load_json_file(a.views);
    std::vector<FitView> views;
    for (const auto& entry : manifest) {
        FitView v;
        v.camera = load_camera(entry.at("camera").get<std::string>());
        v.gt = to_f(load_png(entry.at("image").get<std::string>()));
        if (entry.contains("pose")) {
            v.pose = load_pose(entry.at("pose").get<std::string>());
            v.has_pose = true;
        }
        views.push_back(std::move(v));
    }

    if (a.init_tex) init_textures(scene);

    RenderSettings settings;
    settings.thread_count = a.threads;
    const FitResult res = fit(scene, views, cfg, a.seed, settings);
    print_diagnostics(res.diagnostics);

    if (!a.log.empty()) {
        std::ofstream out(a.log);
        if (!out) throw std::runtime_error("cannot write log: " + a.log);
        for (const auto& line : res.log) out << line << '\n';
    }

    if (res.diverged_at) {
        print_error("runtime",
                    "fit diverged at step " + std::to_string(*res.diverged_at));
        return 3;
    }
    save_scene(scene, a.out);
    std::cout << json{{"steps_run", res.steps_run}, {"out", a.out}}.dump() << '\n';
    return 0;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
    std::string pred, gt;
    bool masked = false;
};

int run_eval(const EvalArgs& a) {
    const ImageF pred = to_f(load_png(a.pred));
    const ImageF gt = to_f(load_png(a.gt));
    const std::vector<uint8_t> mask = a.masked ? alpha_mask(gt) : std::vector<uint8_t>{};
    std::cout << metric_json(evaluate(pred, gt, mask)).dump() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Textured-surfel scene tool: init, render, augment, fit, eval, bench"};
    app.require_subcommand(1);

    InitArgs init_args;
    auto* init_cmd = app.add_subcommand("init", "Build a scene from a 3D point set");
    init_cmd->add_option("--points", init_args.points, "JSON point-set file")->required();
    init_cmd->add_option("--out", init_args.out, "Output .mss scene")->required();
    init_cmd->add_option("--scale", init_args.scale, "Half-extent of every surfel");
    init_cmd->add_option("--name", init_args.name, "Scene name");
    init_cmd->add_option("--neighbors", init_args.neighbors, "k for frame estimation");

    RenderArgs render_args;
    auto* render_cmd = app.add_subcommand("render", "Render a scene to PNG");
    render_cmd->add_option("--scene", render_args.scene, "Scene .mss file")->required();
    render_cmd->add_option("--camera", render_args.camera, "Camera JSON file")->required();
    render_cmd->add_option("--out", render_args.out, "Output PNG");
    render_cmd->add_option("--raw", render_args.raw, "Also write float32 RGBA dump");
    render_cmd->add_option("--pose", render_args.pose, "Skeleton pose JSON");
    render_cmd->add_option("--force-omega", render_args.force_omega,
                           "Pin the detail-mix weight to a value in [0,1]");
    render_cmd->add_option("--threads", render_args.threads, "Worker threads (0 = auto)");
    render_cmd->add_flag("--brute", render_args.brute, "Use the serial reference path");

    AugmentArgs aug_args;
    auto* aug_cmd = app.add_subcommand("augment", "Rescale-crop a camera and/or image");
    aug_cmd->add_option("--camera", aug_args.camera, "Input camera JSON");
    aug_cmd->add_option("--out-camera", aug_args.out_camera, "Output camera JSON");
    aug_cmd->add_option("--image", aug_args.image, "Input PNG");
    aug_cmd->add_option("--out-image", aug_args.out_image, "Output PNG");
    aug_cmd->add_option("--scale", aug_args.scale, "Zoom factor s (> 0)");
    aug_cmd->add_option("--filter", aug_args.filter, "nearest | bilinear");

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "Fit scene textures/SH to posed views");
    fit_cmd->add_option("--scene", fit_args.scene, "Initial scene .mss")->required();
    fit_cmd->add_option("--views", fit_args.views, "View manifest JSON")->required();
    fit_cmd->add_option("--out", fit_args.out, "Fitted scene .mss")->required();
    fit_cmd->add_option("--config", fit_args.config, "Fit config JSON");
    fit_cmd->add_option("--log", fit_args.log, "Per-step JSONL log file");
    fit_cmd->add_option("--seed", fit_args.seed, "View-sampling seed");
    fit_cmd->add_option("--threads", fit_args.threads, "Worker threads (0 = auto)");
    fit_cmd->add_flag("--init-textures", fit_args.init_tex,
                      "Reset textures to the fresh-fit state first");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Image quality metrics between two PNGs");
    eval_cmd->add_option("--pred", eval_args.pred, "Predicted PNG")->required();
    eval_cmd->add_option("--gt", eval_args.gt, "Ground-truth PNG")->required();
    eval_cmd->add_flag("--masked", eval_args.masked, "Restrict to gt alpha > 0");

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "Time repeated renders");
    bench_cmd->add_option("--scene", bench_args.r.scene, "Scene .mss file")->required();
    bench_cmd->add_option("--camera", bench_args.r.camera, "Camera JSON file")->required();
    bench_cmd->add_option("--threads", bench_args.r.threads, "Worker threads (0 = auto)");
    bench_cmd->add_option("--frames", bench_args.frames, "Timed frames");
    bench_cmd->add_option("--force-omega", bench_args.r.force_omega,
                          "Pin the detail-mix weight to a value in [0,1]");
    bench_cmd->add_flag("--brute", bench_args.r.brute, "Time the serial reference path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 1;
    }

    try {
        if (*init_cmd) return run_init(init_args);
        if (*render_cmd) return run_render(render_args);
        if (*aug_cmd) return run_augment(aug_args);
        if (*fit_cmd) return run_fit(fit_args);
        if (*eval_cmd) return run_eval(eval_args);
        if (*bench_cmd) return run_bench(bench_args);
    } catch (const UsageError& e) {
        print_error("usage", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        print_error("validation", e.what());
        return 2;
    } catch (const std::exception& e) {
        print_error("runtime", e.what());
        return 3;
    }
    return 0;
}

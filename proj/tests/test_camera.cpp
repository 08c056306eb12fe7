#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "msurfel/camera.hpp"

using namespace msurfel;

TEST_CASE("project_point follows the pinhole model") {
    PinholeCamera cam = testutil::make_camera(640, 480, 500.0f, 2.0f);
    cam.cx = 320.0f;
    cam.cy = 240.0f;

    const auto p = project_point<double>(cam, Vec3<double>(0.1, -0.05, 0.0));
    REQUIRE(p.has_value());
    CHECK(p->z_cam == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(p->x == doctest::Approx(320.0 + 500.0 * 0.1 / 2.0).epsilon(1e-12));
    CHECK(p->y == doctest::Approx(240.0 - 500.0 * 0.05 / 2.0).epsilon(1e-12));
}

TEST_CASE("points at or behind the near plane do not project") {
    const PinholeCamera cam = testutil::make_camera(64, 64, 50.0f, 1.0f);
    CHECK(!project_point<double>(cam, Vec3<double>(0, 0, -1.0)).has_value());
    CHECK(!project_point<double>(cam, Vec3<double>(0, 0, -1.0 + 0.5 * kNearEps)).has_value());
    CHECK(project_point<double>(cam, Vec3<double>(0, 0, -1.0 + 1e-3)).has_value());
}

TEST_CASE("camera center is the world-space pinhole position") {
    PinholeCamera cam;
    cam.fx = cam.fy = 100.0f;
    cam.cx = cam.cy = 32.0f;
    cam.width = cam.height = 64;
    cam.R = Mat3f(Eigen::AngleAxisf(0.7f, Vec3f::UnitY()));
    const Vec3f center(0.3f, -0.2f, 1.5f);
    cam.t = -(cam.R * center);

    CHECK((cam.center() - center).norm() < 1e-6f);
    // The center maps to the camera-space origin, hence fails to project.
    CHECK(!project_point<float>(cam, center).has_value());
}

TEST_CASE("camera JSON round-trips") {
    PinholeCamera cam;
    cam.fx = 123.5f;
    cam.fy = 118.25f;
    cam.cx = 31.75f;
    cam.cy = 33.5f;
    cam.width = 65;
    cam.height = 63;
    cam.R = Mat3f(Eigen::AngleAxisf(1.1f, Vec3f(1, 2, 3).normalized()));
    cam.t = Vec3f(0.25f, -0.5f, 2.0f);

    const std::string path =
        (std::filesystem::temp_directory_path() / "cam_roundtrip.json").string();
    save_camera(cam, path);
    const PinholeCamera back = load_camera(path);
    CHECK(back.fx == cam.fx);
    CHECK(back.fy == cam.fy);
    CHECK(back.cx == cam.cx);
    CHECK(back.cy == cam.cy);
    CHECK(back.width == cam.width);
    CHECK(back.height == cam.height);
    CHECK((back.R.array() == cam.R.array()).all());
    CHECK((back.t.array() == cam.t.array()).all());
    std::remove(path.c_str());
}

TEST_CASE("invalid camera files are rejected") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "cam_bad.json").string();
    std::ofstream(path) << R"({"fx":-10,"fy":10,"cx":1,"cy":1,"W":4,"H":4,)"
                        << R"("R":[1,0,0,0,1,0,0,0,1],"t":[0,0,0]})";
    CHECK_THROWS_AS(load_camera(path), std::runtime_error);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_camera("/nonexistent/cam.json"), std::runtime_error);
}

#include "msurfel/camera.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace msurfel {

PinholeCamera load_camera(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open camera file: " + path);
    nlohmann::json j;
    PinholeCamera cam;
    try {
        in >> j;
        cam.fx = j.at("fx").get<float>();
        cam.fy = j.at("fy").get<float>();
        cam.cx = j.at("cx").get<float>();
        cam.cy = j.at("cy").get<float>();
        cam.width = j.at("W").get<int>();
        cam.height = j.at("H").get<int>();

        const auto& R = j.at("R");
        if (R.size() != 9) throw std::runtime_error("camera R must have 9 entries: " + path);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) cam.R(r, c) = R[r * 3 + c].get<float>();

        const auto& t = j.at("t");
        if (t.size() != 3) throw std::runtime_error("camera t must have 3 entries: " + path);
        for (int i = 0; i < 3; ++i) cam.t[i] = t[i].get<float>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad camera file " + path + ": " + e.what());
    }

    if (!cam.valid())
        throw std::runtime_error("camera has non-positive focal length or size: " + path);
    return cam;
}

void save_camera(const PinholeCamera& cam, const std::string& path) {
    nlohmann::json j;
    j["fx"] = cam.fx;
    j["fy"] = cam.fy;
    j["cx"] = cam.cx;
    j["cy"] = cam.cy;
    j["W"] = cam.width;
    j["H"] = cam.height;
    auto R = nlohmann::json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) R.push_back(cam.R(r, c));
    j["R"] = std::move(R);
    auto t = nlohmann::json::array();
    for (int i = 0; i < 3; ++i) t.push_back(cam.t[i]);
    j["t"] = std::move(t);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write camera file: " + path);
    out << j.dump(2) << '\n';
}

}  // namespace msurfel

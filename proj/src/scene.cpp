#include "msurfel/scene.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace msurfel {

namespace {

bool all_finite(const Surfel& s) {
    if (!s.mu.allFinite() || !s.scale.allFinite()) return false;
    if (!std::isfinite(s.rot.w()) || !s.rot.vec().allFinite()) return false;
    for (float v : s.sh)
        if (!std::isfinite(v)) return false;
    for (float v : s.tex.low)
        if (!std::isfinite(v)) return false;
    for (float v : s.tex.high)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

std::vector<Diagnostic> validate_scene(const Scene& scene) {
    std::vector<Diagnostic> out;
    for (const Surfel& s : scene.surfels) {
        if (!all_finite(s)) {
            out.push_back({s.id, "non-finite value"});
            continue;
        }
        const float qn = std::sqrt(s.rot.w() * s.rot.w() + s.rot.vec().squaredNorm());
        if (std::abs(qn - 1.0f) > kUnitQuatTol)
            out.push_back({s.id, "non-unit rotation"});
        if (!(s.scale.x() > 0.0f) || !(s.scale.y() > 0.0f))
            out.push_back({s.id, "scale components > 0"});
        for (int k = 0; k < s.skin_count; ++k) {
            const SkinPair& p = s.skin[k];
            if (p.joint < 0 || p.joint >= scene.joint_count) {
                out.push_back({s.id, "skin joint index out of range"});
                break;
            }
        }
        if (scene.joint_count > 0) {
            float wsum = 0.0f;
            bool neg = false;
            for (int k = 0; k < s.skin_count; ++k) {
                wsum += s.skin[k].weight;
                neg = neg || s.skin[k].weight < 0.0f;
            }
            if (neg) out.push_back({s.id, "skin weights >= 0"});
            if (std::abs(wsum - 1.0f) > kSkinWeightTol)
                out.push_back({s.id, "weights sum to 1"});
        }
        for (int i = 0; i < kLowTexFloats; i += 4) {
            const float* t = s.tex.low.data() + i;
            if (t[0] < -1.0f || t[0] > 1.0f || t[1] < -1.0f || t[1] > 1.0f ||
                t[2] < -1.0f || t[2] > 1.0f) {
                out.push_back({s.id, "low texture rgb in [-1,1]"});
                break;
            }
        }
        for (int i = 3; i < kLowTexFloats; i += 4) {
            if (s.tex.low[i] < 0.0f || s.tex.low[i] > 1.0f) {
                out.push_back({s.id, "low texture alpha in [0,1]"});
                break;
            }
        }
    }
    return out;
}

nlohmann::json scene_header_json(const Scene& scene) {
    nlohmann::json h;
    h["format"] = "mss";
    h["version"] = 1;
    h["endianness"] = "little";
    h["surfel_count"] = scene.surfels.size();
    h["joint_count"] = scene.joint_count;
    h["low_tex_size"] = kLowTexSize;
    h["high_tex_size"] = kHighTexSize;
    h["base_floats_per_surfel"] = kBaseFloatsPerSurfel;
    h["floats_per_surfel"] = kFloatsPerSurfel;
    h["blob_floats"] = scene.surfels.size() * static_cast<std::size_t>(kFloatsPerSurfel);
    h["sections"] = {"base", "tex_low", "tex_high"};
    h["field_order"] = {"id", "mu", "scale", "rot_wxyz", "sh",
                        "skin_joints", "skin_weights"};
    h["name"] = scene.name;
    h["metadata"] = nlohmann::json::parse(scene.metadata_json.empty()
                                              ? std::string("{}")
                                              : scene.metadata_json);
    return h;
}

namespace {

void push_base_record(std::vector<float>& blob, const Surfel& s) {
    blob.push_back(static_cast<float>(s.id));
    blob.push_back(s.mu.x());
    blob.push_back(s.mu.y());
    blob.push_back(s.mu.z());
    blob.push_back(s.scale.x());
    blob.push_back(s.scale.y());
    blob.push_back(s.rot.w());
    blob.push_back(s.rot.x());
    blob.push_back(s.rot.y());
    blob.push_back(s.rot.z());
    for (float v : s.sh) blob.push_back(v);
    for (int k = 0; k < kMaxSkinJoints; ++k)
        blob.push_back(k < s.skin_count ? static_cast<float>(s.skin[k].joint) : -1.0f);
    for (int k = 0; k < kMaxSkinJoints; ++k)
        blob.push_back(k < s.skin_count ? s.skin[k].weight : 0.0f);
}

}  // namespace

void save_scene(const Scene& scene, const std::string& path) {
    const auto diags = validate_scene(scene);
    if (!diags.empty()) {
        std::ostringstream msg;
        msg << "save_scene: invalid scene, surfel " << diags.front().surfel_id
            << ": " << diags.front().rule;
        throw std::invalid_argument(msg.str());
    }

    std::vector<float> blob;
    blob.reserve(scene.surfels.size() * kFloatsPerSurfel);
    for (const Surfel& s : scene.surfels) push_base_record(blob, s);
    for (const Surfel& s : scene.surfels)
        blob.insert(blob.end(), s.tex.low.begin(), s.tex.low.end());
    for (const Surfel& s : scene.surfels)
        blob.insert(blob.end(), s.tex.high.begin(), s.tex.high.end());

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_scene: cannot open " + path);
    const std::string header = scene_header_json(scene).dump();
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    f.put('\n');
    f.put('\0');
    f.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size() * sizeof(float)));
    if (!f) throw std::runtime_error("save_scene: write failed for " + path);
}

Scene load_scene(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_scene: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)),
                      std::istreambuf_iterator<char>());

    const std::size_t zero = bytes.find('\0');
    if (zero == std::string::npos || zero == 0 || bytes[zero - 1] != '\n')
        throw std::runtime_error("load_scene: missing header terminator");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(bytes.substr(0, zero - 1));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("load_scene: bad header: ") + e.what());
    }
    if (h.value("format", "") != std::string("mss"))
        throw std::runtime_error("load_scene: not an mss file");
    if (h.value("endianness", "") != std::string("little"))
        throw std::runtime_error("load_scene: unsupported endianness");
    if (h.value("low_tex_size", 0) != kLowTexSize ||
        h.value("high_tex_size", 0) != kHighTexSize ||
        h.value("base_floats_per_surfel", 0) != kBaseFloatsPerSurfel)
        throw std::runtime_error("load_scene: unsupported layout in header");

    const std::size_t n = h.at("surfel_count").get<std::size_t>();
    const std::size_t expect_floats = n * static_cast<std::size_t>(kFloatsPerSurfel);
    const std::size_t expect_bytes = expect_floats * sizeof(float);
    const std::size_t got_bytes = bytes.size() - zero - 1;
    if (got_bytes != expect_bytes) {
        std::ostringstream msg;
        msg << "load_scene: blob size mismatch: expected " << expect_bytes
            << " bytes, got " << got_bytes;
        throw std::runtime_error(msg.str());
    }

    std::vector<float> blob(expect_floats);
    std::memcpy(blob.data(), bytes.data() + zero + 1, expect_bytes);

    Scene scene;
    scene.joint_count = h.value("joint_count", 0);
    scene.name = h.value("name", "");
    scene.metadata_json = h.contains("metadata") ? h["metadata"].dump() : "{}";
    scene.surfels.resize(n);

    const float* p = blob.data();
    for (std::size_t i = 0; i < n; ++i) {
        Surfel& s = scene.surfels[i];
        s.id = static_cast<std::int32_t>(p[0]);
        s.mu = Vec3f(p[1], p[2], p[3]);
        s.scale = Vec2f(p[4], p[5]);
        s.rot = Quatf(p[6], p[7], p[8], p[9]);
        for (int k = 0; k < 12; ++k) s.sh[k] = p[10 + k];
        s.skin_count = 0;
        for (int k = 0; k < kMaxSkinJoints; ++k) {
            const float j = p[22 + k];
            const float w = p[26 + k];
            if (j >= 0.0f) {
                s.skin[s.skin_count].joint = static_cast<std::int32_t>(j);
                s.skin[s.skin_count].weight = w;
                ++s.skin_count;
            }
        }
        p += kBaseFloatsPerSurfel;
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::memcpy(scene.surfels[i].tex.low.data(), p, kLowTexFloats * sizeof(float));
        p += kLowTexFloats;
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::memcpy(scene.surfels[i].tex.high.data(), p, kHighTexFloats * sizeof(float));
        p += kHighTexFloats;
    }

    const auto diags = validate_scene(scene);
    if (!diags.empty()) {
        std::ostringstream msg;
        msg << "load_scene: invalid scene, surfel " << diags.front().surfel_id
            << ": " << diags.front().rule;
        throw std::runtime_error(msg.str());
    }
    return scene;
}

}  // namespace msurfel

#include "msurfel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace msurfel {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr double kMsWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

struct Plane {
    int w = 0, h = 0;
    std::vector<double> v;
    double& at(int x, int y) { return v[static_cast<size_t>(y) * w + x]; }
    double at(int x, int y) const { return v[static_cast<size_t>(y) * w + x]; }
};

std::array<Plane, 3> split_rgb(const ImageF& img) {
    std::array<Plane, 3> out;
    for (int c = 0; c < 3; ++c) {
        out[c].w = img.width;
        out[c].h = img.height;
        out[c].v.resize(static_cast<size_t>(img.width) * img.height);
    }
    const size_t n = static_cast<size_t>(img.width) * img.height;
    for (size_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) out[c].v[i] = img.rgba[i * 4 + c];
    return out;
}

const std::array<std::array<double, kWin>, kWin>& gauss_window() {
    static const auto win = [] {
        std::array<double, kWin> g;
        double sum = 0.0;
        for (int i = 0; i < kWin; ++i) {
            const double d = i - (kWin - 1) / 2.0;
            g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        }
        std::array<std::array<double, kWin>, kWin> w;
        for (int y = 0; y < kWin; ++y)
            for (int x = 0; x < kWin; ++x) sum += (w[y][x] = g[y] * g[x]);
        for (auto& row : w)
            for (double& t : row) t /= sum;
        return w;
    }();
    return win;
}

/// VALID correlation with the Gaussian window.
Plane filter_valid(const Plane& img) {
    const auto& win = gauss_window();
    Plane out;
    out.w = img.w - kWin + 1;
    out.h = img.h - kWin + 1;
    out.v.assign(static_cast<size_t>(out.w) * out.h, 0.0);
    for (int y = 0; y < out.h; ++y) {
        for (int x = 0; x < out.w; ++x) {
            double acc = 0.0;
            for (int dy = 0; dy < kWin; ++dy)
                for (int dx = 0; dx < kWin; ++dx) acc += win[dy][dx] * img.at(x + dx, y + dy);
            out.at(x, y) = acc;
        }
    }
    return out;
}

Plane mul(const Plane& a, const Plane& b) {
    Plane out = a;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= b.v[i];
    return out;
}

struct SsimMaps {
    Plane ssim, cs;
};

SsimMaps ssim_maps(const Plane& x, const Plane& y) {
    const Plane mu_x = filter_valid(x);
    const Plane mu_y = filter_valid(y);
    const Plane exy = filter_valid(mul(x, y));
    const Plane exx = filter_valid(mul(x, x));
    const Plane eyy = filter_valid(mul(y, y));
    SsimMaps m;
    m.ssim = mu_x;  // reuse shape
    m.cs = mu_x;
    for (size_t i = 0; i < mu_x.v.size(); ++i) {
        const double num0 = 2.0 * mu_x.v[i] * mu_y.v[i];
        const double den0 = mu_x.v[i] * mu_x.v[i] + mu_y.v[i] * mu_y.v[i];
        const double lum = (num0 + kC1) / (den0 + kC1);
        const double num1 = 2.0 * exy.v[i];
        const double den1 = exx.v[i] + eyy.v[i];
        const double cs = (num1 - num0 + kC2) / (den1 - den0 + kC2);
        m.cs.v[i] = cs;
        m.ssim.v[i] = lum * cs;
    }
    return m;
}

/// Symmetric bottom/right pad to even dims, then 2x2 mean pooling.
Plane downsample2(const Plane& img) {
    Plane p = img;
    if (img.h % 2 || img.w % 2) {
        p.w = img.w + img.w % 2;
        p.h = img.h + img.h % 2;
        p.v.resize(static_cast<size_t>(p.w) * p.h);
        for (int y = 0; y < p.h; ++y)
            for (int x = 0; x < p.w; ++x)
                p.at(x, y) = img.at(std::min(x, img.w - 1), std::min(y, img.h - 1));
    }
    Plane out;
    out.w = p.w / 2;
    out.h = p.h / 2;
    out.v.resize(static_cast<size_t>(out.w) * out.h);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            out.at(x, y) =
                (p.at(2 * x, 2 * y) + p.at(2 * x, 2 * y + 1) + p.at(2 * x + 1, 2 * y) +
                 p.at(2 * x + 1, 2 * y + 1)) /
                4.0;
    return out;
}

void check_pair(const ImageF& pred, const ImageF& gt) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw std::invalid_argument("metric inputs have mismatched dimensions");
    if (pred.width <= 0 || pred.height <= 0)
        throw std::invalid_argument("metric inputs are empty");
}

}  // namespace

double psnr(const ImageF& pred, const ImageF& gt, const std::vector<uint8_t>& mask) {
    check_pair(pred, gt);
    const size_t n = static_cast<size_t>(pred.width) * pred.height;
    if (!mask.empty() && mask.size() != n)
        throw std::invalid_argument("psnr: mask size mismatch");
    double se = 0.0;
    int64_t count = 0;
    for (size_t i = 0; i < n; ++i) {
        if (!mask.empty() && !mask[i]) continue;
        ++count;
        for (int c = 0; c < 3; ++c) {
            const double d =
                static_cast<double>(pred.rgba[i * 4 + c]) - static_cast<double>(gt.rgba[i * 4 + c]);
            se += d * d;
        }
    }
    if (count == 0) throw std::invalid_argument("psnr: empty mask");
    const double mse = se / (3.0 * static_cast<double>(count));
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImageF& pred, const ImageF& gt, const std::vector<uint8_t>& mask) {
    check_pair(pred, gt);
    if (pred.width < kWin || pred.height < kWin)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    const size_t n = static_cast<size_t>(pred.width) * pred.height;
    if (!mask.empty() && mask.size() != n)
        throw std::invalid_argument("ssim: mask size mismatch");

    const auto px = split_rgb(pred);
    const auto gx = split_rgb(gt);
    const int half = kWin / 2;
    double total = 0.0;
    int64_t windows = 0;
    for (int c = 0; c < 3; ++c) {
        const SsimMaps m = ssim_maps(px[c], gx[c]);
        for (int y = 0; y < m.ssim.h; ++y) {
            for (int x = 0; x < m.ssim.w; ++x) {
                if (!mask.empty() &&
                    !mask[static_cast<size_t>(y + half) * pred.width + (x + half)])
                    continue;
                total += m.ssim.at(x, y);
                ++windows;
            }
        }
    }
    if (windows == 0) throw std::invalid_argument("ssim: mask selects no valid windows");
    return total / static_cast<double>(windows);
}

int ms_ssim_scales(int height, int width) {
    int n = 0, h = height, w = width;
    for (int k = 0; k < 5; ++k) {
        if (std::min(h, w) < kWin) break;
        ++n;
        h = (h + 1) / 2;
        w = (w + 1) / 2;
    }
    return std::max(n, 1);
}

double ms_ssim(const ImageF& pred, const ImageF& gt) {
    check_pair(pred, gt);
    if (pred.width < kWin || pred.height < kWin)
        throw std::invalid_argument("ms_ssim: image smaller than the 11x11 window");

    const int n_scales = ms_ssim_scales(pred.height, pred.width);
    double weights[5];
    double wsum = 0.0;
    for (int k = 0; k < n_scales; ++k) wsum += kMsWeights[k];
    for (int k = 0; k < n_scales; ++k)
        weights[k] = n_scales < 5 ? kMsWeights[k] / wsum : kMsWeights[k];

    auto px = split_rgb(pred);
    auto gx = split_rgb(gt);
    double per_channel[3] = {1.0, 1.0, 1.0};
    for (int k = 0; k < n_scales; ++k) {
        for (int c = 0; c < 3; ++c) {
            const SsimMaps m = ssim_maps(px[c], gx[c]);
            const Plane& src = (k < n_scales - 1) ? m.cs : m.ssim;
            double mean = 0.0;
            for (double v : src.v) mean += v;
            mean /= static_cast<double>(src.v.size());
            per_channel[c] *= std::pow(std::max(mean, 0.0), weights[k]);
        }
        if (k < n_scales - 1) {
            for (int c = 0; c < 3; ++c) {
                px[c] = downsample2(px[c]);
                gx[c] = downsample2(gx[c]);
            }
        }
    }
    return (per_channel[0] + per_channel[1] + per_channel[2]) / 3.0;
}

MetricReport evaluate(const ImageF& pred, const ImageF& gt, const std::vector<uint8_t>& mask) {
    MetricReport r;
    r.psnr = psnr(pred, gt, mask);
    r.ssim = ssim(pred, gt, mask);
    r.ms_ssim = ms_ssim(pred, gt);
    if (mask.empty()) {
        r.pixels = static_cast<int64_t>(pred.width) * pred.height;
    } else {
        r.pixels = 0;
        for (uint8_t m : mask) r.pixels += m ? 1 : 0;
    }
    return r;
}

std::vector<uint8_t> alpha_mask(const ImageF& img, float threshold) {
    const size_t n = static_cast<size_t>(img.width) * img.height;
    std::vector<uint8_t> mask(n);
    for (size_t i = 0; i < n; ++i) mask[i] = img.rgba[i * 4 + 3] > threshold ? 1 : 0;
    return mask;
}

}  // namespace msurfel

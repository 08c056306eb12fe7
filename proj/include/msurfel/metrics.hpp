#pragma once

#include <cstdint>
#include <vector>

#include "msurfel/image.hpp"

namespace msurfel {

/// fid/lpips slots stay unset (no pretrained networks); the eval output
/// serializes them as null.
struct MetricReport {
    double psnr = 0.0;
    double ssim = 0.0;
    double ms_ssim = 0.0;
    int64_t pixels = 0;  // masked pixel count the pixel metrics used
};

/// 10*log10(1/MSE) over the RGB channels of masked pixels; identical
/// images report +infinity. mask is W*H bytes (0 = skip), empty = all.
double psnr(const ImageF& pred, const ImageF& gt, const std::vector<uint8_t>& mask = {});

/// Mean local SSIM (11x11 Gaussian window, sigma 1.5, C1=1e-4, C2=9e-4,
/// biased covariance) over fully-interior windows whose center pixel is
/// masked; per-channel scores averaged. All arithmetic in double.
double ssim(const ImageF& pred, const ImageF& gt, const std::vector<uint8_t>& mask = {});

/// Multi-scale SSIM, full frame (no mask), power weights
/// (0.0448, 0.2856, 0.3001, 0.2363, 0.1333), symmetric-pad 2x2 mean
/// downsampling, intermediate cs terms clamped at 0. Images shorter than
/// 176 px use fewer scales with the leading weights renormalized to sum 1.
double ms_ssim(const ImageF& pred, const ImageF& gt);

/// Scales ms_ssim will use for an image of this size (the 11-tap window
/// must fit at every used scale).
int ms_ssim_scales(int height, int width);

MetricReport evaluate(const ImageF& pred, const ImageF& gt,
                      const std::vector<uint8_t>& mask = {});

/// Foreground mask from an image's alpha channel: alpha > threshold.
std::vector<uint8_t> alpha_mask(const ImageF& img, float threshold = 0.0f);

}  // namespace msurfel

#pragma once

#include <limits>
#include <string>

#include <json.hpp>

#include "disgan/volume.hpp"

namespace disgan {

struct MetricReport {
  double psnr_db = 0.0;  // +inf when MSE == 0
  double ssim = 0.0;
  double nrmse = 0.0;
  double data_range = 1.0;
  std::string convention = "ref-minmax[0,1]";

  bool psnr_is_inf() const { return std::isinf(psnr_db); }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    if (psnr_is_inf())
      j["psnr_db"] = "inf";
    else
      j["psnr_db"] = psnr_db;
    j["ssim"] = ssim;
    j["nrmse"] = nrmse;
    j["data_range"] = data_range;
    j["convention"] = convention;
    return j;
  }
};

/// 10*log10(range^2 / MSE); +inf sentinel when x == ref exactly.
double psnr(const Volume& x, const Volume& ref, double data_range);

/// Mean SSIM over all valid positions of an 11^3 Gaussian window
/// (sigma 1.5, K1 0.01, K2 0.03). Extents must be >= 11.
double ssim3d(const Volume& x, const Volume& ref, double data_range);

/// ||x - ref||_2 / ||ref||_2.
double nrmse(const Volume& x, const Volume& ref);

/// |centered 3D magnitude spectrum of x - centered magnitude spectrum of ref|
/// on the crop^3 center block. Extents must be >= crop.
Volume freq_residual(const Volume& x, const Volume& ref, int crop = 50);

/// Project evaluation convention: rescale both volumes by the reference's
/// (min, max) to [0,1], then PSNR/SSIM/NRMSE with data_range 1.
MetricReport evaluate_volumes(const Volume& x, const Volume& ref);

}  // namespace disgan

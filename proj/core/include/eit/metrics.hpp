#pragma once

#include <limits>
#include <vector>

#include <Eigen/Core>

#include "eit/mesh.hpp"

namespace eit {

/// ||x - ref||_2 / ||ref||_2. Throws std::invalid_argument on a size mismatch
/// or a zero reference.
double relative_error(const Eigen::VectorXd& x, const Eigen::VectorXd& ref);

/// Same ratio over the pixels that are inside the domain in both images.
double relative_error(const Image& x, const Image& ref);

/// Value psnr() returns for identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(max(x^2) / MSE) over in-domain pixels, MSE the mean squared
/// difference. Returns kPsnrIdentical when MSE is zero.
double psnr(const Image& x, const Image& ref);

struct ProfileLine {
  Vec2 start = Vec2::Zero();
  Vec2 end = Vec2::Zero();
  int samples = 1;
};

/// Nearest-pixel samples at equally spaced points from start to end
/// (inclusive). A zero-length line yields one sample. Outside pixels give NaN.
std::vector<double> profile(const Image& image, const ProfileLine& line);

/// Transposed copy: pixel (r, c) of the result is pixel (c, r) of the input.
Image transpose(const Image& image);

struct EvalReport {
  std::vector<double> re_per_iter;
  std::vector<double> psnr_per_iter;
  std::vector<double> wall_times;
  std::vector<std::vector<double>> profile_samples;
};

/// Sorensen-Dice overlap of two index sets given as boolean masks.
double dice(const std::vector<bool>& a, const std::vector<bool>& b);

}  // namespace eit

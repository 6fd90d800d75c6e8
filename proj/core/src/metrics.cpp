#include "eit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eit {

double relative_error(const Eigen::VectorXd& x, const Eigen::VectorXd& ref) {
  if (x.size() != ref.size()) {
    throw std::invalid_argument("relative_error: size mismatch");
  }
  const double denom = ref.norm();
  if (!(denom > 0.0)) {
    throw std::invalid_argument("relative_error: zero reference");
  }
  return (x - ref).norm() / denom;
}

namespace {

void check_same_grid(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument("images have different resolutions");
  }
}

}  // namespace

double relative_error(const Image& x, const Image& ref) {
  check_same_grid(x, ref);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < ref.pixels.size(); ++i) {
    const double a = x.pixels[i];
    const double b = ref.pixels[i];
    if (!Image::in_domain(a) || !Image::in_domain(b)) continue;
    num += (a - b) * (a - b);
    den += b * b;
  }
  if (!(den > 0.0)) {
    throw std::invalid_argument("relative_error: zero reference image");
  }
  return std::sqrt(num / den);
}

double psnr(const Image& x, const Image& ref) {
  check_same_grid(x, ref);
  double peak = 0.0;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < ref.pixels.size(); ++i) {
    const double a = x.pixels[i];
    const double b = ref.pixels[i];
    if (!Image::in_domain(a) || !Image::in_domain(b)) continue;
    peak = std::max(peak, a * a);
    sum += (a - b) * (a - b);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("psnr: no in-domain pixels");
  const double mse = sum / static_cast<double>(count);
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(peak / mse);
}

std::vector<double> profile(const Image& image, const ProfileLine& line) {
  const double px = 2.0 * image.extent / image.width;
  const double py = 2.0 * image.extent / image.height;
  auto to_pixel = [&](const Vec2& p) {
    const int col = std::clamp(
        static_cast<int>(std::floor((p.x() + image.extent) / px)), 0,
        image.width - 1);
    const int row = std::clamp(
        static_cast<int>(std::floor((image.extent - p.y()) / py)), 0,
        image.height - 1);
    return std::pair{row, col};
  };
  const int n = (line.start - line.end).norm() == 0.0 ? 1
                                                      : std::max(1, line.samples);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    const auto [row, col] = to_pixel(line.start + t * (line.end - line.start));
    out.push_back(image.at(row, col));
  }
  return out;
}

Image transpose(const Image& image) {
  Image out;
  out.width = image.height;
  out.height = image.width;
  out.extent = image.extent;
  out.pixels.resize(image.pixels.size());
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) out.at(c, r) = image.at(r, c);
  }
  return out;
}

double dice(const std::vector<bool>& a, const std::vector<bool>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dice: size mismatch");
  std::size_t inter = 0;
  std::size_t na = 0;
  std::size_t nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i];
    nb += b[i];
    inter += a[i] && b[i];
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

}  // namespace eit

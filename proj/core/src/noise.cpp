#include <cmath>
#include <random>

#include "eit/forward.hpp"

namespace eit {

Eigen::VectorXd add_noise(const Eigen::VectorXd& frame, double snr_db,
                          std::uint64_t seed) {
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    throw std::invalid_argument("snr_db must be a number or +inf");
  }
  if (snr_db == kNoiseFree) return frame;
  const double norm = frame.norm();
  if (!(norm > 0.0)) {
    throw std::invalid_argument("cannot add noise at a given SNR to a zero frame");
  }
  const double stddev = norm * std::pow(10.0, -snr_db / 20.0) /
                        std::sqrt(static_cast<double>(frame.size()));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, stddev);
  Eigen::VectorXd out = frame;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += gauss(rng);
  return out;
}

VoltageFrame add_noise(const VoltageFrame& frame, double snr_db,
                       std::uint64_t seed) {
  VoltageFrame out = frame;
  out.data = add_noise(frame.data, snr_db, seed);
  return out;
}

}  // namespace eit

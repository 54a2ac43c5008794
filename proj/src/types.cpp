#include "fdntune/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace fdntune {

FrequencyGrid make_frequency_grid(int num_bins) {
  if (num_bins < 2)
    throw std::invalid_argument("make_frequency_grid: need at least 2 bins");
  FrequencyGrid grid;
  grid.num_bins = num_bins;
  grid.points.resize(num_bins);
  for (int k = 0; k < num_bins; ++k) {
    const double a = kPi * k / (num_bins - 1);
    grid.points[k] = {std::cos(a), std::sin(a)};
  }
  grid.points.front() = {1.0, 0.0};
  grid.points.back() = {-1.0, 0.0};
  return grid;
}

double ImpulseResponse::energy() const {
  double e = 0.0;
  for (double s : samples) e += s * s;
  return e;
}

bool ImpulseResponse::all_finite() const {
  return std::all_of(samples.begin(), samples.end(),
                     [](double s) { return std::isfinite(s); });
}

double orthogonality_error(const Eigen::MatrixXd& u) {
  const Eigen::MatrixXd g =
      u.transpose() * u - Eigen::MatrixXd::Identity(u.rows(), u.cols());
  return g.cwiseAbs().maxCoeff();
}

void FdnParams::validate() const {
  const int n = size();
  if (n < 1) throw std::invalid_argument("FdnParams: need at least one line");
  if (sample_rate <= 0.0)
    throw std::invalid_argument("FdnParams: sample rate must be positive");
  std::set<int> seen;
  for (int d : delays) {
    if (d <= 0) throw std::invalid_argument("FdnParams: delays must be > 0");
    if (!seen.insert(d).second)
      throw std::invalid_argument("FdnParams: delays must be distinct");
  }
  if (feedback.rows() != n || feedback.cols() != n ||
      input_gains.size() != n || output_gains.size() != n)
    throw std::invalid_argument("FdnParams: dimension mismatch");
  if (orthogonality_error(feedback) > 1e-10)
    throw std::invalid_argument("FdnParams: feedback matrix not orthogonal");
}

void AttenuationParams::validate(double sample_rate) const {
  if (!(t60_dc_s > 0.0))
    throw std::invalid_argument("AttenuationParams: t60_dc must be > 0");
  if (!(t60_ny_s > 0.0))
    throw std::invalid_argument("AttenuationParams: t60_ny must be > 0");
  if (!(crossover_hz > 0.0) || !(crossover_hz < sample_rate / 2.0))
    throw std::invalid_argument(
        "AttenuationParams: crossover must lie in (0, fs/2)");
}

}  // namespace fdntune

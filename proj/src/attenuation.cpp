#include "fdntune/attenuation.hpp"

#include <cmath>

namespace fdntune {

double per_sample_gain_db(double t60_s, double sample_rate) {
  if (!(t60_s > 0.0))
    throw std::invalid_argument("per_sample_gain_db: t60 must be > 0");
  return -60.0 / (sample_rate * t60_s);
}

double clamp_crossover(double crossover_hz, double sample_rate) {
  return std::min(crossover_hz, kCrossoverMaxFsFraction * sample_rate);
}

LineGains line_endpoint_gains(const AttenuationParams& atten, int delay,
                              double sample_rate) {
  atten.validate(sample_rate);
  if (delay <= 0)
    throw std::invalid_argument("line_endpoint_gains: delay must be > 0");
  LineGains g;
  g.dc = std::pow(
      10.0, delay * per_sample_gain_db(atten.t60_dc_s, sample_rate) / 20.0);
  g.ny = std::pow(
      10.0, delay * per_sample_gain_db(atten.t60_ny_s, sample_rate) / 20.0);
  return g;
}

ShelvingCoeffs design_shelving(const AttenuationParams& atten, int delay,
                               double sample_rate) {
  const LineGains gains = line_endpoint_gains(atten, delay, sample_rate);
  const double g = gains.dc / gains.ny;
  const double sg = std::sqrt(g);
  const double wc =
      2.0 * kPi * clamp_crossover(atten.crossover_hz, sample_rate) /
      sample_rate;
  const double t = std::tan(wc);
  if (!std::isfinite(t))
    throw std::invalid_argument("design_shelving: crossover warp not finite");
  ShelvingCoeffs c;
  c.b0 = gains.ny * (sg * t + 1.0);
  c.b1 = gains.ny * (sg * t - 1.0);
  c.a0 = t / sg + 1.0;
  c.a1 = t / sg - 1.0;
  return c;
}

cdouble eval_filter_at(const ShelvingCoeffs& c, cdouble z) {
  const cdouble zinv = 1.0 / z;
  return (c.b0 + c.b1 * zinv) / (c.a0 + c.a1 * zinv);
}

std::vector<cdouble> eval_filter(const ShelvingCoeffs& coeffs,
                                 const FrequencyGrid& grid) {
  std::vector<cdouble> out(grid.num_bins);
  for (int k = 0; k < grid.num_bins; ++k) {
    const cdouble zinv = std::conj(grid.points[k]);
    out[k] = (coeffs.b0 + coeffs.b1 * zinv) / (coeffs.a0 + coeffs.a1 * zinv);
  }
  return out;
}

std::vector<double> gain_to_t60_curve(std::span<const double> magnitude,
                                      int delay, double sample_rate) {
  if (delay <= 0)
    throw std::invalid_argument("gain_to_t60_curve: delay must be > 0");
  std::vector<double> t60(magnitude.size());
  for (size_t i = 0; i < magnitude.size(); ++i) {
    const double m = magnitude[i];
    if (!(m > 0.0) || !(m < 1.0))
      throw std::invalid_argument(
          "gain_to_t60_curve: magnitudes must lie in (0, 1)");
    t60[i] = -60.0 * delay / (sample_rate * 20.0 * std::log10(m));
  }
  return t60;
}

}  // namespace fdntune

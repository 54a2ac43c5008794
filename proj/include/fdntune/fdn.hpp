#pragma once

#include <span>
#include <vector>

#include "fdntune/rng.hpp"
#include "fdntune/types.hpp"

namespace fdntune {

// Smallest M with 2*(M-1) >= fs * (t60_max + margin).
int choose_num_bins(double t60_max_s, double sample_rate,
                    double margin_s = 1.0);

// expm(W - W^T); orthogonal by construction.
Eigen::MatrixXd orthogonal_from_skew(const Eigen::MatrixXd& w);

Eigen::MatrixXd random_orthogonal(int n, Rng& rng);
Eigen::MatrixXd random_orthogonal(int n, std::uint64_t seed);

// Pairwise co-prime integers drawn uniformly from [min_delay, max_delay] by
// rejection, returned sorted ascending.
std::vector<int> sample_coprime_delays(int n, int min_delay, int max_delay,
                                       Rng& rng);

// Per-line attenuation evaluated on the grid. Three sources cover the uses:
// a constant gain per line, per-line first-order sections, or an explicit
// bin-major table (values[k * n + i]).
struct AttenuationSource {
  enum class Kind { Constant, Shelving, Table };
  Kind kind = Kind::Constant;
  std::vector<double> constant_gains;
  std::vector<ShelvingCoeffs> sections;
  int table_lines = 0;
  std::vector<cdouble> table;  // bin-major

  static AttenuationSource constant(std::vector<double> per_line_gain);
  static AttenuationSource shelving(std::vector<ShelvingCoeffs> coeffs);
  static AttenuationSource from_table(int num_lines,
                                      std::vector<cdouble> bin_major_values);

  int lines() const;
  // Writes the n attenuation values for bin k (z = grid point, zinv = 1/z).
  void sample_bin(int k, cdouble zinv, cdouble* out) const;
};

// z_k^{m_i} for every bin and line, bin-major. Constant per delay set;
// building it once amortizes the trig work across evaluations.
struct DelayPhaseTable {
  int num_lines = 0;
  int num_bins = 0;
  std::vector<cdouble> values;  // values[k * num_lines + i]

  static DelayPhaseTable build(const std::vector<int>& delays,
                               const FrequencyGrid& grid);
};

// Transfer function c^T [D^-1 - U diag(Gamma)]^-1 b on every grid point,
// one partial-pivot LU solve per bin. Throws NumericError naming the first
// singular bin; throws std::invalid_argument if any |Gamma| >= 1.
void fdn_frequency_response_serial(const FdnParams& params,
                                   const AttenuationSource& atten,
                                   const FrequencyGrid& grid,
                                   const DelayPhaseTable& phases,
                                   std::span<cdouble> out);
// OpenMP variant; bins are independent, so the result is bit-identical to the
// serial reference for any thread count.
void fdn_frequency_response(const FdnParams& params,
                            const AttenuationSource& atten,
                            const FrequencyGrid& grid,
                            const DelayPhaseTable& phases,
                            std::span<cdouble> out);

// Convenience overloads that build the phase table internally.
void fdn_frequency_response_serial(const FdnParams& params,
                                   const AttenuationSource& atten,
                                   const FrequencyGrid& grid,
                                   std::span<cdouble> out);
void fdn_frequency_response(const FdnParams& params,
                            const AttenuationSource& atten,
                            const FrequencyGrid& grid, std::span<cdouble> out);

// Extends the half spectrum to conjugate symmetry and inverse-transforms;
// output has 2*(M-1) real samples.
ImpulseResponse response_to_ir(std::span<const cdouble> half_spectrum,
                               double sample_rate);

// Forward transform of a 2*(M-1)-sample response back to M bins.
std::vector<cdouble> ir_to_response(const ImpulseResponse& ir);

}  // namespace fdntune

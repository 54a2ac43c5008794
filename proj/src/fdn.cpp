#include "fdntune/fdn.hpp"

#include <omp.h>

#include <atomic>
#include <cmath>
#include <numeric>
#include <unsupported/Eigen/MatrixFunctions>

#include "fdntune/complex_lu.hpp"
#include "fdntune/fft.hpp"

namespace fdntune {

int choose_num_bins(double t60_max_s, double sample_rate, double margin_s) {
  if (!(t60_max_s > 0.0))
    throw std::invalid_argument("choose_num_bins: t60 must be > 0");
  const double needed = sample_rate * (t60_max_s + margin_s);
  const int half = static_cast<int>(std::ceil(needed / 2.0));
  return std::max(half, 1) + 1;
}

Eigen::MatrixXd orthogonal_from_skew(const Eigen::MatrixXd& w) {
  const Eigen::MatrixXd s = w - w.transpose();
  return s.exp();
}

Eigen::MatrixXd random_orthogonal(int n, Rng& rng) {
  Eigen::MatrixXd w(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) w(i, j) = rng.normal();
  return orthogonal_from_skew(w);
}

Eigen::MatrixXd random_orthogonal(int n, std::uint64_t seed) {
  Rng rng(seed);
  return random_orthogonal(n, rng);
}

std::vector<int> sample_coprime_delays(int n, int min_delay, int max_delay,
                                       Rng& rng) {
  if (n < 1 || min_delay < 1 || max_delay < min_delay)
    throw std::invalid_argument("sample_coprime_delays: bad range");
  std::vector<int> picked;
  picked.reserve(n);
  const int max_tries = 20000;
  int tries = 0;
  while (static_cast<int>(picked.size()) < n) {
    if (++tries > max_tries) {
      // Restart from scratch; the range may have been painted into a corner.
      picked.clear();
      tries = 0;
    }
    const int cand = rng.uniform_int(min_delay, max_delay);
    bool ok = true;
    for (int d : picked)
      if (std::gcd(d, cand) != 1) {
        ok = false;
        break;
      }
    if (ok) picked.push_back(cand);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

AttenuationSource AttenuationSource::constant(
    std::vector<double> per_line_gain) {
  AttenuationSource s;
  s.kind = Kind::Constant;
  s.constant_gains = std::move(per_line_gain);
  return s;
}

AttenuationSource AttenuationSource::shelving(
    std::vector<ShelvingCoeffs> coeffs) {
  AttenuationSource s;
  s.kind = Kind::Shelving;
  s.sections = std::move(coeffs);
  return s;
}

AttenuationSource AttenuationSource::from_table(
    int num_lines, std::vector<cdouble> bin_major_values) {
  AttenuationSource s;
  s.kind = Kind::Table;
  s.table_lines = num_lines;
  s.table = std::move(bin_major_values);
  return s;
}

int AttenuationSource::lines() const {
  switch (kind) {
    case Kind::Constant:
      return static_cast<int>(constant_gains.size());
    case Kind::Shelving:
      return static_cast<int>(sections.size());
    case Kind::Table:
      return table_lines;
  }
  return 0;
}

void AttenuationSource::sample_bin(int k, cdouble zinv, cdouble* out) const {
  switch (kind) {
    case Kind::Constant:
      for (size_t i = 0; i < constant_gains.size(); ++i)
        out[i] = constant_gains[i];
      break;
    case Kind::Shelving:
      for (size_t i = 0; i < sections.size(); ++i) {
        const ShelvingCoeffs& c = sections[i];
        out[i] = (c.b0 + c.b1 * zinv) / (c.a0 + c.a1 * zinv);
      }
      break;
    case Kind::Table: {
      const cdouble* row = table.data() + static_cast<size_t>(k) * table_lines;
      for (int i = 0; i < table_lines; ++i) out[i] = row[i];
      break;
    }
  }
}

DelayPhaseTable DelayPhaseTable::build(const std::vector<int>& delays,
                                       const FrequencyGrid& grid) {
  DelayPhaseTable t;
  t.num_lines = static_cast<int>(delays.size());
  t.num_bins = grid.num_bins;
  t.values.resize(static_cast<size_t>(t.num_bins) * t.num_lines);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < t.num_bins; ++k) {
    const double a = grid.angle(k);
    cdouble* row = t.values.data() + static_cast<size_t>(k) * t.num_lines;
    for (int i = 0; i < t.num_lines; ++i) {
      const double phase = a * delays[i];
      row[i] = {std::cos(phase), std::sin(phase)};
    }
  }
  return t;
}

namespace {

constexpr int kMaxLines = 64;

void run_response(const FdnParams& params, const AttenuationSource& atten,
                  const FrequencyGrid& grid, const DelayPhaseTable& phases,
                  std::span<cdouble> out, bool parallel) {
  params.validate();
  const int n = params.size();
  if (n > kMaxLines)
    throw std::invalid_argument("fdn_frequency_response: too many lines");
  if (atten.lines() != n)
    throw std::invalid_argument(
        "fdn_frequency_response: attenuation size mismatch");
  if (phases.num_bins != grid.num_bins || phases.num_lines != n)
    throw std::invalid_argument(
        "fdn_frequency_response: phase table mismatch");
  if (static_cast<int>(out.size()) != grid.num_bins)
    throw std::invalid_argument("fdn_frequency_response: bad output size");

  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      u = params.feedback;
  const double* b = params.input_gains.data();
  const double* c = params.output_gains.data();

  std::atomic<int> singular_bin{-1};
  std::atomic<bool> gain_violation{false};
  const int m = grid.num_bins;

  dispatch_lines(n, [&](auto nc) {
    constexpr int kN = decltype(nc)::value;
    constexpr int kBuf = kN > 0 ? kN : kMaxLines;
    const int nn = kN > 0 ? kN : n;
#pragma omp parallel if (parallel)
    {
      cdouble a_buf[kBuf * kBuf];
      cdouble x_buf[kBuf];
      cdouble g_buf[kBuf];
      int piv[kBuf];
#pragma omp for schedule(static)
      for (int k = 0; k < m; ++k) {
        const cdouble zinv = std::conj(grid.points[k]);
        const cdouble* row =
            phases.values.data() + static_cast<size_t>(k) * nn;
        atten.sample_bin(k, zinv, g_buf);
        bool violation = false;
        for (int i = 0; i < nn; ++i)
          if (std::norm(g_buf[i]) >= 1.0) violation = true;
        if (violation) {
          gain_violation.store(true);
          continue;
        }
        // Column-major A = diag(z^m) - U diag(Gamma).
        for (int j = 0; j < nn; ++j) {
          const cdouble g = g_buf[j];
          for (int i = 0; i < nn; ++i)
            a_buf[i + j * nn] = -u.data()[i * nn + j] * g;
          a_buf[j + j * nn] += row[j];
        }
        if (!lu_factor_impl<kN>(a_buf, nn, piv)) {
          int expected = -1;
          singular_bin.compare_exchange_strong(expected, k);
          continue;
        }
        for (int i = 0; i < nn; ++i) x_buf[i] = b[i];
        lu_solve_impl<kN>(a_buf, piv, nn, x_buf);
        cdouble h = 0.0;
        for (int i = 0; i < nn; ++i) h += c[i] * x_buf[i];
        out[k] = h;
      }
    }
  });
  if (gain_violation.load())
    throw std::invalid_argument(
        "fdn_frequency_response: attenuation magnitude must be < 1");
  if (singular_bin.load() >= 0)
    throw NumericError("fdn_frequency_response: singular system at bin " +
                       std::to_string(singular_bin.load()));
}

}  // namespace

void fdn_frequency_response_serial(const FdnParams& params,
                                   const AttenuationSource& atten,
                                   const FrequencyGrid& grid,
                                   const DelayPhaseTable& phases,
                                   std::span<cdouble> out) {
  run_response(params, atten, grid, phases, out, false);
}

void fdn_frequency_response(const FdnParams& params,
                            const AttenuationSource& atten,
                            const FrequencyGrid& grid,
                            const DelayPhaseTable& phases,
                            std::span<cdouble> out) {
  run_response(params, atten, grid, phases, out, true);
}

void fdn_frequency_response_serial(const FdnParams& params,
                                   const AttenuationSource& atten,
                                   const FrequencyGrid& grid,
                                   std::span<cdouble> out) {
  const auto phases = DelayPhaseTable::build(params.delays, grid);
  run_response(params, atten, grid, phases, out, false);
}

void fdn_frequency_response(const FdnParams& params,
                            const AttenuationSource& atten,
                            const FrequencyGrid& grid,
                            std::span<cdouble> out) {
  const auto phases = DelayPhaseTable::build(params.delays, grid);
  run_response(params, atten, grid, phases, out, true);
}

ImpulseResponse response_to_ir(std::span<const cdouble> half_spectrum,
                               double sample_rate) {
  const int m = static_cast<int>(half_spectrum.size());
  if (m < 2) throw std::invalid_argument("response_to_ir: need >= 2 bins");
  for (const cdouble& v : half_spectrum)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::invalid_argument("response_to_ir: non-finite input");
  const int length = 2 * (m - 1);
  std::vector<cdouble> spec(half_spectrum.begin(), half_spectrum.end());
  // dc and Nyquist of a real transfer function are real; drop rounding residue.
  spec.front() = {spec.front().real(), 0.0};
  spec.back() = {spec.back().real(), 0.0};

  ImpulseResponse ir;
  ir.sample_rate = sample_rate;
  ir.samples.resize(length);
  RealFft fft(length);
  fft.inverse(spec, ir.samples);
  const double scale = 1.0 / length;
  for (double& s : ir.samples) s *= scale;
  return ir;
}

std::vector<cdouble> ir_to_response(const ImpulseResponse& ir) {
  const int length = ir.length();
  if (length < 2 || length % 2 != 0)
    throw std::invalid_argument("ir_to_response: length must be even and >= 2");
  RealFft fft(length);
  std::vector<cdouble> spec(fft.bins());
  fft.forward(ir.samples, spec);
  return spec;
}

}  // namespace fdntune

#include "fdntune/grad.hpp"

#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "fdntune/attenuation.hpp"
#include "fdntune/complex_lu.hpp"
#include "fdntune/fdn.hpp"
#include "fdntune/fft.hpp"

namespace fdntune {

double t60_from_raw(double raw) { return std::exp(raw); }

double raw_from_t60(double t60_s) {
  if (!(t60_s > 0.0)) throw std::invalid_argument("raw_from_t60: t60 <= 0");
  return std::log(t60_s);
}

double fc_from_raw(double raw, double sample_rate) {
  const double lo = kCrossoverRawLoHz;
  const double hi = kCrossoverMaxFsFraction * sample_rate;
  const double s = 1.0 / (1.0 + std::exp(-raw));
  return lo + (hi - lo) * s;
}

double raw_from_fc(double crossover_hz, double sample_rate) {
  const double lo = kCrossoverRawLoHz;
  const double hi = kCrossoverMaxFsFraction * sample_rate;
  const double u = (crossover_hz - lo) / (hi - lo);
  if (!(u > 0.0) || !(u < 1.0))
    throw std::invalid_argument("raw_from_fc: crossover outside raw range");
  return std::log(u / (1.0 - u));
}

RealizedParams reparameterize(const ParamVector& raw, double sample_rate) {
  RealizedParams p;
  p.t60_dc_s = t60_from_raw(raw.raw_t60);
  p.crossover_hz = fc_from_raw(raw.raw_fc, sample_rate);
  p.feedback = orthogonal_from_skew(raw.skew_raw);
  p.input_gains = raw.input_gains;
  p.output_gains = raw.output_gains;
  return p;
}

Eigen::MatrixXd expm_frechet_adjoint(const Eigen::MatrixXd& s,
                                     const Eigen::MatrixXd& grad_u) {
  const int n = static_cast<int>(s.rows());
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = s.transpose();
  block.bottomRightCorner(n, n) = s.transpose();
  block.topRightCorner(n, n) = grad_u;
  const Eigen::MatrixXd e = block.exp();
  return e.topRightCorner(n, n);
}

namespace {

constexpr int kMaxLines = 64;
constexpr int kBinBlock = 8192;  // fixed reduction block, thread-count agnostic

struct LineDesign {
  double gamma_ny = 1.0, gamma_dc = 1.0;
  double sg = 1.0;           // sqrt(gamma_dc / gamma_ny)
  double t = 0.0;            // tan(2 pi fc / fs), after crossover clamp
  bool clamped = false;
  double dgdc_dt60 = 0.0;    // d gamma_dc / d t60
  ShelvingCoeffs coeffs;
};

struct RealizedGradient {
  double t60 = 0.0;
  double fc = 0.0;
  Eigen::MatrixXd feedback;
  Eigen::VectorXd input_gains;
  Eigen::VectorXd output_gains;
};

}  // namespace

struct LossEvaluator::Impl {
  EvaluatorSetup setup;
  int n = 0;
  double fs = 0.0;
  FrequencyGrid grid;
  DelayPhaseTable phases;
  int full_len = 0;
  int drop = 0;
  int len = 0;
  std::vector<double> gamma_ny;
  std::unique_ptr<RealFft> fft_full;

  ImpulseResponse target_work;
  ImpulseResponse model_work;

  struct MssRes {
    int window = 0, hop = 0, frames = 0, bins = 0;
    std::vector<double> win;
    std::unique_ptr<RealFft> fft;
    std::vector<double> tmag, tlog;
    double tnorm = 0.0;
    std::vector<cdouble> mspec;
    std::vector<double> mmag;
    double delta_norm = 0.0;
    double sc = 0.0, sm = 0.0;
  };
  std::vector<MssRes> mss;
  bool mss_ready = false;

  struct EdcState {
    bool broadband = true;
    int bands = 1;
    int taps = 0, delay = 0, nfft = 0;
    double inv_sqrt_energy = 1.0;  // common curve normalization
    std::unique_ptr<RealFft> fft;
    std::vector<std::vector<cdouble>> kspec;
    std::vector<double> target_lin, target_db;  // band-major
    double den_lin = 0.0, den_db = 0.0;
    std::vector<double> band_sig;  // band-major model band signals
    std::vector<double> eps_lin;   // band-major model linear EDC
    std::vector<double> eps_db;
    double num_lin = 0.0, num_db = 0.0;
  } edc;
  bool edc_ready = false;

  // Per-bin storage for the reverse pass.
  std::vector<cdouble> resp;      // H
  std::vector<cdouble> gam;       // bin-major n
  std::vector<cdouble> lu_slab;   // bin-major n*n
  std::vector<int> piv_slab;      // bin-major n
  std::vector<cdouble> x_slab;    // bin-major n
  std::vector<LineDesign> lines;

  explicit Impl(EvaluatorSetup s) : setup(std::move(s)) {
    n = static_cast<int>(setup.delays.size());
    if (n < 1 || n > kMaxLines)
      throw std::invalid_argument("LossEvaluator: bad line count");
    fs = setup.sample_rate;
    if (setup.num_bins < 2)
      throw std::invalid_argument("LossEvaluator: bad bin count");
    grid = make_frequency_grid(setup.num_bins);
    phases = DelayPhaseTable::build(setup.delays, grid);
    full_len = grid.full_length();
    drop = static_cast<int>(std::lround(setup.mixing_time_s * fs));
    if (drop < 0 || drop >= full_len)
      throw std::invalid_argument("LossEvaluator: bad mixing time");
    len = full_len - drop;
    if (setup.target.length() != len)
      throw std::invalid_argument(
          "LossEvaluator: target length must match truncated response");
    if (!setup.model_noise.empty() &&
        static_cast<int>(setup.model_noise.size()) != full_len)
      throw std::invalid_argument(
          "LossEvaluator: model noise length must match full response");
    gamma_ny.resize(n);
    for (int i = 0; i < n; ++i) {
      const double db =
          setup.delays[i] * per_sample_gain_db(setup.t60_ny_s, fs);
      gamma_ny[i] = std::pow(10.0, db / 20.0);
    }
    fft_full = std::make_unique<RealFft>(full_len);
    target_work = setup.target;
    resp.resize(grid.num_bins);
    lines.resize(n);
  }

  bool needs_mss(LossKind k) const {
    return k == LossKind::Mss || k == LossKind::MssSc || k == LossKind::MssSm;
  }

  void ensure_mss() {
    if (mss_ready) return;
    setup.objective.mss.validate();
    for (const auto& [w, h] : setup.objective.mss.resolutions) {
      MssRes r;
      r.window = w;
      r.hop = h;
      if (len < w)
        throw std::invalid_argument("LossEvaluator: signal shorter than window");
      r.frames = stft_num_frames(len, h);
      r.bins = w / 2 + 1;
      r.win = hann_window(w);
      r.fft = std::make_unique<RealFft>(w);
      r.tmag.resize(static_cast<size_t>(r.frames) * r.bins);
      r.tlog.resize(r.tmag.size());
      stft_fill(r, target_work.samples, r.tmag);
      double norm = 0.0;
      for (size_t i = 0; i < r.tmag.size(); ++i) {
        norm += r.tmag[i] * r.tmag[i];
        r.tlog[i] = std::log(std::max(r.tmag[i], kLogMagClamp));
      }
      r.tnorm = std::sqrt(norm);
      if (!(r.tnorm > 0.0))
        throw std::invalid_argument("LossEvaluator: zero target spectrum");
      mss.push_back(std::move(r));
    }
    mss_ready = true;
  }

  void stft_fill(MssRes& r, const std::vector<double>& sig,
                 std::vector<double>& mag_out) {
    std::vector<double> frame(r.window);
    std::vector<cdouble> bins(r.bins);
    for (int t = 0; t < r.frames; ++t) {
      const int start = t * r.hop;
      for (int i = 0; i < r.window; ++i) {
        const int idx = start + i;
        frame[i] = idx < len ? sig[idx] * r.win[i] : 0.0;
      }
      r.fft->forward(frame, bins);
      double* out = mag_out.data() + static_cast<size_t>(t) * r.bins;
      for (int f = 0; f < r.bins; ++f) out[f] = std::abs(bins[f]);
    }
  }

  void ensure_edc() {
    if (edc_ready) return;
    const double target_energy = target_work.energy();
    if (!(target_energy > 0.0))
      throw std::invalid_argument("LossEvaluator: target carries no energy");
    edc.inv_sqrt_energy = 1.0 / std::sqrt(target_energy);
    const auto& centers = setup.objective.bands_hz;
    edc.broadband = centers.empty();
    edc.bands = edc.broadband ? 1 : static_cast<int>(centers.size());
    if (!edc.broadband) {
      const OctaveFilterBank bank(centers, fs, setup.objective.fir_taps);
      edc.taps = bank.taps();
      edc.delay = bank.delay();
      edc.nfft = next_fast_fft_size(len + edc.taps - 1);
      edc.fft = std::make_unique<RealFft>(edc.nfft);
      edc.kspec.resize(edc.bands);
      for (int b = 0; b < edc.bands; ++b) {
        edc.kspec[b].resize(edc.fft->bins());
        edc.fft->forward(bank.kernel(b), edc.kspec[b]);
      }
    }
    edc.target_lin.resize(static_cast<size_t>(edc.bands) * len);
    edc.target_db.resize(edc.target_lin.size());
    std::vector<double> scratch(static_cast<size_t>(edc.bands) * len);
    filter_bands(target_work.samples, scratch);
    for (int b = 0; b < edc.bands; ++b) {
      double acc = 0.0;
      const double* sig = scratch.data() + static_cast<size_t>(b) * len;
      double* lin = edc.target_lin.data() + static_cast<size_t>(b) * len;
      double* db = edc.target_db.data() + static_cast<size_t>(b) * len;
      for (int t = len - 1; t >= 0; --t) {
        acc += sig[t] * sig[t];
        lin[t] = acc;
      }
      for (int t = 0; t < len; ++t)
        db[t] = 10.0 * std::log10(std::max(lin[t], kEdcLinearFloor));
    }
    for (double v : edc.target_lin) edc.den_lin += v * v;
    for (double v : edc.target_db) edc.den_db += v * v;
    if (!(edc.den_lin > 0.0) || !(edc.den_db > 0.0))
      throw std::invalid_argument("LossEvaluator: zero EDC denominator");
    edc_ready = true;
  }

  // Splits sig (length len) into normalized band signals, band-major into out.
  void filter_bands(const std::vector<double>& sig, std::vector<double>& out) {
    if (edc.broadband) {
      for (int i = 0; i < len; ++i) out[i] = sig[i] * edc.inv_sqrt_energy;
      return;
    }
    std::vector<cdouble> spec(edc.fft->bins());
    edc.fft->forward(sig, spec);
    std::vector<cdouble> prod(edc.fft->bins());
    std::vector<double> conv(edc.nfft);
    const double scale = edc.inv_sqrt_energy / edc.nfft;
    for (int b = 0; b < edc.bands; ++b) {
      for (int j = 0; j < edc.fft->bins(); ++j)
        prod[j] = spec[j] * edc.kspec[b][j];
      edc.fft->inverse(prod, conv);
      double* dst = out.data() + static_cast<size_t>(b) * len;
      for (int i = 0; i < len; ++i) dst[i] = conv[i + edc.delay] * scale;
    }
  }

  void design_lines(const RealizedParams& p) {
    AttenuationParams atten{p.t60_dc_s, p.crossover_hz, setup.t60_ny_s};
    atten.validate(fs);
    const double fc_eff = clamp_crossover(p.crossover_hz, fs);
    const bool clamped = fc_eff < p.crossover_hz;
    const double t = std::tan(2.0 * kPi * fc_eff / fs);
    for (int i = 0; i < n; ++i) {
      LineDesign& d = lines[i];
      d.gamma_ny = gamma_ny[i];
      const double m = setup.delays[i];
      d.gamma_dc = std::pow(10.0, m * per_sample_gain_db(p.t60_dc_s, fs) / 20.0);
      d.dgdc_dt60 = d.gamma_dc * std::log(10.0) * 3.0 * m /
                    (fs * p.t60_dc_s * p.t60_dc_s);
      d.sg = std::sqrt(d.gamma_dc / d.gamma_ny);
      d.t = t;
      d.clamped = clamped;
      d.coeffs.b0 = d.gamma_ny * (d.sg * t + 1.0);
      d.coeffs.b1 = d.gamma_ny * (d.sg * t - 1.0);
      d.coeffs.a0 = t / d.sg + 1.0;
      d.coeffs.a1 = t / d.sg - 1.0;
    }
  }

  // Renders the response into resp and the (noisy, truncated) model_work.
  void render(const RealizedParams& p, bool keep) {
    design_lines(p);
    FdnParams fp;
    fp.delays = setup.delays;
    fp.feedback = p.feedback;
    fp.input_gains = p.input_gains;
    fp.output_gains = p.output_gains;
    fp.sample_rate = fs;
    fp.validate();

    const int m = grid.num_bins;
    if (keep) {
      gam.resize(static_cast<size_t>(m) * n);
      lu_slab.resize(static_cast<size_t>(m) * n * n);
      piv_slab.resize(static_cast<size_t>(m) * n);
      x_slab.resize(static_cast<size_t>(m) * n);
    }
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                        Eigen::RowMajor>
        u = p.feedback;
    const double* bg = p.input_gains.data();
    const double* cg = p.output_gains.data();

    int singular_bin = -1;
    bool gain_violation = false;
    dispatch_lines(n, [&](auto nc) {
      constexpr int kN = decltype(nc)::value;
      constexpr int kBuf = kN > 0 ? kN : kMaxLines;
      const int nn = kN > 0 ? kN : n;
#pragma omp parallel
      {
        cdouble a_local[kBuf * kBuf];
        cdouble x_local[kBuf];
        cdouble g_local[kBuf];
        int piv_local[kBuf];
#pragma omp for schedule(static) reduction(max : singular_bin) \
    reduction(|| : gain_violation)
        for (int k = 0; k < m; ++k) {
          cdouble* a = keep ? lu_slab.data() + static_cast<size_t>(k) * nn * nn
                            : a_local;
          cdouble* x =
              keep ? x_slab.data() + static_cast<size_t>(k) * nn : x_local;
          cdouble* g =
              keep ? gam.data() + static_cast<size_t>(k) * nn : g_local;
          int* piv = keep ? piv_slab.data() + static_cast<size_t>(k) * nn
                          : piv_local;
          const cdouble zinv = std::conj(grid.points[k]);
          for (int i = 0; i < nn; ++i) {
            const ShelvingCoeffs& c = lines[i].coeffs;
            const cdouble den = c.a0 + c.a1 * zinv;
            g[i] = (c.b0 + c.b1 * zinv) * (std::conj(den) / std::norm(den));
            if (std::norm(g[i]) >= 1.0) gain_violation = true;
          }
          for (int j = 0; j < nn; ++j) {
            const cdouble gj = g[j];
            for (int i = 0; i < nn; ++i)
              a[i + j * nn] = -u.data()[i * nn + j] * gj;
            a[j + j * nn] += phases.values[static_cast<size_t>(k) * nn + j];
          }
          if (!lu_factor_impl<kN>(a, nn, piv)) {
            singular_bin = std::max(singular_bin, k);
            continue;
          }
          for (int i = 0; i < nn; ++i) x[i] = bg[i];
          lu_solve_impl<kN>(a, piv, nn, x);
          cdouble h = 0.0;
          for (int i = 0; i < nn; ++i) h += cg[i] * x[i];
          resp[k] = h;
        }
      }
    });
    if (gain_violation)
      throw std::invalid_argument(
          "LossEvaluator: attenuation magnitude must be < 1");
    if (singular_bin >= 0)
      throw NumericError("LossEvaluator: singular system at bin " +
                         std::to_string(singular_bin));

    std::vector<cdouble> spec(resp);
    spec.front() = {spec.front().real(), 0.0};
    spec.back() = {spec.back().real(), 0.0};
    std::vector<double> full(full_len);
    fft_full->inverse(spec, full);
    const double scale = 1.0 / full_len;
    for (double& v : full) v *= scale;
    if (!setup.model_noise.empty())
      for (int i = 0; i < full_len; ++i) full[i] += setup.model_noise[i];
    model_work.sample_rate = fs;
    model_work.samples.assign(full.begin() + drop, full.end());
    for (double v : model_work.samples)
      if (!std::isfinite(v))
        throw NumericError("LossEvaluator: non-finite response sample");
  }

  void mss_forward(bool keep) {
    ensure_mss();
    for (MssRes& r : mss) {
      if (keep) {
        r.mspec.resize(static_cast<size_t>(r.frames) * r.bins);
        r.mmag.resize(r.mspec.size());
      }
      std::vector<double> frame(r.window);
      std::vector<cdouble> bins(r.bins);
      double num = 0.0, smsum = 0.0;
      for (int t = 0; t < r.frames; ++t) {
        const int start = t * r.hop;
        for (int i = 0; i < r.window; ++i) {
          const int idx = start + i;
          frame[i] = idx < len ? model_work.samples[idx] * r.win[i] : 0.0;
        }
        r.fft->forward(frame, bins);
        const double* tm = r.tmag.data() + static_cast<size_t>(t) * r.bins;
        const double* tl = r.tlog.data() + static_cast<size_t>(t) * r.bins;
        for (int f = 0; f < r.bins; ++f) {
          const double mag = std::abs(bins[f]);
          const double d = tm[f] - mag;
          num += d * d;
          smsum += std::abs(tl[f] - std::log(std::max(mag, kLogMagClamp)));
          if (keep) {
            r.mspec[static_cast<size_t>(t) * r.bins + f] = bins[f];
            r.mmag[static_cast<size_t>(t) * r.bins + f] = mag;
          }
        }
      }
      r.delta_norm = std::sqrt(num);
      r.sc = r.delta_norm / r.tnorm;
      r.sm = smsum / r.frames;
    }
  }

  // w_sc / w_sm multiply the per-resolution SC and SM terms (already divided
  // by the resolution count by the caller).
  void mss_backward(double w_sc, double w_sm, std::vector<double>& grad_model) {
    for (MssRes& r : mss) {
      std::vector<cdouble> gspec(r.bins);
      std::vector<double> gframe(r.window);
      const double sc_scale =
          (r.delta_norm > 0.0) ? w_sc / (r.delta_norm * r.tnorm) : 0.0;
      for (int t = 0; t < r.frames; ++t) {
        const size_t base = static_cast<size_t>(t) * r.bins;
        for (int f = 0; f < r.bins; ++f) {
          const double mag = r.mmag[base + f];
          const double tm = r.tmag[base + f];
          double gmag = sc_scale * (mag - tm);
          if (w_sm != 0.0 && mag > kLogMagClamp) {
            const double lm = std::log(mag);
            const double sign =
                lm > r.tlog[base + f] ? 1.0 : (lm < r.tlog[base + f] ? -1.0 : 0.0);
            gmag += w_sm / r.frames * sign / mag;
          }
          const cdouble x = r.mspec[base + f];
          gspec[f] = mag > 0.0 ? cdouble(gmag / mag) * x : cdouble(0.0);
          if (f != 0 && f != r.bins - 1) gspec[f] *= 0.5;
        }
        // Adjoint of the one-sided rfft: halved inner bins, then c2r.
        r.fft->inverse(gspec, gframe);
        const int start = t * r.hop;
        for (int i = 0; i < r.window; ++i) {
          const int idx = start + i;
          if (idx < len) grad_model[idx] += gframe[i] * r.win[i];
        }
      }
    }
  }

  void edc_forward(bool keep, bool want_lin, bool want_db) {
    ensure_edc();
    edc.band_sig.resize(static_cast<size_t>(edc.bands) * len);
    filter_bands(model_work.samples, edc.band_sig);
    if (keep) {
      edc.eps_lin.resize(edc.band_sig.size());
      if (want_db) edc.eps_db.resize(edc.band_sig.size());
    }
    edc.num_lin = 0.0;
    edc.num_db = 0.0;
    for (int b = 0; b < edc.bands; ++b) {
      const double* sig = edc.band_sig.data() + static_cast<size_t>(b) * len;
      const double* tlin =
          edc.target_lin.data() + static_cast<size_t>(b) * len;
      const double* tdb = edc.target_db.data() + static_cast<size_t>(b) * len;
      double* keep_lin =
          keep ? edc.eps_lin.data() + static_cast<size_t>(b) * len : nullptr;
      double* keep_db = keep && want_db
                            ? edc.eps_db.data() + static_cast<size_t>(b) * len
                            : nullptr;
      double acc = 0.0;
      for (int t = len - 1; t >= 0; --t) {
        acc += sig[t] * sig[t];
        if (keep_lin) keep_lin[t] = acc;
        if (want_lin) {
          const double d = tlin[t] - acc;
          edc.num_lin += d * d;
        }
        if (want_db) {
          const double mdb = 10.0 * std::log10(std::max(acc, kEdcLinearFloor));
          if (keep_db) keep_db[t] = mdb;
          const double d = tdb[t] - mdb;
          edc.num_db += d * d;
        }
      }
    }
  }

  void edc_backward(EdcScale scale, double weight,
                    std::vector<double>& grad_model) {
    const double den =
        scale == EdcScale::Linear ? edc.den_lin : edc.den_db;
    std::vector<double> geps(len);
    std::vector<double> gband(static_cast<size_t>(edc.bands) * len);
    for (int b = 0; b < edc.bands; ++b) {
      const double* eps = edc.eps_lin.data() + static_cast<size_t>(b) * len;
      const double* tlin =
          edc.target_lin.data() + static_cast<size_t>(b) * len;
      const double* tdb = edc.target_db.data() + static_cast<size_t>(b) * len;
      const double* sig = edc.band_sig.data() + static_cast<size_t>(b) * len;
      double* gb = gband.data() + static_cast<size_t>(b) * len;
      if (scale == EdcScale::Linear) {
        for (int t = 0; t < len; ++t)
          geps[t] = weight * 2.0 * (eps[t] - tlin[t]) / den;
      } else {
        const double k = 10.0 / std::log(10.0);
        const double* mdb = edc.eps_db.data() + static_cast<size_t>(b) * len;
        for (int t = 0; t < len; ++t) {
          geps[t] = eps[t] > kEdcLinearFloor
                        ? weight * 2.0 * (mdb[t] - tdb[t]) / den * k / eps[t]
                        : 0.0;
        }
      }
      double prefix = 0.0;
      for (int t = 0; t < len; ++t) {
        prefix += geps[t];
        gb[t] = 2.0 * sig[t] * prefix;
      }
    }
    if (edc.broadband) {
      for (int t = 0; t < len; ++t)
        grad_model[t] += gband[t] * edc.inv_sqrt_energy;
      return;
    }
    // Adjoint of band filtering: correlate each band gradient with its
    // kernel, summed in the spectral domain.
    std::vector<cdouble> acc_spec(edc.fft->bins(), cdouble(0.0));
    std::vector<cdouble> spec(edc.fft->bins());
    for (int b = 0; b < edc.bands; ++b) {
      edc.fft->forward(
          std::span<const double>(gband.data() + static_cast<size_t>(b) * len,
                                  len),
          spec);
      for (int j = 0; j < edc.fft->bins(); ++j)
        acc_spec[j] += spec[j] * std::conj(edc.kspec[b][j]);
    }
    std::vector<double> corr(edc.nfft);
    edc.fft->inverse(acc_spec, corr);
    const double scale_fft = edc.inv_sqrt_energy / edc.nfft;
    for (int mi = 0; mi < len; ++mi) {
      const int idx = mi - edc.delay;
      const int wrapped = idx >= 0 ? idx : edc.nfft + idx;
      grad_model[mi] += corr[wrapped] * scale_fft;
    }
  }

  void response_backward(const std::vector<double>& grad_model,
                         const RealizedParams& p, const TrainMask& mask,
                         RealizedGradient& out) {
    // Embed the truncated-model gradient and take the rfft adjoint of the
    // inverse transform.
    std::vector<double> grad_full(full_len, 0.0);
    std::copy(grad_model.begin(), grad_model.end(), grad_full.begin() + drop);
    std::vector<cdouble> gspec(fft_full->bins());
    fft_full->forward(grad_full, gspec);
    const int m = grid.num_bins;
    const double inv_l = 1.0 / full_len;
    for (int k = 0; k < m; ++k) {
      const double s = (k == 0 || k == m - 1) ? 1.0 : 2.0;
      gspec[k] *= s * inv_l;
    }
    gspec.front() = {gspec.front().real(), 0.0};
    gspec.back() = {gspec.back().real(), 0.0};

    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                        Eigen::RowMajor>
        u = p.feedback;
    const double* cg = p.output_gains.data();

    const int num_blocks = (m + kBinBlock - 1) / kBinBlock;
    const bool want_u = mask.feedback;
    const bool want_b = mask.input_gains;
    const bool want_c = mask.output_gains;
    const bool want_theta = mask.t60 || mask.fc;
    // Per-block partials: 4n coeff grads + n^2 + 2n gains.
    const int stride = 4 * n + n * n + 2 * n;
    std::vector<double> partials(static_cast<size_t>(num_blocks) * stride,
                                 0.0);

    dispatch_lines(n, [&](auto nc) {
      constexpr int kN = decltype(nc)::value;
      constexpr int kBuf = kN > 0 ? kN : kMaxLines;
      const int nn = kN > 0 ? kN : n;
#pragma omp parallel for schedule(static)
      for (int blk = 0; blk < num_blocks; ++blk) {
        const int k0 = blk * kBinBlock;
        const int k1 = std::min(m, k0 + kBinBlock);
        double* part = partials.data() + static_cast<size_t>(blk) * stride;
        double* gcoef = part;        // b0, b1, a0, a1 per line
        double* gu = part + 4 * nn;  // row-major n*n
        double* gbv = gu + nn * nn;
        double* gcv = gbv + nn;
        cdouble rhs[kBuf];
        cdouble uty[kBuf];
        for (int k = k0; k < k1; ++k) {
          const cdouble gh = gspec[k];
          if (gh == cdouble(0.0)) continue;
          const cdouble* x = x_slab.data() + static_cast<size_t>(k) * nn;
          const cdouble* lu =
              lu_slab.data() + static_cast<size_t>(k) * nn * nn;
          const int* piv = piv_slab.data() + static_cast<size_t>(k) * nn;
          const cdouble* g = gam.data() + static_cast<size_t>(k) * nn;
          const cdouble zinv = std::conj(grid.points[k]);
          if (want_c)
            for (int i = 0; i < nn; ++i)
              gcv[i] += (std::conj(gh) * x[i]).real();
          for (int i = 0; i < nn; ++i) rhs[i] = cg[i] * gh;
          lu_solve_adjoint_impl<kN>(lu, piv, nn, rhs);  // rhs becomes y
          if (want_b)
            for (int i = 0; i < nn; ++i) gbv[i] += rhs[i].real();
          if (want_u)
            for (int i = 0; i < nn; ++i) {
              const cdouble yc = std::conj(rhs[i]);
              for (int j = 0; j < nn; ++j)
                gu[i * nn + j] += (yc * x[j] * g[j]).real();
            }
          if (want_theta) {
            for (int j = 0; j < nn; ++j) {
              cdouble s = 0.0;
              for (int i = 0; i < nn; ++i) s += u.data()[i * nn + j] * rhs[i];
              uty[j] = s;
            }
            for (int j = 0; j < nn; ++j) {
              const ShelvingCoeffs& c = lines[j].coeffs;
              const cdouble den = c.a0 + c.a1 * zinv;
              const cdouble inv_den = std::conj(den) / std::norm(den);
              const cdouble ggam = std::conj(x[j]) * uty[j];
              const cdouble gconj = std::conj(ggam);
              gcoef[4 * j + 0] += (gconj * inv_den).real();
              gcoef[4 * j + 1] += (gconj * zinv * inv_den).real();
              const cdouble gout = g[j] * inv_den;
              gcoef[4 * j + 2] -= (gconj * gout).real();
              gcoef[4 * j + 3] -= (gconj * zinv * gout).real();
            }
          }
        }
      }
    });

    std::vector<double> total(stride, 0.0);
    for (int blk = 0; blk < num_blocks; ++blk) {
      const double* part = partials.data() + static_cast<size_t>(blk) * stride;
      for (int i = 0; i < stride; ++i) total[i] += part[i];
    }

    out.feedback = Eigen::MatrixXd::Zero(n, n);
    out.input_gains = Eigen::VectorXd::Zero(n);
    out.output_gains = Eigen::VectorXd::Zero(n);
    if (want_u)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          out.feedback(i, j) = total[4 * n + i * n + j];
    if (want_b)
      for (int i = 0; i < n; ++i) out.input_gains(i) = total[4 * n + n * n + i];
    if (want_c)
      for (int i = 0; i < n; ++i)
        out.output_gains(i) = total[4 * n + n * n + n + i];

    out.t60 = 0.0;
    out.fc = 0.0;
    if (want_theta) {
      double gt = 0.0;
      for (int i = 0; i < n; ++i) {
        const LineDesign& d = lines[i];
        const double gb0 = total[4 * i + 0];
        const double gb1 = total[4 * i + 1];
        const double ga0 = total[4 * i + 2];
        const double ga1 = total[4 * i + 3];
        const double gsg = (gb0 + gb1) * d.gamma_ny * d.t -
                           (ga0 + ga1) * d.t / (d.sg * d.sg);
        gt += (gb0 + gb1) * d.gamma_ny * d.sg + (ga0 + ga1) / d.sg;
        const double gdc = gsg / (2.0 * d.sg * d.gamma_ny);
        out.t60 += gdc * d.dgdc_dt60;
      }
      const LineDesign& d0 = lines[0];
      out.fc = d0.clamped
                   ? 0.0
                   : gt * (1.0 + d0.t * d0.t) * 2.0 * kPi / fs;
    }
  }
};

LossEvaluator::LossEvaluator(EvaluatorSetup setup)
    : impl_(std::make_unique<Impl>(std::move(setup))) {}

LossEvaluator::~LossEvaluator() = default;

const EvaluatorSetup& LossEvaluator::setup() const { return impl_->setup; }

void LossEvaluator::set_model_noise(std::vector<double> w2) {
  if (!w2.empty() && static_cast<int>(w2.size()) != impl_->full_len)
    throw std::invalid_argument(
        "set_model_noise: length must match full response");
  impl_->setup.model_noise = std::move(w2);
}

const ImpulseResponse& LossEvaluator::last_model_response() const {
  return impl_->model_work;
}

std::map<LossKind, LossValue> LossEvaluator::eval(
    const RealizedParams& params, std::span<const LossKind> kinds) {
  Impl& im = *impl_;
  im.render(params, false);
  bool want_mss = false, want_lin = false, want_db = false;
  for (LossKind k : kinds) {
    want_mss = want_mss || im.needs_mss(k);
    want_lin = want_lin || k == LossKind::EdcLin;
    want_db = want_db || k == LossKind::EdcLog;
  }
  if (want_mss) im.mss_forward(false);
  if (want_lin || want_db) im.edc_forward(false, want_lin, want_db);

  std::map<LossKind, LossValue> out;
  for (LossKind k : kinds) {
    LossValue v;
    switch (k) {
      case LossKind::Mss:
      case LossKind::MssSc:
      case LossKind::MssSm: {
        double sc = 0.0, sm = 0.0;
        for (const auto& r : im.mss) {
          sc += r.sc;
          sm += r.sm;
          v.components["sc_" + std::to_string(r.window)] = r.sc;
          v.components["sm_" + std::to_string(r.window)] = r.sm;
        }
        sc /= im.mss.size();
        sm /= im.mss.size();
        v.components["sc"] = sc;
        v.components["sm"] = sm;
        v.value = k == LossKind::Mss ? sc + sm
                  : k == LossKind::MssSc ? sc
                                         : sm;
        break;
      }
      case LossKind::EdcLin:
        v.value = im.edc.num_lin / im.edc.den_lin;
        break;
      case LossKind::EdcLog:
        v.value = im.edc.num_db / im.edc.den_db;
        break;
    }
    out[k] = std::move(v);
  }
  return out;
}

LossValue LossEvaluator::objective_value(const RealizedParams& params) {
  Impl& im = *impl_;
  const LossKind k = im.setup.objective.primary;
  auto values = eval(params, std::span<const LossKind>(&k, 1));
  LossValue primary = values[k];
  LossValue out;
  const double w_sp = im.setup.objective.sparsity_weight;
  const double lu = w_sp > 0.0 ? sparsity_loss(params.feedback) : 0.0;
  out.value = primary.value + w_sp * lu;
  out.components = std::move(primary.components);
  out.components["primary"] = primary.value;
  out.components["sparsity"] = w_sp * lu;
  return out;
}

std::pair<LossValue, Gradient> LossEvaluator::loss_and_gradient(
    const ParamVector& params) {
  Impl& im = *impl_;
  const RealizedParams realized = reparameterize(params, im.fs);
  im.render(realized, true);

  const LossKind primary = im.setup.objective.primary;
  LossValue value;
  std::vector<double> grad_model(im.len, 0.0);
  if (im.needs_mss(primary)) {
    im.mss_forward(true);
    double sc = 0.0, sm = 0.0;
    for (const auto& r : im.mss) {
      sc += r.sc;
      sm += r.sm;
      value.components["sc_" + std::to_string(r.window)] = r.sc;
      value.components["sm_" + std::to_string(r.window)] = r.sm;
    }
    const double inv_mr = 1.0 / im.mss.size();
    sc *= inv_mr;
    sm *= inv_mr;
    value.components["sc"] = sc;
    value.components["sm"] = sm;
    double w_sc = 0.0, w_sm = 0.0;
    switch (primary) {
      case LossKind::Mss:
        value.value = sc + sm;
        w_sc = w_sm = inv_mr;
        break;
      case LossKind::MssSc:
        value.value = sc;
        w_sc = inv_mr;
        break;
      default:
        value.value = sm;
        w_sm = inv_mr;
        break;
    }
    im.mss_backward(w_sc, w_sm, grad_model);
  } else {
    const bool lin = primary == LossKind::EdcLin;
    im.edc_forward(true, lin, !lin);
    value.value = lin ? im.edc.num_lin / im.edc.den_lin
                      : im.edc.num_db / im.edc.den_db;
    im.edc_backward(lin ? EdcScale::Linear : EdcScale::Db, 1.0, grad_model);
  }

  RealizedGradient rg;
  im.response_backward(grad_model, realized, params.mask, rg);

  const double w_sp = im.setup.objective.sparsity_weight;
  value.components["primary"] = value.value;
  if (w_sp > 0.0) {
    const double lu = sparsity_loss(realized.feedback);
    value.components["sparsity"] = w_sp * lu;
    value.value += w_sp * lu;
    if (params.mask.feedback) {
      const int n = im.n;
      const double denom = n * (std::sqrt(static_cast<double>(n)) - 1.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double u = realized.feedback(i, j);
          const double sign = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
          rg.feedback(i, j) += w_sp * (-sign / denom);
        }
    }
  } else {
    value.components["sparsity"] = 0.0;
  }

  Gradient grad;
  grad.skew_raw = Eigen::MatrixXd::Zero(im.n, im.n);
  grad.input_gains = Eigen::VectorXd::Zero(im.n);
  grad.output_gains = Eigen::VectorXd::Zero(im.n);
  if (params.mask.t60)
    grad.raw_t60 = rg.t60 * realized.t60_dc_s;  // d t60 / d raw = t60
  if (params.mask.fc) {
    const double lo = kCrossoverRawLoHz;
    const double hi = kCrossoverMaxFsFraction * im.fs;
    const double s = (realized.crossover_hz - lo) / (hi - lo);
    grad.raw_fc = rg.fc * (hi - lo) * s * (1.0 - s);
  }
  if (params.mask.feedback) {
    const Eigen::MatrixXd skew = params.skew_raw - params.skew_raw.transpose();
    const Eigen::MatrixXd phi = expm_frechet_adjoint(skew, rg.feedback);
    grad.skew_raw = phi - phi.transpose();
  }
  if (params.mask.input_gains) grad.input_gains = rg.input_gains;
  if (params.mask.output_gains) grad.output_gains = rg.output_gains;

  if (!std::isfinite(value.value))
    throw NumericError("LossEvaluator: non-finite loss value");
  return {std::move(value), std::move(grad)};
}

GradCheckReport gradient_check(LossEvaluator& evaluator,
                               const ParamVector& params, double rel_step) {
  const double fs = evaluator.setup().sample_rate;
  auto [value, grad] = evaluator.loss_and_gradient(params);
  (void)value;

  GradCheckReport report;
  auto probe = [&](const std::string& group, int index, double analytic,
                   auto&& mutate) {
    ParamVector up = params, down = params;
    const double base = mutate(up, 0.0);
    const double h = rel_step * std::max(1.0, std::abs(base));
    mutate(up, h);
    mutate(down, -h);
    const double lu =
        evaluator.objective_value(reparameterize(up, fs)).value;
    const double ld =
        evaluator.objective_value(reparameterize(down, fs)).value;
    const double numeric = (lu - ld) / (2.0 * h);
    GradCheckEntry e;
    e.group = group;
    e.index = index;
    e.analytic = analytic;
    e.numeric = numeric;
    e.rel_err = std::abs(analytic - numeric) /
                std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    report.max_rel_err = std::max(report.max_rel_err, e.rel_err);
    report.entries.push_back(std::move(e));
  };

  if (params.mask.t60)
    probe("t60", 0, grad.raw_t60, [](ParamVector& p, double h) {
      p.raw_t60 += h;
      return p.raw_t60 - h;
    });
  if (params.mask.fc)
    probe("fc", 0, grad.raw_fc, [](ParamVector& p, double h) {
      p.raw_fc += h;
      return p.raw_fc - h;
    });
  const int n = static_cast<int>(params.input_gains.size());
  if (params.mask.feedback)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        probe("W", i * n + j, grad.skew_raw(i, j),
              [i, j](ParamVector& p, double h) {
                p.skew_raw(i, j) += h;
                return p.skew_raw(i, j) - h;
              });
  if (params.mask.input_gains)
    for (int i = 0; i < n; ++i)
      probe("b", i, grad.input_gains(i), [i](ParamVector& p, double h) {
        p.input_gains(i) += h;
        return p.input_gains(i) - h;
      });
  if (params.mask.output_gains)
    for (int i = 0; i < n; ++i)
      probe("c", i, grad.output_gains(i), [i](ParamVector& p, double h) {
        p.output_gains(i) += h;
        return p.output_gains(i) - h;
      });
  return report;
}

}  // namespace fdntune

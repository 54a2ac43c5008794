#include <doctest.h>

#include <filesystem>

#include "fdntune/complex_lu.hpp"
#include "fdntune/fft.hpp"
#include "fdntune/io.hpp"
#include "fdntune/rng.hpp"
#include "fdntune/types.hpp"
#include "oracles.hpp"

using namespace fdntune;

TEST_CASE("rng is deterministic per seed and streams are stable") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
  CHECK(Rng::derive(1, 2) == Rng::derive(1, 2));
  CHECK(Rng::derive(1, 2) != Rng::derive(1, 3));
  CHECK(Rng::derive(2, 2) != Rng::derive(1, 2));
}

TEST_CASE("rng normal moments") {
  Rng rng(7);
  const int n = 200000;
  double mean = 0.0, var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    mean += x;
    var += x * x;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("uniform_int covers range") {
  Rng rng(3);
  int lo = 100, hi = 0;
  for (int i = 0; i < 1000; ++i) {
    const int v = rng.uniform_int(3, 9);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo == 3);
  CHECK(hi == 9);
}

TEST_CASE("real fft round trip and naive comparison") {
  Rng rng(11);
  const int n = 96;
  std::vector<double> sig(n);
  for (double& s : sig) s = rng.normal();
  RealFft fft(n);
  std::vector<cdouble> spec(fft.bins());
  fft.forward(sig, spec);

  std::vector<double> back(n);
  fft.inverse(spec, back);
  for (int i = 0; i < n; ++i) CHECK(back[i] / n == doctest::Approx(sig[i]).epsilon(1e-12));

  // Against a direct DFT sum.
  for (int k = 0; k < fft.bins(); ++k) {
    cdouble acc = 0.0;
    for (int t = 0; t < n; ++t)
      acc += sig[t] * std::polar(1.0, -2.0 * kPi * k * t / n);
    CHECK(std::abs(acc - spec[k]) < 1e-9);
  }
}

TEST_CASE("next_fast_fft_size") {
  CHECK(next_fast_fft_size(1) == 2);
  CHECK(next_fast_fft_size(8) == 8);
  CHECK(next_fast_fft_size(97) == 98);  // 2 * 7^2
  CHECK(next_fast_fft_size(194048) <= 194400);
}

TEST_CASE("complex lu solves and adjoint solves") {
  Rng rng(5);
  for (int n : {1, 2, 3, 5, 8}) {
    std::vector<cdouble> a(n * n), a_copy;
    for (auto& v : a) v = {rng.normal(), rng.normal()};
    a_copy = a;
    std::vector<int> piv(n);
    REQUIRE(lu_factor(a.data(), n, piv.data()));

    std::vector<cdouble> rhs(n), x;
    for (auto& v : rhs) v = {rng.normal(), rng.normal()};
    x = rhs;
    lu_solve(a.data(), piv.data(), n, x.data());
    for (int i = 0; i < n; ++i) {
      cdouble acc = 0.0;
      for (int j = 0; j < n; ++j) acc += a_copy[i + j * n] * x[j];
      CHECK(std::abs(acc - rhs[i]) < 1e-10);
    }

    std::vector<cdouble> y = rhs;
    lu_solve_adjoint(a.data(), piv.data(), n, y.data());
    for (int i = 0; i < n; ++i) {
      cdouble acc = 0.0;
      for (int j = 0; j < n; ++j) acc += std::conj(a_copy[j + i * n]) * y[j];
      CHECK(std::abs(acc - rhs[i]) < 1e-10);
    }
  }
}

TEST_CASE("singular matrix is reported") {
  std::vector<cdouble> a = {0.0, 0.0, 0.0, 0.0};
  std::vector<int> piv(2);
  CHECK_FALSE(lu_factor(a.data(), 2, piv.data()));
}

TEST_CASE("wav round trip") {
  ImpulseResponse ir;
  ir.sample_rate = 48000;
  Rng rng(1);
  ir.samples.resize(777);
  for (double& s : ir.samples) s = rng.normal() * 0.1;
  const auto path = std::filesystem::temp_directory_path() / "fdntune_test.wav";
  write_wav(path, ir);
  const ImpulseResponse back = read_wav(path);
  REQUIRE(back.length() == ir.length());
  CHECK(back.sample_rate == ir.sample_rate);
  for (int i = 0; i < ir.length(); ++i)
    CHECK(back.samples[i] ==
          doctest::Approx(ir.samples[i]).epsilon(1e-6));
  std::filesystem::remove(path);
}

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace fdntune {

using cdouble = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Numerical failure inside an evaluation (singular system, non-finite value).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fdntune

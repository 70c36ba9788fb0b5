#pragma once

#include <stdexcept>
#include <string>

namespace opkern {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite entries or Hermitian asymmetry beyond float noise.
class InvalidKernel : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class NotStrictContraction : public Error {
 public:
  explicit NotStrictContraction(double norm)
      : Error("operator norm " + std::to_string(norm) + " is not < 1"), norm_(norm) {}
  double norm() const { return norm_; }

 private:
  double norm_;
};

/// A check that holds by construction failed numerically.
class InternalInvariantViolation : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(std::string which, double min_eig)
      : Error("kernel '" + which + "' is not positive definite (min eigenvalue " +
              std::to_string(min_eig) + ")"),
        which_(std::move(which)),
        min_eig_(min_eig) {}
  const std::string& which() const { return which_; }
  double min_eig() const { return min_eig_; }

 private:
  std::string which_;
  double min_eig_;
};

/// K1 - T*L1 T != K2 - T*L2 T beyond tolerance.
class NotEquivalent : public Error {
 public:
  explicit NotEquivalent(double max_residual)
      : Error("signed kernel system violates K1 - T*L1T = K2 - T*L2T (residual " +
              std::to_string(max_residual) + ")"),
        max_residual_(max_residual) {}
  double max_residual() const { return max_residual_; }

 private:
  double max_residual_;
};

class GramMismatch : public Error {
 public:
  explicit GramMismatch(double residual)
      : Error("column Gram matrices of the partial isometry differ by " + std::to_string(residual)),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// V_L2(s) - D V_L1(s) is not left-invertible at a label.
class NotInvertible : public Error {
 public:
  NotInvertible(std::string label, double sigma_min)
      : Error("V_L2 - D V_L1 is not left-invertible at label '" + label + "' (sigma_min " +
              std::to_string(sigma_min) + ")"),
        label_(std::move(label)),
        sigma_min_(sigma_min) {}
  const std::string& label() const { return label_; }
  double sigma_min() const { return sigma_min_; }

 private:
  std::string label_;
  double sigma_min_;
};

class NotDominated : public Error {
 public:
  using Error::Error;
};

class SpectrumOutOfRange : public Error {
 public:
  SpectrumOutOfRange(double lo, double hi)
      : Error("Radon-Nikodym spectrum [" + std::to_string(lo) + ", " + std::to_string(hi) +
              "] leaves [0, 1]"),
        lo_(lo),
        hi_(hi) {}
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_, hi_;
};

class SingularL : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

}  // namespace opkern

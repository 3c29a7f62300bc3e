#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "roughwall/common.hpp"

namespace roughwall::linalg {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Unnormalized forward DFT of a real sequence, coefficients 0..n/2.
std::vector<std::complex<double>> real_dft(const std::vector<double>& x);
/// Inverse of real_dft, including the 1/n factor.
std::vector<double> inverse_real_dft(const std::vector<std::complex<double>>& c, int n);

/// Affine functional sum_k coef_k x[idx_k] + c.
struct Affine {
  std::vector<std::pair<int, double>> terms;
  double c = 0;

  Affine& var(int idx, double coef) {
    terms.emplace_back(idx, coef);
    return *this;
  }
  Affine& known(double v) {
    c += v;
    return *this;
  }
  Affine scaled(double s) const;
  Affine& plus(const Affine& o, double s = 1.0);
};

/// Accumulates a quadratic energy E(x) = 1/2 x'Ax - b'x + E0 from squares and products of affine
/// functionals, plus raw (possibly unsymmetric) matrix entries.
class SystemBuilder {
 public:
  explicit SystemBuilder(int n) : n_(n), b_(Vec::Zero(n)) {}

  /// 1/2 a (l)^2
  void square(double a, const Affine& l);
  /// a l1 l2
  void product(double a, const Affine& l1, const Affine& l2);
  void entry(int r, int c, double v) { trip_.emplace_back(r, c, v); }
  void add_rhs(int r, double v) { b_[r] += v; }

  int size() const { return n_; }
  double energy_constant() const { return e0_; }
  SpMat matrix() const;
  const Vec& rhs() const { return b_; }

 private:
  int n_;
  Vec b_;
  double e0_ = 0;
  std::vector<Eigen::Triplet<double>> trip_;
};

struct SolveStats {
  int iterations = 0;
  double residual = 0;  // relative
  std::vector<double> history;
};

using Operator = std::function<void(const Vec&, Vec&)>;

/// Right-preconditioned restarted GMRES; stops at ||b - Ax|| <= tol ||b||. Throws SolverError
/// when max_iter is reached.
SolveStats gmres(const Operator& a, const Operator& precond, const Vec& b, Vec& x, double tol,
                 int restart = 80, int max_iter = 2000);

/// Unknowns laid out as contiguous rows of n1 values, one row per (field, level).
struct FieldBlock {
  int offset = 0;
  int levels = 0;
  std::vector<double> order_key;  // banded ordering key per level
};

/// Exact inverse of an operator that is translation invariant along the periodic index: FFT along the
/// rows, one complex banded LU per Fourier mode. For mode 0 the row (gauge_field, gauge_level) is
/// replaced by an identity row to remove the constant-pressure null space; gauge_field < 0 skips this.
class FourierPreconditioner {
 public:
  FourierPreconditioner(const SpMat& reference, int n1, std::vector<FieldBlock> fields, int gauge_field,
                        int gauge_level);
  ~FourierPreconditioner();
  FourierPreconditioner(const FourierPreconditioner&) = delete;
  FourierPreconditioner& operator=(const FourierPreconditioner&) = delete;

  void apply(const Vec& r, Vec& z) const;
  int rows() const { return nrows_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int nrows_ = 0;
};

}  // namespace roughwall::linalg

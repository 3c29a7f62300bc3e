#include "roughwall/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include <fftw3.h>

extern "C" {
void zgbtrf_(const int* m, const int* n, const int* kl, const int* ku, std::complex<double>* ab,
             const int* ldab, int* ipiv, int* info);
void zgbtrs_(const char* trans, const int* n, const int* kl, const int* ku, const int* nrhs,
             const std::complex<double>* ab, const int* ldab, const int* ipiv, std::complex<double>* b,
             const int* ldb, int* info, std::size_t trans_len);
}

namespace roughwall::linalg {

namespace {
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

std::vector<std::complex<double>> real_dft(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> in(x);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
  return out;
}

std::vector<double> inverse_real_dft(const std::vector<std::complex<double>>& c, int n) {
  if (static_cast<int>(c.size()) != n / 2 + 1) throw ConfigError("coefficient count does not match length");
  std::vector<std::complex<double>> in(c);
  std::vector<double> out(static_cast<std::size_t>(n));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(in.data()), out.data(), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  for (double& v : out) v /= n;
  return out;
}

Affine Affine::scaled(double s) const {
  Affine r = *this;
  for (auto& t : r.terms) t.second *= s;
  r.c *= s;
  return r;
}

Affine& Affine::plus(const Affine& o, double s) {
  for (const auto& [i, v] : o.terms) terms.emplace_back(i, v * s);
  c += o.c * s;
  return *this;
}

void SystemBuilder::square(double a, const Affine& l) {
  for (const auto& [i, vi] : l.terms) {
    for (const auto& [j, vj] : l.terms) trip_.emplace_back(i, j, a * vi * vj);
    b_[i] -= a * l.c * vi;
  }
  e0_ += 0.5 * a * l.c * l.c;
}

void SystemBuilder::product(double a, const Affine& l1, const Affine& l2) {
  for (const auto& [i, vi] : l1.terms) {
    for (const auto& [j, vj] : l2.terms) {
      trip_.emplace_back(i, j, a * vi * vj);
      trip_.emplace_back(j, i, a * vi * vj);
    }
    b_[i] -= a * l2.c * vi;
  }
  for (const auto& [j, vj] : l2.terms) b_[j] -= a * l1.c * vj;
  e0_ += a * l1.c * l2.c;
}

SpMat SystemBuilder::matrix() const {
  SpMat m(n_, n_);
  m.setFromTriplets(trip_.begin(), trip_.end());
  m.prune(0.0);
  m.makeCompressed();
  return m;
}

SolveStats gmres(const Operator& a, const Operator& precond, const Vec& b, Vec& x, double tol, int restart,
                 int max_iter) {
  SolveStats st;
  const auto n = b.size();
  if (x.size() != n) x = Vec::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0) {
    x.setZero();
    return st;
  }
  Vec r(n), w(n), z(n);
  a(x, w);
  r = b - w;
  double beta = r.norm();
  st.residual = beta / bnorm;
  st.history.push_back(st.residual);
  if (st.residual <= tol) return st;
  const int m = restart;
  std::vector<Vec> v(static_cast<std::size_t>(m + 1), Vec(n));
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
  Vec cs(m), sn(m), g(m + 1);
  while (st.iterations < max_iter) {
    v[0] = r / beta;
    g.setZero();
    g[0] = beta;
    int k = 0;
    for (; k < m && st.iterations < max_iter; ++k) {
      ++st.iterations;
      precond(v[static_cast<std::size_t>(k)], z);
      a(z, w);
      for (int i = 0; i <= k; ++i) {
        h(i, k) = w.dot(v[static_cast<std::size_t>(i)]);
        w -= h(i, k) * v[static_cast<std::size_t>(i)];
      }
      // Second Gram-Schmidt pass for stability.
      for (int i = 0; i <= k; ++i) {
        const double c = w.dot(v[static_cast<std::size_t>(i)]);
        h(i, k) += c;
        w -= c * v[static_cast<std::size_t>(i)];
      }
      h(k + 1, k) = w.norm();
      if (h(k + 1, k) > 0) v[static_cast<std::size_t>(k + 1)] = w / h(k + 1, k);
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
        h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
        h(i, k) = t;
      }
      const double den = std::hypot(h(k, k), h(k + 1, k));
      cs[k] = den > 0 ? h(k, k) / den : 1.0;
      sn[k] = den > 0 ? h(k + 1, k) / den : 0.0;
      h(k, k) = den;
      h(k + 1, k) = 0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      st.residual = std::abs(g[k + 1]) / bnorm;
      st.history.push_back(st.residual);
      if (st.residual <= tol || den == 0) {
        ++k;
        break;
      }
    }
    Vec y = h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    Vec dx = Vec::Zero(n);
    for (int i = 0; i < k; ++i) dx += y[i] * v[static_cast<std::size_t>(i)];
    precond(dx, z);
    x += z;
    a(x, w);
    r = b - w;
    beta = r.norm();
    st.residual = beta / bnorm;
    if (st.residual <= tol) return st;
  }
  throw SolverError("GMRES did not converge in " + std::to_string(max_iter) + " iterations", st.residual);
}

struct FourierPreconditioner::Impl {
  int n1 = 0, nl = 0, nm = 0, kl = 0, ku = 0, ldab = 0;
  std::vector<FieldBlock> fields;
  std::vector<int> row_of_pos;  // banded position -> (field,level) row index in the batch
  std::vector<int> pos_of_row;
  int gauge_pos = -1;
  std::vector<std::vector<std::complex<double>>> ab;
  std::vector<std::vector<int>> ipiv;
  fftw_plan fwd = nullptr, bwd = nullptr;
  mutable std::vector<double> rbuf;
  mutable std::vector<std::complex<double>> cbuf;
  mutable std::vector<std::complex<double>> col;
};

FourierPreconditioner::FourierPreconditioner(const SpMat& reference, int n1, std::vector<FieldBlock> fields,
                                             int gauge_field, int gauge_level)
    : impl_(std::make_unique<Impl>()) {
  Impl& p = *impl_;
  p.n1 = n1;
  p.fields = std::move(fields);
  p.nm = n1 / 2 + 1;
  // Batch row index: fields in order, levels in order.
  std::vector<std::pair<double, int>> keys;
  std::vector<int> field_first_row;
  int row = 0;
  for (const auto& f : p.fields) {
    field_first_row.push_back(row);
    for (int l = 0; l < f.levels; ++l) keys.emplace_back(f.order_key[static_cast<std::size_t>(l)], row++);
  }
  p.nl = row;
  nrows_ = row * n1;
  if (reference.rows() != nrows_) throw ConfigError("preconditioner layout does not match the operator");
  std::stable_sort(keys.begin(), keys.end());
  p.row_of_pos.resize(static_cast<std::size_t>(p.nl));
  p.pos_of_row.resize(static_cast<std::size_t>(p.nl));
  for (int k = 0; k < p.nl; ++k) {
    p.row_of_pos[static_cast<std::size_t>(k)] = keys[static_cast<std::size_t>(k)].second;
    p.pos_of_row[static_cast<std::size_t>(keys[static_cast<std::size_t>(k)].second)] = k;
  }
  if (gauge_field >= 0) {
    p.gauge_pos = p.pos_of_row[static_cast<std::size_t>(field_first_row[static_cast<std::size_t>(gauge_field)] + gauge_level)];
  }

  auto decode = [&](int idx) {
    // Returns (batch row, i).
    for (std::size_t f = 0; f < p.fields.size(); ++f) {
      const auto& fb = p.fields[f];
      if (idx >= fb.offset && idx < fb.offset + fb.levels * n1) {
        const int rel = idx - fb.offset;
        return std::pair<int, int>(field_first_row[f] + rel / n1, rel % n1);
      }
    }
    throw ConfigError("operator column outside the preconditioner layout");
  };

  // Symbol entries from the i = 0 row of every (field, level): (pos_r, pos_c, i', value).
  struct Entry {
    int pr, pc, d;
    double v;
  };
  std::vector<Entry> entries;
  for (std::size_t f = 0; f < p.fields.size(); ++f) {
    for (int l = 0; l < p.fields[f].levels; ++l) {
      const int r = p.fields[f].offset + l * n1;
      const int pr = p.pos_of_row[static_cast<std::size_t>(field_first_row[f] + l)];
      for (SpMat::InnerIterator it(reference, r); it; ++it) {
        const auto [brow, i] = decode(static_cast<int>(it.col()));
        const int pc = p.pos_of_row[static_cast<std::size_t>(brow)];
        entries.push_back({pr, pc, i, it.value()});
        p.kl = std::max(p.kl, pr - pc);
        p.ku = std::max(p.ku, pc - pr);
      }
    }
  }
  p.ldab = 2 * p.kl + p.ku + 1;
  p.ab.resize(static_cast<std::size_t>(p.nm));
  p.ipiv.resize(static_cast<std::size_t>(p.nm));
  for (int m = 0; m < p.nm; ++m) {
    auto& ab = p.ab[static_cast<std::size_t>(m)];
    ab.assign(static_cast<std::size_t>(p.ldab) * p.nl, 0.0);
    const double th = 2 * kPi * m / n1;
    for (const auto& e : entries) {
      if (m == 0 && e.pr == p.gauge_pos) continue;
      ab[static_cast<std::size_t>(p.kl + p.ku + e.pr - e.pc + e.pc * p.ldab)] +=
          e.v * std::polar(1.0, th * e.d);
    }
    if (m == 0 && p.gauge_pos >= 0) ab[static_cast<std::size_t>(p.kl + p.ku + p.gauge_pos * p.ldab)] = 1.0;
    auto& piv = p.ipiv[static_cast<std::size_t>(m)];
    piv.resize(static_cast<std::size_t>(p.nl));
    int info = 0;
    zgbtrf_(&p.nl, &p.nl, &p.kl, &p.ku, ab.data(), &p.ldab, piv.data(), &info);
    if (info != 0) throw SolverError("singular Fourier mode in preconditioner", static_cast<double>(m));
  }

  p.rbuf.resize(static_cast<std::size_t>(nrows_));
  p.cbuf.resize(static_cast<std::size_t>(p.nl) * p.nm);
  p.col.resize(static_cast<std::size_t>(p.nl));
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  int nn = n1;
  p.fwd = fftw_plan_many_dft_r2c(1, &nn, p.nl, p.rbuf.data(), nullptr, 1, n1,
                                 reinterpret_cast<fftw_complex*>(p.cbuf.data()), nullptr, 1, p.nm, FFTW_ESTIMATE);
  p.bwd = fftw_plan_many_dft_c2r(1, &nn, p.nl, reinterpret_cast<fftw_complex*>(p.cbuf.data()), nullptr, 1, p.nm,
                                 p.rbuf.data(), nullptr, 1, n1, FFTW_ESTIMATE);
}

FourierPreconditioner::~FourierPreconditioner() {
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
  if (impl_->bwd) fftw_destroy_plan(impl_->bwd);
}

void FourierPreconditioner::apply(const Vec& r, Vec& z) const {
  const Impl& p = *impl_;
  std::copy(r.data(), r.data() + nrows_, p.rbuf.begin());
  fftw_execute(p.fwd);
  const char trans = 'N';
  const int one = 1;
  for (int m = 0; m < p.nm; ++m) {
    for (int k = 0; k < p.nl; ++k) {
      p.col[static_cast<std::size_t>(k)] =
          p.cbuf[static_cast<std::size_t>(p.row_of_pos[static_cast<std::size_t>(k)]) * p.nm + m];
    }
    if (m == 0 && p.gauge_pos >= 0) p.col[static_cast<std::size_t>(p.gauge_pos)] = 0.0;
    int info = 0;
    zgbtrs_(&trans, &p.nl, &p.kl, &p.ku, &one, p.ab[static_cast<std::size_t>(m)].data(), &p.ldab,
            p.ipiv[static_cast<std::size_t>(m)].data(), p.col.data(), &p.nl, &info, 1);
    for (int k = 0; k < p.nl; ++k) {
      p.cbuf[static_cast<std::size_t>(p.row_of_pos[static_cast<std::size_t>(k)]) * p.nm + m] =
          p.col[static_cast<std::size_t>(k)];
    }
  }
  fftw_execute(p.bwd);
  z.resize(nrows_);
  const double s = 1.0 / p.n1;
  for (int k = 0; k < nrows_; ++k) z[k] = p.rbuf[static_cast<std::size_t>(k)] * s;
}

}  // namespace roughwall::linalg

#include "pflow/linear_solvers.hpp"

#include <cmath>
#include <sstream>

#include "pflow/error.hpp"

namespace pflow {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

void remove_mean(std::span<double> a) {
  if (a.empty()) return;
  double s = 0.0;
  for (double x : a) s += x;
  const double mean = s / static_cast<double>(a.size());
  for (double& x : a) x -= mean;
}

bool converged(double rnorm, double bnorm, std::span<const double> r,
               const SolverOptions& opt) {
  if (rnorm <= opt.rel_tol * bnorm) return true;
  return opt.abs_tol > 0.0 && max_abs(r) <= opt.abs_tol;
}

}  // namespace

StencilMatrix::StencilMatrix(int n1_, int n2_)
    : n1(n1_),
      n2(n2_),
      diag(static_cast<std::size_t>(n1_) * n2_, 0.0),
      west(diag.size(), 0.0),
      east(diag.size(), 0.0),
      south(diag.size(), 0.0),
      north(diag.size(), 0.0) {}

void StencilMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = size();
  const std::size_t s = static_cast<std::size_t>(n1);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = diag[k] * x[k];
    if (west[k] != 0.0) acc += west[k] * x[k - 1];
    if (east[k] != 0.0) acc += east[k] * x[k + 1];
    if (south[k] != 0.0) acc += south[k] * x[k - s];
    if (north[k] != 0.0) acc += north[k] * x[k + s];
    y[k] = acc;
  }
}

bool StencilMatrix::is_symmetric(double tol) const {
  const std::size_t s = static_cast<std::size_t>(n1);
  for (std::size_t k = 0; k < size(); ++k) {
    if (east[k] != 0.0 && std::abs(east[k] - west[k + 1]) > tol) return false;
    if (north[k] != 0.0 && std::abs(north[k] - south[k + s]) > tol) return false;
  }
  return true;
}

IncompleteFactorization::IncompleteFactorization(const StencilMatrix& a,
                                                 double modification)
    : a_(&a), pivot_(a.size(), 0.0) {
  const std::size_t s = static_cast<std::size_t>(a.n1);
  for (std::size_t k = 0; k < a.size(); ++k) {
    double p = a.diag[k];
    if (a.west[k] != 0.0) {
      const double inv = 1.0 / pivot_[k - 1];
      p -= a.west[k] * a.east[k - 1] * inv;
      p -= modification * a.west[k] * a.north[k - 1] * inv;
    }
    if (a.south[k] != 0.0) {
      const double inv = 1.0 / pivot_[k - s];
      p -= a.south[k] * a.north[k - s] * inv;
      p -= modification * a.south[k] * a.east[k - s] * inv;
    }
    // Guard against tiny or negative pivots (singular Neumann operators).
    if (!(p >= 0.25 * a.diag[k])) p = a.diag[k];
    pivot_[k] = p;
  }
}

void IncompleteFactorization::apply(std::span<const double> r,
                                    std::span<double> z) const {
  const StencilMatrix& a = *a_;
  const std::size_t n = a.size();
  const std::size_t s = static_cast<std::size_t>(a.n1);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = r[k];
    if (a.west[k] != 0.0) acc -= a.west[k] * z[k - 1];
    if (a.south[k] != 0.0) acc -= a.south[k] * z[k - s];
    z[k] = acc / pivot_[k];
  }
  for (std::size_t k = n; k-- > 0;) {
    double acc = 0.0;
    if (a.east[k] != 0.0) acc += a.east[k] * z[k + 1];
    if (a.north[k] != 0.0) acc += a.north[k] * z[k + s];
    z[k] -= acc / pivot_[k];
  }
}

SolveStats solve_pcg(const StencilMatrix& a, std::span<const double> b_in,
                     std::span<double> x, const SolverOptions& opt) {
  const std::size_t n = a.size();
  std::vector<double> b(b_in.begin(), b_in.end());
  if (opt.singular) {
    remove_mean(b);
    remove_mean(x);
  }
  const IncompleteFactorization m(a, opt.modification);
  std::vector<double> r(n), z(n), p(n), q(n);

  a.multiply(x, q);
  for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - q[k];
  if (opt.singular) remove_mean(r);

  SolveStats st;
  const double bnorm = std::sqrt(dot(b, b));
  double rnorm = std::sqrt(dot(r, r));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    st.converged = true;
    return st;
  }
  if (converged(rnorm, bnorm, r, opt)) {
    st.residual = rnorm / bnorm;
    st.converged = true;
    return st;
  }

  m.apply(r, z);
  if (opt.singular) remove_mean(z);
  p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= opt.max_iters; ++it) {
    a.multiply(p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) break;
    const double alpha = rz / pq;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * q[k];
    }
    rnorm = std::sqrt(dot(r, r));
    st.iterations = it;
    st.residual = rnorm / bnorm;
    if (converged(rnorm, bnorm, r, opt)) {
      st.converged = true;
      break;
    }
    m.apply(r, z);
    if (opt.singular) remove_mean(z);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  if (opt.singular) remove_mean(x);
  return st;
}

SolveStats solve_bicgstab(const StencilMatrix& a, std::span<const double> b,
                          std::span<double> x, const SolverOptions& opt) {
  const std::size_t n = a.size();
  const IncompleteFactorization m(a, opt.modification);
  std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), ph(n), s(n), sh(n), t(n);

  a.multiply(x, t);
  for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - t[k];
  SolveStats st;
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    st.converged = true;
    return st;
  }
  double rnorm = std::sqrt(dot(r, r));
  st.residual = rnorm / bnorm;
  if (converged(rnorm, bnorm, r, opt)) {
    st.converged = true;
    return st;
  }
  rhat = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  for (int it = 1; it <= opt.max_iters; ++it) {
    const double rho_next = dot(rhat, r);
    if (rho_next == 0.0 || omega == 0.0) {
      // Breakdown: restart the shadow residual.
      rhat = r;
      std::fill(p.begin(), p.end(), 0.0);
      std::fill(v.begin(), v.end(), 0.0);
      rho = alpha = omega = 1.0;
      continue;
    }
    const double beta = (rho_next / rho) * (alpha / omega);
    rho = rho_next;
    for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * (p[k] - omega * v[k]);
    m.apply(p, ph);
    a.multiply(ph, v);
    alpha = rho / dot(rhat, v);
    for (std::size_t k = 0; k < n; ++k) s[k] = r[k] - alpha * v[k];
    st.iterations = it;
    const double snorm = std::sqrt(dot(s, s));
    if (converged(snorm, bnorm, s, opt)) {
      for (std::size_t k = 0; k < n; ++k) x[k] += alpha * ph[k];
      st.residual = snorm / bnorm;
      st.converged = true;
      return st;
    }
    m.apply(s, sh);
    a.multiply(sh, t);
    const double tt = dot(t, t);
    omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * ph[k] + omega * sh[k];
      r[k] = s[k] - omega * t[k];
    }
    rnorm = std::sqrt(dot(r, r));
    st.residual = rnorm / bnorm;
    if (converged(rnorm, bnorm, r, opt)) {
      st.converged = true;
      return st;
    }
  }
  return st;
}

void require_converged(const SolveStats& s, const std::string& what) {
  if (s.converged) return;
  std::ostringstream os;
  os << what << " did not converge: " << s.iterations
     << " iterations, relative residual " << s.residual;
  throw Error(ErrorCode::kNotConverged, os.str());
}

}  // namespace pflow

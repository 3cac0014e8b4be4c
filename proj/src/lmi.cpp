#include "krasovskii/lmi.hpp"

#include "krasovskii/parallel.hpp"
#include "krasovskii/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace krasovskii {

namespace {

void check_dims(const Matrix& m, const Matrix& n, const LmiCertificate& cert) {
  const Eigen::Index d = m.rows();
  auto square = [d](const Matrix& x) { return x.rows() == d && x.cols() == d; };
  if (d < 1 || !square(m) || !square(n) || cert.P1.dim() != d || !square(cert.P2) || !square(cert.P3) ||
      cert.Q.dim() != d)
    throw std::invalid_argument("LMI: dimension mismatch between M, N and the certificate");
}

// Stacked variable vector: upper triangle of P1, P2 row-major, P3 row-major, upper triangle of Q.
struct Layout {
  Eigen::Index n;
  [[nodiscard]] Eigen::Index sym() const { return n * (n + 1) / 2; }
  [[nodiscard]] Eigen::Index size() const { return 2 * sym() + 2 * n * n; }
  [[nodiscard]] Eigen::Index p2() const { return sym(); }
  [[nodiscard]] Eigen::Index p3() const { return sym() + n * n; }
  [[nodiscard]] Eigen::Index q() const { return sym() + 2 * n * n; }
};

Matrix unpack_sym(const Vector& z, Eigen::Index offset, Eigen::Index n) {
  Matrix s(n, n);
  Eigen::Index k = offset;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      s(i, j) = z(k);
      s(j, i) = z(k);
      ++k;
    }
  return s;
}

Matrix unpack_dense(const Vector& z, Eigen::Index offset, Eigen::Index n) {
  Matrix d(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = z(offset + i * n + j);
  return d;
}

LmiCertificate unpack(const Vector& z, const Layout& lay, double h_max) {
  return LmiCertificate{SymMatrix(unpack_sym(z, 0, lay.n)), unpack_dense(z, lay.p2(), lay.n),
                        unpack_dense(z, lay.p3(), lay.n), SymMatrix(unpack_sym(z, lay.q(), lay.n)), h_max};
}

void pack_sym(Vector& z, Eigen::Index offset, const Matrix& s) {
  Eigen::Index k = offset;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = i; j < s.cols(); ++j) z(k++) = s(i, j);
}

void pack_dense(Vector& z, Eigen::Index offset, const Matrix& d) {
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j) z(offset + i * d.cols() + j) = d(i, j);
}

// Gradient of λ_min of a symmetric block w.r.t. its packed upper triangle: u uᵀ,
// off-diagonal entries counted twice.
void add_sym_outer(Vector& g, Eigen::Index offset, const Vector& u, double sign) {
  Eigen::Index k = offset;
  const Eigen::Index n = u.size();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) g(k++) += sign * (i == j ? u(i) * u(i) : 2.0 * u(i) * u(j));
}

struct RestartOutcome {
  std::optional<LmiCertificate> certificate;
  CertificateReport report;
  double best_objective = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

RestartOutcome run_restart(const Matrix& m, const Matrix& n, double h_max, const SynthesisOptions& opts,
                           const std::vector<Matrix>& basis, int restart) {
  const Layout lay{m.rows()};
  const Eigen::Index d = lay.n;
  CounterRng rng = CounterRng(opts.seed, "lmi-synthesis").substream(static_cast<std::uint64_t>(restart));

  Vector z = Vector::Zero(lay.size());
  {
    auto random_sym = [&](double scale) {
      Matrix r(d, d);
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) r(i, j) = rng.normal();
      return Matrix(scale * 0.5 * (r + r.transpose()));
    };
    auto random_dense = [&](double scale) {
      Matrix r(d, d);
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) r(i, j) = scale * rng.normal();
      return r;
    };
    const Matrix eye = Matrix::Identity(d, d);
    const double spread = restart == 0 ? 0.0 : 0.5;
    pack_sym(z, 0, eye + random_sym(spread));
    pack_dense(z, lay.p2(), (restart == 0 ? 0.5 : 0.0) * eye + random_dense(restart == 0 ? 0.0 : 1.0));
    pack_dense(z, lay.p3(), eye + random_dense(spread));
    pack_sym(z, lay.q(), eye + random_sym(spread));
    z.normalize();
  }

  RestartOutcome out;
  for (int it = 0; it < opts.max_iterations; ++it) {
    ++out.iterations;
    const LmiCertificate cert = unpack(z, lay, h_max);
    const SymMatrix lmi = assemble_descriptor_lmi(m, n, h_max, cert);
    const Spectrum lmi_spec = sym_eig(lmi);
    const Spectrum p1_spec = sym_eig(cert.P1);
    const Spectrum q_spec = sym_eig(cert.Q);

    CertificateReport report{lmi_spec.max(), p1_spec.min(), q_spec.min(), false, opts.feasibility_margin};
    report.feasible = report.lambda_max_lmi < -report.margin && report.lambda_min_P1 > report.margin &&
                      report.lambda_min_Q > report.margin;

    const double f_lmi = lmi_spec.max();
    const double f_p1 = opts.pd_margin - p1_spec.min();
    const double f_q = opts.pd_margin - q_spec.min();
    const double objective = std::max({f_lmi, f_p1, f_q});
    if (objective < out.best_objective) {
      out.best_objective = objective;
      out.report = report;
    }
    if (report.feasible) {
      // Confirm through the public checker before handing the certificate out.
      const CertificateReport confirmed = check_certificate(m, n, h_max, cert, opts.feasibility_margin);
      if (confirmed.feasible) {
        out.certificate = cert;
        out.report = confirmed;
        return out;
      }
    }

    Vector g = Vector::Zero(lay.size());
    if (f_lmi >= f_p1 && f_lmi >= f_q) {
      const Vector v = lmi_spec.basis.col(lmi_spec.basis.cols() - 1);
      for (Eigen::Index k = 0; k < lay.size(); ++k) g(k) = v.dot(basis[static_cast<std::size_t>(k)] * v);
    } else if (f_p1 >= f_q) {
      add_sym_outer(g, 0, p1_spec.basis.col(0), -1.0);
    } else {
      add_sym_outer(g, lay.q(), q_spec.basis.col(0), -1.0);
    }
    const double gnorm = g.norm();
    if (!(gnorm > 0.0)) break;
    const double step = opts.initial_step / std::sqrt(1.0 + it / opts.step_decay);
    z -= (step / gnorm) * g;
    z.normalize();
  }
  return out;
}

}  // namespace

LmiCertificate LmiCertificate::scaled(double s) const {
  return LmiCertificate{P1.scaled(s), P2 * s, P3 * s, Q.scaled(s), h_max};
}

SymMatrix assemble_descriptor_lmi(const Matrix& m, const Matrix& n, double h_max, const LmiCertificate& cert) {
  check_dims(m, n, cert);
  if (!(h_max > 0.0)) throw std::invalid_argument("LMI: h_M must be positive");
  const Eigen::Index d = m.rows();
  const Matrix gamma = m + n;
  const Matrix& p1 = cert.P1.dense();
  const Matrix& p2 = cert.P2;
  const Matrix& p3 = cert.P3;
  const Matrix& q = cert.Q.dense();

  Matrix x(3 * d, 3 * d);
  x.block(0, 0, d, d) = gamma.transpose() * p2 + p2.transpose() * gamma;
  x.block(0, d, d, d) = p1 - p2.transpose() + gamma.transpose() * p3;
  x.block(0, 2 * d, d, d) = h_max * (p2.transpose() * n);
  x.block(d, 0, d, d) = p1 - p2 + p3.transpose() * gamma;
  x.block(d, d, d, d) = -p3 - p3.transpose() + h_max * q;
  x.block(d, 2 * d, d, d) = h_max * (p3.transpose() * n);
  x.block(2 * d, 0, d, d) = h_max * (n.transpose() * p2);
  x.block(2 * d, d, d, d) = h_max * (n.transpose() * p3);
  x.block(2 * d, 2 * d, d, d) = -h_max * q;

  const double asymmetry = (x - x.transpose()).cwiseAbs().maxCoeff();
  if (!(asymmetry < 1e-13 * (1.0 + x.cwiseAbs().maxCoeff())))
    throw std::logic_error("LMI: assembled block matrix is not symmetric");
  return SymMatrix(x);
}

CertificateReport check_certificate(const Matrix& m, const Matrix& n, double h_max, const LmiCertificate& cert,
                                    double margin) {
  CertificateReport r;
  r.margin = margin;
  r.lambda_max_lmi = sym_eig(assemble_descriptor_lmi(m, n, h_max, cert)).max();
  r.lambda_min_P1 = sym_eig(cert.P1).min();
  r.lambda_min_Q = sym_eig(cert.Q).min();
  r.feasible = r.lambda_max_lmi < -margin && r.lambda_min_P1 > margin && r.lambda_min_Q > margin;
  return r;
}

SynthesisResult synthesize_certificate(const Matrix& m, const Matrix& n, double h_max, const SynthesisOptions& opts) {
  if (m.rows() < 1 || m.rows() != m.cols() || n.rows() != m.rows() || n.cols() != m.cols())
    throw std::invalid_argument("synthesize_certificate: M and N must be square of equal size");
  const Layout lay{m.rows()};

  // The LMI is linear in the stacked variables; its image of each unit vector
  // gives the subgradient components vᵀ L(e_k) v.
  std::vector<Matrix> basis(static_cast<std::size_t>(lay.size()));
  for (Eigen::Index k = 0; k < lay.size(); ++k) {
    Vector e = Vector::Zero(lay.size());
    e(k) = 1.0;
    basis[static_cast<std::size_t>(k)] = assemble_descriptor_lmi(m, n, h_max, unpack(e, lay, h_max)).dense();
  }

  SynthesisResult result;
  result.best_objective = std::numeric_limits<double>::infinity();
  const auto batch = static_cast<int>(std::max<std::size_t>(1, worker_count()));
  for (int first = 0; first < opts.restarts; first += batch) {
    const int count = std::min(batch, opts.restarts - first);
    std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
      outcomes[i] = run_restart(m, n, h_max, opts, basis, first + static_cast<int>(i));
    });
    for (int i = 0; i < count; ++i) {
      auto& o = outcomes[static_cast<std::size_t>(i)];
      result.iterations += o.iterations;
      if (o.certificate) {
        result.certificate = std::move(o.certificate);
        result.report = o.report;
        result.best_objective = std::min(result.best_objective, o.best_objective);
        result.restart_index = first + i;
        return result;
      }
      if (o.best_objective < result.best_objective) {
        result.best_objective = o.best_objective;
        result.report = o.report;
      }
    }
  }
  return result;
}

DelaySweepResult max_feasible_delay(const Matrix& m, const Matrix& n, const DelaySweepOptions& opts) {
  if (!(opts.h_lo > 0.0) || !(opts.h_cap > opts.h_lo) || !(opts.tol > 0.0))
    throw std::invalid_argument("max_feasible_delay: need 0 < h_lo < h_cap and tol > 0");
  DelaySweepResult result;
  auto attempt = [&](double h) {
    ++result.synthesis_calls;
    return synthesize_certificate(m, n, h, opts.synthesis);
  };

  SynthesisResult at_lo = attempt(opts.h_lo);
  if (!at_lo.found()) return result;
  result.feasible_at_lo = true;

  // Coarse geometric scan of [h_lo, h_cap].
  const int k = std::max(opts.coarse_points, 2);
  std::vector<double> grid(static_cast<std::size_t>(k));
  std::vector<std::optional<LmiCertificate>> certs(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j)
    grid[static_cast<std::size_t>(j)] = opts.h_lo * std::pow(opts.h_cap / opts.h_lo, static_cast<double>(j) / (k - 1));
  grid.back() = opts.h_cap;
  certs[0] = at_lo.certificate;
  for (int j = 1; j < k; ++j) certs[static_cast<std::size_t>(j)] = attempt(grid[static_cast<std::size_t>(j)]).certificate;

  int last_ok = 0;
  int first_bad = -1;
  for (int j = 0; j < k; ++j) {
    if (certs[static_cast<std::size_t>(j)]) last_ok = j;
    else if (first_bad < 0) first_bad = j;
  }
  if (first_bad < 0) {
    result.h_star = opts.h_cap;
    result.certificate = certs.back();
    return result;
  }

  double lo = grid[static_cast<std::size_t>(last_ok)];
  double hi = opts.h_cap;
  std::optional<LmiCertificate> lo_cert = certs[static_cast<std::size_t>(last_ok)];
  if (last_ok + 1 == first_bad) {
    hi = grid[static_cast<std::size_t>(first_bad)];
  } else {
    // Non-monotone scan: walk the disputed region with step 10·tol.
    result.used_linear_scan = true;
    const double from = grid[static_cast<std::size_t>(first_bad - 1)];
    const double to = last_ok + 1 < k ? grid[static_cast<std::size_t>(last_ok + 1)] : opts.h_cap;
    const double step = 10.0 * opts.tol;
    double best = from;
    std::optional<LmiCertificate> best_cert = certs[static_cast<std::size_t>(first_bad - 1)];
    for (double h = from + step; h <= to; h += step) {
      auto r = attempt(h);
      if (r.found()) {
        best = h;
        best_cert = r.certificate;
      }
    }
    lo = best;
    lo_cert = best_cert;
    hi = std::min(best + step, opts.h_cap);
    if (lo >= grid[static_cast<std::size_t>(last_ok)]) {
      // scan reached at least as far as the coarse grid
    } else {
      lo = grid[static_cast<std::size_t>(last_ok)];
      lo_cert = certs[static_cast<std::size_t>(last_ok)];
      hi = last_ok + 1 < k ? grid[static_cast<std::size_t>(last_ok + 1)] : opts.h_cap;
    }
  }

  while (hi - lo > opts.tol) {
    const double mid = 0.5 * (lo + hi);
    auto r = attempt(mid);
    if (r.found()) {
      lo = mid;
      lo_cert = r.certificate;
    } else {
      hi = mid;
    }
  }
  result.h_star = lo;
  result.certificate = lo_cert;
  return result;
}

SymMatrix assemble_theta(const Matrix& m, const Matrix& n, double h_max, const LmiCertificate& cert) {
  check_dims(m, n, cert);
  const Eigen::Index d = m.rows();
  const SymMatrix q_inv = spd_inverse(cert.Q, 1e-12);

  Matrix p = Matrix::Zero(2 * d, 2 * d);
  p.block(0, 0, d, d) = cert.P1.dense();
  p.block(d, 0, d, d) = cert.P2;
  p.block(d, d, d, d) = cert.P3;

  Matrix j = Matrix::Zero(2 * d, 2 * d);
  j.block(0, d, d, d) = Matrix::Identity(d, d);
  j.block(d, 0, d, d) = m + n;
  j.block(d, d, d, d) = -Matrix::Identity(d, d);

  Matrix zero_n = Matrix::Zero(2 * d, d);
  zero_n.block(d, 0, d, d) = n;
  const Matrix pt_zn = p.transpose() * zero_n;

  Matrix theta = p.transpose() * j + j.transpose() * p;
  theta.block(d, d, d, d) += h_max * cert.Q.dense();
  theta += h_max * pt_zn * q_inv.dense() * pt_zn.transpose();
  return SymMatrix(theta);
}

NonlinearRegion region_at(double epsilon, double lambda_max_theta, double p2_norm, double p3_norm,
                          const GrowthCertificate& growth) {
  NonlinearRegion r;
  r.lambda_max_theta = lambda_max_theta;
  r.epsilon = epsilon;
  r.eta = -lambda_max_theta - epsilon;
  r.delta = (p2_norm * p2_norm + p3_norm * p3_norm) / epsilon;
  if (r.delta == 0.0) {
    r.H = growth.g_alpha;
  } else {
    const double radius = std::pow(r.eta / (2.0 * r.delta * growth.g_beta * growth.g_beta), 1.0 / (2.0 * growth.g_gamma));
    r.H = std::min(growth.g_alpha, radius);
  }
  return r;
}

NonlinearRegion nonlinear_region(const Matrix& m, const Matrix& n, double h_max, const LmiCertificate& cert,
                                 const GrowthCertificate& growth) {
  if (!(growth.g_alpha > 0.0) || !(growth.g_beta > 0.0) || !(growth.g_gamma > 0.0))
    throw std::invalid_argument("nonlinear_region: growth constants must be positive");
  if (!check_certificate(m, n, h_max, cert).feasible) throw std::invalid_argument("no linear certificate");
  const double lambda = sym_eig(assemble_theta(m, n, h_max, cert)).max();
  if (!(lambda < 0.0)) throw std::invalid_argument("no linear certificate");

  const double p2 = matrix_2norm(cert.P2.transpose());
  const double p3 = matrix_2norm(cert.P3.transpose());
  // η/δ ∝ ε(−λ − ε); golden-section search on the unclipped radius.
  auto score = [&](double eps) { return eps * (-lambda - eps); };
  constexpr double kInvPhi = 0.6180339887498948482;
  double a = 0.0, b = -lambda;
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  double fc = score(c), fd = score(d);
  for (int it = 0; it < 200 && (b - a) > 1e-15 * (-lambda); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = score(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = score(d);
    }
  }
  return region_at(0.5 * (a + b), lambda, p2, p3, growth);
}

}  // namespace krasovskii

#pragma once

// Descriptor LMI certificate for ẋ = M x(t) + N x(t − h(t)), 0 ≤ h(t) ≤ h_M:
// exact eigenvalue checking, heuristic synthesis, delay bisection, and the
// quantities (Θ, ε, δ, η, H) used to certify the cubic-perturbed system.

#include "krasovskii/numerics.hpp"
#include "krasovskii/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace krasovskii {

struct LmiCertificate {
  SymMatrix P1;
  Matrix P2;
  Matrix P3;
  SymMatrix Q;
  double h_max = 0.0;

  [[nodiscard]] Eigen::Index dim() const { return P1.dim(); }
  [[nodiscard]] LmiCertificate scaled(double s) const;
};

struct CertificateReport {
  double lambda_max_lmi = 0.0;
  double lambda_min_P1 = 0.0;
  double lambda_min_Q = 0.0;
  bool feasible = false;
  double margin = 0.0;
};

/// The 3n×3n block matrix with Γ = M + N:
///   [ ΓᵀP2 + P2ᵀΓ       P1 − P2ᵀ + ΓᵀP3    h·P2ᵀN ]
///   [ P1 − P2 + P3ᵀΓ    −P3 − P3ᵀ + h·Q    h·P3ᵀN ]
///   [ h·NᵀP2            h·NᵀP3             −h·Q   ]
[[nodiscard]] SymMatrix assemble_descriptor_lmi(const Matrix& m, const Matrix& n, double h_max,
                                                const LmiCertificate& cert);

/// Feasible iff λ_max(LMI) < −margin, λ_min(P1) > margin and λ_min(Q) > margin.
[[nodiscard]] CertificateReport check_certificate(const Matrix& m, const Matrix& n, double h_max,
                                                  const LmiCertificate& cert, double margin = 1e-9);

struct SynthesisOptions {
  int restarts = 8;
  int max_iterations = 3000;
  double initial_step = 0.1;   // step_j = initial_step / sqrt(1 + j/decay)
  double step_decay = 50.0;
  double pd_margin = 1e-6;     // μ in the objective
  double feasibility_margin = 1e-9;
  std::uint64_t seed = 0;
};

struct SynthesisResult {
  std::optional<LmiCertificate> certificate;
  CertificateReport report;        // of the returned certificate, or of the best iterate on failure
  double best_objective = 0.0;
  int restart_index = -1;          // restart that produced the certificate
  int iterations = 0;              // total over all restarts tried
  [[nodiscard]] bool found() const { return certificate.has_value(); }
};

/// Subgradient descent on max(λ_max(LMI), μ − λ_min(P1), μ − λ_min(Q)) over the
/// unit sphere of stacked variables, with restarts. A returned certificate
/// always passes check_certificate; failure does not prove infeasibility.
[[nodiscard]] SynthesisResult synthesize_certificate(const Matrix& m, const Matrix& n, double h_max,
                                                     const SynthesisOptions& opts = {});

struct DelaySweepOptions {
  double h_lo = 1e-3;
  double h_cap = 10.0;
  double tol = 1e-3;
  int coarse_points = 12;
  SynthesisOptions synthesis;
};

struct DelaySweepResult {
  bool feasible_at_lo = false;
  double h_star = 0.0;
  std::optional<LmiCertificate> certificate;  // at h_star
  bool used_linear_scan = false;
  int synthesis_calls = 0;
};

/// Largest h in [h_lo, h_cap] (within tol) at which synthesis succeeds,
/// assuming feasibility is monotone in h.
[[nodiscard]] DelaySweepResult max_feasible_delay(const Matrix& m, const Matrix& n, const DelaySweepOptions& opts = {});

/// Θ = PᵀJ + JᵀP + diag(0, h·Q) + h·Pᵀ[0; N]Q⁻¹[0; N]ᵀP with P = [P1 0; P2 P3]
/// and J = [0 I; Γ −I]. Throws if Q is singular.
[[nodiscard]] SymMatrix assemble_theta(const Matrix& m, const Matrix& n, double h_max, const LmiCertificate& cert);

struct NonlinearRegion {
  double epsilon = 0.0;
  double delta = 0.0;
  double eta = 0.0;
  double H = 0.0;
  double lambda_max_theta = 0.0;
};

/// Chooses ε ∈ (0, −λ_max(Θ)) maximizing
/// H = min(g_alpha, (η/(2δ g_beta²))^{1/(2 g_gamma)}) with η = −λ_max(Θ) − ε and
/// δ = (‖P2ᵀ‖² + ‖P3ᵀ‖²)/ε. Throws "no linear certificate" for infeasible certs.
[[nodiscard]] NonlinearRegion nonlinear_region(const Matrix& m, const Matrix& n, double h_max,
                                               const LmiCertificate& cert, const GrowthCertificate& growth);

/// H(ε) for a fixed ε, using the same formulas as nonlinear_region.
[[nodiscard]] NonlinearRegion region_at(double epsilon, double lambda_max_theta, double p2_norm, double p3_norm,
                                        const GrowthCertificate& growth);

}  // namespace krasovskii

#pragma once

#include <cstdint>
#include <vector>

#include "condlr/linalg.hpp"

namespace condlr {

// A point W = U S V^T on the rank-r manifold, carrying the factors needed to
// apply the tangent-space projector.
struct TangentPoint {
    Matrix U; // n x r orthonormal
    Matrix S; // r x r invertible
    Matrix V; // m x r orthonormal

    void validate() const;
};

// P_W(B) = U U^T B + B V V^T - U U^T B V V^T.
Matrix tangent_project(const TangentPoint& w, const Matrix& b);
Matrix tangent_project(const Matrix& u, const Matrix& v, const Matrix& b);

// Rank-r truncation (the nearest rank-r matrix).
TangentPoint truncate_to_rank(const Matrix& a, int r);

// Local-curvature probe of the projector: ratio of projector movement to
// point movement, which the theory bounds by C / s_min(W).
struct CurvatureRow {
    double s_min = 0.0;
    double rho = 0.0;        // max over trials of ||P_W B - P_W' B||_F / ||W - W'||_F
    double rho_scaled = 0.0; // rho * s_min; roughly constant across the sweep
};

std::vector<CurvatureRow> curvature_check(int n, int m, int r, const std::vector<double>& s_min_list,
                                          int trials, std::uint64_t seed);

// Constructed-trajectory check of the approximation bound || Y(t) - W(t) || <= 3 t eta.
struct TheoremCheckSpec {
    int n = 12, m = 9, r = 3;
    double s = 1.0;     // band center of the rank-r part
    double eps = 0.1;   // band half-width (0 < eps < s)
    double eta = 1e-3;  // bound on || dE/dt ||
    double mu = 1.0;    // bound on the driving field norm
    double lambda = 0.0; // time horizon; 0 selects the precondition boundary
    int substeps = 512;
    std::uint64_t seed = 0;

    // lambda <= (s - eps) / (4 sqrt(2 mu eta)) when eta > 0.
    double lambda_precondition_bound() const;
    void validate() const;
};

struct TheoremCheckResult {
    double max_error = 0.0;       // max_t || Y(t) - W(t) ||_F
    double bound_at_max = 0.0;    // 3 t eta at the argmax t
    double final_error = 0.0;
    double final_bound = 0.0;     // 3 lambda eta
    bool certified = false;       // lambda satisfied the precondition
    bool pass = false;            // every sampled error under its 3 t eta bound
    double integrator_tolerance = 0.0;
    std::vector<double> times;
    std::vector<double> errors;
    std::vector<double> bounds;
};

// Builds a rotating rank-r trajectory W~(t) = exp(t O1) W~(0) exp(t O2)^T
// (spectrum preserved, so W~(t) stays in M_r and the band), adds the
// perturbation E(t) = t eta N with ||N||_F = 1, and integrates the projected
// flow dY/dt = P(Y) dW/dt with classical 4th-order steps. The driving field
// is scaled so || dW/dt || <= mu. If lambda violates the learning-rate
// precondition the check runs in report-only mode (certified = false).
TheoremCheckResult theorem2_check(const TheoremCheckSpec& spec);

} // namespace condlr

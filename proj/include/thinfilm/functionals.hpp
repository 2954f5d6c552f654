#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "thinfilm/grid_field.hpp"
#include "thinfilm/steady_states.hpp"

namespace thinfilm {

/// Physical parameters of the thin-film model.
struct Params {
    double n = 3.0;      ///< mobility exponent
    double alpha = 1.0;  ///< geometric constant
    double M = 1.0;      ///< mass
    double eps = 0.0;    ///< mobility regularization

    /// Throws std::invalid_argument unless n, alpha, M > 0 and eps >= 0.
    void validate() const;
};

/// E(u) = 1/2 int(u_x^2 - alpha^2 u^2) - int u cos x, spectral u_x.
double energy(const Field& u, double alpha);

/// The same energy assembled from Fourier coefficients. Throws
/// std::invalid_argument when mass(u) differs from M.
double energy_fourier(const Field& u, double alpha, double M);

/// Positivity threshold used when dissipation() is called without one.
double default_dissipation_threshold(const Field& u);

/**
 * D(u) = int_{u > delta} u^n (u_xxx + alpha^2 u_x - sin x)^2 dx.
 *
 * Strictly positive fields use spectral derivatives on every node. Once
 * some node has u <= delta, derivatives come from 9-point finite-difference
 * stencils kept inside each wet run, and the sum skips nodes within two
 * nodes of the dry set as well as wet runs too short to hold a stencil.
 */
double dissipation(const Field& u, const Params& params, double delta);
double dissipation(const Field& u, const Params& params);

/// Entropy value with a flag for fields that touch the clamp floor.
struct Entropy {
    double value = 0.0;
    bool infinite = false;
};

/// Default clamp floor for exponent beta.
double default_entropy_floor(double beta);

/// S_beta(u) = h sum max(u_i, floor)^(-beta). Requires beta > 0.
Entropy entropy(const Field& u, double beta, double floor);
Entropy entropy(const Field& u, double beta);

/// beta = n - 2; value is NaN when n <= 2.
Entropy entropy_bf(const Field& u, double n);
/// beta = n - 3/2; value is NaN when n <= 3/2.
Entropy entropy_kad(const Field& u, double n);

/// Lower bound -alpha^4 pi M^2 / 8 - (1 + alpha^2/(4 pi)) M on the energy.
double energy_lower_bound(double M, double alpha);

/// sqrt(2 deltaE / (1 - alpha^2)); requires alpha < 1 and deltaE >= 0.
double coercivity_bound(double deltaE, double alpha);

/**
 * Second-order expansion residual of the energy about a steady state:
 *
 *   |E(v) - E(u*) - L(v) - 1/2 int((v-u*)_x^2 - alpha^2 (v-u*)^2)|
 *
 * where L(v) = -sum_j lambda_j int_{C_j} (v - u*) - int_Z v cos x, C_j the
 * supports of u* and Z its dry set. For equal masses L reduces to
 * int_Z v (lambda - cos x). v is taken as its trigonometric interpolant and
 * every integral is evaluated on it, so the residual measures round-off only.
 */
double taylor_gap(const Field& v, const SteadyState& ustar);

/// pi sum_{0<|p|<N/2} (p^2 - alpha^2) |w_p|^2 for w = u - ref.
double quadratic_energy_gap(const Field& u, const Field& ref, double alpha);

/// One row of diagnostics along a trajectory.
struct DiagnosticsSample {
    double t = 0.0;
    double E = 0.0;
    double D = 0.0;
    double mass = 0.0;
    double S_bf = 0.0;   ///< +inf when the entropy flag is set
    double S_kad = 0.0;  ///< +inf when the entropy flag is set
    double dH1 = 0.0;
    double dL2 = 0.0;
    double dLinf = 0.0;
};

/// Evaluates every diagnostic of u against the reference field.
DiagnosticsSample diagnose(double t, const Field& u, const Params& params, const Field& reference);

/// CSV with header `t,E,D,mass,S_bf,S_kad,dH1,dL2,dLinf`.
void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsSample>& rows);
void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<DiagnosticsSample>& rows);
std::vector<DiagnosticsSample> read_diagnostics_csv(std::istream& is);
std::vector<DiagnosticsSample> read_diagnostics_csv(const std::filesystem::path& path);

}  // namespace thinfilm

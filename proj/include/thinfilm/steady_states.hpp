#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "thinfilm/grid_field.hpp"

namespace thinfilm {

/// |alpha - 1| below this routes to the alpha = 1 particular solution.
inline constexpr double kResonantAlphaTol = 1e-9;

inline bool is_unit_alpha(double alpha) { return std::abs(alpha - 1.0) < kResonantAlphaTol; }

/// Value and slope of the even particular solution u0 of
/// u0'' + alpha^2 u0 = -cos x.
struct ParticularValue {
    double value;
    double slope;
};
ParticularValue particular_solution(double alpha, double x);

enum class Branch { HangingDrop, SittingDrop };

/**
 * Zero-contact-angle droplet solving u'' + alpha^2 u + cos x = lambda on
 * its support and vanishing outside it.
 *
 * Hanging drops occupy (-tau, tau). Sitting drops occupy (tau, 2 pi - tau)
 * and are built around x = pi. Both are even in x.
 */
struct DropletProfile {
    Branch branch = Branch::HangingDrop;
    double alpha = 1.0;
    double tau = 0.0;
    double A = 0.0;
    double lambda = 0.0;
    double mass = 0.0;
    double energy = 0.0;

    /// Support as an interval (a, b) with a < b; b may exceed pi.
    std::pair<double, double> support() const;
    bool inside(double x) const;
    double value(double x) const;
    double slope(double x) const;
    /// Second derivative, taken from inside the support (zero outside).
    double curvature(double x) const;
    /// One-sided second derivative at the contact point, from the wet side.
    double contact_curvature() const;
};

/// u = M/(2 pi) + cos x/(1 - alpha^2) + A cos(alpha x) + B sin(alpha x).
/// A and B are nonzero only for integer alpha > 1.
struct SmoothFilm {
    double alpha = 0.5;
    double mass = 0.0;
    double A = 0.0;
    double B = 0.0;
    double lambda = 0.0;
    double energy = 0.0;

    double value(double x) const;
    double slope(double x) const;
    double curvature(double x) const;
    double min_value() const;
};

DropletProfile hanging_drop(double alpha, double tau);
DropletProfile sitting_drop(double alpha, double tau);
/// Symmetric smooth film of mass M; requires alpha != 1 and a nonnegative profile.
SmoothFilm smooth_film(double alpha, double M);
/// Non-symmetric film for integer alpha = k > 1, excluded from catalog defaults.
SmoothFilm smooth_film(double alpha, double M, double A, double B);

double mass_of_tau(double alpha, double tau, Branch branch);
double tau_from_mass(double alpha, double M);

/// True when the sitting profile is nonnegative on its support.
bool sitting_drop_admissible(double alpha, double tau);
/// All contact points tau of admissible sitting drops with mass M.
std::vector<double> sitting_taus_for_mass(double alpha, double M);

enum class SteadyKind { SmoothFilm, HangingDrop, SittingDrop, TwoDroplet };
std::string to_string(SteadyKind kind);

using Component = std::variant<DropletProfile, SmoothFilm>;

/// A zero-dissipation steady state: one or two components with disjoint
/// supports. Two-droplet states hold the hanging drop first.
struct SteadyState {
    SteadyKind kind = SteadyKind::HangingDrop;
    double alpha = 1.0;
    double mass = 0.0;
    double energy = 0.0;
    bool is_minimizer = false;
    std::vector<Component> components;

    double value(double x) const;
    double slope(double x) const;
    double curvature(double x) const;
    /// Multiplier of the component whose support contains x (NaN when dry).
    double lambda_at(double x) const;
};

SteadyState make_state(const DropletProfile& drop, bool is_minimizer = false);
SteadyState make_state(const SmoothFilm& film, bool is_minimizer = false);
SteadyState make_two_droplet(const DropletProfile& hanging, const DropletProfile& sitting);

/// Unique nonnegative energy minimizer of mass M.
SteadyState minimizer(double alpha, double M);

/// Default number of two-droplet mass splits.
inline constexpr int kDefaultTwoDropletSplits = 9;

/// Every constructible zero-dissipation steady state of mass M, minimizer first.
std::vector<SteadyState> catalog(double alpha, double M, int splits = kDefaultTwoDropletSplits);

/// Support interval(s) and multiplier of each component, for integration.
struct SupportPiece {
    double a;
    double b;
    double lambda;
    double mass;
};
std::vector<SupportPiece> support_pieces(const SteadyState& state);

Field evaluate(const SteadyState& state, const PeriodicGrid& grid);
Field evaluate(const DropletProfile& drop, const PeriodicGrid& grid);

/// sup |u_xx + alpha^2 u + cos x - lambda| over grid nodes inside each
/// support at distance >= 3h from its contact points (exact u_xx).
double el_residual(const SteadyState& state, const PeriodicGrid& grid);

/// Contact conditions hold at both ends, cos of both contact points agree,
/// and the profile is even to 1e-12.
bool symmetry_roots_check(const DropletProfile& profile);

/// max_i |u(x_i) - u(-x_i)| for a grid field.
double field_asymmetry(const Field& u);

}  // namespace thinfilm

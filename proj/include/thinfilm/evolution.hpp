#pragma once

#include <iosfwd>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "thinfilm/functionals.hpp"
#include "thinfilm/grid_field.hpp"
#include "thinfilm/steady_states.hpp"

namespace thinfilm {

enum class Mobility { Arithmetic, Harmonic };

struct SchemeConfig {
    int N = 256;
    double dt0 = 1e-4;
    double dt_min = 1e-12;
    double dt_max = 1.0;
    double newton_tol = 1e-11;
    int newton_max = 25;
    double t_end = 1.0;
    std::vector<double> log_times;
    /// Relative per-step energy slack: E_new <= E_old + energy_slack (1 + |E_old|).
    double energy_slack = 1e-10;
    Mobility mobility = Mobility::Arithmetic;
    /// Stop early once the energy gap to the minimizer drops below this (0 disables).
    double stop_gap = 0.0;
    /// Consecutive accepted steps before dt doubles.
    int grow_after = 5;

    /// Throws std::invalid_argument on inconsistent settings; sorts log_times.
    void validate();
};

class NonConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PositivityLoss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// p_i = (u_{i-1} - 2 u_i + u_{i+1}) / h^2 + alpha^2 u_i + cos x_i.
Field pressure(const Field& u, double alpha);

/// f_eps(z) = max(z, 0)^n + eps.
double mobility_value(double z, const Params& params);

/// Edge fluxes; entry i is F_{i+1/2} = m_{i+1/2} (p_{i+1} - p_i) / h.
std::vector<double> flux(const Field& u, const Field& p, const Params& params,
                         Mobility mobility = Mobility::Arithmetic);

/// Energy of the scheme: 1/2 h sum (D+u)^2 - alpha^2/2 h sum u^2 - h sum u cos x.
double discrete_energy(const Field& u, double alpha);

/// Dissipation of the scheme: h sum m_{i+1/2} ((p_{i+1} - p_i)/h)^2.
double discrete_dissipation(const Field& u, const Params& params,
                            Mobility mobility = Mobility::Arithmetic);

/// h sum ((u_{i-1} - 2 u_i + u_{i+1}) / h^2)^2, the discrete ||u_xx||^2.
double discrete_h2_seminorm_sq(const Field& u);

/// Minimizer of discrete_energy at mass M when it is a positive film
/// M/(2 pi) + c_h cos x (alpha < 1); nullopt otherwise.
std::optional<Field> discrete_film_minimizer(const PeriodicGrid& grid, double alpha, double M);

/// discrete_energy(u) - discrete_energy(ref) for a discrete critical point ref of equal mass,
/// evaluated as the quadratic form of u - ref.
double discrete_energy_gap(const Field& u, const Field& ref, double alpha);

struct EvolutionState {
    double t = 0.0;
    Field u;
    long step_count = 0;
    double dt_current = 0.0;
    int accept_streak = 0;
    /// Reject steps whose iterate is not strictly positive.
    bool guard_positivity = false;
    double last_dt = 0.0;
    int last_newton_iters = 0;
    std::vector<DiagnosticsSample> samples;
};

EvolutionState initial_state(const Field& u0, const SchemeConfig& config);

/**
 * One accepted backward-Euler step of size at most min(dt_current, t_limit - t).
 *
 * Rejected attempts halve dt_current and retry. Throws NonConvergence or
 * PositivityLoss once dt falls below dt_min.
 */
EvolutionState step(const EvolutionState& state, const SchemeConfig& config, const Params& params,
                    double t_limit = std::numeric_limits<double>::infinity());

struct StepRecord {
    double t = 0.0;
    double dt = 0.0;
    double E_h = 0.0;
    double D_h = 0.0;
    double h2 = 0.0;     ///< discrete ||u_xx||^2
    double gap = 0.0;    ///< quadratic_energy_gap to the sampled minimizer
    double gap_h = 0.0;  ///< discrete gap to discrete_film_minimizer (NaN if none)
    int newton_iters = 0;
};

struct TrajectoryRecord {
    Params params;
    SchemeConfig config;
    SteadyState reference;
    Field reference_field;
    std::vector<DiagnosticsSample> samples;
    std::vector<StepRecord> steps;
    std::vector<std::pair<double, Field>> snapshots;
    /// Running max over t of S_kad(u(t)) - S_kad(u0).
    double max_entropy_growth = 0.0;
    bool stopped_on_gap = false;
};

/// Integrates u0 to config.t_end (or until the stop_gap criterion fires).
TrajectoryRecord run(const Field& u0, const Params& params, SchemeConfig config);

/// CSV with header `t,dt,E_h,D_h,h2,gap,gap_h,newton_iters`.
void write_steps_csv(std::ostream& os, const std::vector<StepRecord>& rows);
void write_steps_csv(const std::filesystem::path& path, const std::vector<StepRecord>& rows);
std::vector<StepRecord> read_steps_csv(const std::filesystem::path& path);

}  // namespace thinfilm

#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "thinfilm/evolution.hpp"
#include "thinfilm/functionals.hpp"
#include "thinfilm/steady_states.hpp"

namespace thinfilm {

/// Raised when a command is asked for an analysis that does not apply to the run.
class WrongMode : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Initial datum named by the `init` key of a run configuration.
struct InitSpec {
    enum class Kind { Constant, File, Minimizer, Cosine };
    Kind kind = Kind::Constant;
    double c = 1.0;  ///< constant level, or mean of the cosine profile
    double a = 0.0;  ///< cosine amplitude
    std::filesystem::path path;
    std::string text;  ///< the value as written in the file
};

struct RunConfig {
    Params params;
    SchemeConfig scheme;
    InitSpec init;
    bool eps_auto = false;
    double mass = 0.0;  ///< required by init = minimizer, otherwise taken from the field
};

/**
 * Parses a flat `key = value` file; `#` starts a comment.
 *
 * Required keys: N, n, alpha, eps, dt0, dt_min, dt_max, t_end, newton_tol,
 * newton_max, log_times, init. Optional: mass, energy_slack, mobility,
 * stop_gap, grow_after. `eps = auto` selects 1e-8 (M/2pi)^n. Relative
 * `file:` paths resolve against base_dir.
 */
RunConfig parse_config(std::istream& is, const std::filesystem::path& base_dir = {});
RunConfig parse_config(const std::filesystem::path& path);

/// Builds the initial field and fills in params.M (and eps when automatic).
Field make_initial_field(RunConfig& cfg);

/// Mass versus contact point of the hanging branch, `samples` points on
/// [1e-3, pi/max(alpha,1) - 1e-3].
std::vector<std::pair<double, double>> massmap(double alpha, int samples = 200);
void write_massmap_csv(std::ostream& os, const std::vector<std::pair<double, double>>& rows);

struct CatalogRow {
    double M = 0.0;
    SteadyKind kind = SteadyKind::HangingDrop;
    double tau1 = 0.0, tau2 = 0.0;
    double mass1 = 0.0, mass2 = 0.0;
    double lambda1 = 0.0, lambda2 = 0.0;
    double energy = 0.0;
    bool is_minimizer = false;
};

std::vector<CatalogRow> catalog_rows(const std::vector<SteadyState>& states, double M);
/// Catalog over `count` equispaced masses in [mass_min, mass_max].
std::vector<CatalogRow> catalog_sweep(double alpha, double mass_min, double mass_max, int count,
                                      int splits = kDefaultTwoDropletSplits);
/// CSV with header `kind,tau1,tau2,mass1,mass2,lambda1,lambda2,energy,is_minimizer`.
void write_catalog_csv(std::ostream& os, const std::vector<CatalogRow>& rows);

/// Smallest mass in [mass_min, mass_max] at which the catalog holds a state
/// besides the minimizer, located by bisection. NaN when there is none.
double saddle_onset(double alpha, double mass_min, double mass_max);

/// Lowest energy among non-minimizing catalog entries, an empirical stand-in
/// for the uniqueness threshold E_1. NaN when the catalog has a single entry.
double energy_threshold_proxy(double alpha, double M);

/// Runs the configuration and writes its outputs into outdir:
/// snapshot_<k>.csv, snapshots.csv (index), reference.csv, diagnostics.csv,
/// scheme.csv, profiles.dat and run.json.
TrajectoryRecord evolve(const std::filesystem::path& config_path, const std::filesystem::path& outdir);
TrajectoryRecord evolve(RunConfig cfg, const std::filesystem::path& outdir);

/// Contents of an evolve output directory.
struct TrajectoryData {
    std::string id;
    Params params;
    std::vector<DiagnosticsSample> samples;
    std::vector<StepRecord> steps;
};
TrajectoryData load_trajectory(const std::filesystem::path& dir);

enum class RateMode { PowerLaw, Exponential };

struct RateReport {
    std::string id;
    RateMode mode = RateMode::PowerLaw;
    double S0 = 0.0;
    double K0 = 0.0;    ///< tight envelope slope max (S - S0)/t
    double K_ls = 0.0;  ///< least-squares slope of S - S0 against t
    /// max |S - S0 - K_ls t| / (S0 + K_ls t) over the samples.
    double envelope_residual = 0.0;
    double contact_gap = 0.0;  ///< length L of the dry set of the minimizer
    std::vector<std::pair<double, double>> lower_bound_series;
    std::vector<std::pair<double, double>> measured_series;
    int violations = 0;
    /// d log dH1 / d log t (power law) or d log(E - E*) / dt (exponential) over the last decade.
    double fitted_exponent = 0.0;
    int window_samples = 0;
    double mu = 0.0;
    double rate_ratio = 0.0;  ///< fitted_exponent / (2 mu)
    /// Minimizer is a film vanishing quadratically at one point.
    bool touchdown = false;
    /// Touchdown case: slowest admissible log-log slope -2/(2 beta - 1).
    double exponent_floor = 0.0;
    bool passed = false;
};

/// True for a smooth film whose minimum is zero (the alpha < 1 branch boundary).
bool touches_down(const SteadyState& state);

/// Power-law mode: lower bound (1/sqrt(pi)) (L / (S0 + K0 t))^(1/beta), beta = n - 3/2.
/// For a touchdown film (n > 2) the fitted log-log slope must not fall below
/// -2/(2 beta - 1). Throws WrongMode for a strictly positive minimizer or n <= 3/2.
RateReport rates_powerlaw(const TrajectoryData& traj);
/// Exponential mode: slope of log energy gap against mu = (1 - alpha^2)(min u*)^n.
/// Throws WrongMode when the minimizer has a dry set or touches down.
RateReport rates_exponential(const TrajectoryData& traj);
RateReport rates(const TrajectoryData& traj, RateMode mode);

void write_rate_report_json(std::ostream& os, const RateReport& report);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace thinfilm

#include "thinfilm/evolution.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace thinfilm {

namespace {

double mobility_slope(double z, const Params& params) {
    return z > 0.0 ? params.n * std::pow(z, params.n - 1.0) : 0.0;
}

// Edge mobility and its derivatives with respect to the two nodal values.
struct EdgeMobility {
    double m;
    double dm_left;
    double dm_right;
};

EdgeMobility edge_mobility(double ul, double ur, const Params& params, Mobility kind) {
    const double fl = mobility_value(ul, params);
    const double fr = mobility_value(ur, params);
    const double gl = mobility_slope(ul, params);
    const double gr = mobility_slope(ur, params);
    if (kind == Mobility::Arithmetic) return {0.5 * (fl + fr), 0.5 * gl, 0.5 * gr};
    const double s = fl + fr;
    if (!(s > 0.0)) return {0.0, 0.0, 0.0};
    return {2.0 * fl * fr / s, 2.0 * fr * fr / (s * s) * gl, 2.0 * fl * fl / (s * s) * gr};
}

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

enum class Failure { None, Newton, Positivity, Energy };

struct Attempt {
    Failure failure = Failure::None;
    std::vector<double> u;
    int iters = 0;
};

// Backward-Euler solve u - u_old + dt DIV F(u) = 0 by Newton's method.
Attempt solve_step(const Field& old, double dt, const SchemeConfig& cfg, const Params& params,
                   bool guard_positivity) {
    const PeriodicGrid& g = old.grid();
    const int n = g.size();
    const double h = g.spacing();
    const double inv_h2 = 1.0 / (h * h);
    const double a2 = params.alpha * params.alpha;
    const double c = dt / h;

    Eigen::VectorXd u(n), uold(n);
    for (int i = 0; i < n; ++i) uold[i] = u[i] = old[i];
    const double old_sum = uold.sum();

    std::vector<double> cosx(n);
    for (int i = 0; i < n; ++i) cosx[i] = std::cos(g.node(i));

    Eigen::VectorXd p(n), G(n), delta(n);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(9 * n));
    Eigen::SparseMatrix<double> J(n, n);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool analyzed = false;

    Attempt out;
    for (int it = 1; it <= cfg.newton_max; ++it) {
        out.iters = it;
        for (int i = 0; i < n; ++i) {
            p[i] = (u[g.wrap(i - 1)] - 2.0 * u[i] + u[g.wrap(i + 1)]) * inv_h2 + a2 * u[i] + cosx[i];
        }
        G = u - uold;
        trips.clear();
        for (int i = 0; i < n; ++i) trips.emplace_back(i, i, 1.0);
        for (int i = 0; i < n; ++i) {
            const int ip = g.wrap(i + 1);
            const auto em = edge_mobility(u[i], u[ip], params, cfg.mobility);
            const double dp = (p[ip] - p[i]) / h;
            const double F = em.m * dp;
            G[i] += c * F;
            G[ip] -= c * F;
            // dF/du_j for j = i-1, i, i+1, i+2.
            const double dF[4] = {
                -em.m * inv_h2 / h,
                em.dm_left * dp + em.m * (inv_h2 - (a2 - 2.0 * inv_h2)) / h,
                em.dm_right * dp + em.m * ((a2 - 2.0 * inv_h2) - inv_h2) / h,
                em.m * inv_h2 / h,
            };
            for (int k = 0; k < 4; ++k) {
                const int j = g.wrap(i - 1 + k);
                trips.emplace_back(i, j, c * dF[k]);
                trips.emplace_back(ip, j, -c * dF[k]);
            }
        }
        const double scale = cfg.newton_tol * (1.0 + sup_norm(u));
        if (!std::isfinite(G.sum())) {
            out.failure = Failure::Newton;
            return out;
        }
        if (sup_norm(G) <= scale) break;

        J.setFromTriplets(trips.begin(), trips.end());
        if (!analyzed) {
            lu.analyzePattern(J);
            analyzed = true;
        }
        lu.factorize(J);
        if (lu.info() != Eigen::Success) {
            out.failure = Failure::Newton;
            return out;
        }
        delta = lu.solve(G);
        // The exact update keeps sum(u) = sum(u_old); remove round-off drift.
        delta.array() += ((u.sum() - old_sum) - delta.sum()) / n;
        u -= delta;
        if (!u.allFinite()) {
            out.failure = Failure::Newton;
            return out;
        }
        if (sup_norm(delta) <= cfg.newton_tol * (1.0 + sup_norm(u))) break;
        if (it == cfg.newton_max) {
            out.failure = Failure::Newton;
            return out;
        }
    }
    out.u.assign(u.data(), u.data() + n);
    if (guard_positivity && *std::min_element(out.u.begin(), out.u.end()) <= 0.0) {
        out.failure = Failure::Positivity;
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

void SchemeConfig::validate() {
    if (N < 16 || N % 2 != 0) throw std::invalid_argument("N must be even >= 16");
    if (!(dt_min > 0.0 && dt_min <= dt0 && dt0 <= dt_max)) {
        throw std::invalid_argument("need 0 < dt_min <= dt0 <= dt_max");
    }
    if (!(newton_tol > 0.0)) throw std::invalid_argument("newton_tol must be positive");
    if (newton_max < 1) throw std::invalid_argument("newton_max must be at least 1");
    if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be nonnegative");
    if (!(energy_slack >= 0.0)) throw std::invalid_argument("energy_slack must be nonnegative");
    if (grow_after < 1) throw std::invalid_argument("grow_after must be at least 1");
    std::sort(log_times.begin(), log_times.end());
    for (double t : log_times) {
        if (t < 0.0 || t > t_end) {
            throw std::invalid_argument("log time " + fmt(t) + " outside [0, t_end]");
        }
    }
}

double mobility_value(double z, const Params& params) {
    return std::pow(std::max(z, 0.0), params.n) + params.eps;
}

Field pressure(const Field& u, double alpha) {
    const PeriodicGrid& g = u.grid();
    const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
    std::vector<double> p(static_cast<std::size_t>(g.size()));
    for (int i = 0; i < g.size(); ++i) {
        p[i] = (u[g.wrap(i - 1)] - 2.0 * u[i] + u[g.wrap(i + 1)]) * inv_h2 + alpha * alpha * u[i] +
               std::cos(g.node(i));
    }
    return Field(g, std::move(p));
}

std::vector<double> flux(const Field& u, const Field& p, const Params& params, Mobility mobility) {
    const PeriodicGrid& g = u.grid();
    std::vector<double> F(static_cast<std::size_t>(g.size()));
    for (int i = 0; i < g.size(); ++i) {
        const int ip = g.wrap(i + 1);
        F[i] = edge_mobility(u[i], u[ip], params, mobility).m * (p[ip] - p[i]) / g.spacing();
    }
    return F;
}

double discrete_energy(const Field& u, double alpha) {
    const PeriodicGrid& g = u.grid();
    const double h = g.spacing();
    double s = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        const double d = (u[g.wrap(i + 1)] - u[i]) / h;
        s += 0.5 * d * d - 0.5 * alpha * alpha * u[i] * u[i] - u[i] * std::cos(g.node(i));
    }
    return h * s;
}

double discrete_dissipation(const Field& u, const Params& params, Mobility mobility) {
    const Field p = pressure(u, params.alpha);
    const auto F = flux(u, p, params, mobility);
    const PeriodicGrid& g = u.grid();
    double s = 0.0;
    for (int i = 0; i < g.size(); ++i) s += F[i] * (p[g.wrap(i + 1)] - p[i]) / g.spacing();
    return g.spacing() * s;
}

double discrete_h2_seminorm_sq(const Field& u) {
    const PeriodicGrid& g = u.grid();
    const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
    double s = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        const double d = (u[g.wrap(i - 1)] - 2.0 * u[i] + u[g.wrap(i + 1)]) * inv_h2;
        s += d * d;
    }
    return g.spacing() * s;
}

std::optional<Field> discrete_film_minimizer(const PeriodicGrid& grid, double alpha, double M) {
    const double h = grid.spacing();
    const double lambda1 = (2.0 - 2.0 * std::cos(h)) / (h * h);
    if (!(alpha * alpha < lambda1) || is_unit_alpha(alpha) || alpha >= 1.0) return std::nullopt;
    const double ch = 1.0 / (lambda1 - alpha * alpha);
    if (M / kTwoPi - ch < 0.0) return std::nullopt;
    return Field::sample(grid, [&](double x) { return M / kTwoPi + ch * std::cos(x); });
}

double discrete_energy_gap(const Field& u, const Field& ref, double alpha) {
    const Field w = u - ref;
    const PeriodicGrid& g = w.grid();
    const double h = g.spacing();
    double s = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        const double d = (w[g.wrap(i + 1)] - w[i]) / h;
        s += 0.5 * (d * d - alpha * alpha * w[i] * w[i]);
    }
    return h * s;
}

EvolutionState initial_state(const Field& u0, const SchemeConfig& config) {
    return EvolutionState{0.0, u0, 0, config.dt0, 0, u0.min() > 0.0, 0.0, 0, {}};
}

EvolutionState step(const EvolutionState& state, const SchemeConfig& config, const Params& params,
                    double t_limit) {
    EvolutionState next = state;
    const double e_old = discrete_energy(state.u, params.alpha);
    while (true) {
        const double room = t_limit - state.t;
        const bool clipped = room < next.dt_current;
        const double dt = clipped ? room : next.dt_current;
        Attempt a = solve_step(state.u, dt, config, params, state.guard_positivity);
        if (a.failure == Failure::None) {
            Field candidate(state.u.grid(), std::move(a.u));
            if (discrete_energy(candidate, params.alpha) <=
                e_old + config.energy_slack * (1.0 + std::abs(e_old))) {
                next.u = std::move(candidate);
                next.t = clipped ? t_limit : state.t + dt;
                next.step_count += 1;
                next.last_dt = dt;
                next.last_newton_iters = a.iters;
                if (++next.accept_streak >= config.grow_after) {
                    next.dt_current = std::min(2.0 * next.dt_current, config.dt_max);
                    next.accept_streak = 0;
                }
                return next;
            }
            a.failure = Failure::Energy;
        }
        next.accept_streak = 0;
        next.dt_current *= 0.5;
        if (next.dt_current < config.dt_min) {
            const std::string where = " at t = " + fmt(state.t);
            if (a.failure == Failure::Positivity) {
                throw PositivityLoss("positivity lost below dt_min" + where);
            }
            throw NonConvergence(std::string(a.failure == Failure::Energy
                                                 ? "energy increase persists below dt_min"
                                                 : "Newton failed to converge below dt_min") +
                                 where);
        }
    }
}

TrajectoryRecord run(const Field& u0, const Params& params, SchemeConfig config) {
    config.validate();
    if (u0.size() != config.N) throw std::invalid_argument("initial field does not have N nodes");
    if (!u0.nonnegative()) throw std::invalid_argument("initial data must be nonnegative");
    if (params.eps == 0.0 && !(u0.min() > 0.0)) {
        throw std::invalid_argument("eps = 0 requires strictly positive initial data");
    }
    const PeriodicGrid& grid = u0.grid();
    Params p = params;
    p.M = u0.mass();
    p.validate();

    const SteadyState ref = minimizer(p.alpha, p.M);
    TrajectoryRecord rec{p, config, ref, evaluate(ref, grid), {}, {}, {}, 0.0, false};
    const auto film = discrete_film_minimizer(grid, p.alpha, p.M);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    auto record_step = [&](const EvolutionState& s) {
        StepRecord r;
        r.t = s.t;
        r.dt = s.last_dt;
        r.E_h = discrete_energy(s.u, p.alpha);
        r.D_h = discrete_dissipation(s.u, p, config.mobility);
        r.h2 = discrete_h2_seminorm_sq(s.u);
        r.gap = quadratic_energy_gap(s.u, rec.reference_field, p.alpha);
        r.gap_h = film ? discrete_energy_gap(s.u, *film, p.alpha) : nan;
        r.newton_iters = s.last_newton_iters;
        rec.steps.push_back(r);
        rec.samples.push_back(diagnose(s.t, s.u, p, rec.reference_field));
        if (rec.samples.size() > 1) {
            rec.max_entropy_growth =
                std::max(rec.max_entropy_growth, rec.samples.back().S_kad - rec.samples.front().S_kad);
        }
        return r;
    };

    EvolutionState s = initial_state(u0, config);
    record_step(s);
    std::size_t next_log = 0;
    auto take_snapshots = [&]() {
        while (next_log < config.log_times.size() &&
               config.log_times[next_log] <= s.t + 1e-12 * std::max(1.0, s.t)) {
            rec.snapshots.emplace_back(config.log_times[next_log], s.u);
            ++next_log;
        }
    };
    take_snapshots();

    const double t_tol = 1e-12 * std::max(1.0, config.t_end);
    while (s.t < config.t_end - t_tol) {
        const double target =
            next_log < config.log_times.size() ? config.log_times[next_log] : config.t_end;
        s = step(s, config, p, target);
        const StepRecord r = record_step(s);
        take_snapshots();
        if (config.stop_gap > 0.0) {
            const double gap = std::isnan(r.gap_h) ? r.gap : r.gap_h;
            if (gap <= config.stop_gap) {
                rec.stopped_on_gap = true;
                break;
            }
        }
    }
    return rec;
}

void write_steps_csv(std::ostream& os, const std::vector<StepRecord>& rows) {
    os << "t,dt,E_h,D_h,h2,gap,gap_h,newton_iters\n" << std::setprecision(17);
    for (const auto& r : rows) {
        os << r.t << ',' << r.dt << ',' << r.E_h << ',' << r.D_h << ',' << r.h2 << ',' << r.gap << ','
           << r.gap_h << ',' << r.newton_iters << '\n';
    }
}

void write_steps_csv(const std::filesystem::path& path, const std::vector<StepRecord>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_steps_csv(os, rows);
}

std::vector<StepRecord> read_steps_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) || line.rfind("t,dt,E_h,D_h,h2,gap,gap_h,newton_iters", 0) != 0) {
        throw std::runtime_error(path.string() + " has an unexpected header");
    }
    std::vector<StepRecord> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        double v[8];
        int k = 0;
        while (k < 8 && std::getline(ss, cell, ',')) v[k++] = std::stod(cell);
        if (k != 8) throw std::runtime_error("malformed step row: " + line);
        rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], static_cast<int>(v[7])});
    }
    return rows;
}

}  // namespace thinfilm

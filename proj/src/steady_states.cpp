#include "thinfilm/steady_states.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace thinfilm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Representative of x in [lo, lo + 2 pi).
double reduce(double x, double lo) { return x - kTwoPi * std::floor((x - lo) / kTwoPi); }

double particular_curvature(double alpha, double x) {
    if (is_unit_alpha(alpha)) return -std::cos(x) + 0.5 * x * std::sin(x);
    return -std::cos(x) / (1.0 - alpha * alpha);
}

// Profile formula on the local coordinate, ignoring the support.
struct Local {
    double x;      // coordinate used by u0 (hanging: x in [-pi, pi); sitting: x in [0, 2 pi))
    double phase;  // argument of the homogeneous cosine
};

Local local_coords(const DropletProfile& d, double x) {
    if (d.branch == Branch::HangingDrop) {
        double r = reduce(x, -kPi);
        return {r, d.alpha * r};
    }
    double r = reduce(x, 0.0);
    return {r, d.alpha * (r - kPi)};
}

double raw_value(const DropletProfile& d, double x) {
    auto [r, phase] = local_coords(d, x);
    const double contact_phase =
        d.branch == Branch::HangingDrop ? d.alpha * d.tau : d.alpha * (kPi - d.tau);
    return particular_solution(d.alpha, r).value + d.A * std::cos(phase) -
           particular_solution(d.alpha, d.tau).value - d.A * std::cos(contact_phase);
}

double raw_slope(const DropletProfile& d, double x) {
    auto [r, phase] = local_coords(d, x);
    return particular_solution(d.alpha, r).slope - d.A * d.alpha * std::sin(phase);
}

double raw_curvature(const DropletProfile& d, double x) {
    auto [r, phase] = local_coords(d, x);
    return particular_curvature(d.alpha, r) - d.A * d.alpha * d.alpha * std::cos(phase);
}

template <class F>
double quad(F f, double a, double b) {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

double droplet_energy(const DropletProfile& d) {
    auto [a, b] = d.support();
    const double a2 = d.alpha * d.alpha;
    return quad(
        [&](double x) {
            const double u = raw_value(d, x);
            const double ux = raw_slope(d, x);
            return 0.5 * (ux * ux - a2 * u * u) - u * std::cos(x);
        },
        a, b);
}

double film_energy(const SmoothFilm& f) {
    const double a2 = f.alpha * f.alpha;
    return quad(
        [&](double x) {
            const double u = f.value(x);
            const double ux = f.slope(x);
            return 0.5 * (ux * ux - a2 * u * u) - u * std::cos(x);
        },
        -kPi, kPi);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

double tau_max(double alpha) { return kPi / std::max(alpha, 1.0); }

}  // namespace

ParticularValue particular_solution(double alpha, double x) {
    if (is_unit_alpha(alpha)) {
        return {-0.5 * x * std::sin(x), -0.5 * (std::sin(x) + x * std::cos(x))};
    }
    const double c = 1.0 / (1.0 - alpha * alpha);
    return {c * std::cos(x), -c * std::sin(x)};
}

std::pair<double, double> DropletProfile::support() const {
    if (branch == Branch::HangingDrop) return {-tau, tau};
    return {tau, kTwoPi - tau};
}

bool DropletProfile::inside(double x) const {
    if (branch == Branch::HangingDrop) return std::abs(reduce(x, -kPi)) < tau;
    const double r = reduce(x, 0.0);
    return r > tau && r < kTwoPi - tau;
}

double DropletProfile::value(double x) const { return inside(x) ? raw_value(*this, x) : 0.0; }
double DropletProfile::slope(double x) const { return inside(x) ? raw_slope(*this, x) : 0.0; }
double DropletProfile::curvature(double x) const {
    return inside(x) ? raw_curvature(*this, x) : 0.0;
}
double DropletProfile::contact_curvature() const { return raw_curvature(*this, tau); }

double SmoothFilm::value(double x) const {
    return mass / kTwoPi + std::cos(x) / (1.0 - alpha * alpha) + A * std::cos(alpha * x) +
           B * std::sin(alpha * x);
}

double SmoothFilm::slope(double x) const {
    return -std::sin(x) / (1.0 - alpha * alpha) - alpha * A * std::sin(alpha * x) +
           alpha * B * std::cos(alpha * x);
}

double SmoothFilm::curvature(double x) const {
    return -std::cos(x) / (1.0 - alpha * alpha) - alpha * alpha * A * std::cos(alpha * x) -
           alpha * alpha * B * std::sin(alpha * x);
}

double SmoothFilm::min_value() const {
    if (A == 0.0 && B == 0.0) return mass / kTwoPi - 1.0 / std::abs(1.0 - alpha * alpha);
    double m = std::numeric_limits<double>::infinity();
    constexpr int samples = 20000;
    for (int i = 0; i < samples; ++i) m = std::min(m, value(-kPi + kTwoPi * i / samples));
    return m;
}

static DropletProfile build_hanging(double alpha, double tau) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (!(tau > 0.0 && tau < tau_max(alpha))) {
        throw std::domain_error("hanging drop requires 0 < tau < pi/max(alpha,1); got tau = " +
                                fmt(tau));
    }
    DropletProfile d;
    d.branch = Branch::HangingDrop;
    d.alpha = alpha;
    d.tau = tau;
    const auto u0 = particular_solution(alpha, tau);
    d.A = u0.slope / (alpha * std::sin(alpha * tau));
    const double level = u0.value + d.A * std::cos(alpha * tau);
    d.lambda = -alpha * alpha * level;
    if (is_unit_alpha(alpha)) {
        d.mass = -(std::sin(tau) - tau * std::cos(tau)) + 2.0 * d.A * std::sin(tau) - 2.0 * tau * level;
    } else {
        d.mass = 2.0 * std::sin(tau) / (1.0 - alpha * alpha) +
                 2.0 * d.A * std::sin(alpha * tau) / alpha - 2.0 * tau * level;
    }
    return d;
}

static DropletProfile build_sitting(double alpha, double tau) {
    if (!(alpha > 1.0) || is_unit_alpha(alpha)) {
        throw std::domain_error("sitting drops require alpha > 1");
    }
    if (!(tau > 0.0 && tau < kPi)) {
        throw std::domain_error("sitting drop requires 0 < tau < pi; got tau = " + fmt(tau));
    }
    const double half = kPi - tau;
    const double s = std::sin(alpha * half);
    if (std::abs(s) < 1e-8) {
        throw std::domain_error("sitting drop is resonant at tau = " + fmt(tau));
    }
    DropletProfile d;
    d.branch = Branch::SittingDrop;
    d.alpha = alpha;
    d.tau = tau;
    const auto u0 = particular_solution(alpha, tau);
    d.A = -u0.slope / (alpha * s);
    const double level = u0.value + d.A * std::cos(alpha * half);
    d.lambda = -alpha * alpha * level;
    d.mass = -2.0 * std::sin(tau) / (1.0 - alpha * alpha) + 2.0 * d.A * s / alpha -
             2.0 * half * level;
    return d;
}

DropletProfile hanging_drop(double alpha, double tau) {
    DropletProfile d = build_hanging(alpha, tau);
    d.energy = droplet_energy(d);
    return d;
}

DropletProfile sitting_drop(double alpha, double tau) {
    DropletProfile d = build_sitting(alpha, tau);
    d.energy = droplet_energy(d);
    return d;
}

SmoothFilm smooth_film(double alpha, double M) {
    if (is_unit_alpha(alpha)) throw std::domain_error("no smooth film at alpha = 1");
    if (!(M > 0.0)) throw std::invalid_argument("mass must be positive");
    if (M * std::abs(1.0 - alpha * alpha) < kTwoPi * (1.0 - 1e-12)) {
        throw std::domain_error("smooth film of mass " + fmt(M) + " would be negative");
    }
    SmoothFilm f;
    f.alpha = alpha;
    f.mass = M;
    f.lambda = alpha * alpha * M / kTwoPi;
    f.energy = film_energy(f);
    return f;
}

SmoothFilm smooth_film(double alpha, double M, double A, double B) {
    const double k = std::round(alpha);
    if (!(alpha > 1.0) || std::abs(alpha - k) > 1e-12) {
        throw std::domain_error("non-symmetric films exist only for integer alpha > 1");
    }
    if (!(M > 0.0)) throw std::invalid_argument("mass must be positive");
    SmoothFilm f;
    f.alpha = k;
    f.mass = M;
    f.A = A;
    f.B = B;
    f.lambda = k * k * M / kTwoPi;
    if (f.min_value() < -1e-12 * (1.0 + M)) {
        throw std::domain_error("non-symmetric film is negative somewhere");
    }
    f.energy = film_energy(f);
    return f;
}

double mass_of_tau(double alpha, double tau, Branch branch) {
    return branch == Branch::HangingDrop ? build_hanging(alpha, tau).mass
                                         : build_sitting(alpha, tau).mass;
}

double tau_from_mass(double alpha, double M) {
    if (!(M > 0.0)) throw std::invalid_argument("mass must be positive");
    if (alpha < 1.0 && !is_unit_alpha(alpha) &&
        M * (1.0 - alpha * alpha) >= kTwoPi * (1.0 - 1e-12)) {
        throw std::domain_error("mass " + fmt(M) + " is carried by a smooth film, not a droplet");
    }
    auto g = [&](double t) { return mass_of_tau(alpha, t, Branch::HangingDrop) - M; };
    double lo = 1e-8;
    // Below alpha = 1 the branch ends regularly at pi (touchdown film); above it the mass blows up.
    double hi = alpha < 1.0 ? std::nextafter(kPi, 0.0) : tau_max(alpha) - 1e-8;
    const double glo = g(lo);
    const double ghi = g(hi);
    if (glo > 0.0 || ghi < 0.0) {
        throw std::domain_error("mass " + fmt(M) + " outside the hanging-drop range [" +
                                fmt(glo + M) + ", " + fmt(ghi + M) + "]");
    }
    // Bisection in tau: the mass vanishes to high order at tau = 0, so a mass
    // tolerance alone would leave small contact points poorly resolved.
    while (hi - lo > 1e-15 * hi) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (gm == 0.0) return mid;
        (gm < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

bool sitting_drop_admissible(double alpha, double tau) {
    DropletProfile d;
    try {
        d = build_sitting(alpha, tau);
    } catch (const std::domain_error&) {
        return false;
    }
    if (!(d.mass > 0.0)) return false;
    constexpr int samples = 400;
    const double half = kPi - tau;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int i = 1; i < samples; ++i) {
        const double v = raw_value(d, tau + 2.0 * half * i / samples);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi > 0.0 && lo >= -1e-12 * (1.0 + hi);
}

std::vector<double> sitting_taus_for_mass(double alpha, double M) {
    std::vector<double> roots;
    if (!(alpha > 1.0) || is_unit_alpha(alpha)) return roots;
    constexpr int scan = 2000;
    std::vector<double> taus(scan + 1), masses(scan + 1, kNaN);
    for (int k = 1; k < scan; ++k) {
        taus[k] = kPi * k / scan;
        if (sitting_drop_admissible(alpha, taus[k])) {
            masses[k] = build_sitting(alpha, taus[k]).mass;
        }
    }
    const double tol = 1e-12 * (1.0 + M);
    for (int k = 1; k + 1 < scan; ++k) {
        const double g0 = masses[k] - M;
        const double g1 = masses[k + 1] - M;
        if (std::isnan(g0) || std::isnan(g1) || g0 * g1 > 0.0) continue;
        double lo = taus[k], hi = taus[k + 1], glo = g0;
        double mid = lo;
        for (int it = 0; it < 200; ++it) {
            mid = 0.5 * (lo + hi);
            const double gm = build_sitting(alpha, mid).mass - M;
            if (std::abs(gm) <= tol || mid <= lo || mid >= hi) break;
            if ((gm < 0.0) == (glo < 0.0)) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        if (roots.empty() || std::abs(roots.back() - mid) > 1e-9) roots.push_back(mid);
    }
    return roots;
}

std::string to_string(SteadyKind kind) {
    switch (kind) {
        case SteadyKind::SmoothFilm: return "smooth_film";
        case SteadyKind::HangingDrop: return "hanging_drop";
        case SteadyKind::SittingDrop: return "sitting_drop";
        case SteadyKind::TwoDroplet: return "two_droplet";
    }
    return "unknown";
}

double SteadyState::value(double x) const {
    double s = 0.0;
    for (const auto& c : components) std::visit([&](const auto& p) { s += p.value(x); }, c);
    return s;
}

double SteadyState::slope(double x) const {
    double s = 0.0;
    for (const auto& c : components) std::visit([&](const auto& p) { s += p.slope(x); }, c);
    return s;
}

double SteadyState::curvature(double x) const {
    double s = 0.0;
    for (const auto& c : components) std::visit([&](const auto& p) { s += p.curvature(x); }, c);
    return s;
}

double SteadyState::lambda_at(double x) const {
    for (const auto& c : components) {
        if (const auto* f = std::get_if<SmoothFilm>(&c)) return f->lambda;
        const auto& d = std::get<DropletProfile>(c);
        if (d.inside(x)) return d.lambda;
    }
    return kNaN;
}

SteadyState make_state(const DropletProfile& drop, bool is_minimizer) {
    SteadyState s;
    s.kind = drop.branch == Branch::HangingDrop ? SteadyKind::HangingDrop : SteadyKind::SittingDrop;
    s.alpha = drop.alpha;
    s.mass = drop.mass;
    s.energy = drop.energy;
    s.is_minimizer = is_minimizer;
    s.components = {drop};
    return s;
}

SteadyState make_state(const SmoothFilm& film, bool is_minimizer) {
    SteadyState s;
    s.kind = SteadyKind::SmoothFilm;
    s.alpha = film.alpha;
    s.mass = film.mass;
    s.energy = film.energy;
    s.is_minimizer = is_minimizer;
    s.components = {film};
    return s;
}

SteadyState make_two_droplet(const DropletProfile& hanging, const DropletProfile& sitting) {
    if (hanging.branch != Branch::HangingDrop || sitting.branch != Branch::SittingDrop) {
        throw std::invalid_argument("two-droplet state needs a hanging and a sitting drop");
    }
    if (!(hanging.tau < sitting.tau)) {
        throw std::domain_error("two-droplet supports overlap");
    }
    SteadyState s;
    s.kind = SteadyKind::TwoDroplet;
    s.alpha = hanging.alpha;
    s.mass = hanging.mass + sitting.mass;
    s.energy = hanging.energy + sitting.energy;
    s.components = {hanging, sitting};
    return s;
}

SteadyState minimizer(double alpha, double M) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (!(M > 0.0)) throw std::invalid_argument("mass must be positive");
    if (alpha < 1.0 && !is_unit_alpha(alpha) &&
        M * (1.0 - alpha * alpha) >= kTwoPi * (1.0 - 1e-12)) {
        return make_state(smooth_film(alpha, M), true);
    }
    return make_state(hanging_drop(alpha, tau_from_mass(alpha, M)), true);
}

std::vector<SteadyState> catalog(double alpha, double M, int splits) {
    std::vector<SteadyState> out{minimizer(alpha, M)};
    if (!(alpha > 1.0) || is_unit_alpha(alpha)) return out;

    for (double t : sitting_taus_for_mass(alpha, M)) out.push_back(make_state(sitting_drop(alpha, t)));
    if (M * (alpha * alpha - 1.0) >= kTwoPi) out.push_back(make_state(smooth_film(alpha, M)));

    for (int j = 1; j <= splits; ++j) {
        const double m1 = M * j / (splits + 1);
        DropletProfile hanging;
        try {
            hanging = hanging_drop(alpha, tau_from_mass(alpha, m1));
        } catch (const std::domain_error&) {
            continue;
        }
        for (double t2 : sitting_taus_for_mass(alpha, M - m1)) {
            if (hanging.tau < t2) out.push_back(make_two_droplet(hanging, sitting_drop(alpha, t2)));
        }
    }
    return out;
}

std::vector<SupportPiece> support_pieces(const SteadyState& state) {
    std::vector<SupportPiece> out;
    for (const auto& c : state.components) {
        if (const auto* f = std::get_if<SmoothFilm>(&c)) {
            out.push_back({-kPi, kPi, f->lambda, f->mass});
        } else {
            const auto& d = std::get<DropletProfile>(c);
            auto [a, b] = d.support();
            out.push_back({a, b, d.lambda, d.mass});
        }
    }
    return out;
}

Field evaluate(const SteadyState& state, const PeriodicGrid& grid) {
    return Field::sample(grid, [&](double x) { return state.value(x); });
}

Field evaluate(const DropletProfile& drop, const PeriodicGrid& grid) {
    return Field::sample(grid, [&](double x) { return drop.value(x); });
}

double el_residual(const SteadyState& state, const PeriodicGrid& grid) {
    const double h = grid.spacing();
    const double a2 = state.alpha * state.alpha;
    double worst = 0.0;
    for (const auto& c : state.components) {
        for (int i = 0; i < grid.size(); ++i) {
            const double x = grid.node(i);
            double u, uxx, lambda;
            if (const auto* f = std::get_if<SmoothFilm>(&c)) {
                u = f->value(x);
                uxx = f->curvature(x);
                lambda = f->lambda;
            } else {
                const auto& d = std::get<DropletProfile>(c);
                if (!d.inside(x)) continue;
                // Distance to the nearest contact point, measured on the circle.
                const double r = d.branch == Branch::HangingDrop ? reduce(x, -kPi) : reduce(x, 0.0) - kPi;
                const double half = d.branch == Branch::HangingDrop ? d.tau : kPi - d.tau;
                if (half - std::abs(r) < 3.0 * h) continue;
                u = d.value(x);
                uxx = d.curvature(x);
                lambda = d.lambda;
            }
            worst = std::max(worst, std::abs(uxx + a2 * u + std::cos(x) - lambda));
        }
    }
    return worst;
}

bool symmetry_roots_check(const DropletProfile& p) {
    auto [a, b] = p.support();
    const double scale = 1.0 + std::abs(p.A);
    const double tol = 1e-10 * scale;
    if (std::abs(raw_value(p, a)) > tol || std::abs(raw_value(p, b)) > tol) return false;
    if (std::abs(raw_slope(p, a)) > tol || std::abs(raw_slope(p, b)) > tol) return false;
    if (std::abs(std::cos(a) - std::cos(b)) > 1e-12) return false;
    constexpr int samples = 64;
    for (int i = 0; i <= samples; ++i) {
        const double x = -kPi + kTwoPi * i / samples;
        if (std::abs(p.value(x) - p.value(-x)) > 1e-12 * scale) return false;
    }
    return true;
}

double field_asymmetry(const Field& u) {
    const int n = u.size();
    double m = 0.0;
    for (int i = 1; i < n; ++i) m = std::max(m, std::abs(u[i] - u[n - i]));
    return m;
}

}  // namespace thinfilm

#include "thinfilm/functionals.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace thinfilm {

namespace {

constexpr int kStencil = 9;
constexpr int kDryBuffer = 2;  // wet nodes skipped next to a dry node

using Weights = std::array<std::array<double, kStencil>, kStencil>;

// Fornberg's recursion for finite-difference weights of derivative order
// `order` at point z, on nodes 0, 1, ..., kStencil-1.
std::array<double, kStencil> fornberg(double z, int order) {
    std::array<std::array<double, kStencil>, 4> c{};
    double c1 = 1.0;
    double c4 = -z;
    c[0][0] = 1.0;
    for (int i = 1; i < kStencil; ++i) {
        const int mn = std::min(i, order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = i - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = i - j;
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) {
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c[order];
}

Weights stencil_weights(int order, double h) {
    Weights w{};
    const double scale = std::pow(h, -order);
    for (int pos = 0; pos < kStencil; ++pos) {
        w[pos] = fornberg(pos, order);
        for (double& x : w[pos]) x *= scale;
    }
    return w;
}

// Trigonometric interpolant of a grid field, evaluated off the grid.
class TrigInterpolant {
public:
    explicit TrigInterpolant(const Field& u) : c_(fourier_coeffs(u)), k_(u.size() / 2) {}

    void eval(double x, double& value, double& slope) const {
        const std::complex<double> z(std::cos(x), std::sin(x));
        std::complex<double> zp(1.0, 0.0), sv, ss;
        for (int p = 1; p < k_; ++p) {
            zp *= z;
            sv += c_[p] * zp;
            ss += static_cast<double>(p) * c_[p] * zp;
        }
        const double nyq = c_[k_].real();
        value = c_[0].real() + 2.0 * sv.real() + nyq * std::cos(k_ * x);
        slope = -2.0 * ss.imag() - k_ * nyq * std::sin(k_ * x);
    }

    double integral_sq() const {
        double s = 0.0;
        for (int p = 1; p < k_; ++p) s += std::norm(c_[p]);
        const double nyq = c_[k_].real();
        return kTwoPi * (c_[0].real() * c_[0].real() + 2.0 * s) + kPi * nyq * nyq;
    }

    double integral_slope_sq() const {
        double s = 0.0;
        for (int p = 1; p < k_; ++p) s += static_cast<double>(p) * p * std::norm(c_[p]);
        const double nyq = c_[k_].real();
        return 2.0 * kTwoPi * s + kPi * static_cast<double>(k_) * k_ * nyq * nyq;
    }

    double integral_cos() const { return kTwoPi * c_[1].real(); }

private:
    std::vector<std::complex<double>> c_;
    int k_;
};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

}  // namespace

void Params::validate() const {
    if (!(n > 0.0)) throw std::invalid_argument("n must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (!(M > 0.0)) throw std::invalid_argument("M must be positive");
    if (!(eps >= 0.0)) throw std::invalid_argument("eps must be nonnegative");
}

double energy(const Field& u, double alpha) {
    const Field ux = derivative(u, 1);
    const PeriodicGrid& g = u.grid();
    double s = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        s += 0.5 * (ux[i] * ux[i] - alpha * alpha * u[i] * u[i]) - u[i] * std::cos(g.node(i));
    }
    return g.spacing() * s;
}

double energy_fourier(const Field& u, double alpha, double M) {
    if (std::abs(u.mass() - M) > 1e-10 * (1.0 + std::abs(M))) {
        std::ostringstream os;
        os << std::setprecision(17) << "field mass " << u.mass() << " does not match M = " << M;
        throw std::invalid_argument(os.str());
    }
    const auto c = fourier_coeffs(u);
    const int k = u.size() / 2;
    const double a2 = alpha * alpha;
    double s = 0.0;
    for (int p = 1; p < k; ++p) s += (static_cast<double>(p) * p - a2) * std::norm(c[p]);
    const double nyq = c[k].real();
    return kTwoPi * s - a2 * kPi * nyq * nyq - a2 * M * M / (4.0 * kPi) - kTwoPi * c[1].real();
}

double default_dissipation_threshold(const Field& u) { return 1e-7 * u.max(); }

double dissipation(const Field& u, const Params& params, double delta) {
    const PeriodicGrid& g = u.grid();
    const int n = g.size();
    const double a2 = params.alpha * params.alpha;
    auto integrand = [&](int i, double ux, double uxxx) {
        const double r = uxxx + a2 * ux - std::sin(g.node(i));
        return std::pow(std::max(u[i], 0.0), params.n) * r * r;
    };

    int first_dry = -1;
    for (int i = 0; i < n && first_dry < 0; ++i) {
        if (u[i] <= delta) first_dry = i;
    }

    double s = 0.0;
    if (first_dry < 0) {
        const Field ux = derivative(u, 1);
        const Field uxxx = derivative(u, 3);
        for (int i = 0; i < n; ++i) s += integrand(i, ux[i], uxxx[i]);
        return g.spacing() * s;
    }

    static thread_local int cached_n = 0;
    static thread_local Weights w1{}, w3{};
    if (cached_n != n) {
        w1 = stencil_weights(1, g.spacing());
        w3 = stencil_weights(3, g.spacing());
        cached_n = n;
    }

    std::vector<int> run;
    auto flush = [&]() {
        const int len = static_cast<int>(run.size());
        if (len >= kStencil) {
            for (int k = kDryBuffer; k < len - kDryBuffer; ++k) {
                const int start = std::clamp(k - kStencil / 2, 0, len - kStencil);
                const int pos = k - start;
                double ux = 0.0, uxxx = 0.0;
                for (int j = 0; j < kStencil; ++j) {
                    const double v = u[run[start + j]];
                    ux += w1[pos][j] * v;
                    uxxx += w3[pos][j] * v;
                }
                s += integrand(run[k], ux, uxxx);
            }
        }
        run.clear();
    };
    for (int step = 1; step <= n; ++step) {
        const int i = g.wrap(first_dry + step);
        if (u[i] <= delta) {
            flush();
        } else {
            run.push_back(i);
        }
    }
    flush();
    return g.spacing() * s;
}

double dissipation(const Field& u, const Params& params) {
    return dissipation(u, params, default_dissipation_threshold(u));
}

double default_entropy_floor(double beta) {
    return std::max(std::pow(1e-300, 1.0 / beta), std::numeric_limits<double>::min());
}

Entropy entropy(const Field& u, double beta, double floor) {
    if (!(beta > 0.0)) throw std::invalid_argument("entropy exponent beta must be positive");
    if (!(floor > 0.0)) throw std::invalid_argument("entropy floor must be positive");
    Entropy out;
    double s = 0.0;
    for (double v : u.values()) {
        if (v <= floor) out.infinite = true;
        s += std::pow(std::max(v, floor), -beta);
    }
    out.value = u.grid().spacing() * s;
    return out;
}

Entropy entropy(const Field& u, double beta) { return entropy(u, beta, default_entropy_floor(beta)); }

Entropy entropy_bf(const Field& u, double n) {
    if (!(n > 2.0)) return {std::numeric_limits<double>::quiet_NaN(), false};
    return entropy(u, n - 2.0);
}

Entropy entropy_kad(const Field& u, double n) {
    if (!(n > 1.5)) return {std::numeric_limits<double>::quiet_NaN(), false};
    return entropy(u, n - 1.5);
}

double energy_lower_bound(double M, double alpha) {
    const double a2 = alpha * alpha;
    return -a2 * a2 * kPi * M * M / 8.0 - (1.0 + a2 / (4.0 * kPi)) * M;
}

double coercivity_bound(double deltaE, double alpha) {
    if (!(alpha < 1.0)) {
        throw std::domain_error("no explicit coercivity constant for alpha >= 1");
    }
    if (!(deltaE >= 0.0)) throw std::invalid_argument("energy gap must be nonnegative");
    return std::sqrt(2.0 * deltaE / (1.0 - alpha * alpha));
}

double taylor_gap(const Field& v, const SteadyState& ustar) {
    using Rule = boost::math::quadrature::gauss<double, 16>;
    const double a2 = ustar.alpha * ustar.alpha;
    const TrigInterpolant vt(v);
    const double h = v.grid().spacing();

    const double int_v2 = vt.integral_sq();
    const double int_vx2 = vt.integral_slope_sq();
    const double q_v = 0.5 * (int_vx2 - a2 * int_v2);
    const double e_v = q_v - vt.integral_cos();

    double q_star = 0.0;
    double cross = 0.0;
    double linear = 0.0;
    double wet_cos = 0.0;
    const auto& xs = Rule::abscissa();
    const auto& ws = Rule::weights();
    for (const SupportPiece& piece : support_pieces(ustar)) {
        const int panels = std::max(1, static_cast<int>(std::ceil((piece.b - piece.a) / h)));
        const double half = 0.5 * (piece.b - piece.a) / panels;
        double int_v = 0.0;
        for (int k = 0; k < panels; ++k) {
            const double mid = piece.a + (2 * k + 1) * half;
            for (std::size_t q = 0; q < xs.size(); ++q) {
                for (double sign : {-1.0, 1.0}) {
                    const double x = mid + sign * half * xs[q];
                    const double w = half * ws[q];
                    double val, slope;
                    vt.eval(x, val, slope);
                    const double us = ustar.value(x);
                    const double usx = ustar.slope(x);
                    q_star += w * 0.5 * (usx * usx - a2 * us * us);
                    cross += w * (slope * usx - a2 * val * us);
                    int_v += w * val;
                    wet_cos += w * val * std::cos(x);
                }
            }
        }
        linear -= piece.lambda * (int_v - piece.mass);
    }
    linear -= vt.integral_cos() - wet_cos;
    const double q_w = q_v + q_star - cross;
    return std::abs(e_v - ustar.energy - linear - q_w);
}

double quadratic_energy_gap(const Field& u, const Field& ref, double alpha) {
    const auto c = fourier_coeffs(u - ref);
    const int k = u.size() / 2;
    double s = 0.0;
    for (int p = 1; p < k; ++p) s += (static_cast<double>(p) * p - alpha * alpha) * std::norm(c[p]);
    return kTwoPi * s;
}

DiagnosticsSample diagnose(double t, const Field& u, const Params& params, const Field& reference) {
    DiagnosticsSample d;
    d.t = t;
    d.E = energy(u, params.alpha);
    d.D = dissipation(u, params);
    d.mass = u.mass();
    const double inf = std::numeric_limits<double>::infinity();
    const Entropy bf = entropy_bf(u, params.n);
    const Entropy kad = entropy_kad(u, params.n);
    d.S_bf = bf.infinite ? inf : bf.value;
    d.S_kad = kad.infinite ? inf : kad.value;
    d.dH1 = h1_seminorm_distance(u, reference);
    d.dL2 = l2_distance(u, reference);
    d.dLinf = linf_distance(u, reference);
    return d;
}

void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsSample>& rows) {
    os << "t,E,D,mass,S_bf,S_kad,dH1,dL2,dLinf\n" << std::setprecision(17);
    for (const auto& r : rows) {
        os << r.t << ',' << r.E << ',' << r.D << ',' << r.mass << ',' << r.S_bf << ',' << r.S_kad
           << ',' << r.dH1 << ',' << r.dL2 << ',' << r.dLinf << '\n';
    }
}

void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<DiagnosticsSample>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_diagnostics_csv(os, rows);
}

std::vector<DiagnosticsSample> read_diagnostics_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("t,E,D,mass,S_bf,S_kad,dH1,dL2,dLinf", 0) != 0) {
        throw std::runtime_error("diagnostics CSV has an unexpected header");
    }
    std::vector<DiagnosticsSample> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 9) throw std::runtime_error("malformed diagnostics row: " + line);
        double v[9];
        for (int i = 0; i < 9; ++i) v[i] = std::stod(cells[i]);
        rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]});
    }
    return rows;
}

std::vector<DiagnosticsSample> read_diagnostics_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_diagnostics_csv(is);
}

}  // namespace thinfilm

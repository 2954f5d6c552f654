#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "thinfilm/functionals.hpp"

using namespace thinfilm;

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integral(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50);
}

// Strictly positive field exp(trig polynomial) rescaled to mass M.
Field random_positive(const PeriodicGrid& g, std::mt19937& rng, double M, int modes = 6) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<double> a(modes + 1), b(modes + 1);
    for (int k = 1; k <= modes; ++k) {
        a[k] = U(rng) / k;
        b[k] = U(rng) / k;
    }
    const Field raw = Field::sample(g, [&](double x) {
        double s = 0.0;
        for (int k = 1; k <= modes; ++k) s += a[k] * std::cos(k * x) + b[k] * std::sin(k * x);
        return std::exp(s);
    });
    return (M / raw.mass()) * raw;
}

}  // namespace

TEST_CASE("energy closed forms") {
    const PeriodicGrid g(64);
    for (double alpha : {0.5, 1.0, 2.0}) {
        for (double c : {0.3, 1.0, 4.0}) {
            CHECK(energy(Field::constant(g, c), alpha) ==
                  doctest::Approx(-alpha * alpha * kPi * c * c).epsilon(1e-13));
        }
    }
    const Field u = Field::sample(g, [](double x) { return 1.0 + std::cos(x); });
    CHECK(energy(u, 1.0) == doctest::Approx(-2.0 * kPi).epsilon(1e-13));

    const double M = 5.0;
    const Field c = Field::constant(g, M / kTwoPi);
    CHECK(energy_fourier(c, 0.7, M) == doctest::Approx(-0.49 * M * M / (4.0 * kPi)).epsilon(1e-13));
    const Field w = Field::sample(g, [&](double x) { return M / kTwoPi + std::cos(x); });
    CHECK(energy_fourier(w, 1.0, M) == doctest::Approx(-M * M / (4.0 * kPi) - kPi).epsilon(1e-13));
    CHECK_THROWS_AS(energy_fourier(w, 1.0, M + 1e-6), std::invalid_argument);
}

TEST_CASE("nodal and Fourier energies agree on random fields") {
    std::mt19937 rng(1);
    const PeriodicGrid g(256);
    for (int k = 0; k < 50; ++k) {
        const double alpha = 0.25 + 0.05 * k;
        const Field u = random_positive(g, rng, 1.0 + 0.2 * k);
        const double e = energy(u, alpha);
        CHECK(energy_fourier(u, alpha, u.mass()) == doctest::Approx(e).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("energy lower bound holds on random nonnegative fields") {
    CHECK(energy_lower_bound(0.0, 1.3) == 0.0);
    CHECK(std::abs(energy_lower_bound(1e-12, 1.3)) < 1e-11);
    CHECK(energy_lower_bound(kTwoPi, 1.0) ==
          doctest::Approx(-kPi * kPi * kPi / 2.0 - kTwoPi - 0.5).epsilon(1e-14));
    CHECK(energy_lower_bound(2.0, 1.0) ==
          doctest::Approx(-kPi * 4.0 / 8.0 - (1.0 + 1.0 / (4.0 * kPi)) * 2.0).epsilon(1e-15));
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> U(0.1, 30.0), A(0.2, 2.5);
    const PeriodicGrid g(256);
    int held = 0;
    for (int k = 0; k < 100; ++k) {
        const double M = U(rng), alpha = A(rng);
        const Field u = random_positive(g, rng, M, 10);
        held += energy(u, alpha) >= energy_lower_bound(M, alpha);
    }
    CHECK(held == 100);
}

TEST_CASE("energy is convex along equal-mass segments when alpha < 1") {
    std::mt19937 rng(4);
    const PeriodicGrid g(128);
    for (double alpha : {0.3, 0.6, 0.95}) {
        for (int k = 0; k < 10; ++k) {
            const Field u = random_positive(g, rng, 3.0);
            const Field v = random_positive(g, rng, 3.0);
            const Field mid = 0.5 * (u + v);
            CHECK(energy(mid, alpha) <= 0.5 * (energy(u, alpha) + energy(v, alpha)) + 1e-12);
        }
    }
}

TEST_CASE("minimizers beat random competitors of the same mass") {
    std::mt19937 rng(6);
    const PeriodicGrid g(512);
    for (auto [alpha, M] : {std::pair{1.0, kTwoPi}, std::pair{0.5, 20.0}, std::pair{1.4142, 3.0}}) {
        const SteadyState s = minimizer(alpha, M);
        for (int k = 0; k < 20; ++k) {
            CHECK(s.energy < energy(random_positive(g, rng, M), alpha));
        }
    }
}

TEST_CASE("entropy") {
    const PeriodicGrid g(64);
    const Entropy one = entropy(Field::constant(g, 1.0), 1.5);
    CHECK_FALSE(one.infinite);
    CHECK(one.value == doctest::Approx(kTwoPi).epsilon(1e-14));
    CHECK(entropy(Field::constant(g, 4.0), 1.5).value == doctest::Approx(kPi / 4.0).epsilon(1e-14));
    CHECK(entropy_kad(Field::constant(g, 4.0), 3.0).value == doctest::Approx(kPi / 4.0).epsilon(1e-14));
    CHECK(entropy_bf(Field::constant(g, 4.0), 3.0).value == doctest::Approx(kPi / 2.0).epsilon(1e-14));
    CHECK(std::isnan(entropy_bf(Field::constant(g, 1.0), 2.0).value));
    CHECK(std::isnan(entropy_kad(Field::constant(g, 1.0), 1.5).value));
    CHECK_THROWS(entropy(Field::constant(g, 1.0), 0.0));

    const Field dry = evaluate(minimizer(1.0, kTwoPi), g);
    CHECK(entropy_kad(dry, 3.0).infinite);
    CHECK(default_entropy_floor(1.5) > 0.0);

    std::mt19937 rng(8);
    std::uniform_real_distribution<double> U(0.0, 0.5);
    for (int k = 0; k < 10; ++k) {
        const Field u = random_positive(g, rng, 4.0);
        const Field v = Field::sample(g, [&](double) { return U(rng); }) + u;
        CHECK(entropy(u, 1.5).value >= entropy(v, 1.5).value);
    }
}

TEST_CASE("dissipation of smooth positive fields (spectral path)") {
    const PeriodicGrid g(256);
    for (double c : {0.5, 1.0, 2.0}) {
        const Params p{3.0, 1.0, kTwoPi * c, 0.0};
        CHECK(dissipation(Field::constant(g, c), p) == doctest::Approx(c * c * c * kPi).epsilon(1e-12));
    }
    // u = 2 + cos x leaves residual -alpha^2 sin x.
    for (double alpha : {0.5, 1.3}) {
        const Params p{2.5, alpha, 4.0 * kPi, 0.0};
        const Field u = Field::sample(g, [](double x) { return 2.0 + std::cos(x); });
        const double a4 = std::pow(alpha, 4);
        const double oracle = integral(
            [&](double x) { return std::pow(2.0 + std::cos(x), 2.5) * a4 * std::sin(x) * std::sin(x); },
            -kPi, kPi);
        CHECK(dissipation(u, p) == doctest::Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("dissipation with a dry set (finite-difference path)") {
    // u = (cos x - cos a)^3 on |x| < a, zero elsewhere.
    const double a = 2.0, ca = std::cos(a), alpha = 0.8, n = 2.0;
    auto prof = [&](double x) {
        const double c = std::cos(x) - ca;
        return std::abs(x) < a ? c * c * c : 0.0;
    };
    auto integrand = [&](double x) {
        const double c = std::cos(x) - ca, s = std::sin(x);
        const double u1 = -3.0 * c * c * s;
        const double u3 = -6.0 * s * s * s + 18.0 * c * s * std::cos(x) + 3.0 * c * c * s;
        const double r = u3 + alpha * alpha * u1 - s;
        return std::pow(c * c * c, n) * r * r;
    };
    const double oracle = integral(integrand, -a, a);
    const PeriodicGrid g(1024);
    const Field u = Field::sample(g, prof);
    const Params p{n, alpha, u.mass(), 0.0};
    CHECK(dissipation(u, p) == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("steady states do not dissipate") {
    const PeriodicGrid g(1024);
    CHECK(dissipation(evaluate(minimizer(1.0, kTwoPi), g), Params{3.0, 1.0, kTwoPi, 0.0}, 1e-6) <= 1e-6);
    CHECK(dissipation(evaluate(minimizer(0.5, 20.0), g), Params{3.0, 0.5, 20.0, 0.0}) <= 1e-8);
    const DropletProfile sit = sitting_drop(std::sqrt(2.0), 1.0);
    CHECK(dissipation(evaluate(sit, g), Params{3.0, std::sqrt(2.0), sit.mass, 0.0}) <= 1e-6);
    for (double alpha : {std::sqrt(2.0), 2.5}) {
        for (const auto& s : catalog(alpha, 8.0)) {
            const Params p{3.0, alpha, 8.0, 0.0};
            CHECK(dissipation(evaluate(s, g), p) <= 1e-6);
        }
    }
}

TEST_CASE("coercivity bound") {
    CHECK(coercivity_bound(0.0, 0.5) == 0.0);
    CHECK(coercivity_bound(0.375, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(coercivity_bound(1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(coercivity_bound(1.0, 1.2), std::domain_error);

    const double alpha = 0.5, M = 20.0;
    const SteadyState film = minimizer(alpha, M);
    const PeriodicGrid g(256);
    const Field ref = evaluate(film, g);
    std::mt19937 rng(12);
    for (int k = 0; k < 20; ++k) {
        const Field v = random_positive(g, rng, M);
        const double dE = quadratic_energy_gap(v, ref, alpha);
        CHECK(dE >= 0.0);
        CHECK(dE == doctest::Approx(energy(v, alpha) - film.energy).epsilon(1e-9).scale(1.0));
        CHECK(h1_seminorm_distance(v, ref) <= coercivity_bound(dE, alpha) * (1.0 + 1e-12));
    }
}

TEST_CASE("second-order expansion about steady states is exact") {
    const PeriodicGrid g(512);
    std::mt19937 rng(13);
    for (auto [alpha, M] : {std::pair{1.0, kTwoPi}, std::pair{0.5, 20.0}, std::pair{std::sqrt(2.0), 10.0}}) {
        for (const auto& s : catalog(alpha, M)) {
            CHECK(taylor_gap(evaluate(s, g), s) <= 1e-9 * (1.0 + std::abs(s.energy)));
            for (int k = 0; k < 5; ++k) {
                CHECK(taylor_gap(random_positive(g, rng, M), s) <= 1e-8 * (1.0 + std::abs(s.energy)));
            }
        }
    }
}

TEST_CASE("diagnostics CSV round trip") {
    const PeriodicGrid g(64);
    const Field ref = evaluate(minimizer(1.0, kTwoPi), g);
    const Params p{3.0, 1.0, kTwoPi, 0.0};
    std::vector<DiagnosticsSample> rows{diagnose(0.0, Field::constant(g, 1.0), p, ref),
                                        diagnose(1.5, ref, p, ref)};
    CHECK(std::isinf(rows[1].S_kad));
    CHECK(rows[1].dH1 == 0.0);
    std::stringstream ss;
    write_diagnostics_csv(ss, rows);
    const auto back = read_diagnostics_csv(ss);
    REQUIRE(back.size() == 2u);
    CHECK(back[0].E == rows[0].E);
    CHECK(back[0].S_kad == rows[0].S_kad);
    CHECK(back[1].t == 1.5);
    CHECK(std::isinf(back[1].S_kad));
}

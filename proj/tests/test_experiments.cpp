#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "thinfilm/experiments.hpp"

using namespace thinfilm;
namespace fs = std::filesystem;

namespace {

const char* kBaseConfig = R"(# small run
N = 64
n = 3
alpha = 1
eps = auto
dt0 = 1e-4
dt_min = 1e-12
dt_max = 0.05
t_end = 1
newton_tol = 1e-11
newton_max = 25
log_times = 0, 0.1, 1
init = constant:1
)";

std::string without_key(const std::string& text, const std::string& key) {
    std::istringstream is(text);
    std::string line, out;
    while (std::getline(is, line)) {
        if (line.rfind(key + " ", 0) == 0) continue;
        out += line + '\n';
    }
    return out;
}

std::string error_of(const std::string& text) {
    std::istringstream is(text);
    try {
        parse_config(is);
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("thinfilm_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int cli(const std::string& args) {
    const std::string cmd = std::string(THINFILM_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
    std::istringstream is(kBaseConfig);
    const RunConfig c = parse_config(is);
    CHECK(c.scheme.N == 64);
    CHECK(c.params.n == 3.0);
    CHECK(c.eps_auto);
    CHECK(c.scheme.log_times.size() == 3u);
    CHECK(c.scheme.log_times[1] == 0.1);
    CHECK(c.init.kind == InitSpec::Kind::Constant);
    CHECK(c.scheme.mobility == Mobility::Arithmetic);

    for (const char* key : {"N", "alpha", "eps", "dt_max", "newton_max", "log_times", "init"}) {
        const std::string msg = error_of(without_key(kBaseConfig, key));
        CHECK(msg.find("missing required key `" + std::string(key) + "`") != std::string::npos);
    }
    CHECK(error_of(std::string(kBaseConfig) + "colour = red\n").find("unknown key `colour`") != std::string::npos);
    CHECK(error_of(std::string(kBaseConfig) + "mobility = median\n").find("mobility") != std::string::npos);
    CHECK(error_of(without_key(kBaseConfig, "init") + "init = sawtooth\n").find("init") != std::string::npos);
    CHECK(error_of(without_key(kBaseConfig, "init") + "init = minimizer\n").find("mass") != std::string::npos);
    CHECK(error_of(without_key(kBaseConfig, "N") + "N = 64.5\n").find("integer") != std::string::npos);

    std::istringstream extra(without_key(kBaseConfig, "init") +
                             "init = cosine:3:1\nmobility = harmonic\nstop_gap = 1e-9\n");
    RunConfig e = parse_config(extra);
    CHECK(e.scheme.mobility == Mobility::Harmonic);
    CHECK(e.scheme.stop_gap == 1e-9);
    const Field u = make_initial_field(e);
    CHECK(u.max() == doctest::Approx(4.0));
    CHECK(e.params.M == doctest::Approx(6.0 * kPi));
    CHECK(e.params.eps == doctest::Approx(1e-8 * 27.0));
}

TEST_CASE("mass map") {
    const auto one = massmap(1.0);
    REQUIRE(one.size() == 200u);
    for (std::size_t k = 1; k < one.size(); ++k) CHECK(one[k].second > one[k - 1].second);
    CHECK(one.back().second > 1e3);
    CHECK(one.front().first == doctest::Approx(1e-3));

    const auto two = massmap(2.0);
    CHECK(two.back().first <= kPi / 2);
    CHECK(two.back().first == doctest::Approx(kPi / 2 - 1e-3));

    const auto half = massmap(0.5);
    CHECK(half.back().second == doctest::Approx(8.0 * kPi / 3.0).epsilon(0.01));
    CHECK(half.back().second < 8.0 * kPi / 3.0);

    std::ostringstream os;
    write_massmap_csv(os, massmap(1.0, 3));
    CHECK(os.str().rfind("tau,M\n", 0) == 0);
}

TEST_CASE("catalog sweep and saddle onset") {
    const auto rows = catalog_sweep(1.0, 1.0, 12.0, 12);
    CHECK(rows.size() == 12u);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        CHECK(rows[k].is_minimizer);
        CHECK(rows[k].kind == SteadyKind::HangingDrop);
        if (k > 0) CHECK(rows[k].energy < rows[k - 1].energy);
    }
    CHECK(std::isnan(saddle_onset(1.0, 1.0, 12.0)));
    CHECK(std::isnan(energy_threshold_proxy(1.0, 5.0)));

    const double onset = saddle_onset(std::sqrt(2.0), 1.0, 12.0);
    CHECK(onset == doctest::Approx(kTwoPi).epsilon(1e-6));
    CHECK(energy_threshold_proxy(std::sqrt(2.0), 10.0) > minimizer(std::sqrt(2.0), 10.0).energy);

    std::ostringstream os;
    write_catalog_csv(os, catalog_sweep(std::sqrt(2.0), 10.0, 10.0, 1));
    const std::string csv = os.str();
    CHECK(csv.rfind("kind,tau1,tau2,mass1,mass2,lambda1,lambda2,energy,is_minimizer\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') >= 3);
}

TEST_CASE("evolve output round trip") {
    const fs::path dir = scratch("evolve");
    std::ofstream(dir / "run.cfg") << kBaseConfig;
    const TrajectoryRecord rec = evolve(dir / "run.cfg", dir / "out");
    for (const char* f : {"snapshots.csv", "snapshot_0.csv", "snapshot_2.csv", "reference.csv",
                          "diagnostics.csv", "scheme.csv", "profiles.dat", "run.json"}) {
        CHECK(fs::exists(dir / "out" / f));
    }
    CHECK(rec.snapshots.size() == 3u);
    CHECK(slurp(dir / "out" / "run.json").find("\"stopped_on_gap\": false") != std::string::npos);

    // Recomputing diagnostics from the stored snapshots reproduces the stored rows.
    const TrajectoryData traj = load_trajectory(dir / "out");
    const Field ref = read_field_csv(dir / "out" / "reference.csv");
    for (int k = 0; k < 3; ++k) {
        const Field u = read_field_csv(dir / "out" / ("snapshot_" + std::to_string(k) + ".csv"));
        const double t = rec.snapshots[k].first;
        const DiagnosticsSample* stored = nullptr;
        for (const auto& s : traj.samples) {
            if (s.t == t) stored = &s;
        }
        REQUIRE(stored != nullptr);
        const DiagnosticsSample again = diagnose(t, u, traj.params, ref);
        CHECK(again.E == doctest::Approx(stored->E).epsilon(1e-12));
        CHECK(again.D == doctest::Approx(stored->D).epsilon(1e-12));
        CHECK(again.mass == doctest::Approx(stored->mass).epsilon(1e-12));
        CHECK(again.S_kad == doctest::Approx(stored->S_kad).epsilon(1e-12));
        CHECK(again.dH1 == doctest::Approx(stored->dH1).epsilon(1e-12));
        CHECK(again.dLinf == doctest::Approx(stored->dLinf).epsilon(1e-12));
    }

    // A file-initialized run restarts from the last snapshot.
    std::ofstream(dir / "restart.cfg") << without_key(kBaseConfig, "init")
                                       << "init = file:out/snapshot_2.csv\n";
    const RunConfig rc = parse_config(dir / "restart.cfg");
    CHECK(rc.init.path == dir / "out" / "snapshot_2.csv");
    const TrajectoryRecord again = evolve(rc, dir / "restart");
    CHECK(again.samples.front().E == doctest::Approx(rec.samples.back().E).epsilon(1e-12));
}

TEST_CASE("rate reports refuse inapplicable runs") {
    const fs::path dir = scratch("rates");
    std::ofstream(dir / "film.cfg") << without_key(without_key(without_key(kBaseConfig, "alpha"), "init"), "eps")
                                    << "alpha = 0.5\neps = 0\ninit = constant:3.2\n";
    evolve(dir / "film.cfg", dir / "film");
    const TrajectoryData film = load_trajectory(dir / "film");
    CHECK_THROWS_AS(rates_powerlaw(film), WrongMode);
    const RateReport ok = rates_exponential(film);
    CHECK(ok.mu == doctest::Approx(0.75 * std::pow(3.2 - 1.0 / 0.75, 3.0)).epsilon(1e-6));

    std::ofstream(dir / "drop.cfg") << kBaseConfig;
    evolve(dir / "drop.cfg", dir / "drop");
    const TrajectoryData drop = load_trajectory(dir / "drop");
    CHECK_THROWS_AS(rates_exponential(drop), WrongMode);
    const RateReport pl = rates_powerlaw(drop);
    CHECK(pl.S0 == doctest::Approx(kTwoPi).epsilon(1e-12));
    CHECK(pl.contact_gap > 0.0);
    CHECK(pl.lower_bound_series.size() == drop.samples.size());

    std::ostringstream os;
    write_rate_report_json(os, pl);
    CHECK(os.str().find("\"violations\"") != std::string::npos);
}

TEST_CASE("touchdown films use the exponent floor") {
    const fs::path dir = scratch("touchdown");
    std::ofstream(dir / "td.cfg") << without_key(without_key(without_key(without_key(kBaseConfig, "alpha"), "init"),
                                                             "t_end"),
                                                 "log_times")
                                  << "alpha = 0.5\ninit = cosine:1.3333333333333333:0.5\nt_end = 100\n"
                                     "log_times = 0, 100\n";
    evolve(dir / "td.cfg", dir / "out");
    const TrajectoryData traj = load_trajectory(dir / "out");
    CHECK(touches_down(minimizer(0.5, traj.params.M)));
    CHECK_THROWS_AS(rates_exponential(traj), WrongMode);
    const RateReport r = rates_powerlaw(traj);
    CHECK(r.touchdown);
    CHECK(r.exponent_floor == doctest::Approx(-1.0));
    CHECK(r.lower_bound_series.empty());
    CHECK(r.window_samples >= 8);
    CHECK(r.fitted_exponent < 0.0);
    CHECK(r.passed == (r.fitted_exponent >= -1.0));
}

TEST_CASE("a minimizer start keeps flat diagnostics") {
    const fs::path dir = scratch("flat");
    std::ofstream(dir / "m.cfg") << without_key(without_key(without_key(without_key(kBaseConfig, "init"), "eps"),
                                                            "t_end"),
                                                "N")
                                 << "N = 512\neps = 1e-14\ninit = minimizer\nmass = 6.283185307179586\nt_end = 10\n"
                                    "log_times = 0, 10\n";
    RunConfig cfg = parse_config(dir / "m.cfg");
    cfg.scheme.log_times = {0.0, 10.0};
    const TrajectoryRecord rec = evolve(cfg, dir / "out");
    double drift = 0.0;
    for (const auto& s : rec.samples) drift = std::max(drift, std::abs(s.E - rec.samples.front().E));
    CHECK(drift <= 1e-8);
}

TEST_CASE("fit_slope recovers a line") {
    std::vector<double> x{0, 1, 2, 3, 4}, y;
    for (double v : x) y.push_back(2.5 * v - 1.0);
    CHECK(fit_slope(x, y) == doctest::Approx(2.5));
}

TEST_CASE("command-line exit codes") {
    const fs::path dir = scratch("cli");
    CHECK(cli("massmap --alpha 1 --samples 50 --out " + (dir / "m.csv").string()) == 0);
    CHECK(slurp(dir / "m.csv").rfind("tau,M\n", 0) == 0);
    CHECK(cli("catalog --alpha 1.4142135623730951 --mass-min 1 --mass-max 12 --count 5 --out " +
              (dir / "c.csv").string()) == 0);
    CHECK(cli("steady --alpha 1 --mass 6.283185307179586 --N 128 --out " + (dir / "s.csv").string()) == 0);
    CHECK(read_field_csv(dir / "s.csv").size() == 128);

    CHECK(cli("") == 1);
    CHECK(cli("massmap") == 1);
    CHECK(cli("frobnicate --alpha 1") == 1);
    CHECK(cli("rates --traj " + dir.string() + " --mode sideways") == 1);

    std::ofstream(dir / "bad.cfg") << without_key(kBaseConfig, "dt0");
    const std::string cmd = std::string(THINFILM_CLI) + " evolve --config " + (dir / "bad.cfg").string() +
                            " --outdir " + (dir / "bad").string() + " 2>" + (dir / "err.txt").string();
    const int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == 1);
    CHECK(slurp(dir / "err.txt").find("`dt0`") != std::string::npos);

    std::ofstream(dir / "good.cfg") << kBaseConfig;
    CHECK(cli("evolve --config " + (dir / "good.cfg").string() + " --outdir " + (dir / "run").string()) == 0);
    CHECK(cli("rates --traj " + (dir / "run").string() + " --mode exponential") == 1);
    const int pl = cli("rates --traj " + (dir / "run").string() + " --mode powerlaw --out " +
                       (dir / "r.json").string());
    CHECK((pl == 0 || pl == 2));
    CHECK(fs::exists(dir / "r.json"));
}

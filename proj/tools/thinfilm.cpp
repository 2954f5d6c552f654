// Command-line front end: mass map, steady-state catalog, single steady
// state, evolution runs and convergence-rate reports.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <string>

#include "thinfilm/experiments.hpp"

namespace {

using namespace thinfilm;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInvariant = 2;

// Writes to the named file, or to stdout for "-".
class Output {
public:
    explicit Output(const std::string& path) {
        if (path != "-") {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw std::runtime_error("cannot open " + path + " for writing");
        }
        stream().precision(17);
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

int cmd_massmap(double alpha, int samples, const std::string& out) {
    const auto rows = massmap(alpha, samples);
    Output o(out);
    write_massmap_csv(o.stream(), rows);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (!(rows[i].first > rows[i - 1].first && rows[i].second > rows[i - 1].second)) {
            std::cerr << "massmap: mass is not strictly increasing at tau = " << rows[i].first << '\n';
            return kExitInvariant;
        }
    }
    return kExitOk;
}

int cmd_catalog(double alpha, double mass_min, double mass_max, int count, int splits,
                const std::string& out) {
    const auto rows = catalog_sweep(alpha, mass_min, mass_max, count, splits);
    Output o(out);
    write_catalog_csv(o.stream(), rows);
    std::cout << std::setprecision(17) << "saddle_onset," << saddle_onset(alpha, mass_min, mass_max)
              << '\n';
    int status = kExitOk;
    for (const auto& r : rows) {
        if (r.is_minimizer) continue;
        for (const auto& m : rows) {
            if (m.is_minimizer && m.M == r.M && !(m.energy < r.energy)) {
                std::cerr << "catalog: minimizer is not the lowest state at M = " << r.M << '\n';
                status = kExitInvariant;
            }
        }
    }
    return status;
}

int cmd_steady(double alpha, double mass, int n, const std::string& out) {
    const SteadyState s = minimizer(alpha, mass);
    const PeriodicGrid grid(n);
    Output o(out);
    write_field_csv(o.stream(), evaluate(s, grid));
    const double residual = el_residual(s, grid);
    std::ostream& info = out == "-" ? std::cerr : std::cout;
    info << std::setprecision(17) << "kind," << to_string(s.kind) << "\nenergy," << s.energy
         << "\nlambda," << s.lambda_at(0.0) << "\nel_residual," << residual << '\n';
    if (const auto* d = std::get_if<DropletProfile>(&s.components.front())) {
        info << "tau," << d->tau << '\n';
    }
    return residual <= 1e-10 ? kExitOk : kExitInvariant;
}

int cmd_evolve(const std::string& config, const std::string& outdir) {
    const TrajectoryRecord rec = evolve(std::filesystem::path(config), std::filesystem::path(outdir));
    const double m0 = rec.samples.front().mass;
    int status = kExitOk;
    for (const auto& s : rec.samples) {
        if (std::abs(s.mass - m0) > 1e-11 * m0) {
            std::cerr << "evolve: mass drift at t = " << s.t << '\n';
            status = kExitInvariant;
            break;
        }
    }
    for (std::size_t i = 1; i < rec.steps.size(); ++i) {
        const double e0 = rec.steps[i - 1].E_h;
        if (rec.steps[i].E_h > e0 + rec.config.energy_slack * (1.0 + std::abs(e0))) {
            std::cerr << "evolve: energy increase at t = " << rec.steps[i].t << '\n';
            status = kExitInvariant;
            break;
        }
    }
    std::cout << std::setprecision(17) << "steps," << rec.steps.size() - 1 << "\nt_final,"
              << rec.samples.back().t << "\nsnapshots," << rec.snapshots.size() << '\n';
    return status;
}

int cmd_rates(const std::string& traj, const std::string& mode, const std::string& out) {
    const RateMode m = mode == "powerlaw" ? RateMode::PowerLaw : RateMode::Exponential;
    const RateReport report = rates(load_trajectory(traj), m);
    Output o(out);
    write_rate_report_json(o.stream(), report);
    if (!report.passed) {
        std::cerr << "rates: " << mode << " check failed\n";
        return kExitInvariant;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thin-film flow on a rotating cylinder: steady states and evolution"};
    app.require_subcommand(1);

    double alpha = 1.0;
    std::string out = "-";

    auto* massmap_cmd = app.add_subcommand("massmap", "Mass versus contact point of hanging drops");
    int samples = 200;
    massmap_cmd->add_option("--alpha", alpha, "geometric constant")->required();
    massmap_cmd->add_option("--samples", samples, "number of tau samples")->check(CLI::Range(2, 1000000));
    massmap_cmd->add_option("--out", out, "output CSV ('-' for stdout)");

    auto* catalog_cmd = app.add_subcommand("catalog", "Steady-state catalog over a mass range");
    double mass_min = 1.0, mass_max = 12.0;
    int count = 23, splits = kDefaultTwoDropletSplits;
    catalog_cmd->add_option("--alpha", alpha, "geometric constant")->required();
    catalog_cmd->add_option("--mass-min", mass_min, "smallest mass")->required();
    catalog_cmd->add_option("--mass-max", mass_max, "largest mass")->required();
    catalog_cmd->add_option("--count", count, "number of masses")->check(CLI::Range(1, 100000));
    catalog_cmd->add_option("--splits", splits, "two-droplet mass splits")->check(CLI::Range(0, 1000));
    catalog_cmd->add_option("--out", out, "output CSV ('-' for stdout)");

    auto* steady_cmd = app.add_subcommand("steady", "Energy minimizer sampled on a grid");
    double mass = 1.0;
    int n = 256;
    steady_cmd->add_option("--alpha", alpha, "geometric constant")->required();
    steady_cmd->add_option("--mass", mass, "mass")->required();
    steady_cmd->add_option("--N", n, "grid size");
    steady_cmd->add_option("--out", out, "output CSV ('-' for stdout)");

    auto* evolve_cmd = app.add_subcommand("evolve", "Run an evolution from a config file");
    std::string config, outdir;
    evolve_cmd->add_option("--config", config, "run configuration")->required();
    evolve_cmd->add_option("--outdir", outdir, "output directory")->required();

    auto* rates_cmd = app.add_subcommand("rates", "Convergence-rate report for an evolve directory");
    std::string traj, mode;
    rates_cmd->add_option("--traj", traj, "evolve output directory")->required();
    rates_cmd->add_option("--mode", mode, "powerlaw or exponential")
        ->required()
        ->check(CLI::IsMember({"powerlaw", "exponential"}));
    rates_cmd->add_option("--out", out, "output JSON ('-' for stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*massmap_cmd) return cmd_massmap(alpha, samples, out);
        if (*catalog_cmd) return cmd_catalog(alpha, mass_min, mass_max, count, splits, out);
        if (*steady_cmd) return cmd_steady(alpha, mass, n, out);
        if (*evolve_cmd) return cmd_evolve(config, outdir);
        if (*rates_cmd) return cmd_rates(traj, mode, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

// Command-line front end: run configured scenarios, emit closed-form law
// curves, reproduce the dimensionless dispersion chart, compare runs against
// laws, and execute batched sweeps.  Exit codes: 0 success / comparison pass,
// 1 comparison failure, 2 configuration error, 3 numerical failure.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "qhd/config.hpp"
#include "qhd/csv.hpp"
#include "qhd/oracles.hpp"
#include "qhd/solver.hpp"
#include "qhd/specfun.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCompareFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string snapshots_path(const std::string& out) {
    const std::string suffix = ".csv";
    if (out.size() > suffix.size() &&
        out.compare(out.size() - suffix.size(), suffix.size(), suffix) == 0)
        return out.substr(0, out.size() - suffix.size()) + ".snapshots.csv";
    return out + ".snapshots.csv";
}

int simulate(const std::string& config, const std::string& out) {
    qhd::Scenario sc = qhd::load_scenario(config);
    std::vector<qhd::TimeSeriesRecord> records = qhd::run(sc);
    qhd::write_timeseries_csv(out, records);
    qhd::write_snapshots_csv(snapshots_path(out), records);
    return kExitOk;
}

struct LawFlags {
    std::string name = "linear_quantum";
    double m = 1.0, hbar = 1.0, theta = 0.0, K = 0.0, b1 = 0.0, b3 = 0.0;

    qhd::oracles::DispersionLaw build() const {
        qhd::oracles::DispersionLaw law;
        if (name == "linear_quantum") law.kind = qhd::oracles::LawKind::linear_quantum;
        else if (name == "classical_cubic_free")
            law.kind = qhd::oracles::LawKind::classical_cubic_free;
        else if (name == "quantum_cubic_free")
            law.kind = qhd::oracles::LawKind::quantum_cubic_free;
        else if (name == "quartic_well") law.kind = qhd::oracles::LawKind::quartic_well;
        else throw std::invalid_argument("unknown law '" + name + "'");
        law.m = m;
        law.hbar = hbar;
        law.theta = theta;
        law.K = K;
        law.b1 = b1;
        law.b3 = b3;
        law.validate();
        return law;
    }

    void attach(CLI::App* cmd) {
        cmd->add_option("--law", name,
                        "linear_quantum | classical_cubic_free | quantum_cubic_free | "
                        "quartic_well");
        cmd->add_option("--m", m, "particle mass");
        cmd->add_option("--hbar", hbar, "Planck constant (reduced)");
        cmd->add_option("--theta", theta, "temperature in energy units");
        cmd->add_option("--K", K, "quartic stiffness");
        cmd->add_option("--b1", b1, "linear friction coefficient");
        cmd->add_option("--b3", b3, "cubic friction coefficient");
    }
};

int oracle(const LawFlags& flags, double t0, double t1, int points,
           const std::string& spacing, const std::string& out) {
    if (points < 2) throw std::invalid_argument("oracle: need at least 2 points");
    if (!(t1 > t0) || t0 < 0.0) throw std::invalid_argument("oracle: bad t range");
    const bool log_spaced = spacing == "log";
    if (!log_spaced && spacing != "linear")
        throw std::invalid_argument("oracle: spacing must be linear or log");
    if (log_spaced && !(t0 > 0.0))
        throw std::invalid_argument("oracle: log spacing needs t0 > 0");

    qhd::oracles::DispersionLaw law = flags.build();
    std::vector<std::pair<double, double>> rows;
    rows.reserve(points);
    for (int i = 0; i < points; ++i) {
        const double f = static_cast<double>(i) / (points - 1);
        const double t = log_spaced ? t0 * std::pow(t1 / t0, f) : t0 + f * (t1 - t0);
        rows.emplace_back(t, law.sigma2(t));
    }
    qhd::write_xy_csv(out, "t,sigma2", rows);
    return kExitOk;
}

int figure1(double K, double theta, double b3, double tau_max, int points,
            const std::string& out, const std::string& svg) {
    if (points < 2) throw std::invalid_argument("figure1: need at least 2 points");
    if (!(tau_max > 0.0)) throw std::invalid_argument("figure1: tau_max must be > 0");
    qhd::specfun::QuarticWellDispersion rel(K, theta, b3);

    // dimensionless axes: tau = (4/3)(K/b3)^{1/3} t, y = sqrt(K/theta) sigma^2
    const double tau_of_t = (4.0 / 3.0) * std::cbrt(K / b3);
    const double y_of_s2 = std::sqrt(K / theta);
    std::vector<std::pair<double, double>> rows;
    rows.reserve(points);
    for (int i = 0; i < points; ++i) {
        const double tau = tau_max * i / (points - 1);
        const double sigma = rel.scale_from_time(tau / tau_of_t);
        rows.emplace_back(tau, y_of_s2 * sigma * sigma);
    }
    qhd::write_xy_csv(out, "tau,y", rows);
    if (!svg.empty())
        qhd::write_svg_polyline(svg, rows, "dimensionless time", "dimensionless dispersion");
    return kExitOk;
}

int compare(const std::string& run_csv, const LawFlags& flags, double tol, double t0,
            double t1) {
    qhd::oracles::DispersionLaw law = flags.build();
    std::vector<qhd::TimeSeriesRecord> records = qhd::read_timeseries_csv(run_csv);
    if (records.empty()) throw std::invalid_argument("compare: run has no records");

    double dev = 0.0;
    int used = 0;
    for (const auto& r : records) {
        if (r.t < t0 || r.t > t1 || r.t <= 0.0) continue;
        const double ref = law.sigma2(r.t);
        if (!(ref > 0.0)) continue;
        dev = std::max(dev, std::abs(r.sigma2 - ref) / ref);
        ++used;
    }
    if (used == 0) throw std::invalid_argument("compare: no records in the t window");

    // regime classification from the run's own local exponents
    qhd::DispersionSeries series;
    for (const auto& r : records)
        if (r.t > 0.0 && r.sigma2 > 0.0 && r.t >= t0 && r.t <= t1)
            series.push_back({r.t, r.sigma2, std::nullopt});
    series = qhd::local_exponent(std::move(series));

    std::ostringstream regimes;
    const char* last = nullptr;
    int count = 0;
    auto flush = [&]() {
        if (last) regimes << last << '(' << count << ") ";
    };
    for (const auto& p : series) {
        if (!p.alpha) continue;
        const char* name = "normal";
        switch (qhd::classify_regime(*p.alpha)) {
            case qhd::Regime::subdiffusive: name = "sub"; break;
            case qhd::Regime::normal: name = "normal"; break;
            case qhd::Regime::superdiffusive: name = "super"; break;
        }
        if (last && std::string(last) == name) {
            ++count;
        } else {
            flush();
            last = name;
            count = 1;
        }
    }
    flush();

    std::printf("max_rel_deviation %.17g over %d records\n", dev, used);
    std::printf("regimes %s\n", regimes.str().empty() ? "(none)" : regimes.str().c_str());
    return dev <= tol ? kExitOk : kExitCompareFail;
}

int sweep(const std::string& manifest, int jobs) {
    std::ifstream in(manifest);
    if (!in) throw std::invalid_argument("sweep: cannot open manifest '" + manifest + "'");
    std::vector<std::pair<std::string, std::string>> tasks;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string cfg, out;
        if (!(ss >> cfg)) continue;
        if (cfg[0] == '#') continue;
        if (!(ss >> out))
            throw std::invalid_argument("sweep: manifest line needs '<config> <out>'");
        tasks.emplace_back(cfg, out);
    }
    if (tasks.empty()) throw std::invalid_argument("sweep: manifest lists no runs");

    if (jobs < 1) jobs = 1;
    jobs = std::min<int>(jobs, static_cast<int>(tasks.size()));

    std::atomic<size_t> next{0};
    std::vector<int> results(tasks.size(), kExitOk);
    std::mutex io;
    auto worker = [&]() {
        for (;;) {
            const size_t k = next.fetch_add(1);
            if (k >= tasks.size()) return;
            int code = kExitOk;
            std::string msg;
            try {
                simulate(tasks[k].first, tasks[k].second);
            } catch (const qhd::NumericalFailure& e) {
                code = kExitNumerical;
                msg = e.what();
            } catch (const std::exception& e) {
                code = kExitConfig;
                msg = e.what();
            }
            results[k] = code;
            std::lock_guard<std::mutex> lock(io);
            if (code == kExitOk)
                std::printf("ok   %s -> %s\n", tasks[k].first.c_str(),
                            tasks[k].second.c_str());
            else
                std::printf("fail %s (%d: %s)\n", tasks[k].first.c_str(), code, msg.c_str());
        }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    int worst = kExitOk;
    for (int r : results) worst = std::max(worst, r);
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"One-dimensional laboratory for dissipative quantum hydrodynamics "
                 "with nonlinear friction"};
    app.require_subcommand(1);

    // simulate
    auto* cmd_sim = app.add_subcommand("simulate", "integrate a configured scenario");
    std::string sim_config, sim_out;
    cmd_sim->add_option("--config", sim_config, "run configuration file")->required();
    cmd_sim->add_option("--out", sim_out, "output CSV path")->required();

    // oracle
    auto* cmd_oracle = app.add_subcommand("oracle", "tabulate a closed-form dispersion law");
    LawFlags oracle_flags;
    oracle_flags.attach(cmd_oracle);
    double or_t0 = 0.0, or_t1 = 10.0;
    int or_points = 100;
    std::string or_spacing = "linear", or_out;
    cmd_oracle->add_option("--t0", or_t0, "first time");
    cmd_oracle->add_option("--t1", or_t1, "last time");
    cmd_oracle->add_option("--points", or_points, "number of rows");
    cmd_oracle->add_option("--spacing", or_spacing, "linear | log");
    cmd_oracle->add_option("--out", or_out, "output CSV path")->required();

    // figure1
    auto* cmd_fig = app.add_subcommand(
        "figure1", "dimensionless quartic-well dispersion curve (tau, y)");
    double fg_K = 1.0, fg_theta = 1.0, fg_b3 = 1.0, fg_tau_max = 2.0;
    int fg_points = 400;
    std::string fg_out, fg_svg;
    cmd_fig->add_option("--K", fg_K, "quartic stiffness");
    cmd_fig->add_option("--theta", fg_theta, "temperature in energy units");
    cmd_fig->add_option("--b3", fg_b3, "cubic friction coefficient");
    cmd_fig->add_option("--tau-max", fg_tau_max, "last dimensionless time");
    cmd_fig->add_option("--points", fg_points, "number of rows");
    cmd_fig->add_option("--out", fg_out, "output CSV path")->required();
    cmd_fig->add_option("--svg", fg_svg, "optional chart file");

    // compare
    auto* cmd_cmp = app.add_subcommand("compare", "check a run CSV against a law");
    LawFlags cmp_flags;
    cmp_flags.attach(cmd_cmp);
    std::string cmp_run;
    double cmp_tol = 0.05, cmp_t0 = 0.0, cmp_t1 = 1e300;
    cmd_cmp->add_option("--run", cmp_run, "run CSV produced by simulate")->required();
    cmd_cmp->add_option("--tol", cmp_tol, "maximum relative sigma^2 deviation");
    cmd_cmp->add_option("--t0", cmp_t0, "window start");
    cmd_cmp->add_option("--t1", cmp_t1, "window end");

    // sweep
    auto* cmd_sweep = app.add_subcommand("sweep", "run a manifest of scenarios");
    std::string sw_manifest;
    int sw_jobs = static_cast<int>(std::thread::hardware_concurrency());
    cmd_sweep->add_option("--manifest", sw_manifest, "lines of '<config> <out>'")->required();
    cmd_sweep->add_option("--jobs", sw_jobs, "parallel workers");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (app.got_subcommand(cmd_sim)) return simulate(sim_config, sim_out);
        if (app.got_subcommand(cmd_oracle))
            return oracle(oracle_flags, or_t0, or_t1, or_points, or_spacing, or_out);
        if (app.got_subcommand(cmd_fig))
            return figure1(fg_K, fg_theta, fg_b3, fg_tau_max, fg_points, fg_out, fg_svg);
        if (app.got_subcommand(cmd_cmp))
            return compare(cmp_run, cmp_flags, cmp_tol, cmp_t0, cmp_t1);
        if (app.got_subcommand(cmd_sweep)) return sweep(sw_manifest, sw_jobs);
    } catch (const qhd::NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}

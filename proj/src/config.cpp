#include "qhd/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qhd/calculus.hpp"
#include "qhd/oracles.hpp"

namespace qhd {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

double to_double(const std::string& section, const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        fail("[" + section + "] " + key + ": not a number: '" + v + "'");
    }
}

int to_int(const std::string& section, const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        fail("[" + section + "] " + key + ": not an integer: '" + v + "'");
    }
}

bool to_bool(const std::string& section, const std::string& key, const std::string& v) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    fail("[" + section + "] " + key + ": not a boolean: '" + v + "'");
}

std::vector<double> to_list(const std::string& section, const std::string& key,
                            const std::string& v) {
    std::vector<double> out;
    std::istringstream ss(v);
    std::string tok;
    while (ss >> tok) out.push_back(to_double(section, key, tok));
    return out;
}

/// Per-section accessor that tracks which keys were consumed so that
/// leftovers can be rejected by name.
class Section {
public:
    Section(const ParsedConfig& cfg, std::string name) : name_(std::move(name)) {
        if (cfg.has(name_)) kv_ = &cfg.at(name_);
    }

    bool present() const { return kv_ != nullptr; }

    const std::string* find(const std::string& key) {
        if (!kv_) return nullptr;
        auto it = kv_->find(key);
        if (it == kv_->end()) return nullptr;
        used_.insert(key);
        return &it->second;
    }

    std::string require(const std::string& key) {
        const std::string* v = find(key);
        if (!v) fail("[" + name_ + "] missing required key '" + key + "'");
        return *v;
    }

    double number(const std::string& key, double fallback) {
        const std::string* v = find(key);
        return v ? to_double(name_, key, *v) : fallback;
    }

    int integer(const std::string& key, int fallback) {
        const std::string* v = find(key);
        return v ? to_int(name_, key, *v) : fallback;
    }

    bool boolean(const std::string& key, bool fallback) {
        const std::string* v = find(key);
        return v ? to_bool(name_, key, *v) : fallback;
    }

    std::string word(const std::string& key, const std::string& fallback) {
        const std::string* v = find(key);
        return v ? *v : fallback;
    }

    void finish() const {
        if (!kv_) return;
        for (const auto& [k, v] : *kv_)
            if (!used_.count(k)) fail("[" + name_ + "] unknown key '" + k + "'");
    }

    const std::string& name() const { return name_; }

private:
    std::string name_;
    const std::map<std::string, std::string>* kv_ = nullptr;
    std::set<std::string> used_;
};

DensityField build_initial(Section& sec, const Grid1D& grid) {
    const std::string profile = sec.require("profile");
    DensityField rho(grid);
    int default_smooth = 0;

    if (profile == "gaussian" || profile == "quartic" || profile == "abs_cubic") {
        const double sigma0 = to_double(sec.name(), "sigma0", sec.require("sigma0"));
        const double center = sec.number("center", 0.0);
        ProfileFamily fam = ProfileFamily::gaussian;
        if (profile == "quartic") fam = ProfileFamily::quartic;
        if (profile == "abs_cubic") {
            fam = ProfileFamily::abs_cubic;
            default_smooth = 3;  // round off the central kink over a few cells
        }
        rho = oracles::sample_profile(fam, sigma0, grid, center);
    } else if (profile == "uniform") {
        const double value = 1.0 / grid.length();
        for (double& v : rho.v) v = value;
    } else if (profile == "mode_sum") {
        if (grid.bc != Bc::periodic)
            fail("[initial] mode_sum requires a periodic grid");
        const double base = sec.number("base", 1.0 / grid.length());
        const std::string spec = sec.require("modes");
        struct Mode {
            int j;
            double amp, phase;
        };
        std::vector<Mode> modes;
        std::istringstream ss(spec);
        std::string tok;
        while (ss >> tok) {
            Mode m{0, 0.0, 0.0};
            const size_t c1 = tok.find(':');
            if (c1 == std::string::npos) fail("[initial] modes entry '" + tok + "' is not j:amp");
            m.j = to_int(sec.name(), "modes", tok.substr(0, c1));
            std::string rest = tok.substr(c1 + 1);
            const size_t c2 = rest.find(':');
            if (c2 == std::string::npos) {
                m.amp = to_double(sec.name(), "modes", rest);
            } else {
                m.amp = to_double(sec.name(), "modes", rest.substr(0, c2));
                m.phase = to_double(sec.name(), "modes", rest.substr(c2 + 1));
            }
            if (m.j < 1 || 2 * m.j >= grid.n) fail("[initial] mode index out of range");
            modes.push_back(m);
        }
        const double two_pi = 6.283185307179586476925286766559;
        for (int i = 0; i < grid.n; ++i) {
            double v = base;
            for (const Mode& m : modes)
                v += m.amp * std::cos(two_pi * m.j * (grid.x(i) - grid.x_min) /
                                          grid.length() +
                                      m.phase);
            rho.v[i] = v;
        }
    } else {
        fail("[initial] unknown profile '" + profile + "'");
    }

    const int smooth = sec.integer("smooth_cells", default_smooth);
    if (smooth < 0) fail("[initial] smooth_cells must be >= 0");
    for (int pass = 0; pass < smooth; ++pass) {
        std::vector<double> next(grid.n);
        for (int i = 0; i < grid.n; ++i) {
            const double l = rho.v[resolve_index(i - 1, grid)];
            const double r = rho.v[resolve_index(i + 1, grid)];
            next[i] = 0.25 * l + 0.5 * rho.v[i] + 0.25 * r;
        }
        rho.v = std::move(next);
    }

    if (rho.min_value() < 0.0) fail("[initial] profile is negative somewhere");
    normalize(rho);
    return rho;
}

}  // namespace

bool ParsedConfig::has(const std::string& section) const {
    for (const auto& [name, kv] : sections)
        if (name == section) return true;
    return false;
}

const std::map<std::string, std::string>& ParsedConfig::at(const std::string& section) const {
    for (const auto& [name, kv] : sections)
        if (name == section) return kv;
    throw std::out_of_range("config: no section [" + section + "]");
}

ParsedConfig parse_config_text(const std::string& text) {
    static const std::set<std::string> known = {"equation", "params", "grid",
                                               "initial",  "time",   "output"};
    ParsedConfig cfg;
    std::map<std::string, std::string>* current = nullptr;

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail("line " + std::to_string(lineno) + ": malformed section header");
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (!known.count(name))
                fail("line " + std::to_string(lineno) + ": unknown section [" + name + "]");
            if (cfg.has(name))
                fail("line " + std::to_string(lineno) + ": duplicate section [" + name + "]");
            cfg.sections.emplace_back(name, std::map<std::string, std::string>{});
            current = &cfg.sections.back().second;
            continue;
        }

        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail("line " + std::to_string(lineno) + ": expected 'key = value'");
        if (!current) fail("line " + std::to_string(lineno) + ": key before any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail("line " + std::to_string(lineno) + ": empty key");
        if (current->count(key))
            fail("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        (*current)[key] = value;
    }
    return cfg;
}

ParsedConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

Scenario scenario_from_config(const ParsedConfig& cfg) {
    Scenario sc;

    Section eq(cfg, "equation");
    if (!eq.present()) fail("missing section [equation]");
    const std::string kind = eq.require("kind");
    if (kind == "general") sc.equation = Equation::general;
    else if (kind == "smoluchowski") sc.equation = Equation::smoluchowski;
    else if (kind == "cubic") sc.equation = Equation::cubic_friction;
    else if (kind == "quantum_cubic_full") sc.equation = Equation::quantum_cubic_full;
    else if (kind == "quantum_cubic_reduced") sc.equation = Equation::quantum_cubic_reduced;
    else if (kind == "reaction_diffusion") sc.equation = Equation::reaction_diffusion;
    else if (kind == "convective") sc.equation = Equation::convective;
    else if (kind == "electron_gas") sc.equation = Equation::electron_gas;
    else fail("[equation] unknown kind '" + kind + "'");
    sc.classical = eq.boolean("classical", false);
    const std::string si = eq.word("semi_implicit", "auto");
    if (si == "auto") sc.semi_implicit = SemiImplicit::automatic;
    else if (si == "on") sc.semi_implicit = SemiImplicit::on;
    else if (si == "off") sc.semi_implicit = SemiImplicit::off;
    else fail("[equation] semi_implicit must be auto/on/off");
    eq.finish();

    Section par(cfg, "params");
    sc.params.m = par.number("m", 1.0);
    sc.params.hbar = par.number("hbar", 1.0);
    sc.params.theta = par.number("theta", 0.0);
    sc.params.K = par.number("K", 0.0);
    sc.params.k_rate = par.number("k_rate", 0.0);
    sc.params.rho_eq = par.number("rho_eq", 0.0);
    sc.params.V0 = par.number("V0", 0.0);
    sc.params.nu = par.number("nu", 1.0);

    const std::string fr = par.word("friction", "linear");
    if (fr == "linear") sc.law.kind = FrictionKind::linear;
    else if (fr == "cubic") sc.law.kind = FrictionKind::cubic;
    else if (fr == "combined") sc.law.kind = FrictionKind::combined;
    else if (fr == "activated") sc.law.kind = FrictionKind::activated;
    else fail("[params] unknown friction '" + fr + "'");
    sc.law.b1 = par.number("b1", 0.0);
    sc.law.b3 = par.number("b3", 0.0);
    sc.law.amplitude = par.number("amplitude", 0.0);
    sc.law.scale = par.number("scale", 0.0);
    if (const std::string* v = par.find("b1_profile"))
        sc.law.b1_profile = to_list("params", "b1_profile", *v);
    if (const std::string* v = par.find("b3_profile"))
        sc.law.b3_profile = to_list("params", "b3_profile", *v);

    const std::string pot = par.word("potential", "none");
    if (pot == "none") sc.potential.kind = PotentialKind::none;
    else if (pot == "quartic") sc.potential.kind = PotentialKind::quartic;
    else if (pot == "tabulated") {
        sc.potential.kind = PotentialKind::tabulated;
        sc.potential.table = to_list("params", "potential_table",
                                     par.require("potential_table"));
    } else fail("[params] unknown potential '" + pot + "'");
    par.finish();

    Section gr(cfg, "grid");
    if (!gr.present()) fail("missing section [grid]");
    const double x_min = to_double("grid", "x_min", gr.require("x_min"));
    const double x_max = to_double("grid", "x_max", gr.require("x_max"));
    const int n = to_int("grid", "n", gr.require("n"));
    const std::string bc = gr.word("bc", "no_flux");
    Bc bcv;
    if (bc == "no_flux") bcv = Bc::no_flux;
    else if (bc == "periodic") bcv = Bc::periodic;
    else fail("[grid] bc must be no_flux or periodic");
    gr.finish();
    Grid1D grid(x_min, x_max, n, bcv);

    Section ini(cfg, "initial");
    if (!ini.present()) fail("missing section [initial]");
    sc.initial = build_initial(ini, grid);
    const std::string prof = ini.word("profile", "gaussian");
    if (prof == "quartic") sc.family = ProfileFamily::quartic;
    else if (prof == "abs_cubic") sc.family = ProfileFamily::abs_cubic;
    else sc.family = ProfileFamily::gaussian;
    ini.finish();

    Section tm(cfg, "time");
    if (!tm.present()) fail("missing section [time]");
    sc.time.t_end = to_double("time", "t_end", tm.require("t_end"));
    const std::string dt = tm.word("dt", "auto");
    sc.time.dt = (dt == "auto") ? 0.0 : to_double("time", "dt", dt);
    sc.time.safety = tm.number("safety", 0.4);
    sc.time.noise_tol = tm.number("noise_tol", 1e-4);
    tm.finish();

    Section outp(cfg, "output");
    sc.output.every = outp.integer("every", 1);
    const std::string snaps = outp.word("snapshots", "none");
    if (snaps == "none") sc.output.snapshots = SnapshotPolicy::none;
    else if (snaps == "final") sc.output.snapshots = SnapshotPolicy::final;
    else if (snaps == "all") sc.output.snapshots = SnapshotPolicy::all;
    else fail("[output] snapshots must be none/final/all");
    outp.finish();

    sc.validate();
    return sc;
}

Scenario load_scenario(const std::string& path) {
    return scenario_from_config(parse_config_file(path));
}

}  // namespace qhd

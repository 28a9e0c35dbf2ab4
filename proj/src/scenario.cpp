#include "capdet/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "capdet/csv.hpp"
#include "capdet/operators.hpp"

namespace capdet {

using nlohmann::json;

namespace {

constexpr double pi = std::numbers::pi;

using Issues = std::vector<ConfigIssue>;

void error(Issues& out, std::string path, std::string msg) {
    out.push_back({ConfigIssue::Severity::error, std::move(path), std::move(msg)});
}
void warning(Issues& out, std::string path, std::string msg) {
    out.push_back({ConfigIssue::Severity::warning, std::move(path), std::move(msg)});
}

bool has_error(const Issues& issues) {
    return std::any_of(issues.begin(), issues.end(), [](const ConfigIssue& i) { return i.is_error(); });
}

json propagation_defaults(double dt, double t_end, double post_pulse_time) {
    return {{"dt", dt},
            {"t_end", t_end},
            {"post_pulse_time", post_pulse_time},
            {"linear_solve_tol", 1e-10},
            {"stop_when_stable", true},
            {"stability_tol", 1e-4},
            {"stability_fraction", 0.1},
            {"boundary_warn", 1e-8}};
}

json pulsed_well_base(ScenarioKind kind) {
    return {{"kind", to_string(kind)},
            {"name", to_string(kind)},
            {"units", {{"hbar", 1.0}, {"mass", 1.0}}},
            {"grid", {{"x_min", -250.0}, {"x_max", 250.0}, {"dx", 0.25}}},
            {"well", {{"V0", 0.6}, {"sigma_V", 3.0}}},
            {"pulses", {{"E0", 2.0}, {"omega", 1.0}, {"T", 20.0 * pi}, {"tau", 5.0}, {"q", -1.0}}},
            {"propagation", propagation_defaults(0.02, 40000.0, 100.0)},
            {"eigen", {{"tolerance", 1e-8}, {"max_iterations", 500u}}},
            {"output", {{"ledger_stride", 50u}}}};
}

const std::vector<std::string>& sweepable() {
    static const std::vector<std::string> keys{"gamma0", "mu0", "R"};
    return keys;
}

bool is_sweepable(const std::string& path) {
    for (const auto& k : sweepable())
        if (path == "cap." + k) return true;
    return false;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void merge(json& base, const json& user, const std::string& path, Issues& out) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string p = join(path, it.key());
        if (!base.contains(it.key())) {
            error(out, p, "unknown key");
            continue;
        }
        json& b = base[it.key()];
        const json& u = it.value();
        if (b.is_object()) {
            if (!u.is_object())
                error(out, p, "expected an object");
            else
                merge(b, u, p, out);
        } else if (is_sweepable(p)) {
            if (u.is_number()) {
                b = u;
            } else if (u.is_array()) {
                bool ok = !u.empty();
                if (u.empty()) error(out, p, "sweep list is empty");
                for (std::size_t i = 0; i < u.size(); ++i)
                    if (!u[i].is_number()) {
                        error(out, p + "[" + std::to_string(i) + "]", "expected a number");
                        ok = false;
                    }
                if (ok) b = u;
            } else {
                error(out, p, "expected a number or a list of numbers");
            }
        } else if (b.is_number_unsigned()) {
            if (!u.is_number_integer() || u.get<long long>() < 0)
                error(out, p, "expected a non-negative integer");
            else
                b = u.get<std::uint64_t>();
        } else if (b.is_number()) {
            if (!u.is_number())
                error(out, p, "expected a number");
            else
                b = u.get<double>();
        } else if (b.is_boolean()) {
            if (!u.is_boolean())
                error(out, p, "expected true or false");
            else
                b = u;
        } else if (b.is_string()) {
            if (!u.is_string())
                error(out, p, "expected a string");
            else
                b = u;
        }
    }
}

// Returns the merged config, or null on fatal structural errors.
json merged_config(const json& user, Issues& out) {
    if (!user.is_object()) {
        error(out, "", "config must be a JSON object");
        return nullptr;
    }
    if (!user.contains("kind") || !user["kind"].is_string()) {
        error(out, "kind", "missing scenario kind (string)");
        return nullptr;
    }
    const auto kind = parse_kind(user["kind"].get<std::string>());
    if (!kind) {
        error(out, "kind", "unknown scenario kind '" + user["kind"].get<std::string>() + "'");
        return nullptr;
    }
    json base = default_config(*kind);
    if (user.contains("name")) base["name"] = user["name"];
    // A user-supplied list for one sweepable key replaces the default sweep
    // list of another key by its first value, so exactly one list survives.
    if (user.contains("cap") && user["cap"].is_object()) {
        for (const auto& k : sweepable())
            if (user["cap"].contains(k) && user["cap"][k].is_array())
                for (const auto& other : sweepable())
                    if (other != k && base["cap"].contains(other) && base["cap"][other].is_array() &&
                        !user["cap"].contains(other))
                        base["cap"][other] = base["cap"][other].front();
    }
    merge(base, user, "", out);
    return base;
}

AxisSpec axis(const json& g, const char* lo, const char* hi, const char* d) {
    return {g[lo].get<double>(), g[hi].get<double>(), g[d].get<double>()};
}

Scenario parse(const json& c, Issues& out) {
    Scenario s;
    s.kind = *parse_kind(c["kind"].get<std::string>());
    s.name = c["name"].get<std::string>();
    s.units = {c["units"]["hbar"].get<double>(), c["units"]["mass"].get<double>()};
    if (!(s.units.hbar > 0.0)) error(out, "units.hbar", "must be positive");
    if (!(s.units.mass > 0.0)) error(out, "units.mass", "must be positive");

    const json& g = c["grid"];
    if (s.is_2d()) {
        s.x = axis(g, "x_min", "x_max", "dx");
        s.y = axis(g, "y_min", "y_max", "dy");
    } else {
        s.x = axis(g, "x_min", "x_max", "dx");
    }

    if (c.contains("well")) s.well = {c["well"]["V0"].get<double>(), c["well"]["sigma_V"].get<double>()};
    if (c.contains("pulses")) {
        const json& p = c["pulses"];
        s.pulses = {p["E0"].get<double>(), p["omega"].get<double>(), p["T"].get<double>(), p["tau"].get<double>(),
                    p["q"].get<double>()};
    }
    if (c.contains("wall")) {
        const json& w = c["wall"];
        s.wall = {w["V0"].get<double>(), w["W"].get<double>(), w["d"].get<double>(), w["w"].get<double>(),
                  w["T_s"].get<double>()};
    }
    if (c.contains("packet")) {
        const json& p = c["packet"];
        if (s.is_2d())
            s.packet2d = {p["x0"].get<double>(), p["y0"].get<double>(), p["sigma_x"].get<double>(),
                          p["sigma_y"].get<double>(), p["k"].get<double>()};
        else
            s.packet1d = {p["x0"].get<double>(), p["sigma"].get<double>(), p["k0"].get<double>()};
    }

    const json& cap = c["cap"];
    std::vector<std::string> lists;
    for (const auto& k : sweepable()) {
        if (!cap.contains(k)) continue;
        if (cap[k].is_array()) {
            lists.push_back(k);
            s.sweep_key = k;
            s.sweep_values = cap[k].get<std::vector<double>>();
        }
    }
    if (lists.size() > 1) error(out, "cap", "only one sweep list is allowed, got " + std::to_string(lists.size()));
    auto scalar = [&](const char* k) {
        if (!cap.contains(k)) return 0.0;
        return cap[k].is_array() ? cap[k].front().get<double>() : cap[k].get<double>();
    };
    s.R = scalar("R");
    s.gamma0 = scalar("gamma0");
    s.mu0 = scalar("mu0");
    if (s.kind == ScenarioKind::pulsed_well_energy) {
        s.eps_min = cap["eps_min"].get<double>();
        s.eps_max = cap["eps_max"].get<double>();
        s.n_eps = cap["n_eps"].get<std::size_t>();
    }
    if (lists.empty()) {
        s.sweep_key = s.kind == ScenarioKind::pulsed_well_energy ? "mu0"
                      : s.kind == ScenarioKind::double_slit      ? "R"
                                                                 : "gamma0";
        s.sweep_values = {scalar(s.sweep_key.c_str())};
    }

    const json& p = c["propagation"];
    s.propagation.dt = p["dt"].get<double>();
    s.propagation.t_end = p["t_end"].get<double>();
    s.propagation.post_pulse_time = p["post_pulse_time"].get<double>();
    s.propagation.linear_solve_tol = p["linear_solve_tol"].get<double>();
    s.propagation.stop_when_stable = p["stop_when_stable"].get<bool>();
    s.propagation.stability_tol = p["stability_tol"].get<double>();
    s.propagation.stability_fraction = p["stability_fraction"].get<double>();
    s.propagation.boundary_warn = p["boundary_warn"].get<double>();
    s.propagation.field_end = s.has_field() ? s.pulses.support_end() : 0.0;

    if (c.contains("eigen")) {
        s.eigen.tolerance = c["eigen"]["tolerance"].get<double>();
        s.eigen.max_iterations = c["eigen"]["max_iterations"].get<std::size_t>();
    }
    s.ledger_stride = c["output"]["ledger_stride"].get<std::size_t>();
    if (s.ledger_stride == 0) error(out, "output.ledger_stride", "must be at least 1");
    if (c["output"].contains("n_theta")) {
        s.n_theta = c["output"]["n_theta"].get<std::size_t>();
        if (s.n_theta < 2) error(out, "output.n_theta", "must be at least 2");
    }
    s.config = c;
    return s;
}

template <class F>
void check(Issues& out, const std::string& path, F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        error(out, path, e.what());
    }
}

std::optional<Grid1D> grid_1d(const AxisSpec& a, const std::string& path, Issues& out) {
    try {
        return Grid1D::from_spacing(a.min, a.max, a.dx);
    } catch (const std::exception& e) {
        error(out, path, e.what());
        return std::nullopt;
    }
}

std::vector<double> well_potential(const Grid1D& g, const GaussianWell& well) {
    std::vector<double> v(g.n());
    for (std::size_t j = 0; j < g.n(); ++j) v[j] = gaussian_well(g.x(j), well);
    return v;
}

std::string sweep_path(const Scenario& s, const char* key, std::size_t i) {
    return s.sweep_key == key && s.sweep_values.size() > 1 ? "cap." + std::string(key) + "[" + std::to_string(i) + "]"
                                                              : "cap." + std::string(key);
}

void check_physics(const Scenario& s, Issues& out) {
    check(out, "propagation", [&] { validate(s.propagation); });
    if (s.has_field()) {
        check(out, "well", [&] { validate(s.well); });
        check(out, "pulses", [&] { validate(s.pulses); });
    }
    if (s.kind == ScenarioKind::double_slit) check(out, "wall", [&] { validate(s.wall); });

    const auto gx = grid_1d(s.x, s.is_2d() ? "grid.x" : "grid", out);
    std::optional<Grid1D> gy;
    if (s.is_2d()) gy = grid_1d(s.y, "grid.y", out);
    if (!gx || (s.is_2d() && !gy)) return;

    const double extent = std::max(std::abs(s.x.min), std::abs(s.x.max));
    const double extent_2d =
        s.is_2d() ? std::hypot(std::max(std::abs(s.x.min), std::abs(s.x.max)), std::max(std::abs(s.y.min), std::abs(s.y.max)))
                  : extent;

    for (std::size_t i = 0; i < s.sweep_values.size(); ++i) {
        const Scenario si = s.at(i);
        const std::string rpath = sweep_path(s, "R", i);
        if (!(si.R >= 0.0)) {
            error(out, rpath, "R must be non-negative");
            continue;
        }
        if (si.R >= (s.is_2d() ? extent_2d : extent)) {
            error(out, rpath, "CAP outside grid (R = " + std::to_string(si.R) + ")");
            continue;
        }
        switch (s.kind) {
        case ScenarioKind::pulsed_well_local:
        case ScenarioKind::free_packet_validation:
            check(out, sweep_path(s, "gamma0", i), [&] { validate(LocalCapProfile{si.gamma0, si.R}); });
            check(out, rpath, [&] { build_local(*gx, {1.0, si.R}); });
            if (si.gamma0 == 0.0) warning(out, sweep_path(s, "gamma0", i), "gamma0 = 0: nothing will be absorbed");
            break;
        case ScenarioKind::double_slit:
            check(out, sweep_path(s, "gamma0", i), [&] { validate(LocalCapProfile{si.gamma0, si.R}); });
            check(out, rpath, [&] { build_radial(Grid2D(*gx, *gy), {1.0, si.R}); });
            if (si.gamma0 == 0.0) warning(out, sweep_path(s, "gamma0", i), "gamma0 = 0: nothing will be absorbed");
            break;
        case ScenarioKind::pulsed_well_energy:
            check(out, sweep_path(s, "mu0", i), [&] { validate(EnergyCapProfile{si.mu0}); });
            if (si.mu0 == 0.0) warning(out, sweep_path(s, "mu0", i), "mu0 = 0: nothing will be absorbed");
            break;
        }
    }

    if (s.kind == ScenarioKind::pulsed_well_energy) {
        if (!(s.eps_min > 0.0 && s.eps_max > s.eps_min)) error(out, "cap.eps_min", "need 0 < eps_min < eps_max");
        if (s.n_eps < 32) error(out, "cap.n_eps", "need at least 32 energy nodes");
    }

    // Resolution heuristics: expected largest momentum and energy of the
    // outgoing waves against dx and dt.
    double e_hi = 0.0, k_hi = 0.0;
    const double hbar = s.units.hbar, m = s.units.mass;
    if (s.has_field()) {
        if (s.well.V0 > 0.0 && s.well.sigma_V > 0.0 && !has_error(out)) {
            try {
                const auto gs = ground_state(*gx, well_potential(*gx, s.well), s.units, s.eigen);
                const double one_photon = gs.energy + hbar * s.pulses.omega;
                if (s.kind == ScenarioKind::pulsed_well_energy && (s.eps_max < one_photon || s.eps_min > one_photon))
                    warning(out, "cap.eps_max",
                            "one-photon peak outside eps-grid (expected near " + std::to_string(one_photon) + ")");
                e_hi = std::max(gs.energy + 3.0 * hbar * s.pulses.omega, 0.0);
            } catch (const std::exception& e) {
                error(out, "well", std::string("ground state: ") + e.what());
            }
        }
        if (s.pulses.omega * s.propagation.dt > 0.1)
            warning(out, "propagation.dt", "dt * omega > 0.1: the field period is poorly resolved");
        k_hi = std::sqrt(2.0 * m * e_hi) / hbar;
    } else if (s.is_2d()) {
        k_hi = std::abs(s.packet2d.k) + 3.0 / (std::sqrt(2.0) * s.packet2d.sigma_x);
    } else {
        k_hi = std::abs(s.packet1d.k0) + 3.0 / (std::sqrt(2.0) * s.packet1d.sigma);
    }
    if (!s.has_field()) e_hi = hbar * hbar * k_hi * k_hi / (2.0 * m);
    if (e_hi * s.propagation.dt / hbar > 0.25)
        warning(out, "propagation.dt", "dt * E / hbar > 0.25 for the fastest expected waves");
    const double dx = s.is_2d() ? std::max(s.x.dx, s.y.dx) : s.x.dx;
    if (k_hi * dx > 1.0) warning(out, "grid.dx", "k * dx > 1 for the fastest expected waves");
}

std::string format_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

} // namespace

// ---------------------------------------------------------------------------

const char* to_string(ScenarioKind kind) {
    switch (kind) {
    case ScenarioKind::pulsed_well_local: return "pulsed-well-local";
    case ScenarioKind::pulsed_well_energy: return "pulsed-well-energy";
    case ScenarioKind::double_slit: return "double-slit";
    case ScenarioKind::free_packet_validation: return "free-packet-validation";
    }
    return "?";
}

std::optional<ScenarioKind> parse_kind(std::string_view name) {
    for (const auto& info : scenario_catalog())
        if (name == to_string(info.kind)) return info.kind;
    return std::nullopt;
}

std::span<const ScenarioInfo> scenario_catalog() {
    static const ScenarioInfo catalog[] = {
        {ScenarioKind::pulsed_well_local, "1D Gaussian well, two-pulse field, local CAP; coherent momentum/energy spectrum"},
        {ScenarioKind::pulsed_well_energy, "1D Gaussian well, two-pulse field, energy CAP; incoherent energy spectrum"},
        {ScenarioKind::double_slit, "2D packet through a smooth double slit, radial CAP; angular distribution"},
        {ScenarioKind::free_packet_validation, "1D free Gaussian packet, weak local CAP; momentum recovery check"},
    };
    return catalog;
}

json default_config(ScenarioKind kind) {
    switch (kind) {
    case ScenarioKind::pulsed_well_local: {
        json c = pulsed_well_base(kind);
        c["cap"] = {{"R", 200.0}, {"gamma0", {0.003, 0.01, 0.03, 0.1}}};
        return c;
    }
    case ScenarioKind::pulsed_well_energy: {
        json c = pulsed_well_base(kind);
        c["cap"] = {{"R", 200.0}, {"mu0", {0.01, 0.03, 0.1, 0.3}}, {"eps_min", 0.005}, {"eps_max", 6.0}, {"n_eps", 600u}};
        return c;
    }
    case ScenarioKind::double_slit:
        return {{"kind", to_string(kind)},
                {"name", to_string(kind)},
                {"units", {{"hbar", 1.0}, {"mass", 1.0}}},
                {"grid", {{"x_min", -40.0}, {"x_max", 120.0}, {"dx", 0.2}, {"y_min", -80.0}, {"y_max", 80.0}, {"dy", 0.2}}},
                {"wall", {{"V0", 100.0}, {"W", 2.0}, {"d", 20.0}, {"w", 1.5}, {"T_s", 0.1}}},
                {"packet", {{"x0", -10.0}, {"y0", 0.0}, {"sigma_x", 2.0}, {"sigma_y", 30.0}, {"k", pi}}},
                {"cap", {{"gamma0", 0.03}, {"R", {15.0, 25.0, 40.0}}}},
                {"propagation", propagation_defaults(0.01, 60.0, 20.0)},
                {"output", {{"ledger_stride", 10u}, {"n_theta", 721u}}}};
    case ScenarioKind::free_packet_validation:
        return {{"kind", to_string(kind)},
                {"name", to_string(kind)},
                {"units", {{"hbar", 1.0}, {"mass", 1.0}}},
                {"grid", {{"x_min", -160.0}, {"x_max", 160.0}, {"dx", 0.1}}},
                {"packet", {{"x0", 0.0}, {"sigma", 5.0}, {"k0", 2.0}}},
                {"cap", {{"R", 100.0}, {"gamma0", 0.001}}},
                {"propagation", propagation_defaults(0.01, 400.0, 100.0)},
                {"output", {{"ledger_stride", 10u}}}};
    }
    return nullptr;
}

std::string ConfigIssue::to_string() const {
    return std::string(is_error() ? "error" : "warning") + ": " + (path.empty() ? "<root>" : path) + ": " + message;
}

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error([&] {
          std::string msg = "invalid config";
          for (const auto& i : issues)
              if (i.is_error()) msg += "\n  " + i.to_string();
          return msg;
      }()),
      issues_(std::move(issues)) {}

Scenario Scenario::at(std::size_t i) const {
    Scenario s = *this;
    const double v = sweep_values.at(i);
    if (sweep_key == "gamma0") s.gamma0 = v;
    else if (sweep_key == "mu0") s.mu0 = v;
    else if (sweep_key == "R") s.R = v;
    s.sweep_values = {v};
    s.config["cap"][sweep_key] = v;
    return s;
}

std::string Scenario::run_id(std::size_t i) const { return sweep_key + "_" + format_g(sweep_values.at(i)); }

Scenario load_scenario(const json& config) {
    Issues issues;
    const json merged = merged_config(config, issues);
    if (has_error(issues)) throw ConfigError(std::move(issues));
    Scenario s = parse(merged, issues);
    check_physics(s, issues);
    if (has_error(issues)) throw ConfigError(std::move(issues));
    for (std::size_t i = 0; i < s.sweep_values.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (s.run_id(i) == s.run_id(j))
                throw ConfigError({{ConfigIssue::Severity::error, "cap." + s.sweep_key, "duplicate sweep value"}});
    return s;
}

namespace {

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError({{ConfigIssue::Severity::error, "", std::string("JSON syntax: ") + e.what()}});
    }
}

} // namespace

Scenario load_scenario_file(const std::filesystem::path& path) { return load_scenario(read_json(path)); }

std::vector<ConfigIssue> validate_config(const json& config) {
    Issues issues;
    try {
        const json merged = merged_config(config, issues);
        if (has_error(issues)) return issues;
        const Scenario s = parse(merged, issues);
        check_physics(s, issues);
    } catch (const std::exception& e) {
        error(issues, "", e.what());
    }
    return issues;
}

std::vector<ConfigIssue> validate_config_file(const std::filesystem::path& path) {
    try {
        return validate_config(read_json(path));
    } catch (const ConfigError& e) {
        return e.issues();
    } catch (const std::exception& e) {
        return {{ConfigIssue::Severity::error, "", e.what()}};
    }
}

// ---------------------------------------------------------------------------

namespace {

struct Setup {
    Grid grid;
    Hamiltonian ham;
    WaveFunction psi0;
    std::optional<AbsorberHandle> absorber;
};

Setup make_setup(const Scenario& s, json& meta) {
    const Units& u = s.units;
    if (s.is_2d()) {
        const Grid2D g(Grid1D::from_spacing(s.x.min, s.x.max, s.x.dx), Grid1D::from_spacing(s.y.min, s.y.max, s.y.dx));
        Hamiltonian h{u, std::vector<double>(g.size()), {}, -1.0};
        for (std::size_t j = 0; j < g.ny(); ++j)
            for (std::size_t i = 0; i < g.nx(); ++i) h.potential[g.index(i, j)] = double_slit(g.x(i), g.y(j), s.wall);
        const Packet2D& p = s.packet2d;
        auto psi = WaveFunction::sample(g, [&](double x, double y) {
            const double ax = (x - p.x0) / p.sigma_x, ay = (y - p.y0) / p.sigma_y;
            return std::exp(-0.5 * (ax * ax + ay * ay)) * std::polar(1.0, p.k * x);
        });
        psi.normalize();
        return {g, std::move(h), std::move(psi), AbsorberHandle(build_radial(g, {s.gamma0, s.R}))};
    }

    const Grid1D g = Grid1D::from_spacing(s.x.min, s.x.max, s.x.dx);
    if (s.kind == ScenarioKind::free_packet_validation) {
        const Packet1D& p = s.packet1d;
        auto psi = WaveFunction::sample(g, [&](double x) {
            const double a = (x - p.x0) / p.sigma;
            return std::exp(-0.5 * a * a) * std::polar(1.0, p.k0 * x);
        });
        psi.normalize();
        return {g, Hamiltonian{u, {}, {}, -1.0}, std::move(psi), AbsorberHandle(build_local(g, {s.gamma0, s.R}))};
    }

    Hamiltonian h{u, well_potential(g, s.well), {}, s.pulses.q};
    const PulsePair pulses = s.pulses;
    h.field = [pulses](double t) { return field(t, pulses); };
    const auto gs = ground_state(g, h.potential, u, s.eigen);
    meta["ground_state"] = {{"energy", gs.energy}, {"residual", gs.residual}, {"iterations", gs.iterations}};
    std::optional<AbsorberHandle> absorber;
    if (s.kind == ScenarioKind::pulsed_well_local)
        absorber.emplace(build_local(g, {s.gamma0, s.R}));
    else
        absorber.emplace(build_energy(g, s.R, {s.mu0}, s.eps_min, s.eps_max, s.n_eps, u));
    WaveFunction psi = gs.state;
    return {g, std::move(h), std::move(psi), std::move(absorber)};
}

// Analytic |Phi0(p)|^2 of the free packet exp(-(x-x0)^2/(2 sigma^2) + i k0 x).
double packet_momentum_density(double p, const Packet1D& pk, const Units& u) {
    const double sp = u.hbar / (std::sqrt(2.0) * pk.sigma);
    const double z = (p - u.hbar * pk.k0) / sp;
    return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * pi) * sp);
}

} // namespace

RunRecord run_point(const Scenario& base, std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario s = base.at(i);
    RunRecord rec;
    rec.run_id = base.run_id(i);
    rec.sweep_key = base.sweep_key;
    rec.sweep_value = base.sweep_values.at(i);

    json meta;
    meta["format_version"] = 1;
    meta["scenario"] = to_string(s.kind);
    meta["name"] = s.name;
    meta["run_id"] = rec.run_id;
    meta["sweep"] = {{"parameter", base.sweep_key}, {"value", rec.sweep_value}, {"index", i}, {"values", base.sweep_values}};
    meta["config"] = s.config;
    json warnings = json::array();

    Setup setup = make_setup(s, meta);
    const Units& u = s.units;

    std::optional<CoherentMomentumAccumulator> coherent;
    std::optional<IncoherentEnergyAccumulator> incoherent;
    std::optional<AngularAccumulator> angular;
    std::vector<StepHook> hooks;
    if (const auto* loc = setup.absorber->local()) {
        coherent.emplace(*loc, u);
        hooks.push_back(coherent->hook());
    } else if (const auto* en = setup.absorber->energy()) {
        incoherent.emplace(*en);
        hooks.push_back(incoherent->hook());
    } else {
        angular.emplace(*setup.absorber->radial(), u, s.n_theta);
        hooks.push_back(angular->hook());
    }

    Propagator prop(setup.grid, setup.ham, setup.absorber, s.propagation.dt, s.propagation.linear_solve_tol);
    const RunResult r = run(prop, std::move(setup.psi0), s.propagation, hooks);

    double spectrum_integral = 0.0;
    json files = json::array({"meta.json", "ledger.csv"});
    json spectra;
    if (coherent) {
        const MomentumSpectrum& sp = coherent->finalize();
        rec.spectrum_p = sp;
        rec.spectrum_e = momentum_to_energy(sp, u);
        spectrum_integral = sp.integral();
        const long k0 = -sp.grid.j_min;
        const double excluded = sp.dPdp.at(static_cast<std::size_t>(k0)) * sp.grid.dp +
                                (sp.grid.n % 2 == 0 ? sp.dPdp.front() * sp.grid.dp : 0.0);
        spectra["spectrum_p"] = {{"n", sp.grid.n}, {"dp", sp.grid.dp}, {"integral", sp.integral()}};
        spectra["spectrum_e"] = {{"grid", "image of the positive momentum nodes, eps = p^2/2m"},
                                 {"n", rec.spectrum_e->eps.size()},
                                 {"integral", rec.spectrum_e->integral()},
                                 {"eps_first", rec.spectrum_e->eps.front()},
                                 {"excluded", "p = 0 node (eps = 0 Jacobian singular)"},
                                 {"excluded_probability", excluded}};
        files.push_back("spectrum_p.csv");
        files.push_back("spectrum_e.csv");
        if (s.kind == ScenarioKind::free_packet_validation) {
            double l1 = 0.0, ref = 0.0;
            for (std::size_t k = 0; k < sp.grid.n; ++k) {
                const double rho = packet_momentum_density(sp.grid.p(k), s.packet1d, u);
                l1 += std::abs(sp.dPdp[k] - rho) * sp.grid.dp;
                ref += rho * sp.grid.dp;
            }
            meta["validation"] = {{"momentum_l1_error", l1 / ref}};
        }
    } else if (incoherent) {
        rec.spectrum_e = incoherent->spectrum();
        spectrum_integral = rec.spectrum_e->integral();
        spectra["spectrum_e"] = {{"grid", "energy absorber midpoint grid"},
                                 {"n", rec.spectrum_e->eps.size()},
                                 {"d_eps", s.eps_max > s.eps_min ? (s.eps_max - s.eps_min) / double(s.n_eps) : 0.0},
                                 {"integral", spectrum_integral}};
        files.push_back("spectrum_e.csv");
    } else {
        rec.angular = angular->spectrum();
        spectrum_integral = rec.angular->integral();
        spectra["angular"] = {{"n_theta", rec.angular->theta.size()}, {"dtheta", rec.angular->dtheta},
                              {"integral", spectrum_integral}};
        files.push_back("angular.csv");
    }

    const AbsorptionLedger& L = r.ledger;
    const double absorbed = L.cumulative();
    json rel = nullptr;
    if (absorbed > 0.0) rel = std::abs(spectrum_integral - absorbed) / absorbed;
    meta["ledger"] = {{"initial_norm2", L.initial()},
                      {"cumulative_absorbed", absorbed},
                      {"survival", L.survival()},
                      {"closure_error", L.closure_error()},
                      {"spectrum_integral", spectrum_integral},
                      {"spectrum_relative_error", rel},
                      {"rate_integral", r.rate_integral},
                      {"ledger_stride", s.ledger_stride}};
    meta["termination"] = {{"reason", r.termination},
                           {"rule", "t >= field_end + post_pulse_time and cumulative absorbed changes by < "
                                    "stability_tol over the last stability_fraction of the steps"},
                           {"t_final", r.t_final},
                           {"steps", r.steps},
                           {"field_end", s.propagation.field_end},
                           {"drift_per_time", r.drift_per_time},
                           {"drift_below_1e-5", r.drift_per_time < 1e-5}};
    meta["spectra"] = spectra;
    meta["files"] = files;

    if ((s.sweep_key == "mu0" ? s.mu0 : s.gamma0) == 0.0) warnings.push_back("CAP strength is zero: nothing is absorbed");
    if (r.drift_per_time >= 1e-5)
        warnings.push_back("survival drift per unit time " + format_g(r.drift_per_time) + " >= 1e-5 at termination");
    if (r.termination == "t_end" && s.propagation.stop_when_stable)
        warnings.push_back("t_end reached before the ledger-stability rule triggered");
    if (r.boundary_warnings > 0)
        warnings.push_back("boundary amplitude exceeded " + format_g(s.propagation.boundary_warn) + " on " +
                           std::to_string(r.boundary_warnings) + " steps");
    meta["diagnostics"] = {{"boundary_amplitude_max", r.boundary_amplitude_max},
                           {"boundary_warning_steps", r.boundary_warnings},
                           {"warnings", warnings}};

    rec.meta = std::move(meta);
    rec.ledger = L.entries();
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

void write_record(const RunRecord& rec, const std::filesystem::path& dir, std::size_t ledger_stride) {
    namespace fs = std::filesystem;
    if (ledger_stride == 0) throw InvalidArgument("ledger_stride must be at least 1");
    fs::create_directories(dir);
    const fs::path final_dir = dir / rec.run_id;
    const fs::path tmp = dir / (".tmp-" + rec.run_id);
    fs::remove_all(tmp);
    try {
        fs::create_directories(tmp);
        {
            std::ofstream m(tmp / "meta.json", std::ios::binary);
            m << rec.meta.dump(2) << '\n';
            if (!m) throw Error("write failed for meta.json");
        }
        if (rec.spectrum_p) {
            const auto& sp = *rec.spectrum_p;
            CsvTable t{{"p", "dPdp"}, {std::vector<double>(sp.grid.n), sp.dPdp}};
            for (std::size_t k = 0; k < sp.grid.n; ++k) t.columns[0][k] = sp.grid.p(k);
            write_csv(tmp / "spectrum_p.csv", t);
        }
        if (rec.spectrum_e) write_csv(tmp / "spectrum_e.csv", {{"epsilon", "dPde"}, {rec.spectrum_e->eps, rec.spectrum_e->dPde}});
        if (rec.angular) write_csv(tmp / "angular.csv", {{"theta", "dPdtheta"}, {rec.angular->theta, rec.angular->dPdtheta}});

        CsvTable led{{"t", "absorbed_increment", "survival"}, {{}, {}, {}}};
        double acc = 0.0;
        for (std::size_t k = 0; k < rec.ledger.size(); ++k) {
            acc += rec.ledger[k].absorbed;
            if ((k + 1) % ledger_stride == 0 || k + 1 == rec.ledger.size()) {
                led.columns[0].push_back(rec.ledger[k].t);
                led.columns[1].push_back(acc);
                led.columns[2].push_back(rec.ledger[k].survival);
                acc = 0.0;
            }
        }
        write_csv(tmp / "ledger.csv", led);
        {
            std::ofstream tj(tmp / "timing.json", std::ios::binary);
            tj << json{{"wall_seconds", rec.wall_seconds}}.dump(2) << '\n';
        }
        fs::remove_all(final_dir);
        fs::rename(tmp, final_dir);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(tmp, ec);
        throw;
    }
}

std::vector<RunRecord> run_scenario(const Scenario& s, const SweepOptions& opts) {
    const std::size_t n = s.sweep_values.size();
    std::filesystem::create_directories(opts.out_dir);
    std::vector<std::optional<RunRecord>> results(n);
    std::vector<std::string> failures;
    std::mutex mu;
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                RunRecord rec = run_point(s, i);
                write_record(rec, opts.out_dir, s.ledger_stride);
                std::lock_guard lock(mu);
                if (opts.verbose) {
                    const auto& L = rec.meta["ledger"];
                    const auto& T = rec.meta["termination"];
                    std::cerr << "[capdet] " << rec.run_id << ": " << T["steps"].get<std::size_t>() << " steps, t = "
                              << T["t_final"].get<double>() << " (" << T["reason"].get<std::string>()
                              << "), absorbed " << L["cumulative_absorbed"].get<double>() << ", "
                              << rec.wall_seconds << " s\n";
                }
                results[i] = std::move(rec);
            } catch (const std::exception& e) {
                std::lock_guard lock(mu);
                failures.push_back(s.run_id(i) + ": " + e.what());
            }
        }
    };
    const std::size_t w = std::clamp<std::size_t>(opts.workers, 1, n);
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < w; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    if (!failures.empty()) {
        std::string msg = "run failed";
        for (const auto& f : failures) msg += "\n  " + f;
        throw Error(msg);
    }
    std::vector<RunRecord> out;
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

} // namespace capdet

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "capdet/absorption.hpp"
#include "capdet/eigensolve.hpp"
#include "capdet/error.hpp"
#include "capdet/potentials.hpp"
#include "capdet/propagator.hpp"
#include "capdet/spectra.hpp"

namespace capdet {

enum class ScenarioKind { pulsed_well_local, pulsed_well_energy, double_slit, free_packet_validation };

const char* to_string(ScenarioKind kind);
std::optional<ScenarioKind> parse_kind(std::string_view name);

struct ScenarioInfo {
    ScenarioKind kind;
    const char* summary;
};

std::span<const ScenarioInfo> scenario_catalog();

/// Complete default configuration for a kind. User configs are merged over it.
nlohmann::json default_config(ScenarioKind kind);

struct ConfigIssue {
    enum class Severity { error, warning };
    Severity severity = Severity::error;
    std::string path;    // dotted field path, e.g. "cap.R[2]"
    std::string message;

    bool is_error() const { return severity == Severity::error; }
    std::string to_string() const;
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

struct AxisSpec {
    double min = 0.0;
    double max = 0.0;
    double dx = 0.0;
};

/// Gaussian packet exp(-(x-x0)^2/(2 sigma^2) + i k0 x).
struct Packet1D {
    double x0 = 0.0;
    double sigma = 5.0;
    double k0 = 2.0;
};

/// exp(-(x-x0)^2/(2 sigma_x^2) + i k x) exp(-(y-y0)^2/(2 sigma_y^2)).
struct Packet2D {
    double x0 = -10.0;
    double y0 = 0.0;
    double sigma_x = 2.0;
    double sigma_y = 30.0;
    double k = 0.0;
};

/// Fully resolved scenario. `config` is the merged JSON it was read from.
struct Scenario {
    ScenarioKind kind = ScenarioKind::pulsed_well_local;
    std::string name;
    Units units;
    AxisSpec x, y; // y is used by the 2D kind only
    GaussianWell well;
    PulsePair pulses;
    DoubleSlitWall wall;
    Packet1D packet1d;
    Packet2D packet2d;
    double R = 0.0;
    double gamma0 = 0.0;
    double mu0 = 0.0;
    double eps_min = 0.0;
    double eps_max = 0.0;
    std::size_t n_eps = 0;
    std::string sweep_key;
    std::vector<double> sweep_values;
    PropagatorConfig propagation;
    EigenOptions eigen;
    std::size_t ledger_stride = 1;
    std::size_t n_theta = AngularAccumulator::default_bins;
    nlohmann::json config;

    bool is_2d() const { return kind == ScenarioKind::double_slit; }
    bool has_field() const {
        return kind == ScenarioKind::pulsed_well_local || kind == ScenarioKind::pulsed_well_energy;
    }
    /// Copy with the sweep parameter set to sweep_values[i].
    Scenario at(std::size_t i) const;
    /// Directory name of sweep point i, e.g. "gamma0_0.003".
    std::string run_id(std::size_t i) const;
};

/// Merges over the defaults of config["kind"] and parses. Throws ConfigError
/// listing every error (warnings are not fatal).
Scenario load_scenario(const nlohmann::json& config);
Scenario load_scenario_file(const std::filesystem::path& path);

/// Every violation and warning for a config; never throws.
std::vector<ConfigIssue> validate_config(const nlohmann::json& config);
std::vector<ConfigIssue> validate_config_file(const std::filesystem::path& path);

struct RunRecord {
    std::string run_id;
    std::string sweep_key;
    double sweep_value = 0.0;
    nlohmann::json meta;
    std::optional<MomentumSpectrum> spectrum_p;
    std::optional<EnergySpectrum> spectrum_e;
    std::optional<AngularSpectrum> angular;
    std::vector<AbsorptionLedger::Entry> ledger;
    double wall_seconds = 0.0;
};

/// Runs sweep point i entirely in memory.
RunRecord run_point(const Scenario& scenario, std::size_t i);

/// Writes meta.json, the CSV tables and timing.json into dir/run_id. Files
/// are staged in a temporary sibling directory and renamed into place, so a
/// failed write leaves no partial run behind.
void write_record(const RunRecord& record, const std::filesystem::path& dir, std::size_t ledger_stride);

struct SweepOptions {
    std::filesystem::path out_dir;
    std::size_t workers = 1;
    bool verbose = true;
};

/// All sweep points, up to `workers` at a time. Completed points are kept on
/// disk when another fails; the failure is rethrown afterwards as Error.
std::vector<RunRecord> run_scenario(const Scenario& scenario, const SweepOptions& opts);

} // namespace capdet

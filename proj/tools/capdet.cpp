// capdet: run, validate and list CAP-detector scenarios.
//
// Exit codes: 0 success, 1 invalid config, 2 runtime failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "capdet/scenario.hpp"

namespace {

int print_issues(const std::vector<capdet::ConfigIssue>& issues) {
    bool bad = false;
    for (const auto& i : issues) {
        std::cerr << i.to_string() << '\n';
        bad = bad || i.is_error();
    }
    return bad ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Complex-absorbing-potential spectra and angular distributions"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir = "runs";
    std::size_t workers = 1;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "Run every sweep point of a scenario config");
    run->add_option("config", config, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory (one subdirectory per sweep point)");
    run->add_option("--workers", workers, "Sweep points run concurrently")->check(CLI::Range(1u, 256u));
    run->add_flag("--quiet", quiet, "No per-run progress lines");

    auto* val = app.add_subcommand("validate", "Check a config and list every problem");
    val->add_option("config", config, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);

    auto* list = app.add_subcommand("list-scenarios", "List the scenario kinds");
    auto* dump = app.add_subcommand("defaults", "Print the default config of a scenario kind");
    std::string kind;
    dump->add_option("kind", kind, "Scenario kind")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (*list) {
        for (const auto& info : capdet::scenario_catalog())
            std::cout << capdet::to_string(info.kind) << "\t" << info.summary << '\n';
        return 0;
    }
    if (*dump) {
        const auto k = capdet::parse_kind(kind);
        if (!k) {
            std::cerr << "unknown scenario kind '" << kind << "'\n";
            return 1;
        }
        std::cout << capdet::default_config(*k).dump(2) << '\n';
        return 0;
    }
    if (*val) {
        const auto issues = capdet::validate_config_file(config);
        const int rc = print_issues(issues);
        if (rc == 0) std::cout << config << ": ok\n";
        return rc;
    }

    const auto issues = capdet::validate_config_file(config);
    if (print_issues(issues) != 0) return 1;
    try {
        const auto scenario = capdet::load_scenario_file(config);
        capdet::run_scenario(scenario, {out_dir, workers, !quiet});
    } catch (const capdet::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

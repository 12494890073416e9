#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdhj/control.hpp"
#include "pdhj/minimax.hpp"

#include "json.hpp"

namespace pdhj {

/// Everything one experiment needs, resolved from the JSON config with every
/// default filled in. `effective` echoes the resolved numbers so each run is
/// self-describing.
struct RunConfig {
    ControlProblem problem;
    GridPtr grid;
    double level = 1.0;
    std::vector<double> kappas;
    std::size_t drift_budget = 16;
    std::vector<std::vector<double>> zset;
    std::vector<double> offsets;
    std::vector<Anchor> anchors;
    double tol_kappa = 3.0;
    std::uint64_t seed = 20240804;
    std::string out_dir = "out";
    std::size_t value_budget = default_value_budget;
    // subcommand knobs
    std::size_t psi_pairs = 1000;
    std::size_t audit_samples = 10000;
    double probe_epsilon = 0.1;
    double probe_shift = 0.1;
    std::size_t dpp_max_prefix = 8;

    nlohmann::ordered_json effective;

    CheckConfig check_config() const;
};

/// Parses and validates a config document; throws std::invalid_argument on
/// schema errors. `seed_override` takes precedence over the document.
RunConfig load_run_config(const nlohmann::ordered_json& doc,
                          std::optional<std::uint64_t> seed_override = std::nullopt,
                          std::optional<std::string> out_override = std::nullopt);

nlohmann::ordered_json default_config_document();

/// Exit codes: 0 all checks pass, 1 check failure, 2 config error, 3 budget
/// exceeded.
int run_subcommand(const std::string& name, const RunConfig& cfg, bool quiet);

}  // namespace pdhj

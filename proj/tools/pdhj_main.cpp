#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "pdhj/runner.hpp"

namespace {

int dispatch(const std::string& sub, const std::string& config_path,
             std::optional<std::uint64_t> seed, std::optional<std::string> out, bool quiet) {
    nlohmann::ordered_json doc;
    if (config_path.empty()) {
        doc = pdhj::default_config_document();
    } else {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot read config file " << config_path << "\n";
            return 2;
        }
        try {
            in >> doc;
        } catch (const std::exception& e) {
            std::cerr << "error: config parse failed: " << e.what() << "\n";
            return 2;
        }
    }

    try {
        const pdhj::RunConfig cfg = pdhj::load_run_config(doc, seed, out);
        return pdhj::run_subcommand(sub, cfg, quiet);
    } catch (const pdhj::BudgetExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"minimax solutions of path-dependent Hamilton-Jacobi equations"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool quiet = false;

    app.add_option("--config", config_path, "JSON experiment config");
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--seed", seed, "RNG seed (overrides config)")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_flag("--quiet", quiet, "suppress per-check output");
    app.fallthrough();

    for (const char* name : {"value", "dpp", "minimax", "psi", "perron", "probe", "audit"})
        app.add_subcommand(name);

    CLI11_PARSE(app, argc, argv);

    const std::string sub = app.get_subcommands().at(0)->get_name();
    return dispatch(sub, config_path,
                    seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt,
                    out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir), quiet);
}

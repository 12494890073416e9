#include "pdhj/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>

#include "pdhj/calculus.hpp"
#include "pdhj/hamiltonian.hpp"
#include "pdhj/report_io.hpp"
#include "pdhj/util.hpp"

namespace pdhj {

namespace {

using nlohmann::ordered_json;

std::string z_label(const std::vector<double>& z) {
    std::string s;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (i) s += ';';
        s += fmt(z[i]);
    }
    return s;
}

double get_number(const ordered_json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw std::invalid_argument(std::string("config: ") + key + " must be a number");
    return j.at(key).get<double>();
}

ControlProblem problem_from_config(const ordered_json& doc, ordered_json& echo) {
    if (!doc.contains("problem") || doc.at("problem").contains("preset")) {
        const std::string preset =
            doc.contains("problem") ? doc.at("problem").at("preset").get<std::string>()
                                    : std::string("bang-linear");
        echo["problem"] = {{"preset", preset}};
        return preset_by_name(preset);
    }
    if (!doc.at("problem").contains("inline"))
        throw std::invalid_argument("config: problem needs 'preset' or 'inline'");
    const ordered_json& spec = doc.at("problem").at("inline");
    CoefficientSpec c;
    c.horizon = get_number(spec, "T", 1.0);
    if (spec.contains("atoms")) c.atoms = spec.at("atoms").get<std::vector<double>>();
    c.control_gain = get_number(spec, "control_gain", 1.0);
    c.drift_constant = get_number(spec, "drift_constant", 0.0);
    c.state_gain = get_number(spec, "state_gain", 0.0);
    c.delay_gain = get_number(spec, "delay_gain", 0.0);
    c.tau = get_number(spec, "tau", 0.0);
    if (spec.contains("switch_time")) c.switch_time = spec.at("switch_time").get<double>();
    c.switch_factor = get_number(spec, "switch_factor", 1.0);
    c.lambda_const = get_number(spec, "lambda", 0.0);
    c.ell_const = get_number(spec, "ell_const", 0.0);
    c.ell_state_sq = get_number(spec, "ell_state_sq", 0.0);
    c.h_state = get_number(spec, "h_state", 0.0);
    c.h_const = get_number(spec, "h_const", 0.0);
    c.c_f = get_number(spec, "C_f", 1.0);
    c.c_lambda = get_number(spec, "C_lambda", c.lambda_const);
    c.l_f = get_number(spec, "L_f", std::abs(c.state_gain) + std::abs(c.delay_gain));
    if (spec.contains("h_bound"))
        c.terminal_growth = {{spec.at("h_bound").at("offset").get<double>(),
                              spec.at("h_bound").at("slope").get<double>()}};
    c.affine_cost = spec.value("affine_cost", c.ell_state_sq == 0.0);
    c.name = spec.value("name", std::string("inline"));

    ordered_json e = spec;
    e["T"] = c.horizon;
    e["atoms"] = c.atoms;
    e["affine_cost"] = c.affine_cost;
    echo["problem"] = {{"inline", e}};
    return make_problem(c);
}

}  // namespace

CheckConfig RunConfig::check_config() const {
    CheckConfig cc;
    cc.level = level;
    cc.grid = grid;
    cc.zset = zset;
    cc.offsets = offsets;
    cc.anchors = anchors;
    cc.drift_budget = drift_budget;
    cc.kappas = kappas;
    cc.tol_kappa = tol_kappa;
    return cc;
}

ordered_json default_config_document() {
    return ordered_json{{"problem", {{"preset", "bang-linear"}}},
                        {"grid", {{"N", 8}}},
                        {"bundle", {{"L", nullptr}, {"kappas", {0.0, 0.5, 1.0}}, {"budget", 16}}},
                        {"zset", {0.0, 1.0, -1.0, 2.0, -2.0}},
                        {"offsets", {0.0, 0.25}},
                        {"anchors", ordered_json::array({{{"s0", 0.0}, {"value", 0.0}}})},
                        {"tolerances", {{"kappa", 3.0}}},
                        {"seed", 20240804},
                        {"out_dir", "out"}};
}

RunConfig load_run_config(const ordered_json& doc, std::optional<std::uint64_t> seed_override,
                          std::optional<std::string> out_override) {
    RunConfig cfg;
    ordered_json echo;

    cfg.problem = problem_from_config(doc, echo);

    const std::size_t n = doc.contains("grid")
                              ? doc.at("grid").value("N", std::size_t{8})
                              : std::size_t{8};
    if (n < 1) throw std::invalid_argument("config: grid.N must be >= 1");
    cfg.grid = make_uniform_grid(n, cfg.problem.horizon);
    echo["grid"] = {{"N", n}, {"T", cfg.problem.horizon}};

    cfg.level = cfg.problem.c_f;
    cfg.kappas = {0.0, 0.5, 1.0};
    cfg.drift_budget = 16;
    if (doc.contains("bundle")) {
        const auto& b = doc.at("bundle");
        if (b.contains("L") && !b.at("L").is_null()) cfg.level = b.at("L").get<double>();
        if (b.contains("kappas")) cfg.kappas = b.at("kappas").get<std::vector<double>>();
        if (b.contains("budget")) cfg.drift_budget = b.at("budget").get<std::size_t>();
    }
    if (cfg.level < 0.0) throw std::invalid_argument("config: bundle.L must be >= 0");
    if (cfg.drift_budget < 1) throw std::invalid_argument("config: bundle.budget must be >= 1");
    echo["bundle"] = {{"L", cfg.level}, {"kappas", cfg.kappas}, {"budget", cfg.drift_budget}};

    if (doc.contains("zset")) {
        for (const auto& item : doc.at("zset")) {
            if (item.is_number()) cfg.zset.push_back({item.get<double>()});
            else cfg.zset.push_back(item.get<std::vector<double>>());
        }
    } else {
        cfg.zset = {{0.0}, {1.0}, {-1.0}, {2.0}, {-2.0}};
    }
    if (cfg.zset.empty()) throw std::invalid_argument("config: zset must be non-empty");
    echo["zset"] = cfg.zset;

    cfg.offsets = doc.contains("offsets") ? doc.at("offsets").get<std::vector<double>>()
                                          : std::vector<double>{0.0, 0.25};
    echo["offsets"] = cfg.offsets;

    const bool delay_default = cfg.problem.name == "delay-drag";
    ordered_json anchors_echo = ordered_json::array();
    if (doc.contains("anchors")) {
        for (const auto& a : doc.at("anchors")) {
            const double s0 = a.at("s0").get<double>();
            if (!cfg.grid->contains(s0))
                throw std::invalid_argument("config: anchor s0 must be a grid node");
            Path history = a.contains("values")
                               ? Path::scalar(cfg.grid, a.at("values").get<std::vector<double>>(),
                                              a.value("mode", std::string("linear")) == "step"
                                                  ? Interp::step
                                                  : Interp::linear)
                               : Path::constant(cfg.grid, a.value("value", 0.0));
            anchors_echo.push_back({{"s0", s0}, {"value", a.value("value", 0.0)}});
            cfg.anchors.push_back(Anchor{s0, std::move(history)});
        }
    } else {
        const double v0 = delay_default ? 1.0 : 0.0;
        cfg.anchors.push_back(Anchor{0.0, Path::constant(cfg.grid, v0)});
        anchors_echo.push_back({{"s0", 0.0}, {"value", v0}});
    }
    echo["anchors"] = anchors_echo;

    cfg.tol_kappa = doc.contains("tolerances") ? get_number(doc.at("tolerances"), "kappa", 3.0)
                                               : 3.0;
    echo["tolerances"] = {{"kappa", cfg.tol_kappa}};

    cfg.seed = seed_override ? *seed_override
                             : (doc.contains("seed") ? doc.at("seed").get<std::uint64_t>()
                                                     : std::uint64_t{20240804});
    echo["seed"] = cfg.seed;

    cfg.out_dir = out_override ? *out_override : doc.value("out_dir", std::string("out"));
    echo["out_dir"] = cfg.out_dir;

    cfg.value_budget = doc.value("value_budget", default_value_budget);
    cfg.psi_pairs = doc.contains("psi") ? doc.at("psi").value("pairs", std::size_t{1000})
                                        : std::size_t{1000};
    cfg.audit_samples = doc.contains("audit")
                            ? doc.at("audit").value("samples", std::size_t{10000})
                            : std::size_t{10000};
    cfg.probe_epsilon = doc.contains("probe") ? get_number(doc.at("probe"), "epsilon", 0.1) : 0.1;
    cfg.probe_shift = doc.contains("probe") ? get_number(doc.at("probe"), "shift", 0.1) : 0.1;
    cfg.dpp_max_prefix =
        doc.contains("dpp") ? doc.at("dpp").value("max_prefix", std::size_t{8}) : std::size_t{8};
    echo["value_budget"] = cfg.value_budget;
    echo["psi"] = {{"pairs", cfg.psi_pairs}};
    echo["audit"] = {{"samples", cfg.audit_samples}};
    echo["probe"] = {{"epsilon", cfg.probe_epsilon}, {"shift", cfg.probe_shift}};
    echo["dpp"] = {{"max_prefix", cfg.dpp_max_prefix}};

    cfg.effective = std::move(echo);
    return cfg;
}

namespace {

struct CheckSummary {
    ordered_json entries = ordered_json::array();
    bool pass = true;

    void add(const std::string& name, bool ok, const std::string& detail = "") {
        entries.push_back({{"name", name}, {"pass", ok}, {"detail", detail}});
        pass = pass && ok;
    }
};

void finish(const RunConfig& cfg, const std::string& sub, CheckSummary& summary, bool quiet,
            ordered_json details = {}) {
    ordered_json report;
    report["subcommand"] = sub;
    report["config"] = cfg.effective;
    report["checks"] = summary.entries;
    if (!details.is_null() && !details.empty()) report["details"] = std::move(details);
    report["pass"] = summary.pass;
    write_json(std::filesystem::path(cfg.out_dir) / "report.json", report);
    if (!quiet) {
        for (const auto& e : summary.entries)
            std::cout << (e.at("pass").get<bool>() ? "[PASS] " : "[FAIL] ")
                      << e.at("name").get<std::string>()
                      << (e.at("detail").get<std::string>().empty()
                              ? ""
                              : " (" + e.at("detail").get<std::string>() + ")")
                      << "\n";
    }
}

int run_value(const RunConfig& cfg, bool quiet) {
    std::vector<std::vector<std::string>> rows;
    CheckSummary summary;
    for (std::size_t i = 0; i < cfg.anchors.size(); ++i) {
        const Anchor& a = cfg.anchors[i];
        const ValueResult r = value_auto(cfg.problem, a.s0, a.history, cfg.grid, cfg.value_budget);
        rows.push_back({std::to_string(i), fmt(a.s0), fmt(r.v), r.argmin.digits()});
        summary.add("value.anchor" + std::to_string(i), true, "v=" + fmt(r.v));
    }
    write_csv(std::filesystem::path(cfg.out_dir) / "value.csv", {"anchor", "s0", "v", "argmin"},
              rows);
    finish(cfg, "value", summary, quiet);
    return summary.pass ? 0 : 1;
}

int run_dpp(const RunConfig& cfg, bool quiet) {
    std::vector<std::vector<std::string>> rows;
    CheckSummary summary;
    for (std::size_t i = 0; i < cfg.anchors.size(); ++i) {
        const Anchor& a = cfg.anchors[i];
        const std::size_t k0 = cfg.grid->index_of(a.s0);
        bool all_ok = true;
        double worst = 0.0;
        for (std::size_t kt = k0 + 1; kt < cfg.grid->node_count(); ++kt) {
            if (kt - k0 > cfg.dpp_max_prefix) break;
            const double t = cfg.grid->node(kt);
            const double res = dpp_residual(cfg.problem, a.s0, t, a.history, cfg.grid,
                                            cfg.value_budget);
            const bool ok = res <= 1e-9;
            all_ok = all_ok && ok;
            worst = std::max(worst, res);
            rows.push_back({std::to_string(i), fmt(a.s0), fmt(t), fmt(res), ok ? "1" : "0"});
        }
        summary.add("dpp.anchor" + std::to_string(i), all_ok, "worst=" + fmt(worst));
    }
    write_csv(std::filesystem::path(cfg.out_dir) / "dpp.csv",
              {"anchor", "s", "t", "residual", "pass"}, rows);
    finish(cfg, "dpp", summary, quiet);
    return summary.pass ? 0 : 1;
}

std::vector<std::vector<std::string>> check_rows(const CheckReport& report) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : report.rows)
        rows.push_back({report.kind, fmt(r.s0), z_label(r.z), fmt(r.offset), fmt(r.best_margin),
                        std::to_string(r.witness_selector), fmt(r.tolerance),
                        r.pass ? "1" : "0"});
    for (const auto& t : report.terminal)
        rows.push_back({report.kind + ".terminal", fmt(t.s0), "", "", fmt(t.worst_gap), "",
                        fmt(t.tolerance), t.pass ? "1" : "0"});
    return rows;
}

int run_minimax(const RunConfig& cfg, bool quiet) {
    const VerifyReport report =
        verify_value_minimax(cfg.problem, cfg.check_config(), cfg.value_budget);
    std::vector<std::vector<std::string>> rows = check_rows(report.supersolution);
    for (auto& r : check_rows(report.subsolution)) rows.push_back(std::move(r));
    write_csv(std::filesystem::path(cfg.out_dir) / "minimax_checks.csv",
              {"check", "s0", "z", "offset", "margin", "witness", "tolerance", "pass"}, rows);

    std::vector<std::vector<std::string>> sw;
    for (const auto& r : report.sandwich.rows)
        sw.push_back({fmt(r.s0), z_label(r.z), fmt(r.u_minus), fmt(r.u_plus), fmt(r.v),
                      fmt(r.tolerance), r.pass ? "1" : "0"});
    write_csv(std::filesystem::path(cfg.out_dir) / "sandwich.csv",
              {"s0", "z", "u_minus", "u_plus", "v", "tolerance", "pass"}, sw);

    std::vector<std::vector<std::string>> dpp;
    for (const auto& r : report.dpp)
        dpp.push_back({fmt(r.s), fmt(r.t), fmt(r.residual), r.pass ? "1" : "0"});
    write_csv(std::filesystem::path(cfg.out_dir) / "minimax_dpp.csv",
              {"s", "t", "residual", "pass"}, dpp);

    CheckSummary summary;
    summary.add("minimax.supersolution", report.supersolution.pass);
    summary.add("minimax.subsolution", report.subsolution.pass);
    summary.add("minimax.sandwich", report.sandwich.pass);
    bool dpp_ok = true;
    for (const auto& r : report.dpp) dpp_ok = dpp_ok && r.pass;
    summary.add("minimax.dpp", dpp_ok);

    ordered_json details;
    details["supersolution"] = to_json(report.supersolution);
    details["subsolution"] = to_json(report.subsolution);
    details["sandwich"] = to_json(report.sandwich);
    finish(cfg, "minimax", summary, quiet, std::move(details));
    return summary.pass ? 0 : 1;
}

int run_psi(const RunConfig& cfg, bool quiet) {
    Rng rng(cfg.seed);
    const GridPtr& grid = cfg.grid;
    const std::size_t n = grid->node_count();

    std::size_t violations = 0;
    std::vector<std::vector<std::string>> bounds_rows;
    std::string first_violation;

    for (std::size_t k = 0; k < cfg.psi_pairs; ++k) {
        const std::size_t variant = k % 10;
        const double s = grid->node(rng.index(n));
        std::vector<double> xa(n), xb(n);
        for (double& v : xa) v = rng.uniform(-1.0, 1.0);
        if (variant == 0) {
            xb = xa;  // identical pair: S = 0 branch
        } else if (variant <= 3) {
            // monotone gap: the running sup is attained at s
            const double slope = rng.uniform(-1.0, 1.0);
            for (std::size_t i = 0; i < n; ++i) xb[i] = xa[i] + slope * grid->node(i);
        } else {
            for (double& v : xb) v = rng.uniform(-1.0, 1.0);
        }
        const Path x = Path::scalar(grid, std::move(xa));
        const Path xt = Path::scalar(grid, std::move(xb));

        const double p = psi(s, x, xt);
        const PsiPartials parts = psi_partials(s, x, xt);
        const PsiBoundsRow row = psi_bounds_row(s, x, xt);

        bool node_equal = true;
        for (std::size_t i = 0; i < n && grid->node(i) <= s + grid->node_tolerance(); ++i)
            node_equal = node_equal && x.at1(i) == xt.at1(i);

        bool ok = p >= 0.0;
        ok = ok && ((p == 0.0) == node_equal);
        for (std::size_t j = 0; j < parts.dx.size(); ++j)
            ok = ok && parts.dx[j] + parts.dxt[j] == 0.0;
        ok = ok && parts.dt == 0.0;
        ok = ok && row.grad_norm <= row.grad_bound + 1e-12;
        if (row.sup_attained_at_s) ok = ok && !row.violated_lower && !row.violated_upper;
        if (!ok) {
            ++violations;
            if (first_violation.empty()) first_violation = "pair " + std::to_string(k);
        }

        bounds_rows.push_back({fmt(row.s), fmt(row.psi), fmt(row.lower_bound),
                               fmt(row.upper_bound), fmt(row.grad_norm), fmt(row.grad_bound),
                               row.violated_lower ? "1" : "0", row.violated_upper ? "1" : "0"});
    }

    write_csv(std::filesystem::path(cfg.out_dir) / "psi_bounds.csv",
              {"s", "psi", "lower_bound", "upper_bound", "grad_norm", "grad_bound",
               "violated_lower", "violated_upper"},
              bounds_rows);

    CheckSummary summary;
    summary.add("psi.invariants", violations == 0,
                violations == 0 ? std::to_string(cfg.psi_pairs) + " pairs"
                                : std::to_string(violations) + " violations, first at " +
                                      first_violation);
    summary.add("psi.bounds_report", true, "diagnostic, see psi_bounds.csv");
    finish(cfg, "psi", summary, quiet);
    return summary.pass ? 0 : 1;
}

int run_perron(const RunConfig& cfg, bool quiet) {
    const Hamiltonian h = control_hamiltonian(cfg.problem);
    const CandidateSolution cand =
        value_function_candidate(cfg.problem, cfg.grid, cfg.value_budget);
    const SandwichReport report = sandwich_check(cand.value, cfg.problem.terminal_cost, h,
                                                 cfg.check_config(), 2.0);
    std::vector<std::vector<std::string>> rows;
    std::size_t idx = 0;
    for (const auto& r : report.rows) {
        rows.push_back({fmt(r.s0), z_label(r.z), fmt(r.u_minus), fmt(r.u_plus), fmt(r.v),
                        fmt(r.tolerance), r.pass ? "1" : "0"});
        ++idx;
    }
    write_csv(std::filesystem::path(cfg.out_dir) / "perron.csv",
              {"s0", "z", "u_minus", "u_plus", "v", "tolerance", "pass"}, rows);
    CheckSummary summary;
    summary.add("perron.sandwich", report.pass);
    for (std::size_t i = 0; i < report.u0_upper_per_anchor.size(); ++i)
        summary.add("perron.u0_upper.anchor" + std::to_string(i), true,
                    fmt(report.u0_upper_per_anchor[i]));
    ordered_json details;
    details["sandwich"] = to_json(report);
    finish(cfg, "perron", summary, quiet, std::move(details));
    return summary.pass ? 0 : 1;
}

int run_probe(const RunConfig& cfg, bool quiet) {
    const Hamiltonian h = control_hamiltonian(cfg.problem);
    const CandidateSolution v = value_function_candidate(cfg.problem, cfg.grid, cfg.value_budget);
    CandidateSolution u;
    u.value = [base = v.value, shift = cfg.probe_shift](double t, const Path& x) {
        return base(t, x) + shift;
    };
    const ProbeReport report = comparison_probe(u, v, u, h, cfg.level, cfg.probe_epsilon,
                                                cfg.anchors.at(0), cfg.grid, cfg.drift_budget,
                                                cfg.kappas);
    std::vector<std::vector<std::string>> rows{
        {fmt(report.epsilon), fmt(report.m0), report.positive_gap ? "1" : "0", fmt(report.s_eps),
         std::to_string(report.selector_x), std::to_string(report.selector_xt),
         fmt(report.phi_eps_max), fmt(report.inequality_lhs), fmt(report.gradient_sum_norm)}};
    write_csv(std::filesystem::path(cfg.out_dir) / "probe.csv",
              {"epsilon", "M0", "positive_gap", "s_eps", "selector_x", "selector_xt",
               "phi_eps_max", "inequality_lhs", "gradient_sum_norm"},
              rows);
    CheckSummary summary;
    summary.add("probe.diagnostic", true, report.note);
    ordered_json details;
    details["probe"] = to_json(report);
    finish(cfg, "probe", summary, quiet, std::move(details));
    return 0;
}

int run_audit(const RunConfig& cfg, bool quiet) {
    const Hamiltonian h = control_hamiltonian(cfg.problem);
    AuditConfig acfg;
    acfg.samples = cfg.audit_samples;
    acfg.grid = cfg.grid;
    acfg.level = cfg.level;
    acfg.seed = cfg.seed;
    const AuditReport report = audit_assumptions(h, acfg);
    write_json(std::filesystem::path(cfg.out_dir) / "audit.json", report.to_json());
    CheckSummary summary;
    for (const auto& f : report.findings)
        summary.add("audit." + f.condition, f.pass,
                    "worst=" + fmt(f.worst_ratio) + " bound=" + fmt(f.bound));
    finish(cfg, "audit", summary, quiet);
    return summary.pass ? 0 : 1;
}

}  // namespace

int run_subcommand(const std::string& name, const RunConfig& cfg, bool quiet) {
    std::filesystem::create_directories(cfg.out_dir);
    if (name == "value") return run_value(cfg, quiet);
    if (name == "dpp") return run_dpp(cfg, quiet);
    if (name == "minimax") return run_minimax(cfg, quiet);
    if (name == "psi") return run_psi(cfg, quiet);
    if (name == "perron") return run_perron(cfg, quiet);
    if (name == "probe") return run_probe(cfg, quiet);
    if (name == "audit") return run_audit(cfg, quiet);
    throw std::invalid_argument("unknown subcommand: " + name);
}

}  // namespace pdhj

#include "pdhj/minimax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pdhj/util.hpp"

namespace pdhj {

CandidateSolution value_function_candidate(const ControlProblem& problem, GridPtr grid,
                                           std::size_t budget) {
    CandidateSolution cand;
    cand.value = [problem, grid, budget](double t, const Path& x) {
        return value_auto(problem, t, x, grid, budget).v;
    };
    return cand;
}

namespace {

enum class Kind { super, sub };

/// Per-anchor bundle state shared across the (z, offset) tuples: the sample
/// paths depend only on the selector, and the candidate values along them
/// depend only on (selector, node).
struct AnchorBundle {
    std::size_t anchor_index = 0;
    std::vector<Path> paths;
    std::vector<std::vector<double>> u_along;  // [selector][node]
    double u_at_anchor = 0.0;
};

AnchorBundle prepare_anchor(const CandidateSolution& u, const CheckConfig& cfg,
                            const Anchor& anchor) {
    AnchorBundle out;
    out.anchor_index = cfg.grid->index_of(anchor.s0);
    DriftFamily family(anchor.history.dim(), cfg.kappas);
    BundleSpec spec{cfg.level, anchor, family};
    const std::size_t cap = family.selector_cap(
        cfg.grid->interval_count() - out.anchor_index, cfg.drift_budget);
    out.paths.reserve(cap);
    out.u_along.resize(cap);
    for (std::size_t k = 0; k < cap; ++k) {
        out.paths.push_back(sample_extension(spec, k, cfg.grid));
        auto& vals = out.u_along[k];
        vals.assign(cfg.grid->node_count(), 0.0);
        for (std::size_t i = out.anchor_index; i < cfg.grid->node_count(); ++i)
            vals[i] = u.value(cfg.grid->node(i), out.paths[k]);
    }
    out.u_at_anchor = out.u_along.empty()
                          ? u.value(anchor.s0, anchor.history)
                          : out.u_along[0][out.anchor_index];
    return out;
}

CheckReport run_check(Kind kind, const CandidateSolution& u, const Hamiltonian& h,
                      const CheckConfig& cfg) {
    if (!cfg.grid) throw std::invalid_argument("check: config needs a grid");
    if (cfg.zset.empty()) throw std::invalid_argument("check: empty z-set");
    if (cfg.tol_kappa < 0.0 || (cfg.fixed_tol && *cfg.fixed_tol < 0.0))
        throw std::invalid_argument("check: tolerances must be >= 0");
    for (double o : cfg.offsets)
        if (o < 0.0) throw std::invalid_argument("check: offsets must be >= 0 magnitudes");

    CheckReport report;
    report.kind = kind == Kind::super ? "supersolution" : "subsolution";
    const double max_dt = cfg.grid->max_dt();

    for (const Anchor& anchor : cfg.anchors) {
        const AnchorBundle bundle = prepare_anchor(u, cfg, anchor);

        for (const auto& z : cfg.zset) {
            const double tol = cfg.tolerance(norm2(z), max_dt);
            for (double offset : cfg.offsets) {
                const double y0 = kind == Kind::super ? bundle.u_at_anchor + offset
                                                      : bundle.u_at_anchor - offset;
                CheckRow row;
                row.s0 = anchor.s0;
                row.z = z;
                row.offset = kind == Kind::super ? offset : -offset;
                row.tolerance = tol;
                row.best_margin = kind == Kind::super
                                      ? -std::numeric_limits<double>::infinity()
                                      : std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < bundle.paths.size(); ++k) {
                    const std::vector<double> y =
                        integrate_y(h, bundle.paths[k], bundle.anchor_index, y0, z);
                    double margin = kind == Kind::super
                                        ? std::numeric_limits<double>::infinity()
                                        : -std::numeric_limits<double>::infinity();
                    for (std::size_t i = bundle.anchor_index; i < y.size(); ++i) {
                        const double gap = y[i] - bundle.u_along[k][i];
                        margin = kind == Kind::super ? std::min(margin, gap)
                                                     : std::max(margin, gap);
                    }
                    const bool better = kind == Kind::super ? margin > row.best_margin
                                                            : margin < row.best_margin;
                    if (better) {
                        row.best_margin = margin;
                        row.witness_selector = k;
                    }
                }
                row.pass = kind == Kind::super ? row.best_margin >= -tol
                                               : row.best_margin <= tol;
                report.pass = report.pass && row.pass;
                report.rows.push_back(std::move(row));
            }
        }

        if (cfg.terminal) {
            TerminalRow trow;
            trow.s0 = anchor.s0;
            trow.tolerance = cfg.fixed_tol ? *cfg.fixed_tol : cfg.tol_kappa * max_dt;
            trow.worst_gap = kind == Kind::super ? std::numeric_limits<double>::infinity()
                                                 : -std::numeric_limits<double>::infinity();
            const std::size_t last = cfg.grid->node_count() - 1;
            for (std::size_t k = 0; k < bundle.paths.size(); ++k) {
                const double gap = bundle.u_along[k][last] - (*cfg.terminal)(bundle.paths[k]);
                trow.worst_gap = kind == Kind::super ? std::min(trow.worst_gap, gap)
                                                     : std::max(trow.worst_gap, gap);
            }
            trow.pass = kind == Kind::super ? trow.worst_gap >= -trow.tolerance
                                            : trow.worst_gap <= trow.tolerance;
            report.pass = report.pass && trow.pass;
            report.terminal.push_back(trow);
        }
    }
    return report;
}

}  // namespace

CheckReport check_supersolution(const CandidateSolution& u, const Hamiltonian& h,
                                const CheckConfig& cfg) {
    return run_check(Kind::super, u, h, cfg);
}

CheckReport check_subsolution(const CandidateSolution& u, const Hamiltonian& h,
                              const CheckConfig& cfg) {
    return run_check(Kind::sub, u, h, cfg);
}

double mu_extremal(ExtremalMode mode, const std::function<double(const Path&)>& terminal,
                   const Hamiltonian& h, double level, std::span<const double> z,
                   const Anchor& anchor, double y0, GridPtr grid, std::size_t budget,
                   const std::vector<double>& kappas) {
    DriftFamily family(anchor.history.dim(), kappas);
    BundleSpec spec{level, anchor, family};
    const std::vector<CharacteristicPair> pairs = enumerate_bundle(h, spec, y0, z, grid, budget);
    double best = mode == ExtremalMode::plus ? -std::numeric_limits<double>::infinity()
                                             : std::numeric_limits<double>::infinity();
    for (const auto& p : pairs) {
        const double gap = terminal(p.x) - p.y.back();
        best = mode == ExtremalMode::plus ? std::max(best, gap) : std::min(best, gap);
    }
    return best;
}

double u_extremal(ExtremalMode mode, const std::function<double(const Path&)>& terminal,
                  const Hamiltonian& h, double level, std::span<const double> z,
                  const Anchor& anchor, GridPtr grid, std::size_t budget, double width_tol,
                  int max_doublings, const std::vector<double>& kappas) {
    const auto mu = [&](double r) {
        return mu_extremal(mode, terminal, h, level, z, anchor, r, grid, budget, kappas);
    };
    // mu is strictly decreasing in r with slope <= -1: find the sign change.
    const auto nonneg = [&](double r) { return mu(r) >= 0.0; };

    double lo = 0.0, hi = 0.0;
    if (nonneg(0.0)) {
        double step = 1.0;
        hi = step;
        int k = 0;
        while (nonneg(hi)) {
            lo = hi;
            step *= 2.0;
            hi = step;
            if (++k > max_doublings)
                throw std::runtime_error("u_extremal: bracket failure (unbounded extremal)");
        }
    } else {
        double step = 1.0;
        lo = -step;
        int k = 0;
        while (!nonneg(lo)) {
            hi = lo;
            step *= 2.0;
            lo = -step;
            if (++k > max_doublings)
                throw std::runtime_error("u_extremal: bracket failure (unbounded extremal)");
        }
    }
    while (hi - lo > width_tol) {
        const double mid = 0.5 * (lo + hi);
        if (nonneg(mid)) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

SandwichReport sandwich_check(const std::function<double(double, const Path&)>& v,
                              const std::function<double(const Path&)>& terminal,
                              const Hamiltonian& h, const CheckConfig& cfg, double tol_scale) {
    SandwichReport report;
    const double max_dt = cfg.grid->max_dt();
    for (const Anchor& anchor : cfg.anchors) {
        const double v0 = v(anchor.s0, anchor.history);
        double u0_upper = std::numeric_limits<double>::infinity();
        for (const auto& z : cfg.zset) {
            SandwichRow row;
            row.s0 = anchor.s0;
            row.z = z;
            row.u_minus = u_extremal(ExtremalMode::minus, terminal, h, cfg.level, z, anchor,
                                     cfg.grid, cfg.drift_budget, 1e-9, 60, cfg.kappas);
            row.u_plus = u_extremal(ExtremalMode::plus, terminal, h, cfg.level, z, anchor,
                                    cfg.grid, cfg.drift_budget, 1e-9, 60, cfg.kappas);
            row.v = v0;
            row.tolerance = tol_scale * cfg.tolerance(norm2(z), max_dt);
            row.pass = row.u_minus - row.tolerance <= v0 && v0 <= row.u_plus + row.tolerance;
            u0_upper = std::min(u0_upper, row.u_plus);
            report.pass = report.pass && row.pass;
            report.rows.push_back(std::move(row));
        }
        report.u0_upper_per_anchor.push_back(u0_upper);
    }
    return report;
}

ProbeReport comparison_probe(const CandidateSolution& u, const CandidateSolution& v,
                             const CandidateSolution& upsilon, const Hamiltonian& h,
                             double level, double epsilon, const Anchor& anchor, GridPtr grid,
                             std::size_t selector_budget, const std::vector<double>& kappas) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("comparison_probe: epsilon must be > 0");
    ProbeReport report;
    report.epsilon = epsilon;

    const double s0 = anchor.s0;
    const double T = grid->horizon();
    if (!(s0 < T)) throw std::invalid_argument("comparison_probe: anchor must satisfy s0 < T");
    const std::size_t anchor_index = grid->index_of(s0);

    DriftFamily family(anchor.history.dim(), kappas);
    BundleSpec spec{level, anchor, family};
    const std::size_t cap =
        family.selector_cap(grid->interval_count() - anchor_index, selector_budget);
    std::vector<Path> paths;
    paths.reserve(cap);
    for (std::size_t k = 0; k < cap; ++k) paths.push_back(sample_extension(spec, k, grid));

    report.m0 = u.value(s0, paths[0]) - v.value(s0, paths[0]);
    if (report.m0 <= 0.0) {
        report.positive_gap = false;
        report.note = "no positive gap: M0 <= 0, inequality not evaluated";
        return report;
    }
    report.positive_gap = true;

    // Exhaustive maximization of Phi_eps over the sampled compact set.
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < paths.size(); ++i) {
        for (std::size_t j = 0; j < paths.size(); ++j) {
            for (std::size_t n = anchor_index; n < grid->node_count(); ++n) {
                const double s = grid->node(n);
                const double w = u.value(s, paths[i]) - v.value(s, paths[j]);
                const double phi = w - (T - s) / (T - s0) * report.m0 / 2.0 -
                                   psi(s, paths[i], paths[j]) / epsilon;
                if (phi > best) {
                    best = phi;
                    report.s_eps = s;
                    report.selector_x = i;
                    report.selector_xt = j;
                }
            }
        }
    }
    report.phi_eps_max = best;

    const Path& xe = paths[report.selector_x];
    const Path& xte = paths[report.selector_xt];
    const double s = report.s_eps;
    const PsiPartials parts = psi_partials(s, xe, xte);
    std::vector<double> gx(parts.dx.size()), gxt(parts.dx.size()), gsum(parts.dx.size());
    for (std::size_t c = 0; c < gx.size(); ++c) {
        gx[c] = parts.dx[c] / epsilon;
        gxt[c] = parts.dxt[c] / epsilon;
        gsum[c] = gx[c] + gxt[c];
    }
    report.gradient_sum_norm = norm2(gsum);

    double sup_diff = 0.0;
    {
        std::vector<double> probes;
        for (double r : grid->nodes())
            if (r <= s + grid->node_tolerance()) probes.push_back(r);
        probes.push_back(s);
        for (double r : probes) {
            const auto a = xe.eval(std::min(r, s));
            const auto b = xte.eval(std::min(r, s));
            double d2 = 0.0;
            for (std::size_t c = 0; c < a.size(); ++c) d2 += (a[c] - b[c]) * (a[c] - b[c]);
            sup_diff = std::max(sup_diff, std::sqrt(d2));
        }
    }
    const double m_l = h.lipschitz_x ? h.lipschitz_x(level) : 0.0;
    const double dt_phi = -report.m0 / (2.0 * (T - s0));
    report.inequality_lhs = dt_phi +
                            m_l * (1.0 + std::abs(upsilon.value(s, xe)) + norm2(gx)) * sup_diff +
                            h.lipschitz_z * (1.0 + sup_history(xte, s)) * report.gradient_sum_norm;
    report.note = report.inequality_lhs >= 0.0
                      ? "viscosity inequality nonnegative at the sampled maximizer"
                      : "viscosity inequality negative at the sampled maximizer";
    return report;
}

nlohmann::ordered_json to_json(const CheckReport& report) {
    nlohmann::ordered_json out;
    out["kind"] = report.kind;
    out["pass"] = report.pass;
    out["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : report.rows)
        out["rows"].push_back({{"s0", r.s0},
                               {"z", r.z},
                               {"offset", r.offset},
                               {"best_margin", r.best_margin},
                               {"witness_selector", r.witness_selector},
                               {"tolerance", r.tolerance},
                               {"pass", r.pass}});
    out["terminal"] = nlohmann::ordered_json::array();
    for (const auto& t : report.terminal)
        out["terminal"].push_back({{"s0", t.s0},
                                   {"worst_gap", t.worst_gap},
                                   {"tolerance", t.tolerance},
                                   {"pass", t.pass}});
    return out;
}

nlohmann::ordered_json to_json(const SandwichReport& report) {
    nlohmann::ordered_json out;
    out["pass"] = report.pass;
    out["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : report.rows)
        out["rows"].push_back({{"s0", r.s0},
                               {"z", r.z},
                               {"u_minus", r.u_minus},
                               {"u_plus", r.u_plus},
                               {"v", r.v},
                               {"tolerance", r.tolerance},
                               {"pass", r.pass}});
    out["u0_upper_per_anchor"] = report.u0_upper_per_anchor;
    return out;
}

nlohmann::ordered_json to_json(const ProbeReport& report) {
    return nlohmann::ordered_json{{"epsilon", report.epsilon},
                                  {"M0", report.m0},
                                  {"positive_gap", report.positive_gap},
                                  {"s_eps", report.s_eps},
                                  {"selector_x", report.selector_x},
                                  {"selector_xt", report.selector_xt},
                                  {"phi_eps_max", report.phi_eps_max},
                                  {"inequality_lhs", report.inequality_lhs},
                                  {"gradient_sum_norm", report.gradient_sum_norm},
                                  {"note", report.note}};
}

VerifyReport verify_value_minimax(const ControlProblem& problem, const CheckConfig& cfg,
                                  std::size_t value_budget, double dpp_tol) {
    if (std::abs(cfg.level - problem.c_f) > 1e-12)
        throw std::invalid_argument("verify_value_minimax: level must equal C_f");

    const Hamiltonian h = control_hamiltonian(problem);
    const CandidateSolution cand = value_function_candidate(problem, cfg.grid, value_budget);

    CheckConfig cfg_terminal = cfg;
    cfg_terminal.terminal = problem.terminal_cost;

    VerifyReport report;
    report.supersolution = check_supersolution(cand, h, cfg_terminal);
    report.subsolution = check_subsolution(cand, h, cfg_terminal);
    report.sandwich = sandwich_check(cand.value, problem.terminal_cost, h, cfg, 2.0);

    // Budget-feasible DPP splits: short enumerated prefixes from each anchor.
    for (const Anchor& anchor : cfg.anchors) {
        const std::size_t k0 = cfg.grid->index_of(anchor.s0);
        for (std::size_t step : {std::size_t{1}, std::size_t{2}, std::size_t{4}}) {
            const std::size_t kt = k0 + step;
            if (kt >= cfg.grid->node_count()) continue;
            DppRow row;
            row.s = anchor.s0;
            row.t = cfg.grid->node(kt);
            row.residual = dpp_residual(problem, row.s, row.t, anchor.history, cfg.grid,
                                        value_budget);
            row.pass = row.residual <= dpp_tol;
            report.dpp.push_back(row);
        }
    }

    report.pass = report.supersolution.pass && report.subsolution.pass && report.sandwich.pass;
    for (const auto& row : report.dpp) report.pass = report.pass && row.pass;
    return report;
}

}  // namespace pdhj

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pdhj/calculus.hpp"
#include "pdhj/characteristics.hpp"
#include "pdhj/control.hpp"

namespace pdhj {

/// A candidate (sub/super)solution: an evaluator u(t, x) reading the path up
/// to time t, with optional path derivatives for classical candidates.
struct CandidateSolution {
    std::function<double(double, const Path&)> value;
    std::optional<SmoothFunctional> smooth;
};

/// Candidate backed by the control value function on the given grid.
CandidateSolution value_function_candidate(const ControlProblem& problem, GridPtr grid,
                                           std::size_t budget = default_value_budget);

/// Finite truncation of the defining quantifiers: "for every z" runs over
/// `zset`, "there exists (x, y)" searches the drift family up to
/// `drift_budget` selectors. A PASS is evidence at this resolution; a FAIL
/// with margin beyond tolerance is a counterexample certificate for the
/// discretized problem.
struct CheckConfig {
    double level = 1.0;
    GridPtr grid;
    std::vector<std::vector<double>> zset;
    std::vector<double> offsets = {0.0, 0.25};  // applied >= 0 (super), <= 0 (sub)
    std::vector<Anchor> anchors;
    std::size_t drift_budget = 32;
    std::vector<double> kappas = {0.0, 0.5, 1.0};
    double tol_kappa = 3.0;                     // tol(dt) = kappa (1 + |z|) dt
    std::optional<double> fixed_tol;            // overrides the schedule when set
    std::optional<std::function<double(const Path&)>> terminal;  // boundary data h

    double tolerance(double z_norm, double max_dt) const {
        return fixed_tol ? *fixed_tol : tol_kappa * (1.0 + z_norm) * max_dt;
    }
};

struct CheckRow {
    double s0 = 0.0;
    std::vector<double> z;
    double offset = 0.0;
    double best_margin = 0.0;
    std::size_t witness_selector = 0;
    double tolerance = 0.0;
    bool pass = false;
};

struct TerminalRow {
    double s0 = 0.0;
    double worst_gap = 0.0;  // signed, min/max over sampled terminal paths
    double tolerance = 0.0;
    bool pass = false;
};

struct CheckReport {
    std::string kind;  // "supersolution" | "subsolution"
    std::vector<CheckRow> rows;
    std::vector<TerminalRow> terminal;
    bool pass = true;
};

/// For every anchor, z and offset >= 0 with y0 = u(s0,x0) + offset, searches
/// the bundle for a pair with min_t (y(t) - u(t,x)) >= -tol; also checks
/// u(T,.) >= h - tol on the sampled terminal paths when h is supplied.
CheckReport check_supersolution(const CandidateSolution& u, const Hamiltonian& h,
                                const CheckConfig& cfg);
/// Mirror image: offsets <= 0, max_t (y(t) - u(t,x)) <= tol, u(T,.) <= h + tol.
CheckReport check_subsolution(const CandidateSolution& u, const Hamiltonian& h,
                              const CheckConfig& cfg);

enum class ExtremalMode { plus, minus };

/// sup (plus) or inf (minus) of h(x) - y(T) over the enumerated bundle.
double mu_extremal(ExtremalMode mode, const std::function<double(const Path&)>& terminal,
                   const Hamiltonian& h, double level, std::span<const double> z,
                   const Anchor& anchor, double y0, GridPtr grid, std::size_t budget,
                   const std::vector<double>& kappas = {0.0, 0.5, 1.0});

/// Root of r -> mu(mode)(..., r) by bisection; the monotone-shift property
/// mu(r+s) <= mu(r) - s makes the crossing unique. The bracket grows
/// geometrically from r = 0 and the bisection stops at width `width_tol`.
double u_extremal(ExtremalMode mode, const std::function<double(const Path&)>& terminal,
                  const Hamiltonian& h, double level, std::span<const double> z,
                  const Anchor& anchor, GridPtr grid, std::size_t budget,
                  double width_tol = 1e-9, int max_doublings = 60,
                  const std::vector<double>& kappas = {0.0, 0.5, 1.0});

struct SandwichRow {
    double s0 = 0.0;
    std::vector<double> z;
    double u_minus = 0.0;
    double u_plus = 0.0;
    double v = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct SandwichReport {
    std::vector<SandwichRow> rows;
    /// min over the z-set of u_extremal(plus): an upper approximation of the
    /// Perron infimum over all non-continuous supersolutions, per anchor.
    std::vector<double> u0_upper_per_anchor;
    bool pass = true;
};

/// Asserts u_extremal(minus) - tol <= v(s0, x0) <= u_extremal(plus) + tol for
/// each z and anchor.
SandwichReport sandwich_check(const std::function<double(double, const Path&)>& v,
                              const std::function<double(const Path&)>& terminal,
                              const Hamiltonian& h, const CheckConfig& cfg,
                              double tol_scale = 2.0);

struct ProbeReport {
    double epsilon = 0.0;
    double m0 = 0.0;
    bool positive_gap = false;
    double s_eps = 0.0;
    std::size_t selector_x = 0;
    std::size_t selector_xt = 0;
    double phi_eps_max = 0.0;
    double inequality_lhs = 0.0;   // viscosity-condition left side at the maximizer
    double gradient_sum_norm = 0.0;  // |dx phi_eps + dx~ phi_eps|, zero by antisymmetry
    std::string note;
};

/// Doubled-equation probe: maximizes
///   Phi_eps(s,x,x~) = u(s,x) - v(s,x~) - ((T-s)/(T-s0)) M0/2 - Psi/eps
/// over sampled [s0,T] x X^L x X^L and evaluates the viscosity inequality at
/// the sampled maximizer. Pure diagnostic.
ProbeReport comparison_probe(const CandidateSolution& u, const CandidateSolution& v,
                             const CandidateSolution& upsilon, const Hamiltonian& h,
                             double level, double epsilon, const Anchor& anchor, GridPtr grid,
                             std::size_t selector_budget,
                             const std::vector<double>& kappas = {0.0, 0.5, 1.0});

struct DppRow {
    double s = 0.0;
    double t = 0.0;
    double residual = 0.0;
    bool pass = false;
};

nlohmann::ordered_json to_json(const CheckReport& report);
nlohmann::ordered_json to_json(const SandwichReport& report);
nlohmann::ordered_json to_json(const ProbeReport& report);

struct VerifyReport {
    CheckReport supersolution;
    CheckReport subsolution;
    SandwichReport sandwich;
    std::vector<DppRow> dpp;
    bool pass = true;
};

/// Builds H and the value-function candidate for the problem, then runs both
/// minimax checks, the Perron sandwich and budget-feasible DPP splits.
VerifyReport verify_value_minimax(const ControlProblem& problem, const CheckConfig& cfg,
                                  std::size_t value_budget = default_value_budget,
                                  double dpp_tol = 1e-9);

}  // namespace pdhj

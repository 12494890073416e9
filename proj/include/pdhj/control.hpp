#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pdhj/path.hpp"

namespace pdhj {

struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Discounted optimal control of a functional ODE with a finite control set.
/// Coefficients may be merely measurable in t (evaluated at left endpoints);
/// any time discontinuities must be declared and kept on the grid.
struct ControlProblem {
    int dim = 1;
    double horizon = 1.0;
    std::vector<std::vector<double>> atoms;  // control values, one vector per atom

    std::function<std::vector<double>(double, const Path&, std::size_t)> drift;  // f(t, x, a)
    std::function<double(double, const Path&, std::size_t)> decay;               // lambda >= 0
    std::function<double(double, const Path&, std::size_t)> running_cost;        // ell
    std::function<double(const Path&)> terminal_cost;                            // h

    double c_f = 0.0;
    double c_lambda = 0.0;
    double l_f = 0.0;

    /// |h(x)| <= first + second * sup|x|; enables branch-and-bound pruning.
    std::optional<std::pair<double, double>> terminal_growth;
    /// The cost of a signal is affine in each interval's atom choice. Lets the
    /// exact minimum be taken atom-wise when exhaustive enumeration would
    /// exceed the budget; validated numerically before use.
    bool affine_cost = false;
    std::vector<double> time_exceptions;  // declared t-discontinuities
    std::string name;
};

/// Piecewise-constant control: one atom per grid interval starting at
/// `start_index`, constant on right-open intervals.
struct ControlSignal {
    GridPtr grid;
    std::size_t start_index = 0;
    std::vector<int> atoms;

    std::size_t atom_on_interval(std::size_t interval) const {
        return static_cast<std::size_t>(atoms.at(interval - start_index));
    }
    std::string digits() const {
        std::string s;
        s.reserve(atoms.size());
        for (int a : atoms) s += static_cast<char>('0' + a);
        return s;
    }
};

struct Trajectory {
    Path state;
    std::vector<double> discount;  // chi at every node (1 before the anchor)
    double running_cost_total = 0.0;
};

/// Explicit Euler with left-endpoint coefficients; history frozen on [0, s].
Path integrate_state(const ControlProblem& problem, double s, const Path& history,
                     const ControlSignal& signal, GridPtr grid);

/// chi(t) = exp(-sum lambda dt) (left Riemann sum in the exponent),
/// cost = sum chi ell dt + chi(T) h.
std::pair<Trajectory, double> evaluate_control(const ControlProblem& problem, double s,
                                               const Path& history, const ControlSignal& signal,
                                               GridPtr grid);

struct ValueResult {
    double v = 0.0;
    ControlSignal argmin;
};

inline constexpr std::size_t default_value_budget = std::size_t{1} << 16;

/// Exact minimum over all grid-piecewise-constant signals, by depth-first
/// branch-and-bound enumeration in lexicographic atom order (ties keep the
/// lexicographically smallest sequence). Throws BudgetExceeded when the
/// signal count exceeds `budget`.
ValueResult value(const ControlProblem& problem, double s, const Path& history, GridPtr grid,
                  std::size_t budget = default_value_budget);

/// value() when the enumeration fits the budget; otherwise the exact
/// atom-wise minimization for problems with affine cost (validated on probe
/// signals). Throws BudgetExceeded when neither route applies.
ValueResult value_auto(const ControlProblem& problem, double s, const Path& history,
                       GridPtr grid, std::size_t budget = default_value_budget);

/// Atom-wise exact minimization for affine-cost problems; exposed for the
/// oracle cross-checks.
ValueResult value_affine(const ControlProblem& problem, double s, const Path& history,
                         GridPtr grid);

/// |value(s,x0) - min over signals on [s,t] of [discounted running cost + chi(t) value(t, phi)]|.
double dpp_residual(const ControlProblem& problem, double s, double t, const Path& history,
                    GridPtr grid, std::size_t budget = default_value_budget);

struct RegularityModuli {
    double c_time = 0.0;
    double c_space = 0.0;
};

/// Empirical time/space moduli of the value function over sampled bundle
/// extensions at the given anchor times.
RegularityModuli regularity_modulus(const ControlProblem& problem, double level,
                                    const Path& history, std::span<const double> anchor_times,
                                    GridPtr grid, std::size_t samples = 6,
                                    std::size_t budget = default_value_budget);

ControlProblem preset_bang_linear();
ControlProblem preset_delay_drag();
ControlProblem preset_switch();
ControlProblem preset_running_cost();
ControlProblem preset_by_name(const std::string& name);

/// Parameterized coefficient family behind the presets and the inline
/// problem schema of the CLI (d = 1):
///   f(t,x,a) = g(t) * (control_gain*a + drift_constant + state_gain*x(t)
///              + delay_gain*x((t-tau) v 0)),   g = 1, or switch_factor after switch_time
///   lambda = lambda_const,  ell = ell_const + ell_state_sq*x(t)^2,
///   h(x) = h_state*x(T) + h_const.
struct CoefficientSpec {
    double horizon = 1.0;
    std::vector<double> atoms = {-1.0, 1.0};
    double control_gain = 1.0;
    double drift_constant = 0.0;
    double state_gain = 0.0;
    double delay_gain = 0.0;
    double tau = 0.0;
    std::optional<double> switch_time;
    double switch_factor = 1.0;
    double lambda_const = 0.0;
    double ell_const = 0.0;
    double ell_state_sq = 0.0;
    double h_state = 0.0;
    double h_const = 0.0;
    double c_f = 1.0;
    double c_lambda = 0.0;
    double l_f = 0.0;
    std::optional<std::pair<double, double>> terminal_growth;
    bool affine_cost = false;
    std::string name = "inline";
};

ControlProblem make_problem(const CoefficientSpec& spec);

}  // namespace pdhj

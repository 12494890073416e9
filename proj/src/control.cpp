#include "pdhj/control.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

#include "pdhj/bundle.hpp"
#include "pdhj/util.hpp"

namespace pdhj {

namespace {

std::size_t anchor_index_checked(const GridPtr& grid, double s, const char* who) {
    try {
        return grid->index_of(s);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument(std::string(who) + ": anchor time is not a grid node");
    }
}

/// Freezes the history onto grid nodes <= anchor and pads the tail with the
/// anchor value.
Path frozen_history(const ControlProblem& p, const Path& history, GridPtr grid,
                    std::size_t anchor_idx) {
    const int d = p.dim;
    if (history.dim() != d) throw std::invalid_argument("control: history dimension mismatch");
    const std::size_t n = grid->node_count();
    std::vector<double> samples(n * static_cast<std::size_t>(d));
    for (std::size_t i = 0; i <= anchor_idx; ++i)
        history.eval_into(grid->node(i),
                          {samples.data() + i * static_cast<std::size_t>(d),
                           static_cast<std::size_t>(d)});
    for (std::size_t i = anchor_idx + 1; i < n; ++i)
        for (int j = 0; j < d; ++j)
            samples[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] =
                samples[anchor_idx * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)];
    return Path(std::move(grid), d, Interp::linear, std::move(samples));
}

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw std::runtime_error(std::string("control: non-finite ") + what);
    return v;
}

/// One Euler step of the state, plus the discount/cost accumulators.
struct StepResult {
    double lambda_sum;  // sum of lambda*dt up to the new node
    double cost;        // sum of chi*ell*dt up to the new node
    double sup;         // running sup of |x|
};

StepResult advance(const ControlProblem& p, Path& state, std::size_t i, std::size_t atom,
                   double lambda_sum, double cost, double sup) {
    const GridPtr& grid = state.grid();
    const double t = grid->node(i);
    const double h = grid->dt(i);
    const int d = p.dim;

    const std::vector<double> f = p.drift(t, state, atom);
    if (f.size() != static_cast<std::size_t>(d) || !all_finite(f))
        throw std::runtime_error("control: non-finite drift");
    const double lam = checked(p.decay(t, state, atom), "decay");
    if (lam < 0.0) throw std::runtime_error("control: negative decay rate");
    const double ell = checked(p.running_cost(t, state, atom), "running cost");

    const double chi = std::exp(-lambda_sum);
    auto& buf = state.mutable_samples();
    for (int j = 0; j < d; ++j) {
        const std::size_t dst = (i + 1) * static_cast<std::size_t>(d) + static_cast<std::size_t>(j);
        buf[dst] = buf[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] +
                   h * f[static_cast<std::size_t>(j)];
    }
    return StepResult{lambda_sum + lam * h, cost + chi * ell * h,
                      std::max(sup, norm2(state.at(i + 1)))};
}

double signal_count_bounded(std::size_t atoms, std::size_t intervals, std::size_t cap) {
    double total = 1.0;
    for (std::size_t i = 0; i < intervals; ++i) {
        total *= static_cast<double>(atoms);
        if (total > static_cast<double>(cap)) return total;
    }
    return total;
}

struct SearchBest {
    double cost = std::numeric_limits<double>::infinity();
    std::vector<int> atoms;
};

/// Depth-first enumeration in lexicographic atom order. The incumbent is
/// updated only on strict improvement, so the first minimizer found is the
/// lexicographically smallest one. The node bound under-estimates every
/// completion; pruning uses a safety margin so float noise cannot discard a
/// potential improvement.
void dfs(const ControlProblem& p, Path& state, std::size_t i, std::size_t last,
         double lambda_sum, double cost, double sup, std::vector<int>& prefix,
         SearchBest& best) {
    const GridPtr& grid = state.grid();
    if (i == last) {
        const double total = cost + std::exp(-lambda_sum) * checked(p.terminal_cost(state), "h");
        if (total < best.cost) {
            best.cost = total;
            best.atoms = prefix;
        }
        return;
    }
    if (p.terminal_growth && std::isfinite(best.cost)) {
        const double t = grid->node(i);
        const double remaining = grid->horizon() - t;
        const double envelope = (1.0 + sup) * std::exp(p.c_f * remaining) - 1.0;
        const double chi = std::exp(-lambda_sum);
        const double lower = cost - chi * p.c_f * (1.0 + envelope) * remaining -
                             chi * (p.terminal_growth->first + p.terminal_growth->second * envelope);
        if (lower >= best.cost + 1e-12 * (1.0 + std::abs(best.cost))) return;
    }
    for (std::size_t a = 0; a < p.atoms.size(); ++a) {
        const StepResult r = advance(p, state, i, a, lambda_sum, cost, sup);
        prefix.push_back(static_cast<int>(a));
        dfs(p, state, i + 1, last, r.lambda_sum, r.cost, r.sup, prefix, best);
        prefix.pop_back();
    }
}

SearchBest search_from(const ControlProblem& p, const Path& base, std::size_t first,
                       std::size_t last, std::optional<std::size_t> fixed_first_atom) {
    Path state = base;
    SearchBest best;
    std::vector<int> prefix;
    double sup = 0.0;
    for (std::size_t i = 0; i <= first; ++i) sup = std::max(sup, norm2(state.at(i)));
    if (fixed_first_atom) {
        const StepResult r = advance(p, state, first, *fixed_first_atom, 0.0, 0.0, sup);
        prefix.push_back(static_cast<int>(*fixed_first_atom));
        dfs(p, state, first + 1, last, r.lambda_sum, r.cost, r.sup, prefix, best);
    } else {
        dfs(p, state, first, last, 0.0, 0.0, sup, prefix, best);
    }
    return best;
}

}  // namespace

Path integrate_state(const ControlProblem& problem, double s, const Path& history,
                     const ControlSignal& signal, GridPtr grid) {
    const std::size_t k0 = anchor_index_checked(grid, s, "integrate_state");
    if (signal.start_index != k0 || signal.atoms.size() != grid->interval_count() - k0)
        throw std::invalid_argument("integrate_state: signal does not cover [s, T]");
    Path state = frozen_history(problem, history, grid, k0);
    double sup = 0.0;
    for (std::size_t i = 0; i <= k0; ++i) sup = std::max(sup, norm2(state.at(i)));
    double lambda_sum = 0.0, cost = 0.0;
    for (std::size_t i = k0; i + 1 < grid->node_count(); ++i) {
        const StepResult r = advance(problem, state, i, signal.atom_on_interval(i), lambda_sum,
                                     cost, sup);
        lambda_sum = r.lambda_sum;
        cost = r.cost;
        sup = r.sup;
    }
    return state;
}

std::pair<Trajectory, double> evaluate_control(const ControlProblem& problem, double s,
                                               const Path& history, const ControlSignal& signal,
                                               GridPtr grid) {
    const std::size_t k0 = anchor_index_checked(grid, s, "evaluate_control");
    if (signal.start_index != k0 || signal.atoms.size() != grid->interval_count() - k0)
        throw std::invalid_argument("evaluate_control: signal does not cover [s, T]");
    Path state = frozen_history(problem, history, grid, k0);
    std::vector<double> chi(grid->node_count(), 1.0);
    double sup = 0.0;
    for (std::size_t i = 0; i <= k0; ++i) sup = std::max(sup, norm2(state.at(i)));
    double lambda_sum = 0.0, cost = 0.0;
    for (std::size_t i = k0; i + 1 < grid->node_count(); ++i) {
        const StepResult r = advance(problem, state, i, signal.atom_on_interval(i), lambda_sum,
                                     cost, sup);
        lambda_sum = r.lambda_sum;
        cost = r.cost;
        sup = r.sup;
        chi[i + 1] = std::exp(-lambda_sum);
    }
    const double total = cost + chi.back() * checked(problem.terminal_cost(state), "h");
    Trajectory traj{std::move(state), std::move(chi), cost};
    return {std::move(traj), total};
}

ValueResult value(const ControlProblem& problem, double s, const Path& history, GridPtr grid,
                  std::size_t budget) {
    if (problem.atoms.empty()) throw std::invalid_argument("value: empty control set");
    const std::size_t k0 = anchor_index_checked(grid, s, "value");
    const std::size_t last = grid->node_count() - 1;
    const std::size_t intervals = last - k0;
    if (signal_count_bounded(problem.atoms.size(), intervals, budget) >
        static_cast<double>(budget))
        throw BudgetExceeded("value: enumeration budget exceeded");

    const Path base = frozen_history(problem, history, grid, k0);

    SearchBest best;
    const bool parallel = intervals >= 12 && std::thread::hardware_concurrency() > 1 &&
                          problem.atoms.size() > 1;
    if (parallel) {
        // One task per first-interval atom, each with its own incumbent; the
        // reduction below is in atom order, so the result does not depend on
        // completion order.
        std::vector<std::future<SearchBest>> tasks;
        tasks.reserve(problem.atoms.size());
        for (std::size_t a = 0; a < problem.atoms.size(); ++a)
            tasks.push_back(std::async(std::launch::async, [&, a] {
                return search_from(problem, base, k0, last, a);
            }));
        for (auto& t : tasks) {
            SearchBest cand = t.get();
            if (cand.cost < best.cost) best = std::move(cand);
        }
    } else {
        best = search_from(problem, base, k0, last, std::nullopt);
    }

    ValueResult out;
    out.v = best.cost;
    out.argmin = ControlSignal{grid, k0, std::move(best.atoms)};
    return out;
}

ValueResult value_affine(const ControlProblem& problem, double s, const Path& history,
                         GridPtr grid) {
    const std::size_t k0 = anchor_index_checked(grid, s, "value_affine");
    const std::size_t intervals = grid->interval_count() - k0;
    const std::size_t n_atoms = problem.atoms.size();

    ControlSignal base{grid, k0, std::vector<int>(intervals, 0)};
    const double cost0 = evaluate_control(problem, s, history, base, grid).second;

    // One-flip costs give the per-interval contribution of each atom choice.
    std::vector<std::vector<double>> delta(intervals, std::vector<double>(n_atoms, 0.0));
    for (std::size_t i = 0; i < intervals; ++i) {
        for (std::size_t a = 1; a < n_atoms; ++a) {
            ControlSignal flipped = base;
            flipped.atoms[i] = static_cast<int>(a);
            delta[i][a] = evaluate_control(problem, s, history, flipped, grid).second - cost0;
        }
    }

    ControlSignal argmin = base;
    double predicted = cost0;
    for (std::size_t i = 0; i < intervals; ++i) {
        std::size_t pick = 0;
        for (std::size_t a = 1; a < n_atoms; ++a)
            if (delta[i][a] < delta[i][pick]) pick = a;
        argmin.atoms[i] = static_cast<int>(pick);
        predicted += delta[i][pick];
    }

    // Superposition probe: the one-flip decomposition must reproduce the cost
    // of signals that mix atoms across intervals. Catches problems that were
    // wrongly declared affine.
    if (intervals > 0 && n_atoms > 1) {
        for (std::size_t variant = 0; variant < 2; ++variant) {
            ControlSignal probe = base;
            double expect = cost0;
            for (std::size_t i = 0; i < intervals; ++i) {
                const std::size_t a = (i + variant + 1) % n_atoms;
                probe.atoms[i] = static_cast<int>(a);
                expect += delta[i][a];
            }
            const double got = evaluate_control(problem, s, history, probe, grid).second;
            if (std::abs(got - expect) > 1e-9 * (1.0 + std::abs(got)))
                throw BudgetExceeded(
                    "value_auto: cost is not affine in the control despite the declaration");
        }
    }

    const double v = evaluate_control(problem, s, history, argmin, grid).second;
    if (std::abs(v - predicted) > 1e-9 * (1.0 + std::abs(v)))
        throw BudgetExceeded("value_auto: affine minimization is inconsistent");
    return ValueResult{v, std::move(argmin)};
}

ValueResult value_auto(const ControlProblem& problem, double s, const Path& history,
                       GridPtr grid, std::size_t budget) {
    const std::size_t k0 = anchor_index_checked(grid, s, "value_auto");
    const std::size_t intervals = grid->interval_count() - k0;
    if (signal_count_bounded(problem.atoms.size(), intervals, budget) <=
        static_cast<double>(budget))
        return value(problem, s, history, grid, budget);
    if (problem.affine_cost) return value_affine(problem, s, history, grid);
    throw BudgetExceeded("value_auto: enumeration budget exceeded and cost is not affine");
}

double dpp_residual(const ControlProblem& problem, double s, double t, const Path& history,
                    GridPtr grid, std::size_t budget) {
    const std::size_t k0 = anchor_index_checked(grid, s, "dpp_residual");
    const std::size_t kt = anchor_index_checked(grid, t, "dpp_residual");
    if (!(k0 < kt)) throw std::invalid_argument("dpp_residual: need s < t");
    const std::size_t prefix_len = kt - k0;
    if (signal_count_bounded(problem.atoms.size(), prefix_len, budget) >
        static_cast<double>(budget))
        throw BudgetExceeded("dpp_residual: prefix enumeration budget exceeded");

    const double lhs = value_auto(problem, s, history, grid, budget).v;

    const Path base = frozen_history(problem, history, grid, k0);
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> prefix;
    Path state = base;

    // Enumerate the prefix signals on [s, t]; each leaf re-anchors the value
    // problem at (t, phi).
    std::function<void(std::size_t, double, double, double)> rec =
        [&](std::size_t i, double lambda_sum, double cost, double sup) {
            if (i == kt) {
                const double chi_t = std::exp(-lambda_sum);
                const double tail = value_auto(problem, t, state, grid, budget).v;
                best = std::min(best, cost + chi_t * tail);
                return;
            }
            for (std::size_t a = 0; a < problem.atoms.size(); ++a) {
                const StepResult r = advance(problem, state, i, a, lambda_sum, cost, sup);
                rec(i + 1, r.lambda_sum, r.cost, r.sup);
            }
        };
    double sup0 = 0.0;
    for (std::size_t i = 0; i <= k0; ++i) sup0 = std::max(sup0, norm2(state.at(i)));
    rec(k0, 0.0, 0.0, sup0);

    return std::abs(lhs - best);
}

RegularityModuli regularity_modulus(const ControlProblem& problem, double level,
                                    const Path& history, std::span<const double> anchor_times,
                                    GridPtr grid, std::size_t samples, std::size_t budget) {
    RegularityModuli out;
    DriftFamily family(problem.dim);

    const auto sup_separation = [&](const Path& a, const Path& b, double upto) {
        double sep = 0.0;
        for (std::size_t i = 0; i < grid->node_count(); ++i) {
            if (grid->node(i) > upto + grid->node_tolerance()) break;
            double d2 = 0.0;
            const auto va = a.at(i);
            const auto vb = b.at(i);
            for (std::size_t c = 0; c < va.size(); ++c) d2 += (va[c] - vb[c]) * (va[c] - vb[c]);
            sep = std::max(sep, std::sqrt(d2));
        }
        return sep;
    };

    for (double t0 : anchor_times) {
        BundleSpec spec{level, Anchor{t0, history}, family};
        const std::size_t nsel = family.selector_cap(
            grid->interval_count() - grid->index_of(t0), samples);
        std::vector<Path> paths;
        for (std::size_t k = 0; k < nsel; ++k) paths.push_back(sample_extension(spec, k, grid));

        std::vector<double> vals;
        for (const Path& x : paths) vals.push_back(value_auto(problem, t0, x, grid, budget).v);

        // Bundle members share the history on [0, t0], so the space modulus is
        // evaluated at the later anchor times, where the members have diverged.
        for (double t1 : anchor_times) {
            if (!(t1 > t0)) continue;
            std::vector<double> later;
            for (std::size_t k = 0; k < paths.size(); ++k) {
                later.push_back(value_auto(problem, t1, paths[k], grid, budget).v);
                out.c_time = std::max(out.c_time, std::abs(vals[k] - later[k]) / (t1 - t0));
            }
            for (std::size_t i = 0; i < paths.size(); ++i) {
                for (std::size_t j = i + 1; j < paths.size(); ++j) {
                    const double sep = sup_separation(paths[i], paths[j], t1);
                    if (sep < 1e-6) continue;
                    out.c_space =
                        std::max(out.c_space, std::abs(later[i] - later[j]) / sep);
                }
            }
        }
    }
    return out;
}

ControlProblem make_problem(const CoefficientSpec& spec) {
    if (spec.atoms.empty()) throw std::invalid_argument("make_problem: empty control set");
    ControlProblem p;
    p.dim = 1;
    p.horizon = spec.horizon;
    for (double a : spec.atoms) p.atoms.push_back({a});

    const double tau = spec.tau;
    p.drift = [spec, tau](double t, const Path& x, std::size_t a) {
        double gain = 1.0;
        if (spec.switch_time && t >= *spec.switch_time) gain = spec.switch_factor;
        double v = spec.control_gain * spec.atoms[a] + spec.drift_constant;
        if (spec.state_gain != 0.0) v += spec.state_gain * x.eval1(t);
        if (spec.delay_gain != 0.0) v += spec.delay_gain * x.eval1(std::max(t - tau, 0.0));
        return std::vector<double>{gain * v};
    };
    p.decay = [c = spec.lambda_const](double, const Path&, std::size_t) { return c; };
    p.running_cost = [spec](double t, const Path& x, std::size_t) {
        double v = spec.ell_const;
        if (spec.ell_state_sq != 0.0) {
            const double xt = x.eval1(t);
            v += spec.ell_state_sq * xt * xt;
        }
        return v;
    };
    p.terminal_cost = [spec](const Path& x) {
        return spec.h_state * x.eval1(x.grid()->horizon()) + spec.h_const;
    };
    p.c_f = spec.c_f;
    p.c_lambda = spec.c_lambda;
    p.l_f = spec.l_f;
    p.terminal_growth = spec.terminal_growth;
    p.affine_cost = spec.affine_cost;
    if (spec.switch_time) p.time_exceptions.push_back(*spec.switch_time);
    p.name = spec.name;
    return p;
}

ControlProblem preset_bang_linear() {
    CoefficientSpec s;
    s.atoms = {-1.0, 1.0};
    s.control_gain = 1.0;
    s.lambda_const = 0.5;
    s.h_state = 1.0;
    s.c_f = 1.0;
    s.c_lambda = 0.5;
    s.l_f = 0.0;
    s.terminal_growth = {{0.0, 1.0}};
    s.affine_cost = true;
    s.name = "bang-linear";
    return make_problem(s);
}

ControlProblem preset_delay_drag() {
    CoefficientSpec s;
    s.atoms = {-1.0, 1.0};
    s.control_gain = 1.0;
    s.delay_gain = -1.0;
    s.tau = 0.25;
    s.lambda_const = 0.5;
    s.h_state = 1.0;
    s.c_f = 1.0;
    s.c_lambda = 0.5;
    s.l_f = 1.0;
    s.terminal_growth = {{0.0, 1.0}};
    s.affine_cost = true;
    s.name = "delay-drag";
    return make_problem(s);
}

ControlProblem preset_switch() {
    CoefficientSpec s;
    s.atoms = {-1.0, 1.0};
    s.control_gain = 1.0;
    s.switch_time = 0.5;
    s.switch_factor = 2.0;
    s.h_state = 1.0;
    s.c_f = 2.0;
    s.c_lambda = 0.0;
    s.l_f = 0.0;
    s.terminal_growth = {{0.0, 1.0}};
    s.affine_cost = true;
    s.name = "switch";
    return make_problem(s);
}

ControlProblem preset_running_cost() {
    CoefficientSpec s;
    s.atoms = {-1.0, 0.0, 1.0};
    s.control_gain = 1.0;
    s.ell_state_sq = 1.0;
    s.c_f = 2.0;  // sized for the desk-scale sample range |x| <= 2
    s.c_lambda = 0.0;
    s.l_f = 4.0;
    s.terminal_growth = {{0.0, 0.0}};
    s.affine_cost = false;
    s.name = "running-cost";
    return make_problem(s);
}

ControlProblem preset_by_name(const std::string& name) {
    if (name == "bang-linear") return preset_bang_linear();
    if (name == "delay-drag") return preset_delay_drag();
    if (name == "switch") return preset_switch();
    if (name == "running-cost") return preset_running_cost();
    throw std::invalid_argument("unknown preset: " + name);
}

}  // namespace pdhj

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pdhj/path.hpp"

namespace pdhj {

/// A functional of (t, x, x~) together with its claimed path derivatives.
/// The chain-rule residual quantifies how compatible the claims are.
struct SmoothFunctional {
    std::function<double(double, const Path&, const Path&)> value;
    std::function<double(double, const Path&, const Path&)> time_derivative;
    std::function<std::vector<double>(double, const Path&, const Path&)> x_gradient;
    std::function<std::vector<double>(double, const Path&, const Path&)> xt_gradient;

    /// Single-path variant: the second path is ignored and its gradient is 0.
    static SmoothFunctional single_path(
        std::function<double(double, const Path&)> value,
        std::function<double(double, const Path&)> time_derivative,
        std::function<std::vector<double>(double, const Path&)> x_gradient);
};

/// | phi(t,x,x~) - phi(t0,x0,x~0) - integral of [dt phi + x'.dx phi + x~'.dx~ phi] |
/// with the integral by midpoint quadrature. Quadrature runs on the path grid
/// by default; passing `quadrature` evaluates the same integrand on a coarser
/// grid (used by the convergence checks).
double chain_rule_residual(const SmoothFunctional& phi, double t0, const Path& x0,
                           const Path& xt0, const Path& x, const Path& xt, double t,
                           const TimeGrid* quadrature = nullptr);

/// Penalty functional of the comparison argument: with
/// S = sup_{t<=s} |x(t)-x~(t)|^2 and D = x(s)-x~(s),
/// psi = (S - |D|^2)/S + |D|^2 when S > 0, else exactly 0.
double psi(double s, const Path& x, const Path& xt);

struct PsiPartials {
    double dt = 0.0;
    std::vector<double> dx;
    std::vector<double> dxt;  // exactly -dx
};

/// dt psi = 0 and dx psi = -dx~ psi = (2 - (4S - |D|^2)/S) * D (zero when S = 0).
PsiPartials psi_partials(double s, const Path& x, const Path& xt);

struct PsiBoundsRow {
    double s = 0.0;
    double psi = 0.0;
    double lower_bound = 0.0;  // (3 - sqrt 5)/2 * S
    double upper_bound = 0.0;  // 2 * S
    double grad_norm = 0.0;
    double grad_bound = 0.0;  // 2 |x(s) - x~(s)|
    bool violated_lower = false;
    bool violated_upper = false;
    bool violated_grad = false;
    bool sup_attained_at_s = false;
};

/// Diagnostic table of the two-sided bound and the gradient bound. Never
/// raises on violations; the displayed bounds are known to fail off the
/// sup-attained-at-s regime and the table records exactly where.
std::vector<PsiBoundsRow> psi_bounds_report(
    std::span<const std::tuple<double, Path, Path>> pairs);

PsiBoundsRow psi_bounds_row(double s, const Path& x, const Path& xt);

/// Constant (3 - sqrt 5)/2 of the lower bound.
inline constexpr double psi_lower_constant = 0.38196601125010515;

}  // namespace pdhj

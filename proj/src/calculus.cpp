#include "pdhj/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pdhj/util.hpp"

namespace pdhj {

SmoothFunctional SmoothFunctional::single_path(
    std::function<double(double, const Path&)> value,
    std::function<double(double, const Path&)> time_derivative,
    std::function<std::vector<double>(double, const Path&)> x_gradient) {
    SmoothFunctional f;
    f.value = [fn = std::move(value)](double t, const Path& x, const Path&) { return fn(t, x); };
    f.time_derivative = [fn = std::move(time_derivative)](double t, const Path& x, const Path&) {
        return fn(t, x);
    };
    f.x_gradient = [fn = std::move(x_gradient)](double t, const Path& x, const Path&) {
        return fn(t, x);
    };
    f.xt_gradient = [](double, const Path& x, const Path&) {
        return std::vector<double>(static_cast<std::size_t>(x.dim()), 0.0);
    };
    return f;
}

namespace {

void check_anchor_agreement(const Path& x, const Path& x0, double t0, const char* what) {
    std::vector<double> a(static_cast<std::size_t>(x.dim()));
    for (std::size_t i = 0; i < x.node_count(); ++i) {
        const double r = x.grid()->node(i);
        if (r > t0 + x.grid()->node_tolerance()) break;
        x0.eval_into(r, a);
        const auto b = x.at(i);
        for (std::size_t j = 0; j < a.size(); ++j)
            if (std::abs(a[j] - b[j]) > 1e-12)
                throw std::invalid_argument(std::string("chain_rule_residual: ") + what +
                                            " does not agree with its anchor on [0, t0]");
    }
}

}  // namespace

double chain_rule_residual(const SmoothFunctional& phi, double t0, const Path& x0,
                           const Path& xt0, const Path& x, const Path& xt, double t,
                           const TimeGrid* quadrature) {
    if (!(t > t0)) throw std::invalid_argument("chain_rule_residual: need t > t0");
    if (x.mode() != Interp::linear || xt.mode() != Interp::linear)
        throw std::invalid_argument("chain_rule_residual: extensions must be linear-mode");
    check_anchor_agreement(x, x0, t0, "x");
    check_anchor_agreement(xt, xt0, t0, "x~");

    const TimeGrid& quad = quadrature ? *quadrature : *x.grid();
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < quad.node_count(); ++i) {
        const double lo = std::max(quad.node(i), t0);
        const double hi = std::min(quad.node(i + 1), t);
        if (hi <= lo) continue;
        const double mid = 0.5 * (lo + hi);
        const std::vector<double> xs = x.segment_slope(x.grid()->segment_of(mid));
        const std::vector<double> xts = xt.segment_slope(xt.grid()->segment_of(mid));
        const double term = phi.time_derivative(mid, x, xt) +
                            dot(xs, phi.x_gradient(mid, x, xt)) +
                            dot(xts, phi.xt_gradient(mid, x, xt));
        integral += term * (hi - lo);
    }
    return std::abs(phi.value(t, x, xt) - phi.value(t0, x0, xt0) - integral);
}

namespace {

struct PsiCore {
    double sup_sq = 0.0;   // S
    double delta_sq = 0.0; // |D|^2
    std::vector<double> delta;
};

PsiCore psi_core(double s, const Path& x, const Path& xt) {
    if (x.dim() != xt.dim()) throw std::invalid_argument("psi: dimension mismatch");
    std::vector<double> probes;
    const double tol = x.grid()->node_tolerance();
    for (double r : x.grid()->nodes())
        if (r <= s + tol) probes.push_back(r);
    for (double r : xt.grid()->nodes())
        if (r <= s + tol) probes.push_back(r);
    probes.push_back(s);

    PsiCore core;
    std::vector<double> a(static_cast<std::size_t>(x.dim()));
    std::vector<double> b(static_cast<std::size_t>(x.dim()));
    for (double r : probes) {
        const double rr = std::min(r, s);
        x.eval_into(rr, a);
        xt.eval_into(rr, b);
        double d2 = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
        core.sup_sq = std::max(core.sup_sq, d2);
    }
    x.eval_into(s, a);
    xt.eval_into(s, b);
    core.delta.resize(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
        core.delta[j] = a[j] - b[j];
        core.delta_sq += core.delta[j] * core.delta[j];
    }
    return core;
}

}  // namespace

double psi(double s, const Path& x, const Path& xt) {
    const PsiCore core = psi_core(s, x, xt);
    if (core.sup_sq == 0.0) return 0.0;
    return (core.sup_sq - core.delta_sq) / core.sup_sq + core.delta_sq;
}

PsiPartials psi_partials(double s, const Path& x, const Path& xt) {
    const PsiCore core = psi_core(s, x, xt);
    PsiPartials out;
    out.dx.assign(core.delta.size(), 0.0);
    out.dxt.assign(core.delta.size(), 0.0);
    if (core.sup_sq == 0.0) return out;
    const double coef = 2.0 - (4.0 * core.sup_sq - core.delta_sq) / core.sup_sq;
    for (std::size_t j = 0; j < core.delta.size(); ++j) {
        out.dx[j] = coef * core.delta[j];
        out.dxt[j] = -out.dx[j];
    }
    return out;
}

PsiBoundsRow psi_bounds_row(double s, const Path& x, const Path& xt) {
    const PsiCore core = psi_core(s, x, xt);
    PsiBoundsRow row;
    row.s = s;
    row.psi = psi(s, x, xt);
    row.lower_bound = psi_lower_constant * core.sup_sq;
    row.upper_bound = 2.0 * core.sup_sq;
    row.grad_norm = norm2(psi_partials(s, x, xt).dx);
    row.grad_bound = 2.0 * std::sqrt(core.delta_sq);
    row.violated_lower = row.psi < row.lower_bound - 1e-12;
    row.violated_upper = row.psi > row.upper_bound + 1e-12;
    row.violated_grad = row.grad_norm > row.grad_bound + 1e-12;
    row.sup_attained_at_s = core.delta_sq >= core.sup_sq * (1.0 - 1e-12);
    return row;
}

std::vector<PsiBoundsRow> psi_bounds_report(
    std::span<const std::tuple<double, Path, Path>> pairs) {
    std::vector<PsiBoundsRow> rows;
    rows.reserve(pairs.size());
    for (const auto& [s, x, xt] : pairs) rows.push_back(psi_bounds_row(s, x, xt));
    return rows;
}

}  // namespace pdhj

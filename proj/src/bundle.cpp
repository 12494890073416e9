#include "pdhj/bundle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pdhj/util.hpp"

namespace pdhj {

namespace {
// Absorbs rounding of the clamp arithmetic so that freshly integrated
// extensions pass the slope test at tol = 0. Recovering the slope from the
// stored nodes loses about eps * |x| / dt, so the slack carries that scale.
double slope_slack(double bound, double a, double b, double dt) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    return 16.0 * eps * (1.0 + bound + (std::abs(a) + std::abs(b)) / dt);
}
}  // namespace

DriftFamily::DriftFamily(int dim, std::vector<double> kappas) : dim_(dim) {
    if (dim <= 0) throw std::invalid_argument("DriftFamily: dimension must be positive");
    if (kappas.empty()) throw std::invalid_argument("DriftFamily: empty kappa set");
    atoms_.push_back(DriftAtom{0.0, std::vector<double>(static_cast<std::size_t>(dim), 0.0)});
    for (double kappa : kappas) {
        if (kappa < 0.0) throw std::invalid_argument("DriftFamily: kappa must be >= 0");
        if (kappa == 0.0) continue;  // collapses to the zero atom
        for (int j = 0; j < dim; ++j) {
            for (double sign : {1.0, -1.0}) {
                std::vector<double> e(static_cast<std::size_t>(dim), 0.0);
                e[static_cast<std::size_t>(j)] = sign;
                atoms_.push_back(DriftAtom{kappa, std::move(e)});
                if (kappa == 1.0 && j == 0) {
                    if (sign > 0) max_up_ = atoms_.size() - 1;
                    else max_down_ = atoms_.size() - 1;
                }
            }
        }
    }
}

std::size_t DriftFamily::selector_atom(std::size_t k, std::size_t interval_after_anchor) const {
    const std::size_t a = atoms_.size();
    if (k < a) return k;
    // Mixed-radix digits of (k - a + 1); the +1 keeps the all-zero digit
    // string (a duplicate of the constant zero selector) out of the range.
    std::size_t m = k - a + 1;
    for (std::size_t j = 0; j < interval_after_anchor && m > 0; ++j) m /= a;
    return m % a;
}

DriftSelector DriftFamily::selector(std::size_t k) const {
    return [fam = *this, k](double, std::size_t interval, const Path&, double running_sup,
                            double level) {
        const DriftAtom& atom = fam.atoms_[fam.selector_atom(k, interval)];
        const double magnitude = atom.kappa * level * (1.0 + running_sup);
        std::vector<double> v(atom.direction.size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = magnitude * atom.direction[j];
        return v;
    };
}

std::size_t DriftFamily::selector_cap(std::size_t intervals, std::size_t cap) const {
    if (atoms_.size() == 1 || intervals == 0) return std::min<std::size_t>(1, cap);
    double total = 1.0;
    for (std::size_t i = 0; i < intervals; ++i) {
        total *= static_cast<double>(atoms_.size());
        if (total >= static_cast<double>(cap)) return cap;
    }
    return std::min(static_cast<std::size_t>(total), cap);
}

Path sample_extension(const BundleSpec& spec, const DriftSelector& selector, GridPtr grid) {
    const Path& history = spec.anchor.history;
    const int d = history.dim();
    std::size_t anchor_idx;
    try {
        anchor_idx = grid->index_of(spec.anchor.s0);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("sample_extension: grid does not contain the anchor time");
    }

    const std::size_t n = grid->node_count();
    std::vector<double> samples(n * static_cast<std::size_t>(d));
    for (std::size_t i = 0; i <= anchor_idx; ++i)
        history.eval_into(grid->node(i),
                          {samples.data() + i * static_cast<std::size_t>(d),
                           static_cast<std::size_t>(d)});
    // Values beyond the anchor start as the anchor value and are overwritten
    // as the integration advances.
    for (std::size_t i = anchor_idx + 1; i < n; ++i)
        for (int j = 0; j < d; ++j)
            samples[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] =
                samples[anchor_idx * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)];

    Path out(grid, d, Interp::linear, std::move(samples));
    auto& buf = out.mutable_samples();

    double running_sup = 0.0;
    for (std::size_t i = 0; i <= anchor_idx; ++i) running_sup = std::max(running_sup, norm2(out.at(i)));

    for (std::size_t i = anchor_idx; i + 1 < n; ++i) {
        const double t = grid->node(i);
        const double bound = spec.level * (1.0 + running_sup);
        std::vector<double> v = selector(t, i - anchor_idx, out, running_sup, spec.level);
        if (v.size() != static_cast<std::size_t>(d) || !all_finite(v))
            throw std::invalid_argument("sample_extension: bad drift value");
        const double mag = norm2(v);
        if (mag > bound) {
            const double scale = bound / mag;
            for (double& c : v) c *= scale;
        }
        const double h = grid->dt(i);
        for (int j = 0; j < d; ++j) {
            const std::size_t dst = (i + 1) * static_cast<std::size_t>(d) + static_cast<std::size_t>(j);
            buf[dst] = buf[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] +
                       h * v[static_cast<std::size_t>(j)];
        }
        running_sup = std::max(running_sup, norm2(out.at(i + 1)));
    }
    return out;
}

Path sample_extension(const BundleSpec& spec, std::size_t selector_index, GridPtr grid) {
    return sample_extension(spec, spec.family.selector(selector_index), std::move(grid));
}

bool check_membership(const Path& x, const BundleSpec& spec, double tol) {
    if (tol < 0.0) throw std::invalid_argument("check_membership: tol must be >= 0");
    const Path& history = spec.anchor.history;
    if (x.dim() != history.dim()) return false;
    if (!x.grid()->contains(spec.anchor.s0)) return false;
    const std::size_t anchor_idx = x.grid()->index_of(spec.anchor.s0);

    const double hist_tol = std::max(tol, 1e-12);
    std::vector<double> h(static_cast<std::size_t>(x.dim()));
    for (std::size_t i = 0; i <= anchor_idx; ++i) {
        history.eval_into(x.grid()->node(i), h);
        const auto a = x.at(i);
        for (std::size_t j = 0; j < h.size(); ++j)
            if (std::abs(a[j] - h[j]) > hist_tol) return false;
    }

    double running_sup = 0.0;
    for (std::size_t i = 0; i <= anchor_idx; ++i) running_sup = std::max(running_sup, norm2(x.at(i)));
    for (std::size_t i = anchor_idx; i + 1 < x.node_count(); ++i) {
        const double bound = spec.level * (1.0 + running_sup);
        const double slope = norm2(x.segment_slope(i));
        const double slack =
            slope_slack(bound, norm2(x.at(i)), norm2(x.at(i + 1)), x.grid()->dt(i));
        if (slope > bound + tol + slack) return false;
        running_sup = std::max(running_sup, norm2(x.at(i + 1)));
    }
    return true;
}

double growth_envelope(const BundleSpec& spec, double horizon) {
    const double s0 = sup_history(spec.anchor.history, spec.anchor.s0);
    return (1.0 + s0) * std::exp(spec.level * (horizon - spec.anchor.s0)) - 1.0 + s0;
}

}  // namespace pdhj

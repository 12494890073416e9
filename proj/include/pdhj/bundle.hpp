#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "pdhj/path.hpp"

namespace pdhj {

/// Drift requested at the left node of one grid interval. The selector sees
/// the extension built so far, stopped at the current time: sample values
/// strictly beyond the current node are unspecified and must not be read.
using DriftSelector = std::function<std::vector<double>(
    double t, std::size_t interval_after_anchor, const Path& x_so_far, double running_sup,
    double level)>;

struct DriftAtom {
    double kappa = 0.0;
    std::vector<double> direction;  // zero vector or +-e_j
};

/// Finite family of piecewise-constant drift selectors. Atom k requests
/// kappa * L * (1 + sup_{s<=t}|x(s)|) * e. Selector indices below
/// atom_count() are the constant-atom selectors; larger indices decode a
/// per-interval atom assignment in mixed radix (little-endian over the
/// intervals after the anchor, trailing intervals falling back to atom 0).
class DriftFamily {
public:
    explicit DriftFamily(int dim, std::vector<double> kappas = {0.0, 0.5, 1.0});

    std::size_t atom_count() const { return atoms_.size(); }
    const DriftAtom& atom(std::size_t k) const { return atoms_[k]; }
    int dim() const { return dim_; }

    /// Atom used by selector `k` on the given interval after the anchor.
    std::size_t selector_atom(std::size_t k, std::size_t interval_after_anchor) const;

    DriftSelector selector(std::size_t k) const;

    /// Number of distinct selectors for a given interval count, saturated at `cap`.
    std::size_t selector_cap(std::size_t intervals, std::size_t cap) const;

    /// Constant-atom selector index realizing kappa = 1 in direction +-e_0;
    /// handy for growth-envelope tests.
    std::size_t max_up_index() const { return max_up_; }
    std::size_t max_down_index() const { return max_down_; }

private:
    int dim_;
    std::vector<DriftAtom> atoms_;
    std::size_t max_up_ = 0, max_down_ = 0;
};

/// The Lipschitz-like bundle: extensions of a frozen history whose slope is
/// bounded by L * (1 + running sup of |x|).
struct BundleSpec {
    double level = 0.0;  // L >= 0
    Anchor anchor;
    DriftFamily family;
};

/// Integrates x' = selector(t, x) with the slope clamp enforced at every
/// node (first-order, left-endpoint). The result is frozen to the history on
/// [0, s0] and passes check_membership at tolerance 0.
Path sample_extension(const BundleSpec& spec, const DriftSelector& selector, GridPtr grid);
Path sample_extension(const BundleSpec& spec, std::size_t selector_index, GridPtr grid);

/// True iff x equals the history on [0, s0] node-wise (within max(tol, 1e-12))
/// and every segment slope on [s0, T] satisfies
/// |slope| <= L * (1 + sup_{s<=t_left}|x(s)|) + tol.
bool check_membership(const Path& x, const BundleSpec& spec, double tol);

/// Closed-form uniform bound on |x(t)| over the bundle.
double growth_envelope(const BundleSpec& spec, double horizon);

}  // namespace pdhj

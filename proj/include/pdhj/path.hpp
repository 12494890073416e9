#pragma once

#include <span>
#include <string>
#include <vector>

#include "pdhj/time_grid.hpp"

namespace pdhj {

/// Interpolation between grid nodes. `linear` paths are the absolutely
/// continuous extensions the solver works with; `step` (cadlag
/// piecewise-constant) is admitted only for user-supplied initial histories.
enum class Interp { linear, step };

/// A d-dimensional trajectory sampled on a time grid. Immutable through the
/// public API; all operations on it are pure.
class Path {
public:
    Path(GridPtr grid, int dim, Interp mode, std::vector<double> samples);

    /// Constant path, one value per coordinate.
    static Path constant(GridPtr grid, std::vector<double> value, Interp mode = Interp::linear);
    /// Constant scalar path (d = 1).
    static Path constant(GridPtr grid, double value, Interp mode = Interp::linear);
    /// Scalar path from nodal values (d = 1).
    static Path scalar(GridPtr grid, std::vector<double> values, Interp mode = Interp::linear);

    int dim() const { return dim_; }
    Interp mode() const { return mode_; }
    const GridPtr& grid() const { return grid_; }
    std::size_t node_count() const { return grid_->node_count(); }

    std::span<const double> at(std::size_t node) const {
        return {samples_.data() + node * static_cast<std::size_t>(dim_),
                static_cast<std::size_t>(dim_)};
    }
    double at1(std::size_t node) const { return samples_[node * static_cast<std::size_t>(dim_)]; }

    /// Mode-aware evaluation at an arbitrary time in [0, T].
    std::vector<double> eval(double t) const;
    void eval_into(double t, std::span<double> out) const;
    double eval1(double t) const;

    /// x(r ^ t), the time-stopped evaluation used by the pseudo-metric.
    std::vector<double> stopped_eval(double r, double t) const { return eval(r < t ? r : t); }

    /// Slope of the `linear` segment [t_i, t_{i+1}], one value per coordinate.
    std::vector<double> segment_slope(std::size_t interval) const;

    /// max over grid nodes r <= t of |x(r)|, including the interpolated value at t.
    double sup_norm_upto(double t) const;

    /// Linear re-interpolation onto another grid (same horizon).
    Path resampled(GridPtr target) const;

    std::span<const double> samples() const { return samples_; }
    /// Internal mutable access for integrators that build a path in place.
    /// Callers must re-establish immutability before sharing the object.
    std::vector<double>& mutable_samples() { return samples_; }

private:
    GridPtr grid_;
    int dim_ = 1;
    Interp mode_ = Interp::linear;
    std::vector<double> samples_;  // node-major, dim entries per node
};

/// Pseudo-metric |t-s| + sup_{0<=r<=T} |x(r^t) - xt(r^s)|, the sup taken over
/// the union of both grids' nodes together with the stopping times t and s.
double d_infty(double t, const Path& x, double s, const Path& x_tilde);

/// sup_{r<=t} |x(r)| over grid nodes, plus the interpolated value at t.
double sup_history(const Path& x, double t);

/// A frozen history: values of `history` on [0, s0] are binding, later values
/// are ignored.
struct Anchor {
    double s0 = 0.0;
    Path history;
};

}  // namespace pdhj

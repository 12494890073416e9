#include "pdhj/path.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pdhj/util.hpp"

namespace pdhj {

Path::Path(GridPtr grid, int dim, Interp mode, std::vector<double> samples)
    : grid_(std::move(grid)), dim_(dim), mode_(mode), samples_(std::move(samples)) {
    if (!grid_) throw std::invalid_argument("Path: null grid");
    if (dim_ <= 0) throw std::invalid_argument("Path: dimension must be positive");
    if (samples_.size() != grid_->node_count() * static_cast<std::size_t>(dim_))
        throw std::invalid_argument("Path: sample count must equal node count x dim");
    if (!all_finite(samples_)) throw std::invalid_argument("Path: non-finite sample");
}

Path Path::constant(GridPtr grid, std::vector<double> value, Interp mode) {
    const std::size_t n = grid->node_count();
    std::vector<double> samples(n * value.size());
    for (std::size_t i = 0; i < n; ++i)
        std::copy(value.begin(), value.end(), samples.begin() + i * value.size());
    return Path(std::move(grid), static_cast<int>(value.size()), mode, std::move(samples));
}

Path Path::constant(GridPtr grid, double value, Interp mode) {
    return constant(std::move(grid), std::vector<double>{value}, mode);
}

Path Path::scalar(GridPtr grid, std::vector<double> values, Interp mode) {
    return Path(std::move(grid), 1, mode, std::move(values));
}

void Path::eval_into(double t, std::span<double> out) const {
    const double tol = grid_->node_tolerance();
    if (t < -tol || t > grid_->horizon() + tol)
        throw std::invalid_argument("Path::eval: time outside [0, T]");
    t = std::clamp(t, 0.0, grid_->horizon());
    const std::size_t i = grid_->segment_of(t);
    const auto a = at(i);
    if (mode_ == Interp::step) {
        // cadlag: value of the left node, except exactly at T.
        const auto src = (t >= grid_->horizon()) ? at(node_count() - 1) : a;
        std::copy(src.begin(), src.end(), out.begin());
        return;
    }
    const auto b = at(i + 1);
    const double w = (t - grid_->node(i)) / grid_->dt(i);
    for (int j = 0; j < dim_; ++j) out[j] = a[j] + w * (b[j] - a[j]);
}

std::vector<double> Path::eval(double t) const {
    std::vector<double> out(static_cast<std::size_t>(dim_));
    eval_into(t, out);
    return out;
}

double Path::eval1(double t) const {
    if (dim_ != 1) throw std::invalid_argument("Path::eval1: path is not scalar");
    double v;
    eval_into(t, {&v, 1});
    return v;
}

std::vector<double> Path::segment_slope(std::size_t interval) const {
    const auto a = at(interval);
    const auto b = at(interval + 1);
    const double h = grid_->dt(interval);
    std::vector<double> s(static_cast<std::size_t>(dim_));
    for (int j = 0; j < dim_; ++j) s[j] = (b[j] - a[j]) / h;
    return s;
}

double Path::sup_norm_upto(double t) const {
    double m = 0.0;
    for (std::size_t i = 0; i < node_count() && grid_->node(i) <= t + grid_->node_tolerance(); ++i)
        m = std::max(m, norm2(at(i)));
    return std::max(m, norm2(eval(t)));
}

Path Path::resampled(GridPtr target) const {
    std::vector<double> samples(target->node_count() * static_cast<std::size_t>(dim_));
    for (std::size_t i = 0; i < target->node_count(); ++i)
        eval_into(std::min(target->node(i), grid_->horizon()),
                  {samples.data() + i * static_cast<std::size_t>(dim_),
                   static_cast<std::size_t>(dim_)});
    return Path(std::move(target), dim_, mode_, std::move(samples));
}

double d_infty(double t, const Path& x, double s, const Path& x_tilde) {
    if (x.dim() != x_tilde.dim()) throw std::invalid_argument("d_infty: dimension mismatch");
    std::vector<double> probes;
    probes.reserve(x.node_count() + x_tilde.node_count() + 2);
    for (double r : x.grid()->nodes()) probes.push_back(r);
    for (double r : x_tilde.grid()->nodes()) probes.push_back(r);
    probes.push_back(t);
    probes.push_back(s);

    std::vector<double> a(static_cast<std::size_t>(x.dim()));
    std::vector<double> b(static_cast<std::size_t>(x.dim()));
    double sup = 0.0;
    for (double r : probes) {
        x.eval_into(std::min(r, t), a);
        x_tilde.eval_into(std::min(r, s), b);
        double d2 = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
        sup = std::max(sup, std::sqrt(d2));
    }
    return std::abs(t - s) + sup;
}

double sup_history(const Path& x, double t) { return x.sup_norm_upto(t); }

}  // namespace pdhj

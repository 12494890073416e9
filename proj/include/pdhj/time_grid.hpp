#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace pdhj {

/// Strictly increasing time nodes t_0 = 0 < t_1 < ... < t_N = T.
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
        if (nodes_.size() < 2) throw std::invalid_argument("TimeGrid: need at least two nodes");
        if (nodes_.front() != 0.0) throw std::invalid_argument("TimeGrid: first node must be 0");
        for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
            if (!(nodes_[i] < nodes_[i + 1]))
                throw std::invalid_argument("TimeGrid: nodes must be strictly increasing");
        }
        if (!std::isfinite(nodes_.back()) || nodes_.back() <= 0.0)
            throw std::invalid_argument("TimeGrid: horizon must be positive and finite");
    }

    static TimeGrid uniform(std::size_t intervals, double horizon) {
        if (intervals == 0) throw std::invalid_argument("TimeGrid: need at least one interval");
        std::vector<double> nodes(intervals + 1);
        for (std::size_t i = 0; i <= intervals; ++i)
            nodes[i] = horizon * static_cast<double>(i) / static_cast<double>(intervals);
        nodes.front() = 0.0;
        nodes.back() = horizon;
        return TimeGrid(std::move(nodes));
    }

    double horizon() const { return nodes_.back(); }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t interval_count() const { return nodes_.size() - 1; }
    double node(std::size_t i) const { return nodes_[i]; }
    std::span<const double> nodes() const { return nodes_; }
    double dt(std::size_t i) const { return nodes_[i + 1] - nodes_[i]; }

    double max_dt() const {
        double m = 0.0;
        for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) m = std::max(m, dt(i));
        return m;
    }

    double node_tolerance() const { return 1e-9 * std::max(1.0, horizon()); }

    bool contains(double t, double tol = -1.0) const {
        return find_node(t, tol < 0 ? node_tolerance() : tol) != npos;
    }

    /// Index of the node equal to t (within tolerance); throws if t is not a node.
    std::size_t index_of(double t, double tol = -1.0) const {
        const std::size_t i = find_node(t, tol < 0 ? node_tolerance() : tol);
        if (i == npos) throw std::invalid_argument("TimeGrid: time is not a grid node");
        return i;
    }

    /// Index i with t in [t_i, t_{i+1}); the last interval also covers t = T.
    std::size_t segment_of(double t) const {
        if (t <= nodes_.front()) return 0;
        if (t >= nodes_.back()) return nodes_.size() - 2;
        const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
        return static_cast<std::size_t>(it - nodes_.begin()) - 1;
    }

    /// Grid with `factor` sub-intervals per parent interval.
    TimeGrid refined(std::size_t factor) const {
        if (factor == 0) throw std::invalid_argument("TimeGrid: refinement factor must be >= 1");
        std::vector<double> out;
        out.reserve((nodes_.size() - 1) * factor + 1);
        for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
            for (std::size_t j = 0; j < factor; ++j)
                out.push_back(nodes_[i] + dt(i) * static_cast<double>(j) / static_cast<double>(factor));
        }
        out.push_back(nodes_.back());
        return TimeGrid(std::move(out));
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t find_node(double t, double tol) const {
        const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t - tol);
        if (it == nodes_.end()) return npos;
        if (std::abs(*it - t) <= tol) return static_cast<std::size_t>(it - nodes_.begin());
        return npos;
    }

    std::vector<double> nodes_;
};

using GridPtr = std::shared_ptr<const TimeGrid>;

inline GridPtr make_uniform_grid(std::size_t intervals, double horizon) {
    return std::make_shared<const TimeGrid>(TimeGrid::uniform(intervals, horizon));
}

}  // namespace pdhj

#include "pdhj/characteristics.hpp"

#include <cmath>
#include <stdexcept>

#include "pdhj/util.hpp"

namespace pdhj {

std::vector<double> integrate_y(const Hamiltonian& h, const Path& x, std::size_t anchor_index,
                                double y0, std::span<const double> z) {
    const GridPtr& grid = x.grid();
    std::vector<double> y(grid->node_count(), y0);
    for (std::size_t i = anchor_index; i + 1 < grid->node_count(); ++i) {
        const double t = grid->node(i);
        double dx_dot_z = 0.0;
        const auto a = x.at(i);
        const auto b = x.at(i + 1);
        for (std::size_t j = 0; j < z.size(); ++j) dx_dot_z += (b[j] - a[j]) * z[j];
        const double hv = h(t, x, y[i], z);
        if (!std::isfinite(hv))
            throw std::runtime_error("integrate_y: non-finite Hamiltonian value");
        y[i + 1] = y[i] + dx_dot_z - hv * grid->dt(i);
    }
    return y;
}

CharacteristicPair integrate_characteristic(const Hamiltonian& h, const BundleSpec& spec,
                                            const DriftSelector& selector, double y0,
                                            std::span<const double> z, GridPtr grid) {
    Path x = sample_extension(spec, selector, grid);
    const std::size_t anchor_index = grid->index_of(spec.anchor.s0);
    std::vector<double> y = integrate_y(h, x, anchor_index, y0, z);
    return CharacteristicPair{std::move(x), std::move(y), anchor_index, y0,
                              std::vector<double>(z.begin(), z.end()), spec.level};
}

CharacteristicPair integrate_characteristic(const Hamiltonian& h, const BundleSpec& spec,
                                            std::size_t selector_index, double y0,
                                            std::span<const double> z, GridPtr grid) {
    return integrate_characteristic(h, spec, spec.family.selector(selector_index), y0, z,
                                    std::move(grid));
}

DriftSelector classical_drift(const SmoothFunctional& u, const Hamiltonian& h,
                              std::vector<double> z, double gradient_gap_tol) {
    return [u, h, z, gradient_gap_tol](double t, std::size_t, const Path& x, double,
                                       double) -> std::vector<double> {
        const double uval = u.value(t, x, x);
        const std::vector<double> grad = u.x_gradient(t, x, x);
        std::vector<double> gap(grad.size());
        for (std::size_t j = 0; j < grad.size(); ++j) gap[j] = grad[j] - z[j];
        const double gap_norm = norm2(gap);
        if (gap_norm <= gradient_gap_tol)
            return std::vector<double>(grad.size(), 0.0);
        const double num = h(t, x, uval, grad) - h(t, x, uval, z);
        const double scale = num / (gap_norm * gap_norm);
        for (double& c : gap) c *= scale;
        return gap;
    };
}

CharacteristicPair concat_pairs(std::span<const CharacteristicPair> pairs, double splice_tol) {
    if (pairs.empty()) throw std::invalid_argument("concat_pairs: empty list");
    const CharacteristicPair& first = pairs.front();
    if (pairs.size() == 1) return first;

    const GridPtr& grid = first.x.grid();
    for (const auto& p : pairs) {
        if (p.x.grid()->node_count() != grid->node_count())
            throw std::invalid_argument("concat_pairs: pairs must share the grid");
        if (p.level != first.level) throw std::invalid_argument("concat_pairs: level mismatch");
        if (p.z.size() != first.z.size())
            throw std::invalid_argument("concat_pairs: direction mismatch");
        for (std::size_t j = 0; j < p.z.size(); ++j)
            if (p.z[j] != first.z[j]) throw std::invalid_argument("concat_pairs: direction mismatch");
    }

    CharacteristicPair out = first;
    auto& samples = out.x.mutable_samples();
    const int d = out.x.dim();

    for (std::size_t k = 1; k < pairs.size(); ++k) {
        const CharacteristicPair& prev = pairs[k - 1];
        const CharacteristicPair& next = pairs[k];
        if (next.anchor_index <= prev.anchor_index)
            throw std::invalid_argument("concat_pairs: anchors must advance along the partition");
        const std::size_t splice = next.anchor_index;

        // The next pair must start where the previous one stands.
        const auto a = prev.x.at(splice);
        const auto b = next.x.at(splice);
        for (int j = 0; j < d; ++j)
            if (std::abs(a[j] - b[j]) > splice_tol)
                throw std::invalid_argument("concat_pairs: state mismatch at the splice");
        if (std::abs(next.y0 - prev.y[splice]) > splice_tol)
            throw std::invalid_argument("concat_pairs: y mismatch at the splice");

        for (std::size_t i = splice; i < grid->node_count(); ++i) {
            const auto src = next.x.at(i);
            for (int j = 0; j < d; ++j)
                samples[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] = src[j];
            out.y[i] = next.y[i];
        }
    }
    return out;
}

std::vector<CharacteristicPair> enumerate_bundle(const Hamiltonian& h, const BundleSpec& spec,
                                                 double y0, std::span<const double> z,
                                                 GridPtr grid, std::size_t budget) {
    if (budget == 0) throw std::invalid_argument("enumerate_bundle: budget must be >= 1");
    const std::size_t anchor_index = grid->index_of(spec.anchor.s0);
    const std::size_t cap =
        spec.family.selector_cap(grid->interval_count() - anchor_index, budget);
    std::vector<CharacteristicPair> out;
    out.reserve(cap);
    for (std::size_t k = 0; k < cap; ++k)
        out.push_back(integrate_characteristic(h, spec, k, y0, z, grid));
    return out;
}

}  // namespace pdhj

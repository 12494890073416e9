#pragma once

#include <span>
#include <vector>

#include "pdhj/bundle.hpp"
#include "pdhj/calculus.hpp"
#include "pdhj/hamiltonian.hpp"

namespace pdhj {

/// A coupled (x, y) characteristic: x is a bundle member and y follows the
/// explicit Euler recursion
///   y_{i+1} = y_i + (x(t_{i+1}) - x(t_i)).z - H(t_i, x, y_i, z) dt_i
/// from y(s0) = y0 (left-endpoint sampling of the time-measurable H).
struct CharacteristicPair {
    Path x;
    std::vector<double> y;  // full node vector; y0 before the anchor
    std::size_t anchor_index = 0;
    double y0 = 0.0;
    std::vector<double> z;
    double level = 0.0;
};

/// Euler recursion for y along a fixed x; shared by the integrator and the
/// minimax checkers so both see identical arithmetic.
std::vector<double> integrate_y(const Hamiltonian& h, const Path& x, std::size_t anchor_index,
                                double y0, std::span<const double> z);

CharacteristicPair integrate_characteristic(const Hamiltonian& h, const BundleSpec& spec,
                                            const DriftSelector& selector, double y0,
                                            std::span<const double> z, GridPtr grid);
CharacteristicPair integrate_characteristic(const Hamiltonian& h, const BundleSpec& spec,
                                            std::size_t selector_index, double y0,
                                            std::span<const double> z, GridPtr grid);

/// Drift selector of the classical-solution construction:
///   x' = [H(t,x,u,du) - H(t,x,u,z)] / |du - z|^2 * (du - z),
/// zero when |du - z| falls below the gradient-gap tolerance.
DriftSelector classical_drift(const SmoothFunctional& u, const Hamiltonian& h,
                              std::vector<double> z, double gradient_gap_tol = 1e-10);

/// Glues pairs aligned on a partition: pair i+1 must be anchored at the
/// endpoint of pair i (state and y within `splice_tol`) with matching level
/// and direction z.
CharacteristicPair concat_pairs(std::span<const CharacteristicPair> pairs,
                                double splice_tol = 1e-9);

/// One pair per drift selector in the family, in deterministic family order,
/// up to `budget` selectors.
std::vector<CharacteristicPair> enumerate_bundle(const Hamiltonian& h, const BundleSpec& spec,
                                                 double y0, std::span<const double> z,
                                                 GridPtr grid, std::size_t budget);

}  // namespace pdhj

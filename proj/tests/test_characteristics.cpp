#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "pdhj/characteristics.hpp"
#include "pdhj/control.hpp"
#include "pdhj/util.hpp"

using namespace pdhj;

namespace {

Hamiltonian constant_hamiltonian(double value) {
    Hamiltonian h;
    h.eval = [value](double, const Path&, double, std::span<const double>) { return value; };
    h.lipschitz_x = [](double) { return 0.0; };
    return h;
}

Hamiltonian decay_hamiltonian(double c) {  // H = -c y
    Hamiltonian h;
    h.eval = [c](double, const Path&, double y, std::span<const double>) { return -c * y; };
    h.lipschitz_x = [](double) { return 0.0; };
    return h;
}

Hamiltonian bang_hamiltonian(double c) {  // H = -|z| - c y
    Hamiltonian h;
    h.eval = [c](double, const Path&, double y, std::span<const double> z) {
        return -norm2(z) - c * y;
    };
    h.lipschitz_z = 1.0;
    h.lipschitz_x = [](double) { return 0.0; };
    return h;
}

BundleSpec spec_at(GridPtr grid, double level, double s0 = 0.0, double x0 = 0.0) {
    return BundleSpec{level, Anchor{s0, Path::constant(grid, x0)}, DriftFamily(1)};
}

DriftSelector constant_drift(double a) {
    return [a](double, std::size_t, const Path&, double, double) {
        return std::vector<double>{a};
    };
}

}  // namespace

TEST_CASE("zero drift and H = 0 give a constant pair") {
    auto grid = make_uniform_grid(16, 1.0);
    const double z[1] = {0.7};
    const CharacteristicPair p = integrate_characteristic(
        constant_hamiltonian(0.0), spec_at(grid, 1.0), 0, 0.3, std::span<const double>(z, 1),
        grid);
    for (double y : p.y) CHECK(y == 0.3);
    for (std::size_t i = 0; i < p.x.node_count(); ++i) CHECK(p.x.at1(i) == 0.0);
}

TEST_CASE("H = -c y, z = 0: y converges to y0 e^{ct} at first order") {
    const double c = 0.5, y0 = 0.8;
    const double z[1] = {0.0};
    double prev_err = 0.0;
    for (std::size_t n : {64, 128, 256}) {
        auto grid = make_uniform_grid(n, 1.0);
        const CharacteristicPair p = integrate_characteristic(
            decay_hamiltonian(c), spec_at(grid, 1.0), 0, y0, std::span<const double>(z, 1), grid);
        const double err = std::abs(p.y.back() - y0 * std::exp(c));
        if (prev_err > 0.0) CHECK(err <= 0.6 * prev_err);
        prev_err = err;
    }
    CHECK(prev_err <= 2e-3);
}

TEST_CASE("constant drift against -|z| - c y matches variation of constants") {
    // y' = a z + |z| + c y with y(0) = y0
    const double a = 0.3, zval = 1.0, c = 0.5, y0 = 0.2;
    const double k = a * zval + std::abs(zval);
    const auto closed_form = [&](double t) {
        return (y0 + k / c) * std::exp(c * t) - k / c;
    };
    const double z[1] = {zval};
    double prev_err = 0.0;
    for (std::size_t n : {64, 128, 256}) {
        auto grid = make_uniform_grid(n, 1.0);
        const CharacteristicPair p = integrate_characteristic(
            bang_hamiltonian(c), spec_at(grid, 1.0), constant_drift(a), y0,
            std::span<const double>(z, 1), grid);
        const double err = std::abs(p.y.back() - closed_form(1.0));
        if (prev_err > 0.0) CHECK(err <= 0.6 * prev_err);
        prev_err = err;
    }
    CHECK(prev_err <= 2e-2);
}

TEST_CASE("pairs satisfy the Euler recursion and bundle membership exactly") {
    auto grid = make_uniform_grid(16, 1.0);
    const BundleSpec spec = spec_at(grid, 1.0);
    const double z[1] = {1.0};
    const Hamiltonian h = bang_hamiltonian(0.5);
    for (std::size_t k = 0; k < 8; ++k) {
        const CharacteristicPair p =
            integrate_characteristic(h, spec, k, 0.1, std::span<const double>(z, 1), grid);
        CHECK(check_membership(p.x, spec, 0.0));
        for (std::size_t i = 0; i + 1 < grid->node_count(); ++i) {
            const double dx = p.x.at1(i + 1) - p.x.at1(i);
            const double expected =
                p.y[i] + dx * z[0] - h(grid->node(i), p.x, p.y[i], z) * grid->dt(i);
            CHECK(p.y[i + 1] == expected);
        }
    }
}

namespace {

SmoothFunctional affine_solution(double p, double b) {
    // u(t, x) = p x(t) + b p (T - t), a classical solution of -du/dt - b du/dx = 0.
    return SmoothFunctional::single_path(
        [p, b](double t, const Path& x) {
            return p * x.eval1(t) + b * p * (x.grid()->horizon() - t);
        },
        [p, b](double, const Path&) { return -b * p; },
        [p](double, const Path&) { return std::vector<double>{p}; });
}

Hamiltonian transport_hamiltonian(double b) {  // H = b z
    Hamiltonian h;
    h.eval = [b](double, const Path&, double, std::span<const double> z) { return b * z[0]; };
    h.lipschitz_z = std::abs(b);
    h.lipschitz_x = [](double) { return 0.0; };
    return h;
}

}  // namespace

TEST_CASE("classical drift: zero branch when the gradient equals z") {
    const SmoothFunctional u = affine_solution(2.0, 0.7);
    const Hamiltonian h = transport_hamiltonian(0.7);
    auto grid = make_uniform_grid(8, 1.0);
    const Path x = Path::constant(grid, 0.0);
    const DriftSelector sel = classical_drift(u, h, {2.0});
    CHECK(sel(0.0, 0, x, 0.0, 0.7)[0] == 0.0);
}

TEST_CASE("classical drift of the transport solution is the constant b") {
    const double b = 0.7, p = 2.0;
    const SmoothFunctional u = affine_solution(p, b);
    const Hamiltonian h = transport_hamiltonian(b);
    auto grid = make_uniform_grid(8, 1.0);
    const Path x = Path::constant(grid, 0.0);
    for (double zval : {0.0, 1.0, -1.0, 3.0}) {
        const DriftSelector sel = classical_drift(u, h, {zval});
        CHECK(sel(0.2, 0, x, 0.0, b)[0] == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("classical drift: eikonal example") {
    // H = -|z|, grad u = 0, z = 1: drift = (-0 - (-1))/1 * (0 - 1) = -1
    Hamiltonian h;
    h.eval = [](double, const Path&, double, std::span<const double> z) { return -norm2(z); };
    h.lipschitz_x = [](double) { return 0.0; };
    const SmoothFunctional u = SmoothFunctional::single_path(
        [](double, const Path&) { return 0.0; }, [](double, const Path&) { return 0.0; },
        [](double, const Path&) { return std::vector<double>{0.0}; });
    auto grid = make_uniform_grid(8, 1.0);
    const Path x = Path::constant(grid, 0.0);
    const DriftSelector sel = classical_drift(u, h, {1.0});
    CHECK(sel(0.0, 0, x, 0.0, 1.0)[0] == doctest::Approx(-1.0));
}

TEST_CASE("classical construction keeps y on the solution graph exactly") {
    const double b = 0.7, p = 2.0;
    const SmoothFunctional u = affine_solution(p, b);
    const Hamiltonian h = transport_hamiltonian(b);
    auto grid = make_uniform_grid(32, 1.0);
    BundleSpec spec = spec_at(grid, std::abs(b));
    for (double zval : {0.0, 1.0, -2.0, 2.0}) {
        const double z[1] = {zval};
        const double y0 = u.value(0.0, spec.anchor.history, spec.anchor.history);
        const CharacteristicPair pair = integrate_characteristic(
            h, spec, classical_drift(u, h, {zval}), y0, std::span<const double>(z, 1), grid);
        CHECK(check_membership(pair.x, spec, 0.0));
        for (std::size_t i = 0; i < grid->node_count(); ++i) {
            const double along = u.value(grid->node(i), pair.x, pair.x);
            CHECK(std::abs(pair.y[i] - along) <= 1e-9);
        }
    }
}

TEST_CASE("concat: single pair is returned unchanged") {
    auto grid = make_uniform_grid(8, 1.0);
    const double z[1] = {1.0};
    const CharacteristicPair p = integrate_characteristic(
        bang_hamiltonian(0.5), spec_at(grid, 1.0), 3, 0.0, std::span<const double>(z, 1), grid);
    const CharacteristicPair glued = concat_pairs(std::span(&p, 1));
    for (std::size_t i = 0; i < p.y.size(); ++i) CHECK(glued.y[i] == p.y[i]);
}

TEST_CASE("concat of a midpoint split equals the unsplit integration") {
    auto grid = make_uniform_grid(16, 1.0);
    const Hamiltonian h = bang_hamiltonian(0.5);
    const double z[1] = {1.0};
    const BundleSpec whole = spec_at(grid, 1.0);
    const DriftSelector drift = constant_drift(0.4);

    const CharacteristicPair full =
        integrate_characteristic(h, whole, drift, 0.2, std::span<const double>(z, 1), grid);

    const std::size_t mid = grid->index_of(0.5);
    const BundleSpec second{1.0, Anchor{0.5, full.x}, whole.family};
    const CharacteristicPair tail = integrate_characteristic(
        h, second, drift, full.y[mid], std::span<const double>(z, 1), grid);

    const CharacteristicPair parts[2] = {full, tail};
    const CharacteristicPair glued = concat_pairs(std::span(parts, 2));
    for (std::size_t i = 0; i < grid->node_count(); ++i) {
        CHECK(glued.x.at1(i) == full.x.at1(i));
        CHECK(glued.y[i] == full.y[i]);
    }
}

TEST_CASE("concat rejects a splice gap beyond tolerance") {
    auto grid = make_uniform_grid(16, 1.0);
    const Hamiltonian h = bang_hamiltonian(0.5);
    const double z[1] = {1.0};
    const CharacteristicPair full = integrate_characteristic(
        h, spec_at(grid, 1.0), constant_drift(0.4), 0.2, std::span<const double>(z, 1), grid);
    const std::size_t mid = grid->index_of(0.5);
    const BundleSpec second{1.0, Anchor{0.5, full.x}, DriftFamily(1)};
    const CharacteristicPair tail = integrate_characteristic(
        h, second, constant_drift(0.4), full.y[mid] + 0.1, std::span<const double>(z, 1), grid);
    const CharacteristicPair parts[2] = {full, tail};
    CHECK_THROWS_AS(concat_pairs(std::span(parts, 2)), std::invalid_argument);
}

TEST_CASE("enumerate_bundle: deterministic order, valid members, growth extremes") {
    auto grid = make_uniform_grid(64, 1.0);
    const BundleSpec spec = spec_at(grid, 1.0);
    const double z[1] = {0.0};
    const Hamiltonian h = constant_hamiltonian(0.0);
    const auto pairs = enumerate_bundle(h, spec, 0.0, std::span<const double>(z, 1), grid, 8);
    CHECK(pairs.size() == 8);
    for (const auto& p : pairs) CHECK(check_membership(p.x, spec, 0.0));
    // the maximal atom reproduces the growth envelope (e^t - 1 as the grid refines)
    const double top = pairs[spec.family.max_up_index()].x.at1(grid->node_count() - 1);
    CHECK(top == doctest::Approx(std::exp(1.0) - 1.0).epsilon(2e-2));
    CHECK(top <= std::exp(1.0) - 1.0);
}

TEST_CASE("single-selector family yields a single pair") {
    auto grid = make_uniform_grid(8, 1.0);
    const BundleSpec spec{1.0, Anchor{0.0, Path::constant(grid, 0.0)}, DriftFamily(1, {0.0})};
    const double z[1] = {0.0};
    const auto pairs =
        enumerate_bundle(constant_hamiltonian(0.0), spec, 0.4, std::span<const double>(z, 1),
                         grid, 5);
    CHECK(pairs.size() == 1);
    for (double y : pairs[0].y) CHECK(y == 0.4);
}

TEST_CASE("monotone dependence on y0 under a y-non-increasing Hamiltonian") {
    auto grid = make_uniform_grid(32, 1.0);
    const Hamiltonian h = bang_hamiltonian(0.5);
    const BundleSpec spec = spec_at(grid, 1.0);
    const double z[1] = {1.0};
    Rng rng(17);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t sel = rng.index(8);
        const double y0 = rng.uniform(-1.0, 1.0);
        const double shift = rng.uniform(0.0, 2.0);
        const auto base =
            integrate_characteristic(h, spec, sel, y0, std::span<const double>(z, 1), grid);
        const auto lifted = integrate_characteristic(h, spec, sel, y0 + shift,
                                                     std::span<const double>(z, 1), grid);
        for (std::size_t i = 0; i < base.y.size(); ++i)
            CHECK(lifted.y[i] - base.y[i] >= shift - 1e-12);
    }
}

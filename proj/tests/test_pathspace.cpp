#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "pdhj/bundle.hpp"
#include "pdhj/path.hpp"
#include "pdhj/util.hpp"

using namespace pdhj;

TEST_CASE("time grid validation and lookup") {
    CHECK_THROWS_AS(TimeGrid({0.0}), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid({0.1, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid({0.0, 0.5, 0.5, 1.0}), std::invalid_argument);

    const TimeGrid g = TimeGrid::uniform(4, 1.0);
    CHECK(g.node_count() == 5);
    CHECK(g.horizon() == 1.0);
    CHECK(g.index_of(0.5) == 2);
    CHECK_THROWS_AS(g.index_of(0.3), std::invalid_argument);
    CHECK(g.segment_of(0.3) == 1);
    CHECK(g.segment_of(1.0) == 3);
    CHECK(g.refined(2).node_count() == 9);
}

TEST_CASE("path evaluation in both modes") {
    auto grid = make_uniform_grid(2, 1.0);
    const Path lin = Path::scalar(grid, {0.0, 1.0, 0.0});
    CHECK(lin.eval1(0.25) == doctest::Approx(0.5));
    CHECK(lin.eval1(1.0) == 0.0);

    const Path step = Path::scalar(grid, {0.0, 1.0, 0.0}, Interp::step);
    CHECK(step.eval1(0.25) == 0.0);
    CHECK(step.eval1(0.5) == 1.0);
    CHECK(step.eval1(0.75) == 1.0);
    CHECK(step.eval1(1.0) == 0.0);

    CHECK_THROWS_AS(Path::scalar(grid, {0.0, std::nan(""), 0.0}), std::invalid_argument);
}

TEST_CASE("d_infty matches the formula") {
    auto grid = make_uniform_grid(10, 1.0);
    const Path zero = Path::constant(grid, 0.0);

    CHECK(d_infty(0.4, zero, 0.4, zero) == 0.0);
    CHECK(d_infty(0.2, zero, 0.7, zero) == doctest::Approx(0.5).epsilon(1e-14));

    const Path c = Path::constant(grid, 0.3);
    CHECK(d_infty(0.5, zero, 0.5, c) == doctest::Approx(0.3).epsilon(1e-14));

    auto grid2 = make_uniform_grid(10, 1.0);
    const Path zero2 = Path::constant(grid2, std::vector<double>{0.0, 0.0});
    CHECK_THROWS_AS(d_infty(0.5, zero, 0.5, zero2), std::invalid_argument);
}

TEST_CASE("d_infty is a pseudo-metric on sampled triples") {
    auto grid = make_uniform_grid(8, 1.0);
    Rng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> a(9), b(9), c(9);
        for (int i = 0; i < 9; ++i) {
            a[i] = rng.uniform(-1, 1);
            b[i] = rng.uniform(-1, 1);
            c[i] = rng.uniform(-1, 1);
        }
        const Path xa = Path::scalar(grid, a);
        const Path xb = Path::scalar(grid, b);
        const Path xc = Path::scalar(grid, c);
        const double ta = grid->node(rng.index(9));
        const double tb = grid->node(rng.index(9));
        const double tc = grid->node(rng.index(9));

        CHECK(d_infty(ta, xa, tb, xb) == d_infty(tb, xb, ta, xa));
        CHECK(d_infty(ta, xa, ta, xa) == 0.0);
        CHECK(d_infty(ta, xa, tb, xb) <=
              d_infty(ta, xa, tc, xc) + d_infty(tc, xc, tb, xb) + 1e-12);
    }
}

TEST_CASE("sup_history") {
    auto grid = make_uniform_grid(4, 1.0);
    CHECK(sup_history(Path::constant(grid, 0.0), 1.0) == 0.0);

    const Path ramp = Path::scalar(grid, {0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK(sup_history(ramp, 0.5) == doctest::Approx(0.5).epsilon(1e-14));

    const Path swing = Path::scalar(grid, {1.0, 0.25, -0.5, -1.25, -2.0});
    CHECK(sup_history(swing, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(sup_history(swing, 0.2) == doctest::Approx(1.0).epsilon(1e-14));
}

namespace {

BundleSpec basic_spec(GridPtr grid, double level, double s0 = 0.0, double x0 = 0.0) {
    return BundleSpec{level, Anchor{s0, Path::constant(grid, x0)}, DriftFamily(1)};
}

}  // namespace

TEST_CASE("sample_extension: zero drift stays constant and passes membership") {
    auto grid = make_uniform_grid(16, 1.0);
    const BundleSpec spec = basic_spec(grid, 1.0);
    const Path x = sample_extension(spec, 0, grid);
    for (std::size_t i = 0; i < x.node_count(); ++i) CHECK(x.at1(i) == 0.0);
    CHECK(check_membership(x, spec, 0.0));
}

TEST_CASE("sample_extension: maximal drift tracks the exponential envelope") {
    double prev_err = 0.0;
    for (std::size_t n : {256, 512, 1024}) {
        auto grid = make_uniform_grid(n, 1.0);
        const BundleSpec spec = basic_spec(grid, 1.0);
        const Path x = sample_extension(spec, spec.family.max_up_index(), grid);
        const double err = std::abs(x.at1(n) - (std::exp(1.0) - 1.0));
        CHECK(check_membership(x, spec, 0.0));
        CHECK(check_membership(x, spec, 1e-9));
        if (prev_err > 0.0) CHECK(err <= 0.6 * prev_err);
        prev_err = err;
    }
    CHECK(prev_err <= 2e-3);
}

TEST_CASE("sample_extension clamps drifts that exceed the growth bound") {
    auto grid = make_uniform_grid(8, 1.0);
    const BundleSpec spec = basic_spec(grid, 1.0);
    const DriftSelector greedy = [](double, std::size_t, const Path&, double sup, double level) {
        return std::vector<double>{level * (1.0 + sup) + 1.0};
    };
    const Path x = sample_extension(spec, greedy, grid);
    CHECK(check_membership(x, spec, 0.0));
    // first step runs exactly at the clamp L (1 + 0)
    CHECK(x.at1(1) == doctest::Approx(grid->dt(0)).epsilon(1e-14));
}

TEST_CASE("check_membership rejects slope and history violations") {
    auto grid = make_uniform_grid(2, 1.0);
    const BundleSpec spec = basic_spec(grid, 1.0);
    // slope 2 with sup = 0 at the left node violates L (1 + 0) = 1
    const Path steep = Path::scalar(grid, {0.0, 1.0, 1.0});
    CHECK_FALSE(check_membership(steep, spec, 0.0));
    CHECK(check_membership(steep, spec, 1.0));

    const Path shifted = Path::scalar(grid, {0.5, 0.5, 0.5});
    CHECK_FALSE(check_membership(shifted, spec, 0.0));  // history mismatch at s0
}

TEST_CASE("frozen history is binding and step histories are admitted") {
    auto grid = make_uniform_grid(8, 1.0);
    const Path history = Path::scalar(grid, {1.0, 1.0, 1.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0},
                                      Interp::step);
    const BundleSpec spec{2.0, Anchor{0.5, history}, DriftFamily(1)};
    const Path x = sample_extension(spec, spec.family.max_down_index(), grid);
    for (std::size_t i = 0; i <= 4; ++i) CHECK(x.at1(i) == history.eval1(grid->node(i)));
    CHECK(check_membership(x, spec, 0.0));
}

TEST_CASE("refinement stability: resampling preserves membership at tol 0") {
    auto grid = make_uniform_grid(16, 1.0);
    const BundleSpec spec = basic_spec(grid, 1.0);
    auto fine = std::make_shared<const TimeGrid>(grid->refined(2));
    for (std::size_t k = 0; k < spec.family.atom_count(); ++k) {
        const Path x = sample_extension(spec, k, grid);
        const BundleSpec fine_spec{spec.level, Anchor{0.0, Path::constant(fine, 0.0)},
                                   spec.family};
        CHECK(check_membership(x.resampled(fine), fine_spec, 0.0));
    }
}

TEST_CASE("bundle members stay below the closed-form envelope") {
    auto grid = make_uniform_grid(32, 1.0);
    for (double x0 : {0.0, 0.7}) {
        for (double s0 : {0.0, 0.25}) {
            BundleSpec spec = basic_spec(grid, 1.0, s0, x0);
            const double bound = growth_envelope(spec, grid->horizon());
            for (std::size_t k = 0; k < 12; ++k) {
                const std::size_t cap = spec.family.selector_cap(
                    grid->interval_count() - grid->index_of(s0), 12);
                if (k >= cap) break;
                const Path x = sample_extension(spec, k, grid);
                for (std::size_t i = 0; i < x.node_count(); ++i)
                    CHECK(std::abs(x.at1(i)) <= bound + 1e-12);
            }
        }
    }
}

TEST_CASE("drift family enumeration is deterministic and covers the atoms") {
    const DriftFamily fam(1);
    CHECK(fam.atom_count() == 5);
    CHECK(fam.selector_atom(fam.max_up_index(), 0) == fam.max_up_index());
    CHECK(fam.selector_atom(fam.max_up_index(), 7) == fam.max_up_index());
    // mixed selectors differ across intervals and avoid the all-zero duplicate
    CHECK(fam.selector_atom(fam.atom_count(), 0) == 1);
    CHECK(fam.selector_atom(fam.atom_count(), 1) == 0);
    CHECK(fam.selector_cap(0, 100) == 1);
    CHECK(fam.selector_cap(2, 100) == 25);
    CHECK(fam.selector_cap(64, 100) == 100);

    const DriftFamily d2(2);
    CHECK(d2.atom_count() == 9);  // zero + 2 kappas x 4 signed directions

    const DriftFamily two_kappa(1, {0.0, 1.0});
    CHECK(two_kappa.atom_count() == 3);  // zero and the two signed maximal atoms
    CHECK(two_kappa.selector_cap(4, 1000) == 81);
    CHECK(two_kappa.selector_cap(4, 10) == 10);  // truncated to the budget
}

TEST_CASE("anchor must be a grid node") {
    auto grid = make_uniform_grid(8, 1.0);
    const BundleSpec spec{1.0, Anchor{0.3, Path::constant(grid, 0.0)}, DriftFamily(1)};
    CHECK_THROWS_AS(sample_extension(spec, 0, grid), std::invalid_argument);
}

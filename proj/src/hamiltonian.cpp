#include "pdhj/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pdhj/bundle.hpp"
#include "pdhj/control.hpp"
#include "pdhj/util.hpp"

namespace pdhj {

Hamiltonian control_hamiltonian(const ControlProblem& problem) {
    if (problem.atoms.empty()) throw std::invalid_argument("control_hamiltonian: empty control set");
    Hamiltonian h;
    h.eval = [p = problem](double t, const Path& x, double y, std::span<const double> z) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < p.atoms.size(); ++a) {
            const double v = p.running_cost(t, x, a) + dot(p.drift(t, x, a), z) -
                             p.decay(t, x, a) * y;
            best = std::min(best, v);
        }
        if (!std::isfinite(best)) throw std::runtime_error("control_hamiltonian: non-finite value");
        return best;
    };
    h.lipschitz_z = problem.c_f;
    h.growth = problem.c_f + problem.c_lambda;
    h.lipschitz_x = [lf = problem.l_f](double) { return lf; };
    h.time_exceptions = problem.time_exceptions;
    return h;
}

namespace {

bool near_exception(double t, const std::vector<double>& exceptions, double radius) {
    for (double e : exceptions)
        if (std::abs(t - e) <= radius) return true;
    return false;
}

double sample_time(Rng& rng, const Hamiltonian& h, const AuditConfig& cfg) {
    const double T = cfg.grid->horizon();
    for (int tries = 0; tries < 64; ++tries) {
        const double t = rng.uniform(0.0, T);
        if (!near_exception(t, h.time_exceptions, cfg.exception_radius)) return t;
    }
    return 0.5 * T;
}

Path random_path(Rng& rng, const AuditConfig& cfg) {
    std::vector<double> samples(cfg.grid->node_count());
    for (double& v : samples) v = rng.uniform(-cfg.x_amplitude, cfg.x_amplitude);
    return Path::scalar(cfg.grid, std::move(samples));
}

std::vector<double> random_z(Rng& rng, const AuditConfig& cfg) {
    return {rng.uniform(-cfg.z_range, cfg.z_range)};
}

void note_worst(AuditFinding& f, double ratio, nlohmann::ordered_json witness) {
    if (ratio > f.worst_ratio) {
        f.worst_ratio = ratio;
        f.witness = std::move(witness);
    }
}

}  // namespace

nlohmann::ordered_json AuditReport::to_json() const {
    nlohmann::ordered_json out;
    out["pass"] = pass;
    out["conditions"] = nlohmann::ordered_json::array();
    for (const auto& f : findings) {
        nlohmann::ordered_json j;
        j["condition"] = f.condition;
        j["worst_ratio"] = f.worst_ratio;
        j["declared_bound"] = f.bound;
        j["pass"] = f.pass;
        j["witness"] = f.witness;
        out["conditions"].push_back(std::move(j));
    }
    return out;
}

AuditReport audit_assumptions(const Hamiltonian& h, const AuditConfig& cfg) {
    if (!cfg.grid) throw std::invalid_argument("audit_assumptions: config needs a grid");
    Rng rng(cfg.seed);

    AuditFinding lip_z{"z_lipschitz", 0.0, h.lipschitz_z, true, {}};
    AuditFinding lip_x{"x_lipschitz", 0.0, h.lipschitz_x ? h.lipschitz_x(cfg.level) : 0.0, true, {}};
    AuditFinding mono{"monotone_in_y", 0.0, 0.0, true, {}};
    AuditFinding grow{"growth_at_z0", 0.0, h.growth, true, {}};

    DriftFamily family(1);
    const double zero[1] = {0.0};

    for (std::size_t k = 0; k < cfg.samples; ++k) {
        const double t = sample_time(rng, h, cfg);
        const Path x = random_path(rng, cfg);
        const double y = rng.uniform(-cfg.y_range, cfg.y_range);
        const std::vector<double> z = random_z(rng, cfg);

        // (z-Lipschitz) |H(z) - H(z~)| <= L_H (1 + sup|x|) |z - z~|
        {
            const std::vector<double> zt = random_z(rng, cfg);
            const double dz = std::abs(z[0] - zt[0]);
            if (dz > 1e-12) {
                const double num = std::abs(h(t, x, y, z) - h(t, x, y, zt));
                const double ratio = num / ((1.0 + sup_history(x, t)) * dz);
                note_worst(lip_z, ratio,
                           {{"t", t}, {"y", y}, {"z", z[0]}, {"z_tilde", zt[0]}});
            }
        }

        // (monotone in y) H(y2) <= H(y1) for y1 < y2
        {
            const double y2 = y + std::abs(rng.uniform(0.0, cfg.y_range));
            const double gap = h(t, x, y2, z) - h(t, x, y, z);
            note_worst(mono, gap, {{"t", t}, {"y1", y}, {"y2", y2}, {"z", z[0]}});
        }

        // (growth) |H(t,x,y,0)| <= C_H (1 + sup|x| + |y|)
        {
            const double ratio = std::abs(h(t, x, y, std::span<const double>(zero, 1))) /
                                 (1.0 + sup_history(x, t) + std::abs(y));
            note_worst(grow, ratio, {{"t", t}, {"y", y}});
        }

        // (x-Lipschitz over bundle pairs)
        // |H(x) - H(x~)| <= M_L (1 + |y| + |z|) sup|x - x~|
        {
            const std::size_t anchor_node = rng.index(cfg.grid->node_count() - 1);
            const double t0 = cfg.grid->node(anchor_node);
            const Path x0 = Path::constant(cfg.grid, rng.uniform(-cfg.x_amplitude, cfg.x_amplitude));
            BundleSpec spec{cfg.level, Anchor{t0, x0}, family};
            const std::size_t cap =
                family.selector_cap(cfg.grid->interval_count() - anchor_node, 64);
            const Path xa = sample_extension(spec, rng.index(cap), cfg.grid);
            const Path xb = sample_extension(spec, rng.index(cap), cfg.grid);
            double tt = rng.uniform(t0, cfg.grid->horizon());
            if (near_exception(tt, h.time_exceptions, cfg.exception_radius))
                tt = std::min(tt + 2.0 * cfg.exception_radius, cfg.grid->horizon());
            double sep = 0.0;
            for (std::size_t i = 0; i < cfg.grid->node_count(); ++i) {
                if (cfg.grid->node(i) > tt + cfg.grid->node_tolerance()) break;
                sep = std::max(sep, std::abs(xa.at1(i) - xb.at1(i)));
            }
            if (sep > 1e-9) {
                const double num = std::abs(h(tt, xa, y, z) - h(tt, xb, y, z));
                const double ratio = num / ((1.0 + std::abs(y) + std::abs(z[0])) * sep);
                note_worst(lip_x, ratio, {{"t", tt}, {"t0", t0}, {"y", y}, {"z", z[0]}});
            }
        }
    }

    lip_z.pass = lip_z.worst_ratio <= lip_z.bound * (1.0 + 1e-9) + 1e-12;
    lip_x.pass = lip_x.worst_ratio <= lip_x.bound * (1.0 + 1e-9) + 1e-12;
    mono.pass = mono.worst_ratio <= 1e-12;
    grow.pass = grow.worst_ratio <= grow.bound * (1.0 + 1e-9) + 1e-12;

    AuditReport report;
    report.findings = {lip_z, lip_x, mono, grow};
    report.pass = lip_z.pass && lip_x.pass && mono.pass && grow.pass;
    return report;
}

}  // namespace pdhj

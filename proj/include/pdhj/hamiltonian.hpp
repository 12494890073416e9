#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pdhj/path.hpp"

#include "json.hpp"

namespace pdhj {

struct ControlProblem;

/// H(t, x-history, y, z), possibly discontinuous in t, with the declared
/// structural constants: L_H scales the z-Lipschitz bound, C_H the growth at
/// z = 0, and M_L the x-Lipschitz bound at bundle level L.
struct Hamiltonian {
    std::function<double(double t, const Path& x, double y, std::span<const double> z)> eval;
    double lipschitz_z = 0.0;                      // L_H
    double growth = 0.0;                           // C_H
    std::function<double(double level)> lipschitz_x;  // M_L
    std::vector<double> time_exceptions;           // declared t-discontinuities

    double operator()(double t, const Path& x, double y, std::span<const double> z) const {
        return eval(t, x, y, z);
    }
};

/// H(t,x,y,z) = min over the finite control set of [ell + f.z - lambda y],
/// with L_H = C_f, C_H = C_f + C_lambda and M_L = L_f independent of L.
Hamiltonian control_hamiltonian(const ControlProblem& problem);

struct AuditConfig {
    std::size_t samples = 10000;
    GridPtr grid;              // sampling resolution and horizon
    double x_amplitude = 1.0;  // scale of the random sample paths
    double y_range = 2.0;
    double z_range = 2.0;
    double level = 1.0;  // bundle level for the x-Lipschitz condition
    std::uint64_t seed = 1;
    double exception_radius = 1e-9;
};

struct AuditFinding {
    std::string condition;
    double worst_ratio = 0.0;
    double bound = 0.0;
    bool pass = true;
    nlohmann::ordered_json witness;
};

struct AuditReport {
    std::vector<AuditFinding> findings;
    bool pass = true;

    nlohmann::ordered_json to_json() const;
};

/// Sample-based audit of the structural conditions: z-Lipschitz against L_H,
/// x-Lipschitz over bundle pairs against M_L, monotone non-increase in y, and
/// growth at z = 0 against C_H. Deterministic given the seed; sampled times
/// avoid the declared discontinuity set.
AuditReport audit_assumptions(const Hamiltonian& h, const AuditConfig& cfg);

}  // namespace pdhj

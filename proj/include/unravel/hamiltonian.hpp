#pragma once

#include "unravel/grid.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace unravel {

/// Single-particle Hamiltonian on the grid: none (H = 0), free motion
/// p^2/2m, or a harmonic trap p^2/2m + m w^2 x^2 / 2. Dimensionless units,
/// hbar = 1.
struct Hamiltonian {
    enum class Kind { zero, free_particle, harmonic };

    Kind kind = Kind::free_particle;
    double mass = 1.0;
    double frequency = 0.0;

    static Hamiltonian zero() { return {Kind::zero, 1.0, 0.0}; }

    static Hamiltonian free(double mass = 1.0) {
        Hamiltonian h{Kind::free_particle, mass, 0.0};
        h.validate();
        return h;
    }

    static Hamiltonian harmonic(double frequency, double mass = 1.0) {
        Hamiltonian h{Kind::harmonic, mass, frequency};
        h.validate();
        return h;
    }

    void validate() const {
        if (!(mass > 0.0)) throw std::invalid_argument("Hamiltonian: mass must be > 0");
        if (frequency < 0.0) throw std::invalid_argument("Hamiltonian: frequency must be >= 0");
    }

    bool is_zero() const { return kind == Kind::zero; }

    /// Potential energy sampled at the grid points.
    Eigen::VectorXd potential(const SpatialGrid& grid) const {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(grid.n_points());
        if (kind == Kind::harmonic) {
            for (int j = 0; j < grid.n_points(); ++j) {
                const double x = grid.point(j);
                v[j] = 0.5 * mass * frequency * frequency * x * x;
            }
        }
        return v;
    }

    /// Kinetic energies k^2/2m in FFT mode order.
    Eigen::VectorXd kinetic_energies(const SpatialGrid& grid) const {
        Eigen::VectorXd t = Eigen::VectorXd::Zero(grid.n_points());
        if (kind != Kind::zero) {
            for (int j = 0; j < grid.n_points(); ++j) {
                const double k = grid.wavenumber(j);
                t[j] = 0.5 * k * k / mass;
            }
        }
        return t;
    }

    double max_kinetic_energy(const SpatialGrid& grid) const {
        if (kind == Kind::zero) return 0.0;
        const double kmax = 3.14159265358979323846 * grid.n_points() / grid.length();
        return 0.5 * kmax * kmax / mass;
    }
};

} // namespace unravel

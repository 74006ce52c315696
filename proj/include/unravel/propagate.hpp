#pragma once

#include "unravel/fourier.hpp"
#include "unravel/grid.hpp"
#include "unravel/hamiltonian.hpp"
#include "unravel/wavefunction.hpp"

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace unravel {

namespace detail {

inline void check_unitary_step(const Hamiltonian& h, const SpatialGrid& grid, double dt) {
    if (dt < 0.0) throw std::invalid_argument("propagate_unitary: dt must be >= 0");
    const double e_max = h.max_kinetic_energy(grid);
    if (dt * e_max > 0.5) {
        std::ostringstream msg;
        msg << "propagate_unitary: dt * max kinetic energy = " << dt * e_max
            << " exceeds 0.5; use dt <= " << 0.5 / e_max;
        throw std::invalid_argument(msg.str());
    }
}

} // namespace detail

/// Cached Strang split-step propagator exp(-i T dt/2) exp(-i V dt)
/// exp(-i T dt/2) for a fixed Hamiltonian and step. Exact for free motion
/// and H = 0; O(dt^3) local error otherwise.
class SplitStepPropagator {
public:
    SplitStepPropagator(const SpatialGrid& grid, const Hamiltonian& h, double dt)
        : grid_(grid), hamiltonian_(h), dt_(dt) {
        h.validate();
        detail::check_unitary_step(h, grid, dt);
        const Eigen::VectorXd kin = h.kinetic_energies(grid);
        const Eigen::VectorXd pot = h.potential(grid);
        half_kinetic_.resize(grid.n_points());
        potential_.resize(grid.n_points());
        for (int j = 0; j < grid.n_points(); ++j) {
            half_kinetic_[j] = std::polar(1.0, -0.5 * kin[j] * dt);
            potential_[j] = std::polar(1.0, -pot[j] * dt);
        }
        has_potential_ = h.kind == Hamiltonian::Kind::harmonic;
    }

    double dt() const { return dt_; }

    WaveFunction step(const WaveFunction& psi) const {
        if (psi.grid() != grid_)
            throw std::invalid_argument("SplitStepPropagator: state grid mismatch");
        if (dt_ == 0.0 || hamiltonian_.is_zero()) return psi;
        ComplexVector a = psi.amplitudes();
        apply(a, psi.n_particles());
        return WaveFunction(psi.grid(), psi.n_particles(), std::move(a), false);
    }

    /// In-place step on a raw amplitude vector.
    void apply(ComplexVector& a, int n_particles) const {
        if (dt_ == 0.0 || hamiltonian_.is_zero()) return;
        const int n = grid_.n_points();
        for (int axis = 0; axis < n_particles; ++axis)
            fourier::apply_momentum_phase(a, n, n_particles, axis, half_kinetic_);
        if (has_potential_) {
            if (n_particles == 1) {
                for (int j = 0; j < n; ++j) a[j] *= potential_[j];
            } else {
                for (int j1 = 0; j1 < n; ++j1)
                    for (int j0 = 0; j0 < n; ++j0)
                        a[j0 + static_cast<Eigen::Index>(n) * j1] *=
                            potential_[j0] * potential_[j1];
            }
        }
        for (int axis = 0; axis < n_particles; ++axis)
            fourier::apply_momentum_phase(a, n, n_particles, axis, half_kinetic_);
    }

private:
    SpatialGrid grid_;
    Hamiltonian hamiltonian_;
    double dt_;
    ComplexVector half_kinetic_;
    ComplexVector potential_;
    bool has_potential_ = false;
};

/// One Strang step of duration dt. dt = 0 returns the state unchanged.
inline WaveFunction propagate_unitary(const WaveFunction& psi, const Hamiltonian& h, double dt) {
    if (dt == 0.0 || h.is_zero()) {
        detail::check_unitary_step(h, psi.grid(), dt);
        return psi;
    }
    return SplitStepPropagator(psi.grid(), h, dt).step(psi);
}

/// Largest stable micro-step for the given Hamiltonian and grid (with margin
/// below the dt * E_kin_max <= 0.5 guard).
inline double default_micro_step(const Hamiltonian& h, const SpatialGrid& grid) {
    const double e_max = h.max_kinetic_energy(grid);
    return e_max > 0.0 ? 0.4 / e_max : 0.05;
}

/// Propagate for a total duration using uniform micro-steps of at most
/// dt_max.
inline WaveFunction propagate_for(const WaveFunction& psi, const Hamiltonian& h,
                                  double duration, double dt_max = 0.0) {
    if (duration < 0.0) throw std::invalid_argument("propagate_for: negative duration");
    if (duration == 0.0 || h.is_zero()) return psi;
    if (dt_max <= 0.0) dt_max = default_micro_step(h, psi.grid());
    const int n_steps = std::max(1, static_cast<int>(std::ceil(duration / dt_max - 1e-12)));
    const double dt = duration / n_steps;
    SplitStepPropagator prop(psi.grid(), h, dt);
    ComplexVector a = psi.amplitudes();
    for (int s = 0; s < n_steps; ++s) prop.apply(a, psi.n_particles());
    return WaveFunction(psi.grid(), psi.n_particles(), std::move(a), false);
}

} // namespace unravel

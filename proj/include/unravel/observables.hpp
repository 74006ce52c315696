#pragma once

#include "unravel/fourier.hpp"
#include "unravel/grid.hpp"
#include "unravel/wavefunction.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace unravel {

/// Position pdf of a single-particle state, normalized so sum(p)*dx = 1.
inline Eigen::VectorXd position_pdf(const WaveFunction& psi) {
    if (psi.n_particles() != 1)
        throw std::invalid_argument("position_pdf: single-particle states only (use marginal_pdf)");
    return psi.amplitudes().cwiseAbs2();
}

/// Marginal position pdf of one particle, obtained by summing the joint pdf
/// over the other coordinate. Normalized so sum(p)*dx = 1.
inline Eigen::VectorXd marginal_pdf(const WaveFunction& psi, int particle_index) {
    const int n = psi.grid().n_points();
    if (particle_index < 0 || particle_index >= psi.n_particles())
        throw std::invalid_argument("marginal_pdf: particle index out of range");
    if (psi.n_particles() == 1) return position_pdf(psi);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    for (int j1 = 0; j1 < n; ++j1)
        for (int j0 = 0; j0 < n; ++j0) {
            const double w = std::norm(psi.amplitudes()[j0 + static_cast<Eigen::Index>(n) * j1]);
            p[particle_index == 0 ? j0 : j1] += w * psi.grid().dx();
        }
    return p;
}

inline double expectation_x(const WaveFunction& psi, int particle_index = 0) {
    const Eigen::VectorXd p = marginal_pdf(psi, particle_index);
    double s = 0;
    for (int j = 0; j < psi.grid().n_points(); ++j) s += psi.grid().point(j) * p[j];
    return s * psi.grid().dx();
}

inline double variance_x(const WaveFunction& psi, int particle_index = 0) {
    const Eigen::VectorXd p = marginal_pdf(psi, particle_index);
    const double m = expectation_x(psi, particle_index);
    double s = 0;
    for (int j = 0; j < psi.grid().n_points(); ++j) {
        const double u = psi.grid().point(j) - m;
        s += u * u * p[j];
    }
    return s * psi.grid().dx();
}

/// Momentum expectation of a single-particle state, via the spectral
/// representation.
inline double expectation_p(const WaveFunction& psi) {
    if (psi.n_particles() != 1)
        throw std::invalid_argument("expectation_p: single-particle states only");
    const ComplexVector phi = fourier::to_momentum(psi.amplitudes());
    double num = 0, den = 0;
    for (int j = 0; j < psi.grid().n_points(); ++j) {
        const double w = std::norm(phi[j]);
        num += psi.grid().wavenumber(j) * w;
        den += w;
    }
    return num / den;
}

/// <H> for a single-particle state (kinetic part spectral, potential on the
/// grid).
template <class HamiltonianT>
double expectation_energy(const WaveFunction& psi, const HamiltonianT& h) {
    if (psi.n_particles() != 1)
        throw std::invalid_argument("expectation_energy: single-particle states only");
    const ComplexVector phi = fourier::to_momentum(psi.amplitudes());
    const Eigen::VectorXd kin = h.kinetic_energies(psi.grid());
    double e_kin = 0, den = 0;
    for (int j = 0; j < psi.grid().n_points(); ++j) {
        const double w = std::norm(phi[j]);
        e_kin += kin[j] * w;
        den += w;
    }
    e_kin /= den;
    const Eigen::VectorXd v = h.potential(psi.grid());
    double e_pot = 0;
    for (int j = 0; j < psi.grid().n_points(); ++j)
        e_pot += v[j] * std::norm(psi.amplitudes()[j]);
    e_pot *= psi.grid().dx();
    return e_kin + e_pot;
}

/// Shannon entropy of the position pdf, -sum p ln(p) dx.
inline double spatial_entropy(const WaveFunction& psi) {
    const Eigen::VectorXd p = position_pdf(psi);
    double s = 0;
    for (int j = 0; j < p.size(); ++j)
        if (p[j] > 0.0) s -= p[j] * std::log(p[j]) * psi.grid().dx();
    return s;
}

/// Probability mass at x > 0 (right branch of a symmetric cat state).
inline double right_branch_mass(const WaveFunction& psi) {
    if (psi.n_particles() != 1)
        throw std::invalid_argument("right_branch_mass: single-particle states only");
    double s = 0;
    for (int j = 0; j < psi.grid().n_points(); ++j)
        if (psi.grid().point(j) > 0.0) s += std::norm(psi.amplitudes()[j]);
    return s * psi.grid().dx();
}

/// Probability mass in [a, b].
inline double mass_in_interval(const WaveFunction& psi, double a, double b) {
    if (psi.n_particles() != 1)
        throw std::invalid_argument("mass_in_interval: single-particle states only");
    double s = 0;
    for (int j = 0; j < psi.grid().n_points(); ++j) {
        const double x = psi.grid().point(j);
        if (x >= a && x <= b) s += std::norm(psi.amplitudes()[j]);
    }
    return s * psi.grid().dx();
}

/// Probability sitting on the outermost grid cells; periodic propagation is
/// only trustworthy while this stays tiny.
inline double boundary_probability(const WaveFunction& psi) {
    const int n = psi.grid().n_points();
    if (psi.n_particles() == 1) {
        return (std::norm(psi.amplitudes()[0]) + std::norm(psi.amplitudes()[n - 1])) *
               psi.grid().dx();
    }
    const Eigen::VectorXd p0 = marginal_pdf(psi, 0);
    const Eigen::VectorXd p1 = marginal_pdf(psi, 1);
    return (p0[0] + p0[n - 1] + p1[0] + p1[n - 1]) * psi.grid().dx();
}

} // namespace unravel

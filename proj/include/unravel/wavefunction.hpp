#pragma once

#include "unravel/grid.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>

namespace unravel {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;

/// Normalized conditional state |Psi> on a 1- or 2-particle configuration
/// grid. Amplitudes are stored flat; for two particles the entry at
/// j0 + n*j1 is the amplitude at (x_{j0}, x_{j1}).
class WaveFunction {
public:
    WaveFunction(SpatialGrid grid, int n_particles, ComplexVector amplitudes,
                 bool renormalize = true)
        : grid_(grid), n_particles_(n_particles), amplitudes_(std::move(amplitudes)) {
        if (n_particles != 1 && n_particles != 2)
            throw std::invalid_argument("WaveFunction: n_particles must be 1 or 2");
        Eigen::Index expected = grid.n_points();
        if (n_particles == 2) expected *= grid.n_points();
        if (amplitudes_.size() != expected)
            throw std::invalid_argument("WaveFunction: amplitude length does not match grid");
        if (renormalize) normalize();
    }

    const SpatialGrid& grid() const { return grid_; }
    int n_particles() const { return n_particles_; }
    const ComplexVector& amplitudes() const { return amplitudes_; }

    /// Configuration-space volume element dx^n_particles.
    double cell_volume() const {
        return n_particles_ == 1 ? grid_.dx() : grid_.dx() * grid_.dx();
    }

    double norm_squared() const { return amplitudes_.squaredNorm() * cell_volume(); }
    double norm() const { return std::sqrt(norm_squared()); }

    void normalize() {
        const double n = norm();
        if (!(n > 0.0) || !std::isfinite(n))
            throw std::runtime_error("WaveFunction: cannot normalize zero or non-finite state");
        amplitudes_ /= n;
    }

    /// Raw amplitude access for in-place construction by the dynamics kernels.
    ComplexVector& mutable_amplitudes() { return amplitudes_; }

    /// Inner product <this|other> with the configuration-space measure.
    Complex overlap(const WaveFunction& other) const {
        require_same_layout(other);
        return amplitudes_.dot(other.amplitudes_) * cell_volume();
    }

    /// |<this|other>|^2.
    double fidelity(const WaveFunction& other) const { return std::norm(overlap(other)); }

    void require_same_layout(const WaveFunction& other) const {
        if (grid_ != other.grid_ || n_particles_ != other.n_particles_)
            throw std::invalid_argument("WaveFunction: mismatched grids or particle counts");
    }

private:
    SpatialGrid grid_;
    int n_particles_;
    ComplexVector amplitudes_;
};

/// Normalized Gaussian packet exp(-(x-center)^2/(4 width^2) + i momentum x).
inline WaveFunction gaussian_packet(const SpatialGrid& grid, double center,
                                    double width, double momentum = 0.0) {
    if (!grid.contains(center))
        throw std::invalid_argument("gaussian_packet: center outside the grid");
    if (!(width >= 2.0 * grid.dx()))
        throw std::invalid_argument("gaussian_packet: width below grid resolution (need >= 2 dx)");
    ComplexVector a(grid.n_points());
    for (int j = 0; j < grid.n_points(); ++j) {
        const double x = grid.point(j);
        const double u = x - center;
        a[j] = std::polar(std::exp(-u * u / (4.0 * width * width)), momentum * x);
    }
    return WaveFunction(grid, 1, std::move(a));
}

/// Equal-amplitude superposition of two packets at +/- separation/2.
inline WaveFunction cat_state(const SpatialGrid& grid, double separation, double width) {
    if (!(separation >= 4.0 * width))
        throw std::invalid_argument("cat_state: branches overlap (need separation >= 4 width)");
    const double c = separation / 2.0;
    if (!grid.contains(c) || !grid.contains(-c))
        throw std::invalid_argument("cat_state: branch centers outside the grid");
    if (!(width >= 2.0 * grid.dx()))
        throw std::invalid_argument("cat_state: width below grid resolution (need >= 2 dx)");
    ComplexVector a(grid.n_points());
    for (int j = 0; j < grid.n_points(); ++j) {
        const double x = grid.point(j);
        const double l = x + c, r = x - c;
        a[j] = std::exp(-l * l / (4.0 * width * width)) +
               std::exp(-r * r / (4.0 * width * width));
    }
    return WaveFunction(grid, 1, std::move(a));
}

/// Two-particle product state psi_a(x0) * psi_b(x1).
inline WaveFunction product_state(const WaveFunction& a, const WaveFunction& b) {
    if (a.n_particles() != 1 || b.n_particles() != 1)
        throw std::invalid_argument("product_state: factors must be single-particle");
    if (a.grid() != b.grid())
        throw std::invalid_argument("product_state: factors must share a grid");
    const int n = a.grid().n_points();
    ComplexVector joint(static_cast<Eigen::Index>(n) * n);
    for (int j1 = 0; j1 < n; ++j1)
        for (int j0 = 0; j0 < n; ++j0)
            joint[j0 + static_cast<Eigen::Index>(n) * j1] =
                a.amplitudes()[j0] * b.amplitudes()[j1];
    return WaveFunction(a.grid(), 2, std::move(joint));
}

} // namespace unravel

#pragma once

#include "unravel/grid.hpp"
#include "unravel/wavefunction.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace unravel {

using ComplexMatrix = Eigen::MatrixXcd;

/// Density matrix rho(x, x') for one degree of freedom on the grid.
/// Stored as kernel values; the operator trace is sum(diag) * dx, so the
/// matrix of eigenvalues is taken from rho * dx.
class DensityMatrix {
public:
    DensityMatrix(SpatialGrid grid, ComplexMatrix elements)
        : grid_(grid), elements_(std::move(elements)) {
        if (elements_.rows() != grid_.n_points() || elements_.cols() != grid_.n_points())
            throw std::invalid_argument("DensityMatrix: element shape does not match grid");
    }

    const SpatialGrid& grid() const { return grid_; }
    const ComplexMatrix& elements() const { return elements_; }
    ComplexMatrix& mutable_elements() { return elements_; }

    double trace() const { return elements_.diagonal().real().sum() * grid_.dx(); }

    /// tr rho^2; equals 1 for pure states.
    double purity() const {
        return (elements_.cwiseAbs2().sum()) * grid_.dx() * grid_.dx();
    }

    double hermiticity_error() const {
        return (elements_ - elements_.adjoint()).cwiseAbs().maxCoeff();
    }

    /// Smallest eigenvalue of the operator (rho * dx).
    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(
            0.5 * (elements_ + elements_.adjoint()) * grid_.dx(),
            Eigen::EigenvaluesOnly);
        return solver.eigenvalues().minCoeff();
    }

    /// Check the Hermiticity / unit-trace / positivity invariants.
    void validate(double herm_tol = 1e-10, double trace_tol = 1e-8,
                  double positivity_tol = 1e-8) const {
        if (hermiticity_error() > herm_tol)
            throw std::runtime_error("DensityMatrix: Hermiticity violated");
        if (std::abs(trace() - 1.0) > trace_tol)
            throw std::runtime_error("DensityMatrix: trace deviates from 1");
        if (min_eigenvalue() < -positivity_tol)
            throw std::runtime_error("DensityMatrix: negative eigenvalue beyond tolerance");
    }

    /// Off-diagonal element magnitude |rho(x_i, x_j)| by grid indices.
    double off_diagonal_magnitude(int i, int j) const {
        return std::abs(elements_(i, j));
    }

private:
    SpatialGrid grid_;
    ComplexMatrix elements_;
};

/// rho = |psi><psi| for a single-particle state.
inline DensityMatrix pure_density(const WaveFunction& psi) {
    if (psi.n_particles() != 1)
        throw std::invalid_argument(
            "pure_density: single-particle states only (reduced density matrices unsupported)");
    ComplexMatrix rho = psi.amplitudes() * psi.amplitudes().adjoint();
    return DensityMatrix(psi.grid(), std::move(rho));
}

/// Trace distance (1/2) sum |eigenvalues(rho1 - rho2)| with the dx measure;
/// values lie in [0, 1].
inline double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2) {
    if (rho1.grid() != rho2.grid())
        throw std::invalid_argument("trace_distance: mismatched grids");
    ComplexMatrix diff = (rho1.elements() - rho2.elements()) * rho1.grid().dx();
    diff = 0.5 * (diff + diff.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(diff, Eigen::EigenvaluesOnly);
    return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

/// rho with all off-diagonal elements removed (fully dephased).
inline DensityMatrix dephased(const DensityMatrix& rho) {
    ComplexMatrix d = rho.elements().diagonal().asDiagonal();
    return DensityMatrix(rho.grid(), std::move(d));
}

} // namespace unravel

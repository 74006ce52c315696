#pragma once

#include "unravel/density.hpp"
#include "unravel/kick.hpp"
#include "unravel/propagate.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace unravel {

/// Off-diagonal decay rate of the localization master equation:
/// lambda * (1 - exp(-d^2 / (8 sigma^2))), saturating at lambda.
inline double grw_kernel(double d, double lambda_rate, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("grw_kernel: sigma must be > 0");
    return lambda_rate * (1.0 - std::exp(-d * d / (8.0 * sigma * sigma)));
}

/// Off-diagonal decay rate of the continuous-monitoring master equation:
/// gamma * (4 pi r_C^2)^(-dim/2) * (1 - exp(-d^2 / (4 r_C^2))).
inline double csl_kernel(double d, double gamma, double r_C, int dimension) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("csl_kernel: gamma must be >= 0");
    if (!(r_C > 0.0)) throw std::invalid_argument("csl_kernel: r_C must be > 0");
    if (dimension != 1 && dimension != 3)
        throw std::invalid_argument("csl_kernel: dimension must be 1 or 3");
    const double pref =
        gamma * std::pow(4.0 * 3.14159265358979323846 * r_C * r_C,
                         -0.5 * static_cast<double>(dimension));
    return pref * (1.0 - std::exp(-d * d / (4.0 * r_C * r_C)));
}

/// Position-pair-diagonal decoherence kernel rate(d) = saturation_rate *
/// (1 - exp(-d^2 * exponent_scale)). All three generating processes reduce
/// to this family; the matched momentum-kick kernel stores the identical
/// numbers as the localization kernel, so master evolutions under the two
/// coincide bit for bit.
class DecoherenceKernel {
public:
    enum class Model { grw, csl, kick };

    static DecoherenceKernel grw(double lambda_rate, double sigma) {
        if (!(sigma > 0.0))
            throw std::invalid_argument("DecoherenceKernel: sigma must be > 0");
        if (!(lambda_rate >= 0.0))
            throw std::invalid_argument("DecoherenceKernel: rate must be >= 0");
        return DecoherenceKernel(Model::grw, lambda_rate,
                                 1.0 / (8.0 * sigma * sigma), sigma, 1);
    }

    static DecoherenceKernel kick(double lambda_rate, double sigma,
                                  KickVarianceMode mode = KickVarianceMode::matched) {
        if (!(sigma > 0.0))
            throw std::invalid_argument("DecoherenceKernel: sigma must be > 0");
        if (!(lambda_rate >= 0.0))
            throw std::invalid_argument("DecoherenceKernel: rate must be >= 0");
        const double scale = mode == KickVarianceMode::matched
                                 ? 1.0 / (8.0 * sigma * sigma)
                                 : 1.0 / (2.0 * sigma * sigma);
        return DecoherenceKernel(Model::kick, lambda_rate, scale, sigma, 1);
    }

    static DecoherenceKernel csl(double gamma, double r_C, int dimension) {
        if (!(gamma >= 0.0))
            throw std::invalid_argument("DecoherenceKernel: gamma must be >= 0");
        if (!(r_C > 0.0))
            throw std::invalid_argument("DecoherenceKernel: r_C must be > 0");
        if (dimension != 1 && dimension != 3)
            throw std::invalid_argument("DecoherenceKernel: dimension must be 1 or 3");
        const double saturation =
            gamma * std::pow(4.0 * 3.14159265358979323846 * r_C * r_C,
                             -0.5 * static_cast<double>(dimension));
        return DecoherenceKernel(Model::csl, saturation, 1.0 / (4.0 * r_C * r_C), r_C,
                                 dimension);
    }

    Model model() const { return model_; }
    double saturation_rate() const { return saturation_rate_; }
    double length_scale() const { return length_scale_; }
    int dimension() const { return dimension_; }

    /// Decay rate at separation d. Zero at d = 0, monotone in |d|,
    /// saturates at saturation_rate().
    double rate(double d) const {
        return saturation_rate_ * (1.0 - std::exp(-d * d * exponent_scale_));
    }

private:
    DecoherenceKernel(Model model, double saturation, double exponent_scale,
                      double length_scale, int dimension)
        : model_(model), saturation_rate_(saturation),
          exponent_scale_(exponent_scale), length_scale_(length_scale),
          dimension_(dimension) {}

    Model model_;
    double saturation_rate_;
    double exponent_scale_;
    double length_scale_;
    int dimension_;
};

namespace detail {

/// Per-step Schur factors exp(-rate(|x_i - x_j|) dt), stored by index
/// offset |i - j| (the grid is uniform). Symmetric by construction.
inline std::vector<double> decoherence_factors(const SpatialGrid& grid,
                                               const DecoherenceKernel& kernel,
                                               double dt) {
    std::vector<double> f(static_cast<std::size_t>(grid.n_points()));
    for (int m = 0; m < grid.n_points(); ++m)
        f[static_cast<std::size_t>(m)] = std::exp(-kernel.rate(m * grid.dx()) * dt);
    return f;
}

inline void check_master_step(const SpatialGrid& grid, const DecoherenceKernel& kernel,
                              double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("evolve_master: dt must be > 0");
    const double max_rate = kernel.rate(grid.x_max() - grid.x_min());
    if (dt * max_rate > 0.1) {
        std::ostringstream msg;
        msg << "evolve_master: dt * max decoherence rate = " << dt * max_rate
            << " exceeds 0.1; use dt <= " << 0.1 / max_rate;
        throw std::invalid_argument(msg.str());
    }
}

/// One Strang step on the density matrix: half unitary sandwich, exact
/// elementwise decoherence, half unitary sandwich. The unitary sandwich
/// U rho U^dag needs only vector propagation: B = U rho column by column,
/// then U rho U^dag = (U B^dag)^dag.
class MasterStepper {
public:
    MasterStepper(const SpatialGrid& grid, const Hamiltonian& h,
                  const DecoherenceKernel& kernel, double dt)
        : grid_(grid), unitary_(h.is_zero() ? nullptr
                                            : new SplitStepPropagator(grid, h, 0.5 * dt)),
          factors_(decoherence_factors(grid, kernel, dt)) {
        check_unitary_step(h, grid, dt);
        check_master_step(grid, kernel, dt);
    }

    void step(ComplexMatrix& rho) const {
        half_sandwich(rho);
        const int n = grid_.n_points();
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                rho(i, j) *= factors_[static_cast<std::size_t>(i < j ? j - i : i - j)];
        half_sandwich(rho);
    }

private:
    void half_sandwich(ComplexMatrix& rho) const {
        if (!unitary_) return;
        apply_to_columns(rho);            // B = U rho
        ComplexMatrix adj = rho.adjoint();
        apply_to_columns(adj);            // U B^dag
        rho = adj.adjoint();              // (U B^dag)^dag = U rho U^dag
        rho = 0.5 * (rho + rho.adjoint().eval()); // scrub rounding asymmetry
    }

    void apply_to_columns(ComplexMatrix& m) const {
        ComplexVector col(m.rows());
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            col = m.col(j);
            unitary_->apply(col, 1);
            m.col(j) = col;
        }
    }

    SpatialGrid grid_;
    std::shared_ptr<const SplitStepPropagator> unitary_;
    std::vector<double> factors_;
};

} // namespace detail

/// Evolve the non-selective density matrix for t_final in uniform steps of
/// (at most) dt: Strang splitting with the decoherence part applied in
/// closed form, which is exact because the kernel is diagonal in the
/// position-pair basis.
inline DensityMatrix evolve_master(const DensityMatrix& rho0, const Hamiltonian& h,
                                   const DecoherenceKernel& kernel, double t_final,
                                   double dt) {
    if (t_final < 0.0) throw std::invalid_argument("evolve_master: t_final must be >= 0");
    if (t_final == 0.0) return rho0;
    const int n_steps = std::max(1, static_cast<int>(std::ceil(t_final / dt - 1e-9)));
    const double step = t_final / n_steps;
    detail::MasterStepper stepper(rho0.grid(), h, kernel, step);
    ComplexMatrix rho = rho0.elements();
    for (int s = 0; s < n_steps; ++s) stepper.step(rho);
    return DensityMatrix(rho0.grid(), std::move(rho));
}

/// As evolve_master, but returns the solution at each requested snapshot
/// time (each segment is subdivided uniformly so snapshots land exactly).
inline std::vector<DensityMatrix> evolve_master_snapshots(
    const DensityMatrix& rho0, const Hamiltonian& h, const DecoherenceKernel& kernel,
    const std::vector<double>& snapshot_times, double dt) {
    std::vector<DensityMatrix> out;
    out.reserve(snapshot_times.size());
    DensityMatrix rho = rho0;
    double t = 0.0;
    for (double t_snap : snapshot_times) {
        if (t_snap < t)
            throw std::invalid_argument(
                "evolve_master_snapshots: snapshot times must be non-decreasing");
        if (t_snap > t) rho = evolve_master(rho, h, kernel, t_snap - t, dt);
        t = t_snap;
        out.push_back(rho);
    }
    return out;
}

/// Centre-of-mass master equation of a rigid N-constituent object: the
/// same localization kernel with its rate amplified to N * lambda.
inline DensityMatrix evolve_com_master(const DensityMatrix& rho0,
                                       const Hamiltonian& h_com, double n_constituents,
                                       double lambda_rate, double sigma, double t_final,
                                       double dt) {
    if (!(n_constituents >= 1.0))
        throw std::invalid_argument("evolve_com_master: N must be >= 1");
    return evolve_master(rho0, h_com,
                         DecoherenceKernel::grw(n_constituents * lambda_rate, sigma),
                         t_final, dt);
}

/// Order-of-magnitude arithmetic for macroscopic localization: event rate
/// and collective position precision of an A-constituent solid.
struct MagnitudeEstimates {
    double constituents = 0.0;      ///< A
    double lambda_rate = 0.0;       ///< per-constituent event rate (Hz)
    double r_C = 0.0;               ///< smearing length
    double sigma = 0.0;             ///< localization width r_C / sqrt(2)
    double events_per_second = 0.0; ///< N = A * lambda
    double precision = 0.0;         ///< sigma / sqrt(N)
    double reference_rate = 1e4;    ///< rounded N used in the source estimate
    double precision_at_reference = 0.0; ///< sigma / sqrt(reference_rate)
};

/// Pure arithmetic, no simulation: N = A * lambda events per second hit the
/// centre of mass, and averaging N independent width-sigma localizations
/// per second pins it to sigma / sqrt(N).
inline MagnitudeEstimates estimate_collapse_magnitudes(double constituents,
                                                       double lambda_rate, double r_C) {
    if (!(constituents > 0.0) || !(lambda_rate > 0.0) || !(r_C > 0.0))
        throw std::invalid_argument(
            "estimate_collapse_magnitudes: all inputs must be > 0");
    MagnitudeEstimates e;
    e.constituents = constituents;
    e.lambda_rate = lambda_rate;
    e.r_C = r_C;
    e.sigma = r_C / std::sqrt(2.0);
    e.events_per_second = constituents * lambda_rate;
    e.precision = e.sigma / std::sqrt(e.events_per_second);
    e.precision_at_reference = e.sigma / std::sqrt(e.reference_rate);
    return e;
}

} // namespace unravel

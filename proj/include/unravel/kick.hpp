#pragma once

#include "unravel/trajectory.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace unravel {

/// Variance convention for the momentum-kick distribution. `matched` picks
/// the variance 1/(4 sigma^2) that makes the averaged dephasing factor
/// E[e^{ikd}] equal the localization kernel's exp(-d^2/(8 sigma^2));
/// `as_printed` keeps the alternative 1/sigma^2 reading for comparison.
enum class KickVarianceMode { matched, as_printed };

inline double kick_variance(double sigma, KickVarianceMode mode) {
    if (!(sigma > 0.0)) throw std::invalid_argument("kick_variance: sigma must be > 0");
    return mode == KickVarianceMode::matched ? 1.0 / (4.0 * sigma * sigma)
                                             : 1.0 / (sigma * sigma);
}

/// Parameters of the random-unitary momentum-kick process.
struct KickParams {
    double lambda_rate = 1.0; ///< per-particle kick rate
    double sigma = 1.0;       ///< length scale fixing the kick variance
    KickVarianceMode mode = KickVarianceMode::matched;
    int n_particles = 1;

    double total_rate() const { return n_particles * lambda_rate; }

    void validate() const {
        if (!(lambda_rate >= 0.0))
            throw std::invalid_argument("KickParams: lambda_rate must be >= 0");
        if (!(sigma > 0.0)) throw std::invalid_argument("KickParams: sigma must be > 0");
        if (n_particles < 1 || n_particles > 2)
            throw std::invalid_argument("KickParams: n_particles must be 1 or 2");
    }
};

/// Draw one kick wavenumber: zero-mean Gaussian, state-independent.
inline double sample_kick(double sigma, RngStream& rng,
                          KickVarianceMode mode = KickVarianceMode::matched) {
    return std::sqrt(kick_variance(sigma, mode)) * rng.normal();
}

/// Apply the unitary phase e^{i k x} along one particle's coordinate.
/// Exactly norm-preserving; the position density is untouched.
inline WaveFunction apply_kick(const WaveFunction& psi, int particle, double k) {
    if (particle < 0 || particle >= psi.n_particles())
        throw std::invalid_argument("apply_kick: particle index out of range");
    const SpatialGrid& grid = psi.grid();
    const int n = grid.n_points();
    ComplexVector a = psi.amplitudes();
    std::vector<Complex> phase(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
        phase[static_cast<std::size_t>(j)] = std::polar(1.0, k * grid.point(j));
    if (psi.n_particles() == 1) {
        for (int j = 0; j < n; ++j) a[j] *= phase[static_cast<std::size_t>(j)];
    } else {
        for (int j1 = 0; j1 < n; ++j1)
            for (int j0 = 0; j0 < n; ++j0) {
                const int jp = particle == 0 ? j0 : j1;
                a[j0 + static_cast<Eigen::Index>(n) * j1] *=
                    phase[static_cast<std::size_t>(jp)];
            }
    }
    return WaveFunction(grid, psi.n_particles(), std::move(a), false);
}

/// Averaged dephasing factor E[e^{ikd}] of one kick at separation d,
/// via the Gaussian characteristic function exp(-var_k d^2 / 2).
inline double kick_kernel(double d, double sigma,
                          KickVarianceMode mode = KickVarianceMode::matched) {
    const double var = kick_variance(sigma, mode);
    return std::exp(-0.5 * var * d * d);
}

/// Run one momentum-kick trajectory. The clock stream contract matches
/// run_grw_trajectory, so equal seeds give equal event schedules there.
///
/// Process-stream draw order per event: particle index (only when the state
/// holds more than one particle), then the kick wavenumber (one normal).
inline TrajectoryRecord<KickEvent> run_kick_trajectory(
    const WaveFunction& initial, const Hamiltonian& h, const KickParams& params,
    double t_final, const std::vector<double>& snapshot_times, std::uint64_t seed,
    double dt_max = 0.0) {
    params.validate();
    if (params.n_particles != initial.n_particles())
        throw std::invalid_argument(
            "run_kick_trajectory: params.n_particles does not match the state");
    return detail::run_jump_trajectory<KickEvent>(
        initial, h, params.total_rate(), t_final, snapshot_times, seed, dt_max,
        [&params](WaveFunction& psi, double t, RngStream& process) {
            const int particle =
                psi.n_particles() > 1
                    ? static_cast<int>(process.uniform_int(
                          static_cast<std::uint64_t>(psi.n_particles())))
                    : 0;
            const double k = sample_kick(params.sigma, process, params.mode);
            psi = apply_kick(psi, particle, k);
            return KickEvent{t, particle, k};
        });
}

} // namespace unravel

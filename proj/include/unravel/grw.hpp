#pragma once

#include "unravel/observables.hpp"
#include "unravel/trajectory.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace unravel {

/// Parameters of the spontaneous-localization jump process.
struct GrwParams {
    double lambda_rate = 1.0; ///< per-particle jump rate
    double sigma = 1.0;       ///< localization width of one jump
    int n_particles = 1;
    /// Rigid-body mode: the state is the centre-of-mass coordinate of a
    /// bound N-constituent object, so jumps hit the single coordinate at
    /// the amplified rate N * lambda.
    bool com_rigid = false;
    double com_amplification = 1.0; ///< constituent count N for rigid mode

    double total_rate() const {
        return com_rigid ? com_amplification * lambda_rate
                         : n_particles * lambda_rate;
    }

    void validate(const SpatialGrid& grid) const {
        if (!(lambda_rate >= 0.0))
            throw std::invalid_argument("GrwParams: lambda_rate must be >= 0");
        if (!(sigma > 0.0)) throw std::invalid_argument("GrwParams: sigma must be > 0");
        if (sigma < 2.0 * grid.dx()) {
            std::ostringstream msg;
            msg << "GrwParams: sigma = " << sigma << " is below 2 * dx = "
                << 2.0 * grid.dx() << "; the localization profile would be "
                << "under-resolved on this grid";
            throw std::invalid_argument(msg.str());
        }
        if (n_particles < 1 || n_particles > 2)
            throw std::invalid_argument("GrwParams: n_particles must be 1 or 2");
        if (com_rigid && n_particles != 1)
            throw std::invalid_argument(
                "GrwParams: rigid centre-of-mass mode tracks one coordinate");
        if (com_rigid && !(com_amplification >= 1.0))
            throw std::invalid_argument("GrwParams: com_amplification must be >= 1");
    }
};

/// Amplitude profile of one localization event: a normalized Gaussian POVM
/// element sqrt(G), with G of variance sigma^2, so
/// sqrt(G)(u) = (2 pi sigma^2)^(-1/4) exp(-u^2 / (4 sigma^2)).
inline double gaussian_effect_amplitude(double u, double sigma) {
    const double norm = std::pow(2.0 * 3.14159265358979323846 * sigma * sigma, -0.25);
    return norm * std::exp(-u * u / (4.0 * sigma * sigma));
}

/// Draw a measurement outcome from p(xbar) = || sqrt(G)(xbar - x) psi ||^2.
/// Sampling is exact in two stages: draw a grid point from the position
/// marginal of the hit particle, then blur it with N(0, sigma^2) — the
/// composition of the two densities is precisely p(xbar).
inline double sample_outcome(const WaveFunction& psi, int particle, double sigma,
                             RngStream& rng) {
    const Eigen::VectorXd pdf = psi.n_particles() == 1
                                    ? position_pdf(psi)
                                    : marginal_pdf(psi, particle);
    const SpatialGrid& grid = psi.grid();
    double total = 0.0;
    for (double p : pdf) total += p;
    if (!(total > 0.0)) throw std::runtime_error("sample_outcome: state has no mass");
    const double target = rng.uniform() * total;
    double cum = 0.0;
    int chosen = grid.n_points() - 1;
    for (int j = 0; j < grid.n_points(); ++j) {
        cum += pdf[j];
        if (cum >= target) {
            chosen = j;
            break;
        }
    }
    return grid.point(chosen) + sigma * rng.normal();
}

/// Collapse the state around a measured position: multiply by
/// sqrt(G)(outcome - x) on the hit particle's coordinate and renormalize.
/// Throws if the outcome lies so far outside the support that the
/// post-jump norm underflows.
inline WaveFunction apply_jump(const WaveFunction& psi, int particle, double outcome,
                               double sigma) {
    if (particle < 0 || particle >= psi.n_particles())
        throw std::invalid_argument("apply_jump: particle index out of range");
    const SpatialGrid& grid = psi.grid();
    const int n = grid.n_points();
    ComplexVector a = psi.amplitudes();
    std::vector<double> profile(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
        profile[static_cast<std::size_t>(j)] =
            gaussian_effect_amplitude(grid.point(j) - outcome, sigma);
    if (psi.n_particles() == 1) {
        for (int j = 0; j < n; ++j) a[j] *= profile[static_cast<std::size_t>(j)];
    } else {
        for (int j1 = 0; j1 < n; ++j1)
            for (int j0 = 0; j0 < n; ++j0) {
                const int jp = particle == 0 ? j0 : j1;
                a[j0 + static_cast<Eigen::Index>(n) * j1] *=
                    profile[static_cast<std::size_t>(jp)];
            }
    }
    WaveFunction post(grid, psi.n_particles(), std::move(a), false);
    if (post.norm() <= 1e-12) {
        std::ostringstream msg;
        msg << "apply_jump: outcome " << outcome
            << " annihilates the state (post-jump norm " << post.norm() << ")";
        throw std::runtime_error(msg.str());
    }
    post.normalize();
    return post;
}

/// Run one localization trajectory. Event times come from a dedicated clock
/// stream, event content from a separate process stream, so a momentum-kick
/// run with the same seed shares the event schedule exactly.
///
/// Process-stream draw order per event: particle index (only when the state
/// holds more than one particle), then outcome (one uniform + one normal).
inline TrajectoryRecord<JumpEvent> run_grw_trajectory(
    const WaveFunction& initial, const Hamiltonian& h, const GrwParams& params,
    double t_final, const std::vector<double>& snapshot_times, std::uint64_t seed,
    double dt_max = 0.0) {
    params.validate(initial.grid());
    if (params.n_particles != initial.n_particles())
        throw std::invalid_argument(
            "run_grw_trajectory: params.n_particles does not match the state");
    return detail::run_jump_trajectory<JumpEvent>(
        initial, h, params.total_rate(), t_final, snapshot_times, seed, dt_max,
        [&params](WaveFunction& psi, double t, RngStream& process) {
            const int particle =
                psi.n_particles() > 1
                    ? static_cast<int>(process.uniform_int(
                          static_cast<std::uint64_t>(psi.n_particles())))
                    : 0;
            const double outcome = sample_outcome(psi, particle, params.sigma, process);
            psi = apply_jump(psi, particle, outcome, params.sigma);
            return JumpEvent{t, particle, outcome};
        });
}

} // namespace unravel

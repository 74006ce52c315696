#pragma once

#include "unravel/observables.hpp"
#include "unravel/propagate.hpp"
#include "unravel/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace unravel {

/// Parameters of the continuous-monitoring (smeared-density) process.
struct CslParams {
    double gamma = 1.0;  ///< monitoring strength
    double r_C = 1.0;    ///< smearing length of the density Gaussian
    int n_cells = 16;    ///< number of noise-field cells
    double cell_width = 1.0;
    std::vector<double> weights{1.0}; ///< per-particle coupling weights

    int n_particles() const { return static_cast<int>(weights.size()); }

    /// Cells tile [x_min, x_max]; centers sit mid-cell.
    static CslParams for_grid(const SpatialGrid& grid, double gamma, double r_C,
                              int n_cells, std::vector<double> weights = {1.0}) {
        CslParams p;
        p.gamma = gamma;
        p.r_C = r_C;
        p.n_cells = n_cells;
        p.cell_width = (grid.x_max() - grid.x_min()) / n_cells;
        p.weights = std::move(weights);
        p.validate(grid);
        return p;
    }

    std::vector<double> cell_centers(const SpatialGrid& grid) const {
        std::vector<double> centers(static_cast<std::size_t>(n_cells));
        for (int c = 0; c < n_cells; ++c)
            centers[static_cast<std::size_t>(c)] =
                grid.x_min() + (c + 0.5) * cell_width;
        return centers;
    }

    void validate(const SpatialGrid& grid) const {
        if (!(gamma >= 0.0)) throw std::invalid_argument("CslParams: gamma must be >= 0");
        if (!(r_C > 0.0)) throw std::invalid_argument("CslParams: r_C must be > 0");
        if (r_C < 2.0 * grid.dx()) {
            std::ostringstream msg;
            msg << "CslParams: r_C = " << r_C << " is below 2 * dx = "
                << 2.0 * grid.dx() << "; the smearing Gaussian would be "
                << "under-resolved on this grid";
            throw std::invalid_argument(msg.str());
        }
        if (n_cells < 1) throw std::invalid_argument("CslParams: n_cells must be >= 1");
        const double span = n_cells * cell_width;
        const double length = grid.x_max() - grid.x_min();
        if (std::abs(span - length) > 1e-9 * length)
            throw std::invalid_argument(
                "CslParams: noise cells must span the grid exactly");
        if (weights.empty() || weights.size() > 2)
            throw std::invalid_argument("CslParams: need 1 or 2 particle weights");
        for (double w : weights)
            if (!(w > 0.0))
                throw std::invalid_argument("CslParams: weights must be > 0");
    }
};

/// One step's worth of white-noise increments: independent per cell, with
/// variance 1/(dt * cell_width) so that the space-time integral of the
/// field has unit covariance.
struct NoiseField {
    std::vector<double> w;
    double dt = 0.0;
    double cell_width = 0.0;
};

inline NoiseField sample_noise_field(int n_cells, double dt, double cell_width,
                                     RngStream& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_noise_field: dt must be > 0");
    if (!(cell_width > 0.0))
        throw std::invalid_argument("sample_noise_field: cell_width must be > 0");
    NoiseField noise;
    noise.dt = dt;
    noise.cell_width = cell_width;
    noise.w.resize(static_cast<std::size_t>(n_cells));
    const double scale = std::sqrt(1.0 / (dt * cell_width));
    for (auto& v : noise.w) v = scale * rng.normal();
    return noise;
}

/// Smeared-density operator for one noise cell: diagonal in position, value
/// at grid point z (or point pair for two particles) is
/// sum_k weight_k * G_{r_C}(cell_center - z_k), with G the normalized
/// Gaussian of width r_C. Returned as a vector over the full state grid.
inline std::vector<double> smeared_density(const SpatialGrid& grid, double cell_center,
                                           double r_C,
                                           const std::vector<double>& weights) {
    if (!(r_C >= 2.0 * grid.dx()))
        throw std::invalid_argument("smeared_density: r_C must be >= 2 * dx");
    if (weights.empty() || weights.size() > 2)
        throw std::invalid_argument("smeared_density: need 1 or 2 particle weights");
    const int n = grid.n_points();
    const double norm = 1.0 / std::sqrt(2.0 * 3.14159265358979323846 * r_C * r_C);
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double u = cell_center - grid.point(j);
        g[static_cast<std::size_t>(j)] = norm * std::exp(-u * u / (2.0 * r_C * r_C));
    }
    if (weights.size() == 1) {
        for (auto& v : g) v *= weights[0];
        return g;
    }
    std::vector<double> joint(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int j1 = 0; j1 < n; ++j1)
        for (int j0 = 0; j0 < n; ++j0)
            joint[static_cast<std::size_t>(j0) +
                  static_cast<std::size_t>(n) * static_cast<std::size_t>(j1)] =
                weights[0] * g[static_cast<std::size_t>(j0)] +
                weights[1] * g[static_cast<std::size_t>(j1)];
    return joint;
}

/// Signal reading for one step: per-cell expectation of the smeared density
/// plus scaled noise. The decomposition is retained so the correlator of
/// the noise part can be checked downstream.
struct SignalSample {
    std::vector<double> values;       ///< expectation + noise
    std::vector<double> expectations; ///< <n(cell)> alone
};

/// Measured-signal trace of one monitoring trajectory.
struct SignalRecord {
    std::vector<double> times;
    std::vector<double> cells; ///< cell center positions
    std::vector<std::vector<double>> values;       ///< [time][cell]
    std::vector<std::vector<double>> expectations; ///< [time][cell]
};

namespace detail {

/// Cached per-trajectory monitoring data: cell centers and the diagonal
/// smeared-density vectors, computed once per (grid, params).
class CslContext {
public:
    CslContext(const SpatialGrid& grid, const CslParams& params)
        : grid_(grid), params_(params), centers_(params.cell_centers(grid)) {
        params.validate(grid);
        densities_.reserve(centers_.size());
        for (double c : centers_)
            densities_.push_back(smeared_density(grid, c, params.r_C, params.weights));
    }

    const SpatialGrid& grid() const { return grid_; }
    const CslParams& params() const { return params_; }
    const std::vector<double>& cell_centers() const { return centers_; }

    /// <n(cell)> for the (normalized) amplitude vector.
    std::vector<double> expectations(const ComplexVector& a) const {
        const double vol = cell_volume();
        std::vector<double> out(densities_.size());
        for (std::size_t c = 0; c < densities_.size(); ++c) {
            const auto& nc = densities_[c];
            double acc = 0.0;
            for (Eigen::Index j = 0; j < a.size(); ++j)
                acc += nc[static_cast<std::size_t>(j)] * std::norm(a[j]);
            out[c] = acc * vol;
        }
        return out;
    }

    /// Multiplicative Euler-Maruyama update of the monitoring terms:
    /// a(x) *= 1 - (gamma/2) D(x) dt + sqrt(gamma) S(x) dt, with
    /// D(x) = sum_c dx_cell (n_c(x) - <n_c>)^2 and
    /// S(x) = sum_c dx_cell (n_c(x) - <n_c>) w_c. The increments w_c carry
    /// variance 1/(dt * dx_cell), so w_c dt is the Brownian increment and
    /// the stochastic term has standard deviation sqrt(gamma D dt).
    /// Expectations are taken at the pre-step state (Ito convention).
    /// Refuses if the drift would exceed the step bound. Does NOT
    /// renormalize.
    void apply_monitoring(ComplexVector& a, const std::vector<double>& exps,
                          const NoiseField& noise, double dt) const {
        if (noise.w.size() != densities_.size())
            throw std::invalid_argument("CslContext: noise/cell count mismatch");
        const double dxc = params_.cell_width;
        const double gamma = params_.gamma;
        double max_drift = 0.0;
        for (Eigen::Index j = 0; j < a.size(); ++j) {
            double drift = 0.0, stoch = 0.0;
            for (std::size_t c = 0; c < densities_.size(); ++c) {
                const double dev =
                    densities_[c][static_cast<std::size_t>(j)] - exps[c];
                drift += dxc * dev * dev;
                stoch += dxc * dev * noise.w[c];
            }
            if (drift > max_drift) max_drift = drift;
            a[j] *= 1.0 - 0.5 * gamma * drift * dt + std::sqrt(gamma) * stoch * dt;
        }
        if (dt * gamma * max_drift > 0.1) {
            std::ostringstream msg;
            msg << "monitoring step: dt * gamma * max drift = "
                << dt * gamma * max_drift << " exceeds 0.1; use dt <= "
                << 0.1 / (gamma * max_drift);
            throw std::runtime_error(msg.str());
        }
    }

    /// Conservative state-independent drift bound, for validating a step
    /// size before running: D(x) <= sum_c dx_cell * max_x n_c(x)^2.
    double static_drift_bound() const {
        double bound = 0.0;
        for (const auto& nc : densities_) {
            double m = 0.0;
            for (double v : nc) m = std::max(m, v);
            bound += params_.cell_width * m * m;
        }
        return bound;
    }

private:
    double cell_volume() const {
        double v = grid_.dx();
        if (params_.n_particles() == 2) v *= grid_.dx();
        return v;
    }

    SpatialGrid grid_;
    CslParams params_;
    std::vector<double> centers_;
    std::vector<std::vector<double>> densities_;
};

} // namespace detail

/// One Euler-Maruyama step of the monitoring stochastic dynamics: half
/// unitary split-step, multiplicative drift + noise update with pre-step
/// expectations, half unitary split-step, explicit renormalization.
inline WaveFunction sse_step(const WaveFunction& psi, const Hamiltonian& h,
                             const CslParams& params, const NoiseField& noise,
                             double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("sse_step: dt must be > 0");
    detail::CslContext ctx(psi.grid(), params);
    if (params.n_particles() != psi.n_particles())
        throw std::invalid_argument("sse_step: params/state particle count mismatch");
    ComplexVector a = psi.amplitudes();
    const std::vector<double> exps = ctx.expectations(a);
    if (!h.is_zero()) {
        SplitStepPropagator half(psi.grid(), h, 0.5 * dt);
        half.apply(a, psi.n_particles());
        ctx.apply_monitoring(a, exps, noise, dt);
        half.apply(a, psi.n_particles());
    } else {
        ctx.apply_monitoring(a, exps, noise, dt);
    }
    WaveFunction out(psi.grid(), psi.n_particles(), std::move(a), false);
    out.normalize();
    return out;
}

/// Signal reading for one step: n(cell) = <n(cell)> + w / (2 sqrt(gamma)),
/// using the same noise increment that drives the state update, so signal
/// and conditional state are consistent. The noise part has variance
/// 1/(4 gamma dt cell_width).
inline SignalSample generate_signal(const WaveFunction& psi, const CslParams& params,
                                    const NoiseField& noise, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("generate_signal: dt must be > 0");
    detail::CslContext ctx(psi.grid(), params);
    SignalSample s;
    s.expectations = ctx.expectations(psi.amplitudes());
    s.values.resize(s.expectations.size());
    const double scale = 1.0 / (2.0 * std::sqrt(params.gamma));
    for (std::size_t c = 0; c < s.values.size(); ++c)
        s.values[c] = s.expectations[c] + scale * noise.w[c];
    return s;
}

/// Full record of one monitoring trajectory.
struct CslTrajectory {
    std::uint64_t seed = 0;
    std::vector<double> snapshot_times;
    std::vector<WaveFunction> snapshots;
    SignalRecord signal; ///< populated only when signal recording is on
};

/// Run one monitoring trajectory with fixed step dt. Snapshot times must
/// sit on the step grid (integer multiples of dt). Noise draws come from
/// the trajectory's process stream, cell 0 first, one batch per step; the
/// same increments drive both the recorded signal and the state update.
inline CslTrajectory run_csl_trajectory(const WaveFunction& initial,
                                        const Hamiltonian& h, const CslParams& params,
                                        double t_final, double dt,
                                        const std::vector<double>& snapshot_times,
                                        std::uint64_t seed,
                                        bool record_signal = false) {
    if (!(dt > 0.0)) throw std::invalid_argument("run_csl_trajectory: dt must be > 0");
    if (t_final < 0.0)
        throw std::invalid_argument("run_csl_trajectory: t_final must be >= 0");
    detail::CslContext ctx(initial.grid(), params);
    if (params.n_particles() != initial.n_particles())
        throw std::invalid_argument(
            "run_csl_trajectory: params/state particle count mismatch");

    auto step_index_of = [dt](double t, const char* what) {
        const double ratio = t / dt;
        const auto idx = static_cast<long long>(std::llround(ratio));
        if (std::abs(ratio - static_cast<double>(idx)) > 1e-6)
            throw std::invalid_argument(std::string(what) +
                                        " must be an integer multiple of dt");
        return idx;
    };

    const long long n_steps = step_index_of(t_final, "run_csl_trajectory: t_final");
    std::vector<long long> snap_steps;
    snap_steps.reserve(snapshot_times.size());
    long long prev = 0;
    for (double t : snapshot_times) {
        const long long s = step_index_of(t, "run_csl_trajectory: snapshot time");
        if (s < prev)
            throw std::invalid_argument(
                "run_csl_trajectory: snapshot times must be non-decreasing");
        if (s > n_steps)
            throw std::invalid_argument(
                "run_csl_trajectory: snapshot times must lie in [0, t_final]");
        snap_steps.push_back(s);
        prev = s;
    }

    RngStream process(seed, 1); // stream 0 is reserved for event clocks

    CslTrajectory out;
    out.seed = seed;
    out.snapshot_times = snapshot_times;
    out.snapshots.reserve(snapshot_times.size());
    if (record_signal) out.signal.cells = ctx.cell_centers();

    std::unique_ptr<SplitStepPropagator> half;
    if (!h.is_zero())
        half = std::make_unique<SplitStepPropagator>(initial.grid(), h, 0.5 * dt);

    ComplexVector a = initial.amplitudes();
    const int n_particles = initial.n_particles();
    std::size_t next_snap = 0;
    auto emit_due = [&](long long step) {
        while (next_snap < snap_steps.size() && snap_steps[next_snap] == step) {
            out.snapshots.emplace_back(initial.grid(), n_particles, a, false);
            ++next_snap;
        }
    };

    emit_due(0);
    for (long long s = 0; s < n_steps; ++s) {
        const NoiseField noise =
            sample_noise_field(params.n_cells, dt, params.cell_width, process);
        const std::vector<double> exps = ctx.expectations(a);
        if (record_signal) {
            out.signal.times.push_back(static_cast<double>(s) * dt);
            std::vector<double> vals(exps.size());
            const double scale = 1.0 / (2.0 * std::sqrt(params.gamma));
            for (std::size_t c = 0; c < exps.size(); ++c)
                vals[c] = exps[c] + scale * noise.w[c];
            out.signal.values.push_back(std::move(vals));
            out.signal.expectations.push_back(exps);
        }
        if (half) half->apply(a, n_particles);
        ctx.apply_monitoring(a, exps, noise, dt);
        if (half) half->apply(a, n_particles);
        // renormalize in place
        double nrm = 0.0;
        for (Eigen::Index j = 0; j < a.size(); ++j) nrm += std::norm(a[j]);
        nrm = std::sqrt(nrm * std::pow(initial.grid().dx(), n_particles));
        if (!(nrm > 1e-12) || !std::isfinite(nrm))
            throw std::runtime_error("run_csl_trajectory: state norm collapsed");
        a /= nrm;
        emit_due(s + 1);
    }
    return out;
}

} // namespace unravel

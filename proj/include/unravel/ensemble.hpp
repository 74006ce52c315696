#pragma once

#include "unravel/density.hpp"
#include "unravel/observables.hpp"
#include "unravel/rng.hpp"
#include "unravel/stats.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace unravel {

/// Produces the snapshot states of one trajectory for a given scalar seed.
/// Must be pure: equal seeds give equal snapshots regardless of call order.
using TrajectoryRunner = std::function<std::vector<WaveFunction>(std::uint64_t)>;

/// Averaged ensemble: mean density matrix per snapshot time with bootstrap
/// error bars, plus per-snapshot trajectory-level statistics (spatial
/// entropy and right-half mass) for discriminator tests.
struct EnsembleReport {
    int M = 0;
    bool degenerate_statistics = false; ///< set when M == 1 (debug runs)
    std::uint64_t base_seed = 0;
    std::vector<double> snapshot_times;
    std::vector<DensityMatrix> mean_densities;
    std::vector<double> bootstrap_errors; ///< RMS trace distance of resampled means
    std::vector<double> mean_entropy;
    std::vector<double> entropy_std_error;
    std::vector<double> mean_right_mass;
    std::vector<double> right_mass_std_error;
};

namespace detail {

inline void moments(const std::vector<double>& samples, double& mean_out,
                    double& std_error_out) {
    const auto n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= n;
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    var = samples.size() > 1 ? var / (n - 1.0) : 0.0;
    mean_out = mean;
    std_error_out = std::sqrt(var / n);
}

} // namespace detail

/// Average M trajectories into mean densities per snapshot time, worked in
/// parallel over trajectory indices and reduced in index order, so the
/// result is identical for any thread count. Trajectory i uses the scalar
/// seed derive_seed(base_seed, i); any trajectory failure aborts the
/// ensemble with that index and seed for replay. Bootstrap errors are the
/// RMS trace distance between resampled-mean and full-mean densities over
/// n_bootstrap trajectory resamples.
inline EnsembleReport average_ensemble(const TrajectoryRunner& runner, int M,
                                       std::uint64_t base_seed,
                                       const std::vector<double>& snapshot_times,
                                       int n_threads = 0, int n_bootstrap = 200) {
    if (M < 1) throw std::invalid_argument("average_ensemble: M must be >= 1");
    if (snapshot_times.empty())
        throw std::invalid_argument("average_ensemble: need at least one snapshot time");
    if (n_bootstrap < 100)
        throw std::invalid_argument("average_ensemble: need >= 100 bootstrap resamples");

    const auto n_snap = snapshot_times.size();

    // Run index 0 synchronously: it fixes the grid and snapshot layout that
    // every other trajectory must match, and surfaces config errors fast.
    auto run_one = [&](int index) {
        std::vector<WaveFunction> snaps;
        try {
            snaps = runner(derive_seed(base_seed, static_cast<std::uint64_t>(index)));
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "average_ensemble: trajectory " << index << " (seed "
                << derive_seed(base_seed, static_cast<std::uint64_t>(index))
                << ") failed: " << e.what();
            throw std::runtime_error(msg.str());
        }
        if (snaps.size() != n_snap)
            throw std::runtime_error("average_ensemble: trajectory returned wrong "
                                     "snapshot count");
        return snaps;
    };

    const std::vector<WaveFunction> first = run_one(0);
    const SpatialGrid grid = first[0].grid();
    if (first[0].n_particles() != 1)
        throw std::invalid_argument(
            "average_ensemble: single-particle states only (mean density is the "
            "full outer product)");
    const int n = grid.n_points();

    // Per snapshot: columns of states (n x M), filled by disjoint indices.
    std::vector<ComplexMatrix> columns(n_snap, ComplexMatrix(n, M));
    std::vector<std::vector<double>> entropy(n_snap, std::vector<double>(M));
    std::vector<std::vector<double>> right_mass(n_snap, std::vector<double>(M));

    auto store = [&](int index, const std::vector<WaveFunction>& snaps) {
        for (std::size_t s = 0; s < n_snap; ++s) {
            const WaveFunction& psi = snaps[s];
            if (psi.grid() != grid || psi.n_particles() != 1)
                throw std::runtime_error(
                    "average_ensemble: trajectory snapshots disagree on the grid");
            columns[s].col(index) = psi.amplitudes();
            entropy[s][static_cast<std::size_t>(index)] = spatial_entropy(psi);
            right_mass[s][static_cast<std::size_t>(index)] = right_branch_mass(psi);
        }
    };
    store(0, first);

    if (M > 1) {
        int workers = n_threads > 0
                          ? n_threads
                          : static_cast<int>(std::thread::hardware_concurrency());
        if (workers < 1) workers = 1;
        workers = std::min(workers, M - 1);

        std::atomic<int> next{1};
        std::vector<std::string> failures(static_cast<std::size_t>(M));
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < M; i = next.fetch_add(1)) {
                    try {
                        store(i, run_one(i));
                    } catch (const std::exception& e) {
                        failures[static_cast<std::size_t>(i)] = e.what();
                    }
                }
            });
        for (auto& t : pool) t.join();
        for (const auto& f : failures)
            if (!f.empty()) throw std::runtime_error(f);
    }

    EnsembleReport report;
    report.M = M;
    report.degenerate_statistics = (M == 1);
    report.base_seed = base_seed;
    report.snapshot_times = snapshot_times;
    report.mean_densities.reserve(n_snap);
    report.bootstrap_errors.resize(n_snap, 0.0);
    report.mean_entropy.resize(n_snap);
    report.entropy_std_error.resize(n_snap);
    report.mean_right_mass.resize(n_snap);
    report.right_mass_std_error.resize(n_snap);

    for (std::size_t s = 0; s < n_snap; ++s) {
        ComplexMatrix mean = (columns[s] * columns[s].adjoint()) /
                             static_cast<double>(M);
        report.mean_densities.emplace_back(grid, std::move(mean));
        detail::moments(entropy[s], report.mean_entropy[s],
                        report.entropy_std_error[s]);
        detail::moments(right_mass[s], report.mean_right_mass[s],
                        report.right_mass_std_error[s]);
    }

    // Bootstrap over trajectories: one resample reweights all snapshots of
    // the same trajectory subset, preserving cross-snapshot correlation.
    if (M > 1) {
        RngStream boot(base_seed, 0xB007u);
        std::vector<double> sq_sum(n_snap, 0.0);
        Eigen::VectorXd weight(M);
        for (int b = 0; b < n_bootstrap; ++b) {
            weight.setZero();
            for (int d = 0; d < M; ++d)
                weight[static_cast<Eigen::Index>(
                    boot.uniform_int(static_cast<std::uint64_t>(M)))] += 1.0;
            weight /= static_cast<double>(M);
            for (std::size_t s = 0; s < n_snap; ++s) {
                ComplexMatrix resampled =
                    columns[s] * weight.asDiagonal() * columns[s].adjoint();
                const double d = trace_distance(
                    DensityMatrix(grid, std::move(resampled)),
                    report.mean_densities[s]);
                sq_sum[s] += d * d;
            }
        }
        for (std::size_t s = 0; s < n_snap; ++s)
            report.bootstrap_errors[s] = std::sqrt(sq_sum[s] / n_bootstrap);
    }
    return report;
}

/// Verdict of an ensemble-vs-deterministic-solution comparison.
struct MasterComparison {
    std::vector<double> distances;
    std::vector<double> thresholds; ///< max(tolerance, 3 * bootstrap error)
    bool pass = false;
};

/// Per-snapshot trace distance between the ensemble mean and the
/// deterministic solution; passes when every distance is within
/// max(tolerance, 3 * bootstrap error).
inline MasterComparison compare_to_master(const EnsembleReport& report,
                                          const std::vector<DensityMatrix>& master,
                                          double tolerance) {
    if (master.size() != report.mean_densities.size())
        throw std::invalid_argument("compare_to_master: snapshot count mismatch");
    if (!(tolerance >= 0.0))
        throw std::invalid_argument("compare_to_master: tolerance must be >= 0");
    MasterComparison out;
    out.pass = true;
    for (std::size_t s = 0; s < master.size(); ++s) {
        const double d = trace_distance(report.mean_densities[s], master[s]);
        const double thr = std::max(tolerance, 3.0 * report.bootstrap_errors[s]);
        out.distances.push_back(d);
        out.thresholds.push_back(thr);
        if (d > thr) out.pass = false;
    }
    return out;
}

/// Verdict of an A/B ensemble comparison: statistically equal averaged
/// states, plus a trajectory-level discriminator (mean spatial entropy at
/// the final snapshot) that tells the underlying processes apart.
struct IndistinguishabilityVerdict {
    std::vector<double> distances;
    std::vector<double> combined_errors; ///< sqrt(errA^2 + errB^2) per snapshot
    bool indistinguishable = false; ///< all distances <= 3 * combined error
    double entropy_mean_a = 0.0, entropy_mean_b = 0.0;
    double entropy_std_error_a = 0.0, entropy_std_error_b = 0.0;
    double entropy_separation = 0.0; ///< |mean difference| / combined std error
};

inline IndistinguishabilityVerdict
indistinguishability_test(const EnsembleReport& a, const EnsembleReport& b) {
    if (a.snapshot_times != b.snapshot_times)
        throw std::invalid_argument("indistinguishability_test: snapshot mismatch");
    IndistinguishabilityVerdict v;
    v.indistinguishable = true;
    for (std::size_t s = 0; s < a.mean_densities.size(); ++s) {
        const double d = trace_distance(a.mean_densities[s], b.mean_densities[s]);
        const double err = std::sqrt(a.bootstrap_errors[s] * a.bootstrap_errors[s] +
                                     b.bootstrap_errors[s] * b.bootstrap_errors[s]);
        v.distances.push_back(d);
        v.combined_errors.push_back(err);
        if (d > 3.0 * err) v.indistinguishable = false;
    }
    const std::size_t last = a.mean_entropy.size() - 1;
    v.entropy_mean_a = a.mean_entropy[last];
    v.entropy_mean_b = b.mean_entropy[last];
    v.entropy_std_error_a = a.entropy_std_error[last];
    v.entropy_std_error_b = b.entropy_std_error[last];
    const double se = std::sqrt(v.entropy_std_error_a * v.entropy_std_error_a +
                                v.entropy_std_error_b * v.entropy_std_error_b);
    const double gap = std::abs(v.entropy_mean_a - v.entropy_mean_b);
    // Zero spread happens when every trajectory in both ensembles produced
    // the same entropy (e.g. no stochastic events fired): identical means
    // then separate by nothing, different means by everything.
    v.entropy_separation =
        se > 0.0 ? gap / se
                 : (gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return v;
}

/// Exponential decay rate from a log-linear least-squares fit.
struct DecayFit {
    double rate = 0.0;
    double rms_residual = 0.0; ///< in log space
};

inline DecayFit fit_decay_rate(const std::vector<double>& times,
                               const std::vector<double>& magnitudes) {
    if (times.size() != magnitudes.size() || times.size() < 5)
        throw std::invalid_argument("fit_decay_rate: need >= 5 (time, magnitude) pairs");
    std::vector<double> logs(magnitudes.size());
    for (std::size_t i = 0; i < magnitudes.size(); ++i) {
        if (!(magnitudes[i] > 0.0))
            throw std::domain_error(
                "fit_decay_rate: non-positive magnitude (decay below noise floor)");
        logs[i] = std::log(magnitudes[i]);
    }
    const LinearFit fit = linear_fit(times, logs);
    return DecayFit{-fit.slope, fit.rms_residual};
}

} // namespace unravel

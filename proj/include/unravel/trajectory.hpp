#pragma once

#include "unravel/propagate.hpp"
#include "unravel/rng.hpp"
#include "unravel/wavefunction.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace unravel {

/// A completed position-measurement event on one trajectory.
struct JumpEvent {
    double time = 0.0;
    int particle_index = 0;
    double outcome = 0.0; ///< measured position
};

/// A completed momentum-kick event on one trajectory.
struct KickEvent {
    double time = 0.0;
    int particle_index = 0;
    double k = 0.0; ///< kick wavenumber
};

/// Full record of one stochastic trajectory: the seed that reproduces it,
/// the event list, and the state at each requested snapshot time.
template <typename Event>
struct TrajectoryRecord {
    std::uint64_t seed = 0;
    std::vector<Event> events;
    std::vector<double> snapshot_times;
    std::vector<WaveFunction> snapshots;
};

namespace detail {

inline void check_snapshot_times(const std::vector<double>& times, double t_final) {
    double prev = 0.0;
    for (double t : times) {
        if (t < 0.0 || t > t_final)
            throw std::invalid_argument("snapshot times must lie in [0, t_final]");
        if (t < prev)
            throw std::invalid_argument("snapshot times must be non-decreasing");
        prev = t;
    }
}

/// Drive a piecewise-deterministic trajectory: free evolution under `h`
/// punctuated by events at Poisson-clock times with total rate `rate`.
/// `fire(psi, t, rng)` applies one event in place using the process stream.
///
/// The event schedule is drawn from a dedicated clock stream, so two
/// processes run with the same seed but different event content share
/// identical event times.
template <typename Event, typename FireFn>
TrajectoryRecord<Event> run_jump_trajectory(const WaveFunction& initial,
                                            const Hamiltonian& h, double rate,
                                            double t_final,
                                            const std::vector<double>& snapshot_times,
                                            std::uint64_t seed, double dt_max,
                                            FireFn&& fire) {
    if (rate < 0.0) throw std::invalid_argument("event rate must be >= 0");
    if (t_final < 0.0) throw std::invalid_argument("t_final must be >= 0");
    check_snapshot_times(snapshot_times, t_final);
    if (dt_max <= 0.0) dt_max = default_micro_step(h, initial.grid());

    RngStream clock(seed, 0);   // event schedule only
    RngStream process(seed, 1); // event content only

    TrajectoryRecord<Event> record;
    record.seed = seed;
    record.snapshot_times = snapshot_times;
    record.snapshots.reserve(snapshot_times.size());

    WaveFunction psi = initial;
    double t = 0.0;
    std::size_t next_snap = 0;
    double next_event = rate > 0.0 ? clock.exponential(rate) : t_final + 1.0;

    auto advance_to = [&](double target) {
        if (target > t) {
            psi = propagate_for(psi, h, target - t, dt_max);
            t = target;
        }
    };

    // Emit any snapshots at t = 0 (or duplicates of the current time).
    while (next_snap < snapshot_times.size() && snapshot_times[next_snap] <= t) {
        record.snapshots.push_back(psi);
        ++next_snap;
    }

    while (true) {
        const double t_snap = next_snap < snapshot_times.size()
                                  ? snapshot_times[next_snap]
                                  : t_final + 1.0;
        const double t_next = std::min({next_event, t_snap, t_final});
        advance_to(t_next);

        if (next_event <= t_snap && next_event < t_final) {
            record.events.push_back(fire(psi, t, process));
            next_event = t + clock.exponential(rate);
            continue;
        }
        if (t_snap <= t_final) {
            record.snapshots.push_back(psi);
            ++next_snap;
            // consume any duplicate snapshot times
            while (next_snap < snapshot_times.size() &&
                   snapshot_times[next_snap] <= t) {
                record.snapshots.push_back(psi);
                ++next_snap;
            }
            continue;
        }
        break; // reached t_final with all snapshots emitted
    }
    return record;
}

} // namespace detail

} // namespace unravel

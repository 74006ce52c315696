#pragma once

#include "unravel/grid.hpp"
#include "unravel/wavefunction.hpp"

#include <unsupported/Eigen/FFT>

#include <vector>

namespace unravel {

/// Position <-> momentum transforms on the periodic grid. Forward maps grid
/// amplitudes to FFT-ordered mode amplitudes; inverse includes the 1/N
/// scaling so the round trip is the identity.
namespace fourier {

namespace detail {
/// Per-thread FFT engine; plans are cached per transform size.
inline Eigen::FFT<double>& engine() {
    static thread_local Eigen::FFT<double> fft;
    return fft;
}
} // namespace detail

inline ComplexVector to_momentum(const ComplexVector& position_amps) {
    std::vector<Complex> in(position_amps.data(), position_amps.data() + position_amps.size());
    std::vector<Complex> buf(in.size());
    detail::engine().fwd(buf, in);
    ComplexVector out(position_amps.size());
    for (Eigen::Index j = 0; j < out.size(); ++j) out[j] = buf[j];
    return out;
}

inline ComplexVector to_position(const ComplexVector& momentum_amps) {
    std::vector<Complex> in(momentum_amps.data(), momentum_amps.data() + momentum_amps.size());
    std::vector<Complex> buf(in.size());
    detail::engine().inv(buf, in);
    ComplexVector out(momentum_amps.size());
    for (Eigen::Index j = 0; j < out.size(); ++j) out[j] = buf[j];
    return out;
}

/// Apply a diagonal momentum-space factor to one particle axis of a flat
/// 1- or 2-particle amplitude vector (axis 0 varies fastest).
inline void apply_momentum_phase(ComplexVector& amps, int n_grid, int n_particles,
                                 int axis, const ComplexVector& phase) {
    auto& fft = detail::engine();
    std::vector<Complex> line(n_grid), spec(n_grid);
    const int n_lines = n_particles == 1 ? 1 : n_grid;
    for (int l = 0; l < n_lines; ++l) {
        for (int j = 0; j < n_grid; ++j) {
            const Eigen::Index idx = (axis == 0)
                ? j + static_cast<Eigen::Index>(n_grid) * l
                : l + static_cast<Eigen::Index>(n_grid) * j;
            line[j] = amps[idx];
        }
        fft.fwd(spec, line);
        for (int j = 0; j < n_grid; ++j) spec[j] *= phase[j];
        fft.inv(line, spec);
        for (int j = 0; j < n_grid; ++j) {
            const Eigen::Index idx = (axis == 0)
                ? j + static_cast<Eigen::Index>(n_grid) * l
                : l + static_cast<Eigen::Index>(n_grid) * j;
            amps[idx] = line[j];
        }
    }
}

} // namespace fourier
} // namespace unravel

// One continuously-monitored trajectory of a symmetric superposition: the
// right-half probability mass drifts from 1/2 toward 0 or 1 as the state
// settles into a single branch, while the norm stays pinned at 1.

#include "unravel/unravel.hpp"

#include <iostream>

int main() {
    using namespace unravel;

    const SpatialGrid grid(-8.0, 8.0, 64);
    const WaveFunction cat = cat_state(grid, /*separation=*/4.0, /*width=*/0.5);
    const Hamiltonian h = Hamiltonian::zero();
    const CslParams params =
        CslParams::for_grid(grid, /*gamma=*/2.5, /*r_C=*/std::sqrt(0.5), 16);

    std::vector<double> snapshot_times;
    for (int k = 0; k <= 10; ++k) snapshot_times.push_back(0.4 * k);
    const CslTrajectory traj = run_csl_trajectory(
        cat, h, params, /*t_final=*/4.0, /*dt=*/0.005, snapshot_times,
        /*seed=*/12345);

    std::cout << "t      right-branch mass   norm\n";
    for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
        const WaveFunction& psi = traj.snapshots[i];
        std::cout << snapshot_times[i] << "    " << right_branch_mass(psi) << "    "
                  << psi.norm() << '\n';
    }
    return 0;
}

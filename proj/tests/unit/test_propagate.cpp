// Split-step unitary propagation against closed-form free and harmonic
// solutions, plus the conservation laws any unitary scheme must keep.

#include "unravel/fourier.hpp"
#include "unravel/observables.hpp"
#include "unravel/propagate.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace unravel;

TEST_CASE("free packet spreads by the ballistic law", "[propagate]") {
    const SpatialGrid grid(-16.0, 16.0, 256);
    const double w = 1.0, mass = 1.0, t = 2.0;
    const WaveFunction psi0 = gaussian_packet(grid, 0.0, w);
    const WaveFunction psi = propagate_for(psi0, Hamiltonian::free(mass), t, 1e-3);
    const double expected = w * w + std::pow(t / (2.0 * mass * w), 2);
    // Kinetic-only motion is handled in closed form, so only quadrature
    // error remains.
    REQUIRE(variance_x(psi) == Catch::Approx(expected).epsilon(1e-6));
    REQUIRE(expectation_x(psi) == Catch::Approx(0.0).margin(1e-8));
}

TEST_CASE("moving free packet drifts at p/m and keeps its momentum",
          "[propagate]") {
    const SpatialGrid grid(-16.0, 16.0, 256);
    const WaveFunction psi0 = gaussian_packet(grid, -3.0, 1.0, 2.0);
    const WaveFunction psi = propagate_for(psi0, Hamiltonian::free(1.0), 1.5, 1e-3);
    REQUIRE(expectation_x(psi) == Catch::Approx(0.0).margin(1e-6));
    REQUIRE(expectation_p(psi) == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("harmonic ground state is stationary over a full period",
          "[propagate]") {
    const SpatialGrid grid(-8.0, 8.0, 128);
    // psi_0 ~ exp(-x^2 / 2) for omega = m = 1, i.e. packet width 1/sqrt(2).
    const WaveFunction psi0 = gaussian_packet(grid, 0.0, 1.0 / std::sqrt(2.0));
    const Hamiltonian h = Hamiltonian::harmonic(1.0);
    const WaveFunction psi = propagate_for(psi0, h, 2.0 * M_PI, 2e-4);
    const Eigen::VectorXd before = position_pdf(psi0);
    const Eigen::VectorXd after = position_pdf(psi);
    REQUIRE((after - before).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("coherent state swings to the mirror point after half a period",
          "[propagate]") {
    const SpatialGrid grid(-8.0, 8.0, 128);
    const WaveFunction psi0 = gaussian_packet(grid, 2.0, 1.0 / std::sqrt(2.0));
    const Hamiltonian h = Hamiltonian::harmonic(1.0);
    const WaveFunction psi = propagate_for(psi0, h, M_PI, 1e-3);
    REQUIRE(expectation_x(psi) == Catch::Approx(-2.0).margin(1e-6));
}

TEST_CASE("zero step and zero Hamiltonian leave the state untouched",
          "[propagate]") {
    const SpatialGrid grid(-8.0, 8.0, 64);
    const WaveFunction psi = cat_state(grid, 4.0, 0.5);
    const WaveFunction same_dt = propagate_unitary(psi, Hamiltonian::harmonic(1.0), 0.0);
    const WaveFunction same_h = propagate_for(psi, Hamiltonian::zero(), 3.0);
    for (int j = 0; j < grid.n_points(); ++j) {
        REQUIRE(same_dt.amplitudes()[j] == psi.amplitudes()[j]);
        REQUIRE(same_h.amplitudes()[j] == psi.amplitudes()[j]);
    }
}

TEST_CASE("oversized steps are refused with a usable bound", "[propagate]") {
    const SpatialGrid grid(-8.0, 8.0, 256);
    const WaveFunction psi = gaussian_packet(grid, 0.0, 1.0);
    REQUIRE_THROWS_WITH(propagate_unitary(psi, Hamiltonian::free(1.0), 10.0),
                        Catch::Matchers::ContainsSubstring("use dt <="));
    REQUIRE_THROWS_AS(propagate_for(psi, Hamiltonian::free(1.0), -1.0),
                      std::invalid_argument);
}

TEST_CASE("norm, energy, and overlaps survive long unitary evolution",
          "[propagate]") {
    const SpatialGrid grid(-8.0, 8.0, 128);
    const Hamiltonian h = Hamiltonian::harmonic(1.0);
    const WaveFunction a0 = gaussian_packet(grid, 1.5, 1.0 / std::sqrt(2.0));
    const WaveFunction b0 = gaussian_packet(grid, -0.5, 0.8);
    const double e0 = expectation_energy(a0, h);
    const double overlap0 = std::abs(a0.overlap(b0));

    WaveFunction a = a0, b = b0;
    const SplitStepPropagator prop(grid, h, 1e-3);
    for (int block = 0; block < 20; ++block) {
        for (int s = 0; s < 100; ++s) {
            a = prop.step(a);
            b = prop.step(b);
        }
        REQUIRE(std::abs(a.norm() - 1.0) < 1e-12);
        REQUIRE(expectation_energy(a, h) == Catch::Approx(e0).margin(1e-5));
        REQUIRE(std::abs(a.overlap(b)) == Catch::Approx(overlap0).margin(1e-10));
    }
}

TEST_CASE("momentum transforms round-trip below 1e-12", "[propagate]") {
    const SpatialGrid grid(-8.0, 8.0, 64);
    const WaveFunction psi = cat_state(grid, 4.0, 0.5);
    const ComplexVector back =
        fourier::to_position(fourier::to_momentum(psi.amplitudes()));
    REQUIRE((back - psi.amplitudes()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-particle propagation factorizes over the particles",
          "[propagate]") {
    const SpatialGrid grid(-8.0, 8.0, 64);
    const Hamiltonian h = Hamiltonian::harmonic(1.0);
    const WaveFunction a = gaussian_packet(grid, 1.0, 0.8);
    const WaveFunction b = gaussian_packet(grid, -2.0, 1.0 / std::sqrt(2.0));
    const double t = 0.7, dt = 1e-3;
    const WaveFunction joint = propagate_for(product_state(a, b), h, t, dt);
    const WaveFunction expected =
        product_state(propagate_for(a, h, t, dt), propagate_for(b, h, t, dt));
    REQUIRE((joint.amplitudes() - expected.amplitudes()).cwiseAbs().maxCoeff() <
            1e-12);
}

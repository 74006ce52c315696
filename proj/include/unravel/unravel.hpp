#pragma once

// Umbrella header: the whole library.

#include "unravel/config.hpp"
#include "unravel/csl.hpp"
#include "unravel/density.hpp"
#include "unravel/ensemble.hpp"
#include "unravel/fourier.hpp"
#include "unravel/grid.hpp"
#include "unravel/grw.hpp"
#include "unravel/hamiltonian.hpp"
#include "unravel/io.hpp"
#include "unravel/kick.hpp"
#include "unravel/master.hpp"
#include "unravel/observables.hpp"
#include "unravel/propagate.hpp"
#include "unravel/rng.hpp"
#include "unravel/stats.hpp"
#include "unravel/svg.hpp"
#include "unravel/trajectory.hpp"
#include "unravel/wavefunction.hpp"

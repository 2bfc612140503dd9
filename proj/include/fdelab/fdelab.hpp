#pragma once

#include "fdelab/errors.hpp"
#include "fdelab/tridiagonal.hpp"
#include "fdelab/grid.hpp"
#include "fdelab/exponents.hpp"
#include "fdelab/stationary.hpp"
#include "fdelab/solver.hpp"
#include "fdelab/spectral.hpp"
#include "fdelab/diagnostics.hpp"
#include "fdelab/config.hpp"
#include "fdelab/io.hpp"
#include "fdelab/experiment.hpp"

#pragma once

#include "fixlab/bd_solver.hpp"
#include "fixlab/environment.hpp"
#include "fixlab/errors.hpp"
#include "fixlab/estimate.hpp"
#include "fixlab/experiments.hpp"
#include "fixlab/lattice_sim.hpp"
#include "fixlab/limit_eval.hpp"
#include "fixlab/plot.hpp"
#include "fixlab/quadrature.hpp"
#include "fixlab/rng.hpp"

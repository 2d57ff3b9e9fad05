#pragma once

#include "wardrop/analysis.hpp"
#include "wardrop/aas.hpp"
#include "wardrop/config.hpp"
#include "wardrop/cost.hpp"
#include "wardrop/equilibrium.hpp"
#include "wardrop/experiment.hpp"
#include "wardrop/feasible_set.hpp"
#include "wardrop/game.hpp"
#include "wardrop/hausdorff.hpp"
#include "wardrop/instance.hpp"
#include "wardrop/param_fn.hpp"
#include "wardrop/polytope.hpp"
#include "wardrop/simplex.hpp"
#include "wardrop/utility.hpp"

#pragma once

#include "tilefit/density_algebra.hpp"
#include "tilefit/dictionary.hpp"
#include "tilefit/error.hpp"
#include "tilefit/persistence.hpp"
#include "tilefit/quadtree_grid.hpp"
#include "tilefit/sim_bench.hpp"
#include "tilefit/smoother.hpp"
#include "tilefit/sparse_density.hpp"
#include "tilefit/sparse_fit.hpp"

#pragma once

#include "gridfactors/errors.hpp"
#include "gridfactors/grid.hpp"
#include "gridfactors/connectivity.hpp"
#include "gridfactors/grounded_system.hpp"
#include "gridfactors/linalg.hpp"
#include "gridfactors/factors.hpp"
#include "gridfactors/single_mod.hpp"
#include "gridfactors/pst.hpp"
#include "gridfactors/bus_topology.hpp"
#include "gridfactors/multi_mod.hpp"
#include "gridfactors/islanding.hpp"
#include "gridfactors/case_io.hpp"
#include "gridfactors/scenario.hpp"
#include "gridfactors/contingency.hpp"

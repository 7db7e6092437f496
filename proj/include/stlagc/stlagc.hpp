#pragma once

#include "stlagc/errors.hpp"
#include "stlagc/stl.hpp"
#include "stlagc/parser.hpp"
#include "stlagc/topology.hpp"
#include "stlagc/funnel.hpp"
#include "stlagc/plant.hpp"
#include "stlagc/control.hpp"
#include "stlagc/contracts.hpp"
#include "stlagc/sim.hpp"
#include "stlagc/scenario.hpp"
#include "stlagc/pipeline.hpp"

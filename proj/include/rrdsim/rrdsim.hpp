#pragma once

#include "rrdsim/adversary.hpp"
#include "rrdsim/defense.hpp"
#include "rrdsim/engine.hpp"
#include "rrdsim/frames.hpp"
#include "rrdsim/mac.hpp"
#include "rrdsim/metrics.hpp"
#include "rrdsim/phy.hpp"
#include "rrdsim/scenario.hpp"
#include "rrdsim/simulation.hpp"
#include "rrdsim/sweep.hpp"

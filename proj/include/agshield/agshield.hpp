#pragma once

#include "agshield/core/model_check.hpp"
#include "agshield/projection/projection.hpp"
#include "agshield/synthesis/assume_guarantee.hpp"
#include "agshield/synthesis/distributed.hpp"
#include "agshield/synthesis/game.hpp"
#include "agshield/synthesis/shield_io.hpp"
#include "agshield/learning/dependency.hpp"
#include "agshield/learning/learner.hpp"
#include "agshield/learning/mdp_ops.hpp"
#include "agshield/learning/mdp_sim.hpp"
#include "agshield/sim/rng.hpp"
#include "agshield/sim/simulator.hpp"
#include "agshield/casestudies/params.hpp"
#include "agshield/casestudies/plant.hpp"
#include "agshield/casestudies/platoon.hpp"
#include "agshield/casestudies/toy.hpp"

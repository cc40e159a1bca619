#pragma once

#include "tdt/errors.hpp"
#include "tdt/rng.hpp"
#include "tdt/core.hpp"
#include "tdt/tree_io.hpp"
#include "tdt/exact.hpp"
#include "tdt/greedy_exact.hpp"
#include "tdt/practical.hpp"
#include "tdt/targets.hpp"
#include "tdt/verify.hpp"
#include "tdt/experiment.hpp"

#pragma once

#include "drats/advantage.hpp"
#include "drats/config.hpp"
#include "drats/csv.hpp"
#include "drats/error.hpp"
#include "drats/gap.hpp"
#include "drats/gradient.hpp"
#include "drats/gridworld.hpp"
#include "drats/metrics.hpp"
#include "drats/oracles.hpp"
#include "drats/policy.hpp"
#include "drats/rng.hpp"
#include "drats/samplers.hpp"
#include "drats/simplex.hpp"
#include "drats/svg.hpp"
#include "drats/sweep.hpp"
#include "drats/tabular.hpp"
#include "drats/theory.hpp"
#include "drats/training.hpp"

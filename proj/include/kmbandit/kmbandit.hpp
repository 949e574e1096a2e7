#pragma once

#include "kmbandit/analysis.hpp"
#include "kmbandit/bandit.hpp"
#include "kmbandit/confidence.hpp"
#include "kmbandit/errors.hpp"
#include "kmbandit/finite.hpp"
#include "kmbandit/harness.hpp"
#include "kmbandit/instance_io.hpp"
#include "kmbandit/median_elimination.hpp"
#include "kmbandit/quantile.hpp"
#include "kmbandit/reservoir.hpp"
#include "kmbandit/rng.hpp"

#pragma once

#include "aptrans/errors.hpp"
#include "aptrans/random.hpp"
#include "aptrans/tdist.hpp"
#include "aptrans/process.hpp"
#include "aptrans/masterscale.hpp"
#include "aptrans/likelihood.hpp"
#include "aptrans/optimize.hpp"
#include "aptrans/estimator.hpp"
#include "aptrans/transition.hpp"
#include "aptrans/macroadj.hpp"
#include "aptrans/parallel.hpp"
#include "aptrans/montecarlo.hpp"

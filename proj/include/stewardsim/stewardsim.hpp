#pragma once

#include "stewardsim/cohort.hpp"
#include "stewardsim/cohort_io.hpp"
#include "stewardsim/config.hpp"
#include "stewardsim/diagnostics.hpp"
#include "stewardsim/error.hpp"
#include "stewardsim/feature_matrix.hpp"
#include "stewardsim/forest.hpp"
#include "stewardsim/forest_io.hpp"
#include "stewardsim/metrics.hpp"
#include "stewardsim/optimizer.hpp"
#include "stewardsim/parallel.hpp"
#include "stewardsim/policy.hpp"
#include "stewardsim/random.hpp"
#include "stewardsim/report.hpp"
#include "stewardsim/rolling.hpp"
#include "stewardsim/schedule.hpp"

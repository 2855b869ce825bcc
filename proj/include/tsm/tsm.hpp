#pragma once

#include "tsm/calibration.hpp"
#include "tsm/cohort.hpp"
#include "tsm/distributions.hpp"
#include "tsm/errors.hpp"
#include "tsm/experiment.hpp"
#include "tsm/io.hpp"
#include "tsm/metrics.hpp"
#include "tsm/mil.hpp"
#include "tsm/synthdata.hpp"

#pragma once

#include "monotest/error.hpp"
#include "monotest/random.hpp"
#include "monotest/sample.hpp"
#include "monotest/scales.hpp"
#include "monotest/series.hpp"
#include "monotest/sigma.hpp"
#include "monotest/statistic.hpp"
#include "monotest/bootstrap.hpp"
#include "monotest/models.hpp"
#include "monotest/simlab.hpp"
#include "monotest/io.hpp"
#include "monotest/runner.hpp"

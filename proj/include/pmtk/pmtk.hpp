#pragma once

#include "pmtk/analytics.hpp"
#include "pmtk/core.hpp"
#include "pmtk/date.hpp"
#include "pmtk/detect.hpp"
#include "pmtk/explain.hpp"
#include "pmtk/io.hpp"
#include "pmtk/rng.hpp"
#include "pmtk/simulate.hpp"
#include "pmtk/version.hpp"

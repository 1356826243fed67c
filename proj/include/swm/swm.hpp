#pragma once

#include "swm/alignment.hpp"
#include "swm/core.hpp"
#include "swm/dataset.hpp"
#include "swm/geo.hpp"
#include "swm/grouping.hpp"
#include "swm/index.hpp"
#include "swm/manifest.hpp"
#include "swm/metrics.hpp"
#include "swm/pano.hpp"
#include "swm/planner.hpp"
#include "swm/raster.hpp"
#include "swm/synthcity.hpp"
#include "swm/warp.hpp"

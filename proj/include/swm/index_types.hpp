#pragma once

#include <vector>

#include "swm/pano.hpp"

namespace swm {

/// One retrieved reference: the yaw-matched pinhole view, the fraction of
/// its (subsampled) pixels that reproject into the matched target view,
/// and its distance to the nearest trajectory pose.
struct RetrievalEntry {
  PinholeView view;
  double coverage = 0;
  double distance = 0;
};

/// Up to K references, sorted ascending by distance, every entry at or
/// above the coverage threshold.
struct RetrievalResult {
  std::vector<RetrievalEntry> entries;

  bool empty() const { return entries.empty(); }
};

struct RetrievalConfig {
  int k = 5;                        // max references returned
  double coverage_threshold = 0.3;  // stage-2 filter
  double radius = 40.0;             // stage-1 candidate radius around the trajectory
  int grid_stride = 8;              // coverage grid subsampling, both axes
};

}  // namespace swm

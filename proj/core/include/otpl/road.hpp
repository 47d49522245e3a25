#pragma once

#include <algorithm>
#include <cmath>

namespace otpl {

// Straight three-lane highway. Lane 0 is the rightmost lane, lane centers
// sit at lateral positions {0, 3.5, 7.0} m and indices increase leftward.
struct Road {
  int n_lanes = 3;
  double lane_width = 3.5;
  double length = 1000.0;

  double lane_center(int lane) const { return lane * lane_width; }
  double paved_min() const { return -0.5 * lane_width; }
  double paved_max() const { return (n_lanes - 0.5) * lane_width; }

  int nearest_lane(double lat_pos) const {
    int lane = static_cast<int>(std::lround(lat_pos / lane_width));
    return std::clamp(lane, 0, n_lanes - 1);
  }
};

}  // namespace otpl

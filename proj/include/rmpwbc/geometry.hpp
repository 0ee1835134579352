#pragma once

#include "rmpwbc/types.hpp"

namespace rmpwbc::geometry {

struct SegmentClosestPoints {
  double s = 0.0;  // parameter on segment 1, in [0, 1]
  double t = 0.0;  // parameter on segment 2
  Vec3 point1 = Vec3::Zero();
  Vec3 point2 = Vec3::Zero();
  double distance = 0.0;
};

// Closest points between segments [p1, q1] and [p2, q2]. Parallel segments
// whose projections overlap return the midpoint of the overlap.
SegmentClosestPoints closest_points_segments(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2);

// Direction used when two axis points coincide.
inline Vec3 tie_break_direction() { return Vec3::UnitY(); }

}  // namespace rmpwbc::geometry

#include "rmpwbc/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace rmpwbc::geometry {
namespace {

constexpr double kEps = 1e-14;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double project_param(const Vec3& point, const Vec3& origin, const Vec3& dir, double len2) {
  if (len2 <= kEps) return 0.0;
  return clamp01((point - origin).dot(dir) / len2);
}

}  // namespace

SegmentClosestPoints closest_points_segments(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  const Vec3 d1 = q1 - p1;
  const Vec3 d2 = q2 - p2;
  const Vec3 r = p1 - p2;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);

  double s = 0.0;
  double t = 0.0;
  if (a <= kEps && e <= kEps) {
    s = t = 0.0;
  } else if (a <= kEps) {
    t = clamp01(f / e);
  } else {
    const double c = d1.dot(r);
    if (e <= kEps) {
      s = clamp01(-c / a);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      if (denom > 1e-12 * a * e) {
        s = clamp01((b * f - c * e) / denom);
        t = (b * s + f) / e;
        if (t < 0.0) {
          t = 0.0;
          s = clamp01(-c / a);
        } else if (t > 1.0) {
          t = 1.0;
          s = clamp01((b - c) / a);
        }
      } else {
        // Parallel: overlap of segment 2 projected onto segment 1.
        const double sp = (p2 - p1).dot(d1) / a;
        const double sq = (q2 - p1).dot(d1) / a;
        const double lo = std::max(0.0, std::min(sp, sq));
        const double hi = std::min(1.0, std::max(sp, sq));
        if (lo <= hi) {
          s = 0.5 * (lo + hi);
        } else {
          s = hi < lo && std::max(sp, sq) < 0.0 ? 0.0 : 1.0;
        }
        t = project_param(p1 + s * d1, p2, d2, e);
        s = lo <= hi ? s : project_param(p2 + t * d2, p1, d1, a);
      }
    }
  }

  SegmentClosestPoints out;
  out.s = s;
  out.t = t;
  out.point1 = p1 + s * d1;
  out.point2 = p2 + t * d2;
  out.distance = (out.point1 - out.point2).norm();
  return out;
}

}  // namespace rmpwbc::geometry

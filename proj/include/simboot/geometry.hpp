#pragma once

#include <array>

#include "simboot/model.hpp"

namespace simboot {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Table-plane projection of a yaw-rotated cuboid.
struct Footprint {
  Vec2 center;
  double half_length = 0.0;
  double half_width = 0.0;
  double yaw = 0.0;

  static Footprint of(const ObjectState& o);

  std::array<Vec2, 4> corners() const;
  double area() const { return 4.0 * half_length * half_width; }
  Footprint inflated(double margin) const;
  // Point expressed in the footprint's local frame.
  Vec2 to_local(Vec2 p) const;
};

/// Area of the intersection of two footprints (convex polygon clipping).
double overlap_area(const Footprint& a, const Footprint& b);

/// Separating-axis test; touching edges count as intersecting.
bool footprints_intersect(const Footprint& a, const Footprint& b);

/// Signed distance from `p` to the footprint boundary: positive inside,
/// negative outside.
double signed_inside_distance(const Footprint& f, Vec2 p);

/// True when every corner of `inner` lies within `outer` shrunk by `margin`.
bool footprint_within(const Footprint& inner, const Footprint& outer, double margin = 0.0);

/// Extent of the object along an axis at angle `axis_yaw` in the table plane.
double projected_extent(const ObjectState& o, double axis_yaw);

double distance_xy(const Pose& a, const Pose& b);

}  // namespace simboot

#include "simboot/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace simboot {

namespace {

double cross(Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

double polygon_area(const std::vector<Vec2>& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    s += p.x * q.y - q.x * p.y;
  }
  return 0.5 * std::abs(s);
}

// Sutherland-Hodgman against one counter-clockwise convex clip edge.
std::vector<Vec2> clip(const std::vector<Vec2>& subject, Vec2 a, Vec2 b) {
  std::vector<Vec2> out;
  if (subject.empty()) return out;
  auto inside = [&](Vec2 p) { return cross(a, b, p) >= 0.0; };
  auto intersect = [&](Vec2 p, Vec2 q) {
    double cp = cross(a, b, p);
    double cq = cross(a, b, q);
    double t = cp / (cp - cq);
    return Vec2{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
  };
  for (std::size_t i = 0; i < subject.size(); ++i) {
    Vec2 cur = subject[i];
    Vec2 prev = subject[(i + subject.size() - 1) % subject.size()];
    bool in_cur = inside(cur);
    bool in_prev = inside(prev);
    if (in_cur) {
      if (!in_prev) out.push_back(intersect(prev, cur));
      out.push_back(cur);
    } else if (in_prev) {
      out.push_back(intersect(prev, cur));
    }
  }
  return out;
}

double bounding_radius(const Footprint& f) { return std::hypot(f.half_length, f.half_width); }

}  // namespace

Footprint Footprint::of(const ObjectState& o) {
  return Footprint{{o.center().x(), o.center().y()}, 0.5 * o.size().length, 0.5 * o.size().width,
                   o.center().yaw()};
}

std::array<Vec2, 4> Footprint::corners() const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  auto at = [&](double lx, double ly) {
    return Vec2{center.x + c * lx - s * ly, center.y + s * lx + c * ly};
  };
  // Counter-clockwise.
  return {at(half_length, half_width), at(-half_length, half_width), at(-half_length, -half_width),
          at(half_length, -half_width)};
}

Footprint Footprint::inflated(double margin) const {
  return Footprint{center, half_length + margin, half_width + margin, yaw};
}

Vec2 Footprint::to_local(Vec2 p) const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

double overlap_area(const Footprint& a, const Footprint& b) {
  const double dx = a.center.x - b.center.x;
  const double dy = a.center.y - b.center.y;
  const double reach = bounding_radius(a) + bounding_radius(b);
  if (dx * dx + dy * dy >= reach * reach) return 0.0;

  auto ca = a.corners();
  auto cb = b.corners();
  std::vector<Vec2> poly(ca.begin(), ca.end());
  for (std::size_t i = 0; i < 4 && !poly.empty(); ++i) {
    poly = clip(poly, cb[i], cb[(i + 1) % 4]);
  }
  return poly.size() < 3 ? 0.0 : polygon_area(poly);
}

bool footprints_intersect(const Footprint& a, const Footprint& b) {
  const double dx = a.center.x - b.center.x;
  const double dy = a.center.y - b.center.y;
  const double reach = bounding_radius(a) + bounding_radius(b);
  if (dx * dx + dy * dy > reach * reach) return false;

  auto ca = a.corners();
  auto cb = b.corners();
  for (const Footprint* f : {&a, &b}) {
    const double axes[2][2] = {{std::cos(f->yaw), std::sin(f->yaw)},
                               {-std::sin(f->yaw), std::cos(f->yaw)}};
    for (const auto& axis : axes) {
      double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
      for (const auto& p : ca) {
        double t = p.x * axis[0] + p.y * axis[1];
        amin = std::min(amin, t);
        amax = std::max(amax, t);
      }
      for (const auto& p : cb) {
        double t = p.x * axis[0] + p.y * axis[1];
        bmin = std::min(bmin, t);
        bmax = std::max(bmax, t);
      }
      if (amax < bmin || bmax < amin) return false;
    }
  }
  return true;
}

double signed_inside_distance(const Footprint& f, Vec2 p) {
  Vec2 l = f.to_local(p);
  const double qx = std::abs(l.x) - f.half_length;
  const double qy = std::abs(l.y) - f.half_width;
  if (qx <= 0.0 && qy <= 0.0) return -std::max(qx, qy);
  return -std::hypot(std::max(qx, 0.0), std::max(qy, 0.0));
}

bool footprint_within(const Footprint& inner, const Footprint& outer, double margin) {
  for (const auto& c : inner.corners()) {
    if (signed_inside_distance(outer, c) < margin) return false;
  }
  return true;
}

double projected_extent(const ObjectState& o, double axis_yaw) {
  const double d = o.center().yaw() - axis_yaw;
  return std::abs(o.size().length * std::cos(d)) + std::abs(o.size().width * std::sin(d));
}

double distance_xy(const Pose& a, const Pose& b) { return std::hypot(a.x() - b.x(), a.y() - b.y()); }

}  // namespace simboot

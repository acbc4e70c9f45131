#pragma once

#include <cmath>
#include <vector>

#include "pgrl/common.hpp"

namespace pgrl::geom {

using Poly = std::vector<Vec2>;

inline double poly_area(const Poly& p) {
  double a = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2& u = p[i];
    const Vec2& v = p[(i + 1) % p.size()];
    a += u.x * v.y - v.x * u.y;
  }
  return 0.5 * a;
}

inline void make_ccw(Poly& p) {
  if (poly_area(p) < 0) {
    for (std::size_t i = 1, j = p.size() - 1; i < j; ++i, --j) std::swap(p[i], p[j]);
  }
}

// Sutherland-Hodgman clip: keeps the left side of a->b.
inline Poly clip_edge(const Poly& poly, Vec2 a, Vec2 b) {
  Poly out;
  const std::size_t n = poly.size();
  if (n == 0) return out;
  auto side = [&](Vec2 p) { return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x); };
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 cur = poly[i];
    const Vec2 nxt = poly[(i + 1) % n];
    const double sc = side(cur), sn = side(nxt);
    if (sc >= 0) out.push_back(cur);
    if ((sc >= 0) != (sn >= 0)) {
      const double t = sc / (sc - sn);
      out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
    }
  }
  return out;
}

// Clip subject against a counter-clockwise convex polygon.
inline Poly clip_to_poly(Poly subject, const Poly& convex) {
  for (std::size_t i = 0; i < convex.size() && !subject.empty(); ++i)
    subject = clip_edge(subject, convex[i], convex[(i + 1) % convex.size()]);
  return subject;
}

inline bool point_in_convex(const Poly& p, Vec2 q) {
  if (p.size() < 3) return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2& a = p[i];
    const Vec2& b = p[(i + 1) % p.size()];
    if ((b.x - a.x) * (q.y - a.y) - (b.y - a.y) * (q.x - a.x) < 0) return false;
  }
  return true;
}

inline Poly pixel_square(int x, int y) {
  return {{double(x), double(y)},
          {double(x + 1), double(y)},
          {double(x + 1), double(y + 1)},
          {double(x), double(y + 1)}};
}

}  // namespace pgrl::geom

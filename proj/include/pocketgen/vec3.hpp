#ifndef POCKETGEN_VEC3_HPP_
#define POCKETGEN_VEC3_HPP_

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace pocketgen {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator*(double s, const Vec3& a) {
  return {s * a[0], s * a[1], s * a[2]};
}
inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

inline Vec3 centroid(std::span<const Vec3> pts) {
  Vec3 c{0.0, 0.0, 0.0};
  if (pts.empty()) return c;
  for (const auto& p : pts) c = c + p;
  return (1.0 / static_cast<double>(pts.size())) * c;
}

// Row-major 3x3 matrix.
using Mat3 = std::array<double, 9>;

inline Vec3 mat_vec(const Mat3& m, const Vec3& v) {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
          m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

inline Mat3 identity3() { return {1, 0, 0, 0, 1, 0, 0, 0, 1}; }

}  // namespace pocketgen

#endif  // POCKETGEN_VEC3_HPP_

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcflab {

using Vec3 = Eigen::Vector3d;
using Tri = std::array<int, 3>;
using Seg = std::array<int, 2>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Structural or mathematical precondition violated (bad mesh, malformed
// window, multiplicity < 1, ...).  CLI maps this to exit code 3.
class invariant_error : public std::runtime_error {
 public:
  explicit invariant_error(const std::string& what) : std::runtime_error(what) {}
};

// A numeric guard tripped (CFL bound, reach bound, profile derivative bound).
// CLI maps this to exit code 4.
class guard_error : public std::runtime_error {
 public:
  explicit guard_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file.  Carries a 1-based line number when known.
// CLI maps this to exit code 2.
class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

template <typename... Args>
std::string cat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

inline bool finite(const Vec3& v) {
  return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

struct Box3 {
  Vec3 lo = Vec3::Constant(kInf);
  Vec3 hi = Vec3::Constant(-kInf);

  void expand(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void expand(const Box3& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  double diagonal() const { return (hi - lo).norm(); }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  Vec3 clamp(const Vec3& p) const { return p.cwiseMax(lo).cwiseMin(hi); }
  bool overlaps(const Box3& b) const {
    return (lo.array() <= b.hi.array()).all() && (hi.array() >= b.lo.array()).all();
  }
};

// C^2 bump profile on [0, inf): 1 on [0,1], 0 on [2,inf), quintic ramp
// between.  Used both for surface cutoffs and collar profiles.
inline double bump_profile(double u) {
  u = std::abs(u);
  if (u <= 1.0) return 1.0;
  if (u >= 2.0) return 0.0;
  const double s = u - 1.0;
  return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

inline double bump_profile_deriv(double u) {
  const double a = std::abs(u);
  if (a <= 1.0 || a >= 2.0) return 0.0;
  const double s = a - 1.0;
  const double d = -s * s * (30.0 + s * (-60.0 + 30.0 * s));
  return u < 0.0 ? -d : d;
}

}  // namespace mcflab

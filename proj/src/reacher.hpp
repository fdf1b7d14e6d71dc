#pragma once

#include <array>
#include <string>
#include <vector>

#include "promp.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace mlcur::reacher {

struct Rect {
  Vector2d center;
  Vector2d half;  // half extents, both > 0

  bool contains(const Vector2d& p) const {
    return std::abs(p.x() - center.x()) <= half.x() &&
           std::abs(p.y() - center.y()) <= half.y();
  }
};

/// Exact segment vs axis-aligned rectangle test (slab clipping).
bool segment_intersects_rect(const Vector2d& p, const Vector2d& q, const Rect& rect);

enum class DemoMode : int { kUpper = 0, kMiddle = 1, kLower = 2 };

const char* mode_name(DemoMode mode);
DemoMode mode_from_name(const std::string& name);

/// Planar 10-DoF world: three stacked box obstacles form three passage
/// corridors in front of a target region.
struct ReacherWorld {
  Vec link_lengths;             // default: 10 unit links
  std::vector<Rect> obstacles;  // default: 3
  struct Box {
    double x_lo, x_hi, y_lo, y_hi;
  } target_box;

  int dof() const { return static_cast<int>(link_lengths.size()); }
  double total_length() const { return link_lengths.sum(); }
  void validate() const;

  /// Corridor crossing heights for (upper, middle, lower), derived from the
  /// obstacle bands; errors when the layout does not expose three passages.
  std::array<double, 3> corridor_heights() const;
  double column_x() const;       // obstacle column center
  double column_half_x() const;  // widest obstacle half extent in x

  static ReacherWorld make_default();
};

struct ReacherDemo {
  promp::Trajectory traj;  // T x dof joint angles over phase
  Vector2d target;
  DemoMode mode;
};

struct RawDataset {
  std::vector<ReacherDemo> demos;
  ReacherWorld world;
};

/// Base + joint positions + end-effector: dof+1 planar points.
Mat forward_kinematics(const Vec& angles, const Vec& link_lengths);

inline Vector2d end_effector(const Vec& angles, const Vec& link_lengths) {
  const Mat pts = forward_kinematics(angles, link_lengths);
  return pts.row(pts.rows() - 1).transpose();
}

struct CollisionInfo {
  bool collided = false;
  int step = -1;      // row of the joint trajectory
  int link = -1;      // segment index
  int obstacle = -1;  // rectangle index
};

/// True iff any link segment at any given configuration intersects any
/// obstacle; the trajectory rows are checked as-is (densify before the call
/// if needed).
CollisionInfo collision_check(const Mat& joint_traj, const ReacherWorld& world);

struct GeneratorOptions {
  int min_steps = 40;
  int max_steps = 80;
  double crossing_jitter = 0.06;  // corridor crossing noise
  double wiggle_amp = 0.12;       // max lateral path wiggle
  double terminal_tol = 0.1;      // required end-effector accuracy
  int max_attempts = 60;          // per-demo rejection budget
};

/// Collision-free, target-reaching demonstrations with per-mode corridors.
/// Deterministic per (seed, demo index).
RawDataset generate_reacher_dataset(const ReacherWorld& world, int n_demos,
                                    const std::array<double, 3>& mode_mix,
                                    uint64_t seed, const GeneratorOptions& opts = {});

/// Project all demos to (context, omega) pairs.
Dataset project_dataset(const RawDataset& raw, const promp::BasisConfig& basis);

}  // namespace mlcur::reacher

#include "reacher.hpp"

#include <algorithm>
#include <cmath>

namespace mlcur::reacher {

bool segment_intersects_rect(const Vector2d& p, const Vector2d& q, const Rect& rect) {
  const Vector2d lo = rect.center - rect.half;
  const Vector2d hi = rect.center + rect.half;
  const Vector2d d = q - p;
  double tmin = 0.0, tmax = 1.0;
  for (int axis = 0; axis < 2; ++axis) {
    if (std::abs(d[axis]) < 1e-300) {
      if (p[axis] < lo[axis] || p[axis] > hi[axis]) return false;
    } else {
      double t0 = (lo[axis] - p[axis]) / d[axis];
      double t1 = (hi[axis] - p[axis]) / d[axis];
      if (t0 > t1) std::swap(t0, t1);
      tmin = std::max(tmin, t0);
      tmax = std::min(tmax, t1);
      if (tmin > tmax) return false;
    }
  }
  return true;
}

const char* mode_name(DemoMode mode) {
  switch (mode) {
    case DemoMode::kUpper: return "upper";
    case DemoMode::kMiddle: return "middle";
    case DemoMode::kLower: return "lower";
  }
  return "unknown";
}

DemoMode mode_from_name(const std::string& name) {
  if (name == "upper") return DemoMode::kUpper;
  if (name == "middle") return DemoMode::kMiddle;
  if (name == "lower") return DemoMode::kLower;
  fail("unknown demo mode: " + name);
}

void ReacherWorld::validate() const {
  require(dof() >= 2, "world: need at least 2 links");
  require((link_lengths.array() > 0.0).all(), "world: link lengths must be positive");
  require(!obstacles.empty(), "world: no obstacles");
  for (const auto& r : obstacles)
    require(r.half.x() > 0.0 && r.half.y() > 0.0, "world: degenerate obstacle");
  require(target_box.x_lo < target_box.x_hi && target_box.y_lo < target_box.y_hi,
          "world: empty target box");
  const double reach = total_length();
  for (const double x : {target_box.x_lo, target_box.x_hi})
    for (const double y : {target_box.y_lo, target_box.y_hi})
      require(std::hypot(x, y) <= reach, "world: target box exceeds arm reach");
}

std::array<double, 3> ReacherWorld::corridor_heights() const {
  require(obstacles.size() == 3, "world: corridor layout expects 3 obstacles");
  std::vector<std::pair<double, double>> bands;  // (y_lo, y_hi)
  for (const auto& r : obstacles)
    bands.emplace_back(r.center.y() - r.half.y(), r.center.y() + r.half.y());
  std::sort(bands.begin(), bands.end());
  require(bands[0].second < bands[1].first && bands[1].second < bands[2].first,
          "world: obstacles overlap; no corridors");
  // two interior gaps plus the open passage under the lowest band
  const double upper = 0.5 * (bands[1].second + bands[2].first);
  const double middle = 0.5 * (bands[0].second + bands[1].first);
  const double lower = bands[0].first - 0.2;
  return {upper, middle, lower};
}

double ReacherWorld::column_x() const {
  double x = 0.0;
  for (const auto& r : obstacles) x += r.center.x();
  return x / static_cast<double>(obstacles.size());
}

double ReacherWorld::column_half_x() const {
  double h = 0.0;
  for (const auto& r : obstacles) h = std::max(h, r.half.x());
  return h;
}

ReacherWorld ReacherWorld::make_default() {
  ReacherWorld w;
  w.link_lengths = Vec::Ones(10);
  w.obstacles = {
      Rect{{4.2, 0.65}, {0.15, 0.45}},   // y in [0.2, 1.1]
      Rect{{4.2, -0.65}, {0.15, 0.45}},  // y in [-1.1, -0.2]
      Rect{{4.2, 2.2}, {0.15, 0.7}},     // y in [1.5, 2.9]
  };
  w.target_box = {7.6, 8.5, -1.5, 1.5};
  w.validate();
  return w;
}

Mat forward_kinematics(const Vec& angles, const Vec& link_lengths) {
  require(angles.size() == link_lengths.size(), "fk: angle/link count mismatch");
  require(angles.allFinite(), "fk: non-finite angles");
  Mat pts(angles.size() + 1, 2);
  pts.row(0).setZero();
  double heading = 0.0;
  for (int j = 0; j < angles.size(); ++j) {
    heading += angles[j];
    pts(j + 1, 0) = pts(j, 0) + link_lengths[j] * std::cos(heading);
    pts(j + 1, 1) = pts(j, 1) + link_lengths[j] * std::sin(heading);
  }
  return pts;
}

CollisionInfo collision_check(const Mat& joint_traj, const ReacherWorld& world) {
  require(joint_traj.cols() == world.dof(), "collision_check: dof mismatch");
  for (int t = 0; t < joint_traj.rows(); ++t) {
    const Mat pts = forward_kinematics(joint_traj.row(t).transpose(), world.link_lengths);
    for (int j = 0; j + 1 < pts.rows(); ++j) {
      for (size_t ob = 0; ob < world.obstacles.size(); ++ob) {
        if (segment_intersects_rect(pts.row(j).transpose(), pts.row(j + 1).transpose(),
                                    world.obstacles[ob])) {
          return CollisionInfo{true, t, j, static_cast<int>(ob)};
        }
      }
    }
  }
  return {};
}

namespace {

/// Dense polyline with arc-length parameterization.
struct Curve {
  std::vector<Vector2d> pts;
  std::vector<double> arc;  // cumulative length

  void build_arc() {
    arc.assign(pts.size(), 0.0);
    for (size_t i = 1; i < pts.size(); ++i)
      arc[i] = arc[i - 1] + (pts[i] - pts[i - 1]).norm();
  }
  double length() const { return arc.back(); }
  Vector2d at(double s) const {
    if (s <= 0.0) return pts.front();
    if (s >= arc.back()) return pts.back();
    const auto it = std::upper_bound(arc.begin(), arc.end(), s);
    const size_t i = static_cast<size_t>(it - arc.begin());
    const double seg = arc[i] - arc[i - 1];
    const double u = seg > 0.0 ? (s - arc[i - 1]) / seg : 0.0;
    return pts[i - 1] + u * (pts[i] - pts[i - 1]);
  }
};

struct PathShape {
  double bow = 0.0;       // sagitta of the approach arc, absorbs arm slack
  double bow_dir = -1.0;  // bulge side, fixed per mode, never per demo
  double amp_post = 0.0;  // lateral wiggle on the reach segment
  double phase_post = 0.0;
  double crossing_y = 0.0;
};

void append_segment(Curve& curve, const Vector2d& from, const Vector2d& to, double amp,
                    double phase, int samples) {
  const Vector2d d = to - from;
  const double len = d.norm();
  Vector2d perp(-d.y() / len, d.x() / len);
  for (int i = 1; i <= samples; ++i) {
    const double u = static_cast<double>(i) / samples;
    const double off = amp * std::sin(M_PI * u) * std::sin(2.0 * M_PI * u + phase);
    curve.pts.push_back(from + u * d + off * perp);
  }
}

Curve build_path(const ReacherWorld& world, const Vector2d& target,
                 const PathShape& shape) {
  // the flat crossing spans more than a link on each side of the obstacles,
  // so the chain chord over the column lies exactly on the flat
  const double x_col = world.column_x();
  const Vector2d p1(x_col - world.column_half_x() - 1.05, shape.crossing_y);
  const Vector2d p2(x_col + world.column_half_x() + 0.65, shape.crossing_y);

  Curve curve;
  curve.pts.emplace_back(0.0, 0.0);

  if (shape.bow > 1e-6) {
    // circular arc from the base to the corridor entry; the sagitta controls
    // the arc length, bulging away from the corridor side
    const double chord = p1.norm();
    const double h = shape.bow;
    const double radius = chord * chord / (8.0 * h) + 0.5 * h;
    const Vector2d mid = 0.5 * p1;
    const Vector2d n(shape.bow_dir * p1.y() / chord, -shape.bow_dir * p1.x() / chord);
    const Vector2d center = mid - (radius - h) * n;
    const double a0 = std::atan2(-center.y(), -center.x());
    const double a1 = std::atan2(p1.y() - center.y(), p1.x() - center.x());
    // of the two arcs joining the endpoints, take the one through the bulge
    double sweep = a1 - a0;
    while (sweep > M_PI) sweep -= 2.0 * M_PI;
    while (sweep < -M_PI) sweep += 2.0 * M_PI;
    const double alt = sweep - (sweep > 0 ? 2.0 * M_PI : -2.0 * M_PI);
    const Vector2d bulge = mid + h * n;
    const auto arc_mid = [&](double s) {
      const double am = a0 + 0.5 * s;
      return Vector2d(center + radius * Vector2d(std::cos(am), std::sin(am)));
    };
    if ((arc_mid(alt) - bulge).norm() < (arc_mid(sweep) - bulge).norm()) sweep = alt;
    const int samples = std::max(12, static_cast<int>(radius * std::abs(sweep) / 0.03));
    for (int i = 1; i <= samples; ++i) {
      const double a = a0 + sweep * i / samples;
      curve.pts.push_back(center + radius * Vector2d(std::cos(a), std::sin(a)));
    }
  } else {
    append_segment(curve, Vector2d(0.0, 0.0), p1, 0.0, 0.0, 120);
  }
  append_segment(curve, p1, p2, 0.0, 0.0, 30);
  append_segment(curve, p2, target, shape.amp_post, shape.phase_post, 120);
  // extension past the target so the chain fit never runs off the end
  const Vector2d tail = (target - p2).normalized();
  append_segment(curve, target, target + 3.0 * tail, 0.0, 0.0, 40);

  // uniform arc-length resampling, then a fixed-width moving average to
  // round the corners; uneven sampling would bias the average and bend
  // the flat crossing
  curve.build_arc();
  const double ds = 0.025;
  const int m = std::max(8, static_cast<int>(curve.length() / ds));
  Curve dense;
  dense.pts.reserve(static_cast<size_t>(m) + 1);
  for (int i = 0; i <= m; ++i)
    dense.pts.push_back(curve.at(curve.length() * i / m));

  Curve smooth;
  const int w = 10;
  smooth.pts.reserve(dense.pts.size());
  for (int i = 0; i <= m; ++i) {
    Vector2d acc(0, 0);
    int cnt = 0;
    for (int j = std::max(0, i - w); j <= std::min(m, i + w); ++j, ++cnt)
      acc += dense.pts[static_cast<size_t>(j)];
    smooth.pts.push_back(acc / cnt);
  }
  smooth.pts.front() = Vector2d(0, 0);
  smooth.build_arc();
  return smooth;
}

/// Fit the chain along the curve: walk the polyline and place each joint at
/// the exact forward intersection of the link circle with the curve.
Vec fit_chain(const Curve& curve, const Vec& link_lengths) {
  const int dof = static_cast<int>(link_lengths.size());
  Vec angles(dof);
  Vector2d prev(0.0, 0.0);
  size_t idx = 0;
  double heading = 0.0;
  const size_t last = curve.pts.size() - 1;
  for (int j = 0; j < dof; ++j) {
    const double link = link_lengths[j];
    Vector2d next;
    bool found = false;
    while (idx < last) {
      const Vector2d a = curve.pts[idx] - prev;
      const Vector2d b = curve.pts[idx + 1] - prev;
      if (b.norm() >= link) {
        // forward root of |a + t (b - a)| = link on this segment
        const Vector2d d = b - a;
        const double qa = d.squaredNorm();
        const double qb = 2.0 * a.dot(d);
        const double qc = a.squaredNorm() - link * link;
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc >= 0.0 && qa > 0.0) {
          const double t = (-qb + std::sqrt(disc)) / (2.0 * qa);
          if (t >= -1e-9 && t <= 1.0 + 1e-9) {
            next = prev + a + std::min(1.0, std::max(0.0, t)) * d;
            found = true;
            break;
          }
        }
      }
      ++idx;
    }
    if (!found) {
      // off the end of the curve: continue along the final direction
      const Vector2d tail =
          (curve.pts[last] - curve.pts[last - 1]).normalized();
      next = prev + link * tail;
    }
    const Vector2d d = next - prev;
    const double abs_angle = std::atan2(d.y(), d.x());
    double rel = abs_angle - heading;
    while (rel > M_PI) rel -= 2.0 * M_PI;
    while (rel < -M_PI) rel += 2.0 * M_PI;
    angles[j] = rel;
    heading = abs_angle;
    prev = next;
  }
  return angles;
}

/// Damped-least-squares polish of the terminal end-effector position. Only
/// joints at or past `first_movable` adjust, so a corridor-threading prefix
/// stays pinned.
void polish_terminal(Vec& angles, const Vec& link_lengths, const Vector2d& target,
                     int first_movable) {
  const int dof = static_cast<int>(angles.size());
  first_movable = std::min(std::max(first_movable, 0), dof - 1);
  const int nfree = dof - first_movable;
  for (int it = 0; it < 20; ++it) {
    const Mat pts = forward_kinematics(angles, link_lengths);
    const Vector2d ee = pts.row(dof).transpose();
    const Vector2d err = target - ee;
    if (err.norm() < 5e-3) break;
    Mat jac(2, nfree);
    for (int j = 0; j < nfree; ++j) {
      // d ee / d q_j = perpendicular of the lever arm from joint j
      const int joint = first_movable + j;
      const Vector2d lever = ee - Vector2d(pts(joint, 0), pts(joint, 1));
      jac(0, j) = -lever.y();
      jac(1, j) = lever.x();
    }
    Mat jjt = jac * jac.transpose();
    jjt.diagonal().array() += 1e-3;
    Vec dq = jac.transpose() * jjt.ldlt().solve(Vec(err));
    const double maxstep = dq.cwiseAbs().maxCoeff();
    if (maxstep > 0.08) dq *= 0.08 / maxstep;
    angles.segment(first_movable, nfree) += dq;
  }
}

Vec min_jerk_profile(int steps) {
  Vec sigma(steps);
  for (int t = 0; t < steps; ++t) {
    const double u = static_cast<double>(t) / (steps - 1);
    sigma[t] = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
  }
  return sigma;
}

}  // namespace

RawDataset generate_reacher_dataset(const ReacherWorld& world, int n_demos,
                                    const std::array<double, 3>& mode_mix,
                                    uint64_t seed, const GeneratorOptions& opts) {
  world.validate();
  require(n_demos >= 1, "generate: n_demos must be >= 1");
  const double mix_sum = mode_mix[0] + mode_mix[1] + mode_mix[2];
  require(std::abs(mix_sum - 1.0) <= 1e-9, "generate: mode mix must sum to 1");
  require(mode_mix[0] >= 0 && mode_mix[1] >= 0 && mode_mix[2] >= 0,
          "generate: negative mode proportion");

  const auto corridors = world.corridor_heights();
  RawDataset out;
  out.world = world;
  out.demos.reserve(static_cast<size_t>(n_demos));

  for (int idx = 0; idx < n_demos; ++idx) {
    Rng rng = Rng::derive(seed, static_cast<uint64_t>(idx));

    const Vector2d target(rng.uniform(world.target_box.x_lo, world.target_box.x_hi),
                          rng.uniform(world.target_box.y_lo, world.target_box.y_hi));
    const double u = rng.uniform();
    DemoMode mode = u < mode_mix[0]                 ? DemoMode::kUpper
                    : u < mode_mix[0] + mode_mix[1] ? DemoMode::kMiddle
                                                    : DemoMode::kLower;

    bool done = false;
    for (int attempt = 0; attempt < opts.max_attempts && !done; ++attempt) {
      PathShape shape;
      shape.bow_dir = corridors[static_cast<size_t>(mode)] >= 0.0 ? -1.0 : 1.0;
      shape.crossing_y = corridors[static_cast<size_t>(mode)] +
                         rng.uniform(-opts.crossing_jitter, opts.crossing_jitter);
      shape.amp_post = rng.uniform(0.0, opts.wiggle_amp);
      shape.phase_post = rng.uniform(0.0, 2.0 * M_PI);

      // choose the approach-arc sagitta so the 10-link chain lands on target
      double lo = 0.0, hi = 2.0;
      Vec final_angles;
      for (int it = 0; it < 30; ++it) {
        shape.bow = 0.5 * (lo + hi);
        final_angles = fit_chain(build_path(world, target, shape), world.link_lengths);
        const Vector2d ee = end_effector(final_angles, world.link_lengths);
        // positive when the chain runs past the target along the path
        const double along = (ee - target).dot((target - Vector2d(world.column_x(), shape.crossing_y)).normalized());
        if (along > 0.0)
          lo = shape.bow;
        else
          hi = shape.bow;
      }
      shape.bow = lo;
      final_angles = fit_chain(build_path(world, target, shape), world.link_lengths);
      const Vec unpolished = final_angles;
      // adjust only the joints past the obstacle column
      const Mat chain_pts = forward_kinematics(final_angles, world.link_lengths);
      int first_movable = world.dof() - 1;
      for (int j = 0; j < world.dof(); ++j) {
        if (chain_pts(j, 0) > world.column_x() + world.column_half_x() + 0.4) {
          first_movable = j;
          break;
        }
      }
      polish_terminal(final_angles, world.link_lengths, target, first_movable);
      const Vec polish_delta = final_angles - unpolished;

      const Vector2d ee = end_effector(final_angles, world.link_lengths);
      if ((ee - target).norm() > opts.terminal_tol) continue;

      // The motion morphs the path itself: the coil unrolls and the reach
      // point travels from straight-ahead to the target, so every
      // intermediate configuration threads the same corridor.
      const Vector2d exit_pt(world.column_x() + world.column_half_x() + 0.65,
                             shape.crossing_y);
      const Vector2d start_target =
          exit_pt + Vector2d((target - exit_pt).norm(), 0.0);

      const int steps = opts.min_steps + rng.uniform_int(opts.max_steps - opts.min_steps + 1);
      const Vec sigma = min_jerk_profile(steps);
      Mat joints(steps, world.dof());
      for (int t = 0; t < steps; ++t) {
        const double u = sigma[t];
        PathShape st = shape;
        st.bow = u * shape.bow;
        st.amp_post = u * shape.amp_post;
        const Vector2d target_t = (1.0 - u) * start_target + u * target;
        const Vec q =
            fit_chain(build_path(world, target_t, st), world.link_lengths) +
            u * polish_delta;
        joints.row(t) = q.transpose();
      }

      if (collision_check(joints, world).collided) continue;

      ReacherDemo demo;
      demo.traj.states = std::move(joints);
      demo.traj.times = Vec::LinSpaced(steps, 0.0, 1.0);
      demo.target = target;
      demo.mode = mode;
      out.demos.push_back(std::move(demo));
      done = true;
    }
    require(done, "generate: rejection budget exhausted for demo " + std::to_string(idx) +
                      " (mode " + mode_name(mode) + ", target " +
                      std::to_string(target.x()) + "," + std::to_string(target.y()) +
                      "); the world geometry may be infeasible");
  }
  return out;
}

Dataset project_dataset(const RawDataset& raw, const promp::BasisConfig& basis) {
  require(!raw.demos.empty(), "project_dataset: empty dataset");
  const int n = static_cast<int>(raw.demos.size());
  const int d_omega = basis.n_basis * raw.world.dof();
  Dataset data;
  data.contexts.resize(n, 2);
  data.omegas.resize(n, d_omega);
  data.modes.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& demo = raw.demos[static_cast<size_t>(i)];
    data.contexts.row(i) = demo.target.transpose();
    data.omegas.row(i) = promp::project_trajectory(demo.traj, basis).transpose();
    data.modes[static_cast<size_t>(i)] = static_cast<int>(demo.mode);
  }
  return data;
}

}  // namespace mlcur::reacher

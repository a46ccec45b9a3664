#include "graspforce/force_map.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <thread>

#include "graspforce/errors.hpp"

namespace graspforce {

namespace {

// Right-handed frame (dir, u, v); u and v span the sampling plane.
struct GraspFrame {
  Vec3 dir, u, v;
  Mat3 rotation() const {  // gripper axes as world columns
    Mat3 R;
    R.col(0) = dir;
    R.col(1) = u;
    R.col(2) = v;
    return R;
  }
};

GraspFrame make_frame(const Vec3& grasp_dir) {
  GraspFrame f;
  f.dir = grasp_dir.normalized();
  const Vec3 seed = std::abs(f.dir.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitY();
  f.v = (seed - f.dir * seed.dot(f.dir)).normalized();
  f.u = f.v.cross(f.dir);
  return f;
}

struct RayHit {
  double t;
  int face;
};

// Moeller-Trumbore; returns all transversal hits of the ray o + t*d.
void ray_hits(const Mesh& mesh, const Vec3& o, const Vec3& d, std::vector<RayHit>& hits) {
  hits.clear();
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    const auto& tri = mesh.triangles[f];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3 e1 = mesh.vertices[tri[1]] - a;
    const Vec3 e2 = mesh.vertices[tri[2]] - a;
    const Vec3 p = d.cross(e2);
    const double det = e1.dot(p);
    if (std::abs(det) < 1e-14) continue;  // ray parallel to the face
    const double inv = 1.0 / det;
    const Vec3 s = o - a;
    const double bu = s.dot(p) * inv;
    if (bu < -1e-12 || bu > 1.0 + 1e-12) continue;
    const Vec3 q = s.cross(e1);
    const double bv = d.dot(q) * inv;
    if (bv < -1e-12 || bu + bv > 1.0 + 1e-12) continue;
    hits.push_back({e2.dot(q) * inv, static_cast<int>(f)});
  }
  std::sort(hits.begin(), hits.end(),
            [](const RayHit& l, const RayHit& r) { return l.t < r.t; });
  // Collapse duplicate hits where the ray crosses a shared edge or vertex.
  std::vector<RayHit> unique;
  for (const auto& h : hits)
    if (unique.empty() || h.t - unique.back().t > 1e-9) unique.push_back(h);
  hits.swap(unique);
}

// Tilts `n` to exactly `tilt_rad` away from the axis, toward the center of
// mass when that direction is usable, else toward the fallback.
Vec3 tilt_normal(const Vec3& axis_aligned, double tilt_rad, const Vec3& contact,
                 const Vec3& com, const Vec3& fallback) {
  Vec3 toward = com - contact;
  toward -= axis_aligned * toward.dot(axis_aligned);
  if (toward.norm() < 1e-12) toward = fallback;
  toward.normalize();
  return std::cos(tilt_rad) * axis_aligned + std::sin(tilt_rad) * toward;
}

}  // namespace

std::vector<GraspCandidate> sample_grasp_points(const Mesh& mesh, double spacing,
                                                const Vec3& grasp_dir, const Vec3& com,
                                                int* dropped_rays) {
  if (!(spacing > 0)) throw DomainError("sample_grasp_points: spacing must be > 0");
  const GraspFrame frame = make_frame(grasp_dir);

  const Vec3 lo = mesh.bbox_min();
  const Vec3 hi = mesh.bbox_max();
  if (!lo.allFinite()) return {};

  // Project the bounding box onto the sampling plane.
  double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
  double xmin = 1e300;
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 c((corner & 1) ? hi.x() : lo.x(), (corner & 2) ? hi.y() : lo.y(),
                 (corner & 4) ? hi.z() : lo.z());
    umin = std::min(umin, c.dot(frame.u));
    umax = std::max(umax, c.dot(frame.u));
    vmin = std::min(vmin, c.dot(frame.v));
    vmax = std::max(vmax, c.dot(frame.v));
    xmin = std::min(xmin, c.dot(frame.dir));
  }

  const double margin = 1.0 + (hi - lo).norm();
  const double tilt = 0.5 * std::numbers::pi / 180.0;
  const double cos_parallel = std::cos(tilt);

  std::vector<GraspCandidate> out;
  std::vector<RayHit> hits;
  int dropped = 0;
  for (double uc = umin + 0.5 * spacing; uc < umax; uc += spacing) {
    for (double vc = vmin + 0.5 * spacing; vc < vmax; vc += spacing) {
      const Vec3 origin = frame.u * uc + frame.v * vc + frame.dir * (xmin - margin);
      ray_hits(mesh, origin, frame.dir, hits);
      if (hits.size() < 2) {
        if (!hits.empty()) ++dropped;
        continue;
      }
      GraspCandidate cand;
      cand.y = uc;
      cand.z = vc;
      cand.contact_A = origin + frame.dir * hits.front().t;
      cand.contact_B = origin + frame.dir * hits.back().t;

      Vec3 fnA = mesh.face_normals[hits.front().face];
      Vec3 fnB = mesh.face_normals[hits.back().face];
      if (fnA.dot(frame.dir) < 0) fnA = -fnA;  // inward: finger A pushes along +dir
      if (fnB.dot(frame.dir) > 0) fnB = -fnB;
      cand.n_A = fnA;
      cand.n_B = fnB;
      if (fnA.dot(frame.dir) > cos_parallel) {
        cand.n_A = tilt_normal(frame.dir, tilt, cand.contact_A, com, frame.v);
        cand.perturbed_A = true;
      }
      if (-fnB.dot(frame.dir) > cos_parallel) {
        cand.n_B = tilt_normal(-frame.dir, tilt, cand.contact_B, com, frame.v);
        cand.perturbed_B = true;
      }

      const Vec3 center = 0.5 * (cand.contact_A + cand.contact_B);
      cand.r_A = cand.contact_A - center;
      cand.r_B = cand.contact_B - center;
      out.push_back(cand);
    }
  }
  if (dropped_rays) *dropped_rays = dropped;
  return out;
}

std::pair<GraspConfig, RequiredWrench> candidate_problem(const GraspCandidate& cand,
                                                         const ForceMapParams& params) {
  const GraspFrame frame = make_frame(params.grasp_dir);
  const Mat3 R = frame.rotation();
  const Vec3 center = 0.5 * (cand.contact_A + cand.contact_B);

  GraspConfig cfg{R.transpose() * cand.n_A,
                  R.transpose() * cand.n_B,
                  params.mu,
                  params.mu,
                  R.transpose() * cand.r_A,
                  R.transpose() * cand.r_B,
                  params.material};

  const Vec3 G_world(0, 0, -params.mass * params.gravity);
  const Vec3 com_local = R.transpose() * (params.com - center);
  return {cfg, required_wrench_from_gravity(G_world, com_local, R)};
}

ForceMap compute_force_map(const Mesh& mesh, const ForceMapParams& params) {
  if (!(params.mu > 0)) throw DomainError("compute_force_map: mu must be > 0");
  if (!(params.mass > 0)) throw DomainError("compute_force_map: mass must be > 0");

  ForceMap map;
  auto candidates = sample_grasp_points(mesh, params.spacing, params.grasp_dir,
                                        params.com, &map.dropped_rays);
  map.entries.resize(candidates.size());

  auto solve_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      ForceMapEntry& e = map.entries[i];
      e.candidate = candidates[i];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        auto [cfg, w] = candidate_problem(candidates[i], params);
        const GraspSolution sol = solve_grasp_force(cfg, w);
        e.F_min = sol.total();
        e.state = sol.state;
        e.solver_ok = true;
      } catch (const Error&) {
        e.F_min = std::numeric_limits<double>::quiet_NaN();
        e.solver_ok = false;
      }
      e.solve_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
    }
  };

  const int threads = std::max(1, params.threads);
  if (threads == 1 || map.entries.size() < 2) {
    solve_range(0, map.entries.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (map.entries.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk;
      if (b >= map.entries.size()) break;
      pool.emplace_back(solve_range, b, std::min(b + chunk, map.entries.size()));
    }
    for (auto& th : pool) th.join();
  }

  double global_min = std::numeric_limits<double>::infinity();
  for (const auto& e : map.entries)
    if (e.solver_ok) global_min = std::min(global_min, e.F_min);
  map.global_min = std::isfinite(global_min) ? global_min : 0.0;

  for (auto& e : map.entries)
    e.feasible = e.solver_ok && e.F_min <= params.infeasible_ratio * map.global_min;
  return map;
}

namespace {

std::string fmt_g(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

}  // namespace

void export_map_csv(std::ostream& os, const ForceMap& map) {
  os << "y,z,F_min,state,feasible,solve_ms\n";
  for (const auto& e : map.entries) {
    os << fmt_g(e.candidate.y) << ',' << fmt_g(e.candidate.z) << ',';
    if (e.feasible)
      os << fmt_g(e.F_min) << ',' << to_string(e.state);
    else
      os << ',' << (e.solver_ok ? to_string(e.state) : "");
    os << ',' << (e.feasible ? 1 : 0) << ',' << fmt_g(e.solve_ms) << '\n';
  }
}

void export_map_json(std::ostream& os, const ForceMap& map) {
  os << "{\"global_min\":" << fmt_g(map.global_min) << ",\"entries\":[";
  bool first = true;
  for (const auto& e : map.entries) {
    if (!first) os << ',';
    first = false;
    os << "{\"y\":" << fmt_g(e.candidate.y) << ",\"z\":" << fmt_g(e.candidate.z)
       << ",\"F_min\":";
    if (e.feasible)
      os << fmt_g(e.F_min);
    else
      os << "null";
    os << ",\"state\":\"" << (e.solver_ok ? to_string(e.state) : "") << '"'
       << ",\"feasible\":" << (e.feasible ? 1 : 0)
       << ",\"solve_ms\":" << fmt_g(e.solve_ms) << '}';
  }
  os << "]}\n";
}

std::vector<MapRow> import_map_csv(const std::string& text) {
  std::vector<MapRow> rows;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "y,z,F_min,state,feasible,solve_ms")
    throw ParseError("force-map CSV: unexpected header", 0);
  std::size_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<std::string, 6> field;
    std::size_t start = 0;
    for (int i = 0; i < 6; ++i) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos && i < 5)
        throw ParseError("force-map CSV: row has too few columns", offset);
      field[i] = line.substr(start, comma - start);
      start = comma + 1;
    }
    MapRow r;
    r.y = std::stod(field[0]);
    r.z = std::stod(field[1]);
    if (!field[2].empty()) r.F_min = std::stod(field[2]);
    r.state = field[3];
    r.feasible = field[4] == "1";
    r.solve_ms = std::stod(field[5]);
    rows.push_back(r);
    offset += line.size() + 1;
  }
  return rows;
}

void export_rows_csv(std::ostream& os, const std::vector<MapRow>& rows) {
  os << "y,z,F_min,state,feasible,solve_ms\n";
  for (const auto& r : rows) {
    os << fmt_g(r.y) << ',' << fmt_g(r.z) << ',';
    if (r.F_min) os << fmt_g(*r.F_min);
    os << ',' << r.state << ',' << (r.feasible ? 1 : 0) << ',' << fmt_g(r.solve_ms)
       << '\n';
  }
}

}  // namespace graspforce

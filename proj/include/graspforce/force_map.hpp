#ifndef GRASPFORCE_FORCE_MAP_HPP
#define GRASPFORCE_FORCE_MAP_HPP

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "graspforce/grasp_solver.hpp"
#include "graspforce/mesh.hpp"

namespace graspforce {

inline constexpr double kGravity = 9.81;  // m/s^2

/// Antipodal grasp candidate from one ray of the sampling grid: the extreme
/// surface hits become the two contacts, with their face normals.
struct GraspCandidate {
  double y = 0, z = 0;          // grid coordinates in the plane normal to the axis
  Vec3 contact_A, contact_B;    // world frame; A is the near (entry) hit
  Vec3 n_A, n_B;                // inward contact normals, world frame
  Vec3 r_A, r_B;                // arms from the grasp center to the contacts
  bool perturbed_A = false;     // normal tilted away from the grasp axis
  bool perturbed_B = false;
};

struct ForceMapEntry {
  GraspCandidate candidate;
  double F_min = 0;      // total minimum grasp force; NaN when the solve failed
  SlipState state = SlipState::A_SLIP;
  bool solver_ok = false;
  bool feasible = false;  // solver_ok and below the 10x-of-minimum cutoff
  double solve_ms = 0;
};

struct ForceMapParams {
  Vec3 com = Vec3::Zero();   // center of mass, world frame
  double mass = 0;           // kg
  double mu = 0.5;
  SoftMaterial<double> material = SoftMaterial<double>::silicone_pad();
  double spacing = 0.005;    // grid spacing, m
  Vec3 grasp_dir = Vec3::UnitX();
  double gravity = kGravity;
  double infeasible_ratio = 10.0;  // F_min beyond ratio x global minimum
  int threads = 1;
};

struct ForceMap {
  std::vector<ForceMapEntry> entries;
  double global_min = 0;  // smallest solved total force, 0 when none solved
  int dropped_rays = 0;   // rays with fewer than two surface hits
};

/// Uniform ray grid along `grasp_dir`; every ray with at least two surface
/// hits yields a candidate. Normals within 0.5 degrees of the grasp axis are
/// tilted toward the center of mass (recorded per contact).
std::vector<GraspCandidate> sample_grasp_points(const Mesh& mesh, double spacing,
                                                const Vec3& grasp_dir,
                                                const Vec3& com = Vec3::Zero(),
                                                int* dropped_rays = nullptr);

/// Minimum grasp force at every sampled candidate under the object's own
/// weight; solver failures become infeasible entries, never batch aborts.
ForceMap compute_force_map(const Mesh& mesh, const ForceMapParams& params);

/// Builds the solver problem for one candidate (shared by the batch path and
/// by re-solves of exported entries).
std::pair<GraspConfig, RequiredWrench> candidate_problem(const GraspCandidate& cand,
                                                         const ForceMapParams& params);

/// CSV schema: y,z,F_min,state,feasible,solve_ms with F_min and state left
/// empty on infeasible rows. Row order is the deterministic grid order.
void export_map_csv(std::ostream& os, const ForceMap& map);
void export_map_json(std::ostream& os, const ForceMap& map);

/// Re-imports the CSV produced by export_map_csv (positions, forces, flags;
/// contact geometry is not part of the schema).
struct MapRow {
  double y = 0, z = 0;
  std::optional<double> F_min;
  std::string state;
  bool feasible = false;
  double solve_ms = 0;
};
std::vector<MapRow> import_map_csv(const std::string& text);
void export_rows_csv(std::ostream& os, const std::vector<MapRow>& rows);

}  // namespace graspforce

#endif  // GRASPFORCE_FORCE_MAP_HPP

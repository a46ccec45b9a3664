// graspforce: grasp-force prediction toolkit for two-finger grippers with
// soft fingertips. Subcommands: contact, solve, com, map, sim.

#include <CLI11.hpp>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>

#include "graspforce/contact_model.hpp"
#include "graspforce/force_map.hpp"
#include "graspforce/grasp_solver.hpp"
#include "graspforce/lift_sim.hpp"
#include "graspforce/mesh.hpp"
#include "graspforce/wrench.hpp"

namespace gf = graspforce;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw gf::ParseError("cannot open file: " + path, 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gf::Error("cannot write file: " + path);
  out << content;
}

// Strict value+suffix parser; a bare number is accepted only when
// `bare_scale` is provided (interpreted as SI).
double parse_quantity(const std::string& text,
                      const std::vector<std::pair<std::string, double>>& suffixes,
                      std::optional<double> bare_scale = std::nullopt) {
  std::size_t consumed = 0;
  double value = 0;
  try {
    value = std::stod(text, &consumed);
  } catch (const std::exception&) {
    throw gf::DomainError("cannot parse quantity: " + text);
  }
  const std::string suffix = text.substr(consumed);
  if (suffix.empty()) {
    if (bare_scale) return value * *bare_scale;
    throw gf::DomainError("quantity needs an explicit unit suffix: " + text);
  }
  for (const auto& [name, scale] : suffixes)
    if (suffix == name) return value * scale;
  throw gf::DomainError("unknown unit suffix '" + suffix + "' in: " + text);
}

double parse_length(const std::string& s, bool allow_bare = false) {
  return parse_quantity(s, {{"m", 1.0}, {"mm", 1e-3}, {"cm", 1e-2}},
                        allow_bare ? std::optional<double>(1.0) : std::nullopt);
}
double parse_mass(const std::string& s) {
  return parse_quantity(s, {{"kg", 1.0}, {"g", 1e-3}});
}
double parse_speed(const std::string& s) {
  return parse_quantity(s, {{"m/s", 1.0}, {"mm/s", 1e-3}});
}
double parse_force(const std::string& s, bool allow_bare = false) {
  return parse_quantity(s, {{"N", 1.0}, {"mN", 1e-3}},
                        allow_bare ? std::optional<double>(1.0) : std::nullopt);
}

gf::Vec3 parse_vec3(const std::string& text, double scale) {
  gf::Vec3 v;
  std::istringstream in(text);
  std::string tok;
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(in, tok, ','))
      throw gf::DomainError("expected x,y,z triple: " + text);
    v(i) = std::stod(tok) * scale;
  }
  return v * 1.0;
}

// ---------------------------------------------------------------------------
// run manifest

struct ManifestInput {
  std::string path;
  std::uint64_t digest;
};

class Manifest {
public:
  Manifest(std::string subcommand, bool no_timestamp)
      : subcommand_(std::move(subcommand)), no_timestamp_(no_timestamp),
        start_(std::chrono::steady_clock::now()) {}

  void add_input(const std::string& path, const std::string& bytes) {
    inputs_.push_back({path, fnv1a64(bytes)});
  }
  void set_config(json cfg) { config_ = std::move(cfg); }

  void write_next_to(const std::string& artifact_path) const {
    json m;
    m["tool"] = "graspforce";
    m["version"] = kVersion;
    m["subcommand"] = subcommand_;
    m["config"] = config_;
    m["inputs"] = json::array();
    for (const auto& in : inputs_) {
      char hex[32];
      std::snprintf(hex, sizeof(hex), "%016llx",
                    static_cast<unsigned long long>(in.digest));
      m["inputs"].push_back({{"path", in.path}, {"fnv1a64", hex}});
    }
    if (!no_timestamp_) {
      m["wall_ms"] = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start_)
                         .count();
      const auto now = std::chrono::system_clock::now();
      m["timestamp_unix"] =
          std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch())
              .count();
    }
    write_file(artifact_path + ".manifest.json", m.dump(2) + "\n");
  }

private:
  std::string subcommand_;
  bool no_timestamp_;
  std::chrono::steady_clock::time_point start_;
  std::vector<ManifestInput> inputs_;
  json config_;
};

// ---------------------------------------------------------------------------
// json <-> library types

gf::Vec3 vec3_from_json(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3)
    throw gf::DomainError("problem JSON: '" + key + "' must be a 3-array");
  return {j[key][0].get<double>(), j[key][1].get<double>(), j[key][2].get<double>()};
}

json vec3_to_json(const gf::Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

gf::SoftMaterial<double> material_from_json(const json& j) {
  if (!j.contains("material")) return gf::SoftMaterial<double>::silicone_pad();
  const json& m = j["material"];
  return {m.value("c", 2.07e-3), m.value("gamma", 0.259), m.value("k", 2.0)};
}

std::pair<gf::GraspConfig, gf::RequiredWrench> problem_from_json(const json& j) {
  gf::RequiredWrench w;
  if (j.contains("W_req") && j["W_req"].is_array() && j["W_req"].size() == 6) {
    gf::Vec6 v;
    for (int i = 0; i < 6; ++i) v(i) = j["W_req"][i].get<double>();
    w = gf::RequiredWrench::from_vec(v);
  } else {
    throw gf::DomainError("problem JSON: 'W_req' must be a 6-array [F;M]");
  }

  const gf::Vec3 n_A = vec3_from_json(j, "n_A").normalized();
  const gf::Vec3 n_B = vec3_from_json(j, "n_B").normalized();
  const double mu_A = j.value("mu_A", 0.5);
  const double mu_B = j.value("mu_B", 0.5);
  const auto mat = material_from_json(j);

  gf::GraspConfig cfg{n_A, n_B, mu_A, mu_B, gf::Vec3::Zero(), gf::Vec3::Zero(), mat};
  auto arm = [&](const std::string& key, double sign) -> gf::Vec3 {
    if (!j.contains(key)) throw gf::DomainError("problem JSON: missing '" + key + "'");
    if (j[key].is_number()) return {sign * j[key].get<double>(), 0, 0};
    return vec3_from_json(j, key);
  };
  cfg.arm_A = arm("r_A", -1.0);  // scalar arms sit on the grasp axis
  cfg.arm_B = arm("r_B", +1.0);
  return {cfg, w};
}

json decomposition_to_json(const gf::ContactDecomposition& d) {
  return {{"F_n", d.F_n},   {"F_t1", d.F_t1},          {"F_t2", d.F_t2},
          {"M", d.M},       {"e_t1", vec3_to_json(d.e_t1)}, {"e_t2", vec3_to_json(d.e_t2)}};
}

json solution_to_json(const gf::GraspSolution& sol) {
  return {{"F_A", sol.F_A},
          {"F_B", sol.F_B},
          {"state", gf::to_string(sol.state)},
          {"converged", sol.converged},
          {"iterations", sol.iterations},
          {"residual", sol.residual},
          {"decomposition_A", decomposition_to_json(sol.decomp_A)},
          {"decomposition_B", decomposition_to_json(sol.decomp_B)}};
}

gf::WrenchFeedback feedback_from_json(const json& j) {
  gf::WrenchFeedback fb;
  fb.F_A = vec3_from_json(j, "F_A");
  fb.M_A = vec3_from_json(j, "M_A");
  fb.F_B = vec3_from_json(j, "F_B");
  fb.M_B = vec3_from_json(j, "M_B");
  fb.r_A = vec3_from_json(j, "r_A");
  fb.r_B = vec3_from_json(j, "r_B");
  return fb;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-")
    std::cout << content;
  else
    write_file(out_path, content);
}

// ---------------------------------------------------------------------------
// subcommands

struct ContactArgs {
  double k = 2.0, mu = 0.5;
  std::string Fn = "1", R, c, gamma = "0.259";
  int samples = 81;
  double dmax = 4.0;
  std::string curve_path, family_dir;
  bool no_timestamp = false;
};

int run_contact(const ContactArgs& a) {
  const double Fn = parse_force(a.Fn, true);
  const double c = a.c.empty() ? 2.07e-3 : parse_length(a.c, true);
  const gf::SoftMaterial<double> mat(c, std::stod(a.gamma), a.k);
  const double R = a.R.empty() ? gf::contact_radius(Fn, mat) : parse_length(a.R, true);

  Manifest manifest("contact", a.no_timestamp);
  manifest.set_config({{"k", a.k},
                       {"mu", a.mu},
                       {"Fn", Fn},
                       {"R", R},
                       {"samples", a.samples},
                       {"dmax", a.dmax}});

  if (!a.curve_path.empty()) {
    const auto curve = gf::torque_curve(mat, a.samples, a.dmax);
    std::ostringstream os;
    gf::write_locus_csv(os, curve);
    write_file(a.curve_path, os.str());
    manifest.write_next_to(a.curve_path);
  }
  if (!a.family_dir.empty()) {
    for (double k : {1.0, 2.0, 3.0, 4.0, 8.0}) {
      const gf::SoftMaterial<double> m(c, std::stod(a.gamma), k);
      const auto curve = gf::torque_curve(m, a.samples, a.dmax);
      std::ostringstream os;
      gf::write_locus_csv(os, curve);
      char name[64];
      std::snprintf(name, sizeof(name), "/torque_k%g.csv", k);
      write_file(a.family_dir + name, os.str());
    }
  }

  json summary;
  summary["C_k"] = gf::pressure_normalizer(a.k);
  if (Fn > 0 && R > 0) {
    const gf::ContactPatch<double> patch(R, Fn, a.mu);
    summary["F_max"] = a.mu * Fn;
    summary["M_max"] = gf::max_moment(patch, mat);
  }
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int run_solve(const std::string& problem_path, const std::string& out_path,
              bool no_timestamp) {
  const std::string text = read_file(problem_path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw gf::ParseError(std::string("problem JSON: ") + e.what(), 0);
  }
  auto [cfg, w] = problem_from_json(j);

  Manifest manifest("solve", no_timestamp);
  manifest.add_input(problem_path, text);
  manifest.set_config(j);

  const gf::GraspSolution sol = gf::solve_grasp_force(cfg, w);
  emit(out_path, solution_to_json(sol).dump(2) + "\n");
  if (!out_path.empty() && out_path != "-") manifest.write_next_to(out_path);
  return 0;
}

int run_com(const std::string& snapshots_path, const std::string& out_path,
            bool no_timestamp) {
  const std::string text = read_file(snapshots_path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw gf::ParseError(std::string("snapshot JSON: ") + e.what(), 0);
  }
  if (!j.is_array() || j.size() < 2)
    throw gf::DomainError("com: need a JSON list of at least two snapshots");

  std::vector<gf::GravityEstimate> lines;
  for (const auto& snap : j) lines.push_back(gf::gravity_line(feedback_from_json(snap)));
  const gf::CenterOfMass com = gf::estimate_com(lines);

  json out;
  out["G"] = vec3_to_json(lines.front().G);
  out["com"] = vec3_to_json(com.point);
  out["residual"] = com.residual;

  Manifest manifest("com", no_timestamp);
  manifest.add_input(snapshots_path, text);
  manifest.set_config({{"snapshots", j.size()}});
  emit(out_path, out.dump(2) + "\n");
  if (!out_path.empty() && out_path != "-") manifest.write_next_to(out_path);
  return 0;
}

struct MapArgs {
  std::string mesh_path, format = "auto", units, com, mass, spacing, out;
  double mu = 0.5;
  bool no_timestamp = false;
};

int run_map(const MapArgs& a) {
  const double unit_scale = [&] {
    if (a.units == "m") return 1.0;
    if (a.units == "mm") return 1e-3;
    throw gf::DomainError("map: --units must be m or mm");
  }();

  gf::MeshFormat fmt = gf::MeshFormat::AUTO;
  if (a.format == "obj") fmt = gf::MeshFormat::OBJ;
  else if (a.format == "stl") fmt = gf::MeshFormat::STL;
  else if (a.format != "auto") throw gf::DomainError("map: --format must be obj or stl");

  const std::string mesh_bytes = read_file(a.mesh_path);
  const gf::Mesh mesh = gf::load_mesh(a.mesh_path, fmt, unit_scale);

  gf::ForceMapParams params;
  params.com = parse_vec3(a.com, unit_scale);
  params.mass = parse_mass(a.mass);
  params.mu = a.mu;
  params.spacing = parse_length(a.spacing);
  if (const char* env = std::getenv("GRASPFORCE_THREADS"))
    params.threads = std::max(1, std::atoi(env));

  gf::ForceMap map = gf::compute_force_map(mesh, params);
  if (a.no_timestamp)
    for (auto& e : map.entries) e.solve_ms = 0;

  std::ostringstream os;
  if (a.out.size() > 5 && a.out.substr(a.out.size() - 5) == ".json")
    gf::export_map_json(os, map);
  else
    gf::export_map_csv(os, map);
  write_file(a.out, os.str());

  Manifest manifest("map", a.no_timestamp);
  manifest.add_input(a.mesh_path, mesh_bytes);
  manifest.set_config({{"units", a.units},
                       {"com", a.com},
                       {"mass_kg", params.mass},
                       {"mu", params.mu},
                       {"spacing_m", params.spacing},
                       {"entries", map.entries.size()},
                       {"global_min_N", map.global_min}});
  manifest.write_next_to(a.out);
  return 0;
}

struct SimArgs {
  std::string mode, speed = "1mm/s", out;
  unsigned seed = 0;
  std::string mass = "0.2kg";
  double mu = 0.5;
  double latency = 0.1;
  double duration = 0;
  double dt = 1e-3;
  double initial_force = 2.0;
  bool no_timestamp = false;
};

int run_sim(const SimArgs& a) {
  gf::SimObject obj;
  obj.mass = parse_mass(a.mass);
  obj.mu = a.mu;

  gf::ControllerConfig ctl;
  if (a.mode == "preset") ctl.mode = gf::ControlMode::PRESET;
  else if (a.mode == "feedback") ctl.mode = gf::ControlMode::FEEDBACK;
  else if (a.mode == "prediction") ctl.mode = gf::ControlMode::PREDICTION;
  else throw gf::DomainError("sim: --mode must be preset, feedback or prediction");
  ctl.lift_speed = parse_speed(a.speed);
  ctl.seed = a.seed;
  ctl.latency = a.latency;
  ctl.initial_force = a.initial_force;

  const double duration =
      a.duration > 0 ? a.duration
                     : ctl.reach_duration + obj.clearance / ctl.lift_speed +
                           ctl.hold_duration + 0.5;
  const gf::EpisodeTrace trace = gf::simulate_lift(obj, ctl, duration, a.dt);

  std::ostringstream os;
  trace.write_csv(os);
  emit(a.out, os.str());

  if (!a.out.empty() && a.out != "-") {
    Manifest manifest("sim", a.no_timestamp);
    manifest.set_config({{"mode", a.mode},
                         {"speed_mps", ctl.lift_speed},
                         {"seed", a.seed},
                         {"mass_kg", obj.mass},
                         {"mu", obj.mu},
                         {"latency_s", ctl.latency},
                         {"success", trace.success},
                         {"failure", trace.failure}});
    manifest.write_next_to(a.out);
  }
  return 0;  // a failed episode is still a valid simulation result
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grasp-force prediction toolkit for two-finger soft grippers"};
  app.require_subcommand(1);

  ContactArgs contact;
  auto* c = app.add_subcommand("contact", "limit-surface curves for a soft contact");
  c->add_option("--k", contact.k, "pressure-distribution shape coefficient");
  c->add_option("--mu", contact.mu, "friction coefficient");
  c->add_option("--Fn", contact.Fn, "normal force (N; bare value = SI)");
  c->add_option("--R", contact.R, "patch radius (m/mm; bare = SI; default power law)");
  c->add_option("--c", contact.c, "contact coefficient (m; bare = SI)");
  c->add_option("--gamma", contact.gamma, "power-law exponent");
  c->add_option("--samples", contact.samples, "curve sample count");
  c->add_option("--dmax", contact.dmax, "largest d_c/R on the curve");
  c->add_option("--curve", contact.curve_path, "output CSV for the torque curve");
  c->add_option("--family", contact.family_dir, "directory for the k-family curves");
  c->add_flag("--no-timestamp", contact.no_timestamp, "omit timings from the manifest");

  std::string solve_problem, solve_out;
  bool solve_nt = false;
  auto* s = app.add_subcommand("solve", "minimum grasp force for a required wrench");
  s->add_option("problem", solve_problem, "problem JSON file")->required();
  s->add_option("--out", solve_out, "output JSON path (default stdout)");
  s->add_flag("--no-timestamp", solve_nt, "omit timings from the manifest");

  std::string com_snapshots, com_out;
  bool com_nt = false;
  auto* m = app.add_subcommand("com", "gravity and center of mass from feedback");
  m->add_option("snapshots", com_snapshots, "JSON list of feedback snapshots")->required();
  m->add_option("--out", com_out, "output JSON path (default stdout)");
  m->add_flag("--no-timestamp", com_nt, "omit timings from the manifest");

  MapArgs map;
  auto* mp = app.add_subcommand("map", "minimum-force map over a mesh");
  mp->add_option("--mesh", map.mesh_path, "OBJ or STL mesh")->required();
  mp->add_option("--format", map.format, "obj|stl (default from extension)");
  mp->add_option("--units", map.units, "mesh and com units: m|mm")->required();
  mp->add_option("--com", map.com, "center of mass x,y,z in mesh units")->required();
  mp->add_option("--mass", map.mass, "object mass with suffix, e.g. 0.5kg")->required();
  mp->add_option("--mu", map.mu, "friction coefficient");
  mp->add_option("--spacing", map.spacing, "grid spacing with suffix, e.g. 5mm")->required();
  mp->add_option("--out", map.out, "output path (.csv or .json)")->required();
  mp->add_flag("--no-timestamp", map.no_timestamp, "zero timings in outputs");

  SimArgs sim;
  auto* sm = app.add_subcommand("sim", "synthetic reach-lift-hold episode");
  sm->add_option("--mode", sim.mode, "preset|feedback|prediction")->required();
  sm->add_option("--speed", sim.speed, "lift speed with suffix, e.g. 10mm/s");
  sm->add_option("--seed", sim.seed, "RNG seed");
  sm->add_option("--mass", sim.mass, "object mass with suffix");
  sm->add_option("--mu", sim.mu, "friction coefficient");
  sm->add_option("--latency", sim.latency, "sensor latency in seconds");
  sm->add_option("--duration", sim.duration, "episode length in seconds");
  sm->add_option("--dt", sim.dt, "time step in seconds");
  sm->add_option("--initial-force", sim.initial_force, "reach-phase force in N");
  sm->add_option("--out", sim.out, "trace CSV path (default stdout)");
  sm->add_flag("--no-timestamp", sim.no_timestamp, "omit timings from the manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*c) return run_contact(contact);
    if (*s) return run_solve(solve_problem, solve_out, solve_nt);
    if (*m) return run_com(com_snapshots, com_out, com_nt);
    if (*mp) return run_map(map);
    if (*sm) return run_sim(sim);
  } catch (const gf::InfeasibleGraspError& e) {
    std::cout << json{{"error", e.what()}}.dump(2) << "\n";
    return 2;
  } catch (const gf::UngraspableError& e) {
    std::cout << json{{"error", e.what()}, {"best_residual", e.best_residual}}.dump(2)
              << "\n";
    return 2;
  } catch (const gf::NonConvergenceError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const gf::QuadratureError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const gf::ParseError& e) {
    std::cerr << "input error at byte " << e.byte_offset << ": " << e.what() << "\n";
    return 1;
  } catch (const gf::DomainError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const gf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

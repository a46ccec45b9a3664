#ifndef GRASPFORCE_MESH_HPP
#define GRASPFORCE_MESH_HPP

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "graspforce/wrench.hpp"

namespace graspforce {

enum class MeshFormat { AUTO, OBJ, STL };

/// Indexed triangle mesh with per-face unit normals. Watertightness is not
/// required; the grasp sampler tolerates open meshes.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Vec3> face_normals;

  Vec3 bbox_min() const;
  Vec3 bbox_max() const;
  void translate(const Vec3& offset);
};

/// Loads an OBJ or STL mesh (format from the extension unless forced),
/// scaling every coordinate by `unit_scale` (1e-3 for millimeter files).
/// Malformed input raises ParseError with the offending byte offset.
Mesh load_mesh(const std::filesystem::path& path, MeshFormat format = MeshFormat::AUTO,
               double unit_scale = 1.0);

/// Parses mesh data already in memory; `name` only labels error messages.
Mesh parse_obj(const std::string& text, double unit_scale = 1.0);
Mesh parse_stl(const std::string& bytes, double unit_scale = 1.0);

}  // namespace graspforce

#endif  // GRASPFORCE_MESH_HPP

#include "graspforce/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "graspforce/errors.hpp"

namespace graspforce {

Vec3 Mesh::bbox_min() const {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  for (const auto& v : vertices) lo = lo.cwiseMin(v);
  return lo;
}

Vec3 Mesh::bbox_max() const {
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
  for (const auto& v : vertices) hi = hi.cwiseMax(v);
  return hi;
}

void Mesh::translate(const Vec3& offset) {
  for (auto& v : vertices) v += offset;
}

namespace {

Vec3 face_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double len = n.norm();
  return len > 0 ? Vec3(n / len) : Vec3::UnitZ();
}

void finalize(Mesh& mesh, std::size_t offset_of_end) {
  if (mesh.triangles.empty())
    throw ParseError("mesh has no faces", offset_of_end);
  mesh.face_normals.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles)
    mesh.face_normals.push_back(
        face_normal(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]));
}

// Resolves an OBJ index (1-based, or negative = from the end).
int resolve_obj_index(long idx, std::size_t n_vertices, std::size_t offset) {
  long resolved = idx > 0 ? idx - 1 : static_cast<long>(n_vertices) + idx;
  if (resolved < 0 || resolved >= static_cast<long>(n_vertices))
    throw ParseError("OBJ face index out of range", offset);
  return static_cast<int>(resolved);
}

}  // namespace

Mesh parse_obj(const std::string& text, double unit_scale) {
  Mesh mesh;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string line = text.substr(pos, eol - pos);
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z()))
        throw ParseError("OBJ vertex needs three coordinates", pos);
      mesh.vertices.push_back(v * unit_scale);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        // accept v, v/vt, v//vn, v/vt/vn
        const std::size_t slash = tok.find('/');
        const std::string head = tok.substr(0, slash);
        char* end = nullptr;
        const long raw = std::strtol(head.c_str(), &end, 10);
        if (end == head.c_str() || *end != '\0')
          throw ParseError("OBJ face has a non-numeric vertex index", pos);
        idx.push_back(resolve_obj_index(raw, mesh.vertices.size(), pos));
      }
      if (idx.size() < 3)
        throw ParseError("OBJ face needs at least three vertices", pos);
      for (std::size_t i = 1; i + 1 < idx.size(); ++i)  // fan-triangulate
        mesh.triangles.push_back({idx[0], idx[i], idx[i + 1]});
    }
    pos = eol + 1;
  }
  finalize(mesh, text.size());
  return mesh;
}

namespace {

Mesh parse_stl_ascii(const std::string& text, double unit_scale) {
  Mesh mesh;
  std::istringstream in(text);
  std::string tok;
  std::vector<Vec3> tri;
  while (in >> tok) {
    if (tok == "vertex") {
      Vec3 v;
      if (!(in >> v.x() >> v.y() >> v.z())) {
        const auto pos = in.tellg();
        throw ParseError("STL vertex needs three coordinates",
                         pos < 0 ? text.size() : static_cast<std::size_t>(pos));
      }
      tri.push_back(v * unit_scale);
      if (tri.size() == 3) {
        const int base = static_cast<int>(mesh.vertices.size());
        mesh.vertices.insert(mesh.vertices.end(), tri.begin(), tri.end());
        mesh.triangles.push_back({base, base + 1, base + 2});
        tri.clear();
      }
    }
  }
  if (!tri.empty())
    throw ParseError("ASCII STL ends mid-facet", text.size());
  finalize(mesh, text.size());
  return mesh;
}

float read_f32(const std::string& b, std::size_t off) {
  float f;
  std::memcpy(&f, b.data() + off, sizeof(float));
  return f;
}

Mesh parse_stl_binary(const std::string& bytes, double unit_scale) {
  if (bytes.size() < 84)
    throw ParseError("binary STL truncated before the triangle count", bytes.size());
  std::uint32_t count;
  std::memcpy(&count, bytes.data() + 80, 4);
  const std::size_t expected = 84 + static_cast<std::size_t>(count) * 50;
  if (bytes.size() < expected)
    throw ParseError("binary STL truncated inside the triangle records", bytes.size());

  Mesh mesh;
  mesh.vertices.reserve(count * 3);
  mesh.triangles.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t rec = 84 + static_cast<std::size_t>(i) * 50;
    const int base = static_cast<int>(mesh.vertices.size());
    for (int v = 0; v < 3; ++v) {
      const std::size_t off = rec + 12 + v * 12;  // skip the record normal
      mesh.vertices.emplace_back(read_f32(bytes, off) * unit_scale,
                                 read_f32(bytes, off + 4) * unit_scale,
                                 read_f32(bytes, off + 8) * unit_scale);
    }
    mesh.triangles.push_back({base, base + 1, base + 2});
  }
  finalize(mesh, bytes.size());
  return mesh;
}

bool looks_like_ascii_stl(const std::string& bytes) {
  // "solid" prefix is necessary but not sufficient; require a "facet" token.
  std::size_t i = 0;
  while (i < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[i]))) ++i;
  if (bytes.compare(i, 5, "solid") != 0) return false;
  return bytes.find("facet") != std::string::npos;
}

}  // namespace

Mesh parse_stl(const std::string& bytes, double unit_scale) {
  return looks_like_ascii_stl(bytes) ? parse_stl_ascii(bytes, unit_scale)
                                     : parse_stl_binary(bytes, unit_scale);
}

Mesh load_mesh(const std::filesystem::path& path, MeshFormat format, double unit_scale) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open mesh file: " + path.string(), 0);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (format == MeshFormat::AUTO) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".obj")
      format = MeshFormat::OBJ;
    else if (ext == ".stl")
      format = MeshFormat::STL;
    else
      throw ParseError("unknown mesh extension: " + path.string(), 0);
  }
  return format == MeshFormat::OBJ ? parse_obj(bytes, unit_scale)
                                   : parse_stl(bytes, unit_scale);
}

}  // namespace graspforce

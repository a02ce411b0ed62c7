#pragma once

#include <algorithm>
#include <cctype>
#include <cstring>
#include <map>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "reorient/geometry.hpp"

namespace reorient {

/// ASCII OBJ, triangles only, 1-based indices. Texture/normal references in
/// `f` records ("v/vt/vn") are accepted and ignored.
inline TriMesh parse_obj(std::istream& in, const std::string& name = "<stream>") {
  TriMesh mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z()))
        throw Error(ErrorCode::InvalidMesh, name + ":" + std::to_string(line_no) + ": bad vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        const int i = std::stoi(tok.substr(0, tok.find('/')));
        if (i <= 0)
          throw Error(ErrorCode::InvalidMesh, name + ":" + std::to_string(line_no) + ": index must be 1-based");
        idx.push_back(i - 1);
      }
      if (idx.size() != 3)
        throw Error(ErrorCode::InvalidMesh, name + ":" + std::to_string(line_no) + ": only triangles are supported");
      mesh.triangles.push_back({idx[0], idx[1], idx[2]});
    }
  }
  if (!mesh.indices_in_range()) throw Error(ErrorCode::InvalidMesh, name + ": face index out of range");
  return mesh;
}

/// Binary STL. Identical vertex positions are welded so closed solids come back watertight.
inline TriMesh parse_stl(std::istream& in, const std::string& name = "<stream>") {
  char header[80];
  std::uint32_t count = 0;
  if (!in.read(header, 80) || !in.read(reinterpret_cast<char*>(&count), 4))
    throw Error(ErrorCode::InvalidMesh, name + ": truncated STL header");
  TriMesh mesh;
  std::map<std::array<float, 3>, int> weld;
  for (std::uint32_t i = 0; i < count; ++i) {
    char rec[50];
    if (!in.read(rec, 50)) throw Error(ErrorCode::InvalidMesh, name + ": truncated STL triangle " + std::to_string(i));
    std::array<int, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      std::array<float, 3> v{};
      std::memcpy(v.data(), rec + 12 + 12 * k, 12);
      auto [it, inserted] = weld.emplace(v, static_cast<int>(mesh.vertices.size()));
      if (inserted) mesh.vertices.emplace_back(v[0], v[1], v[2]);
      tri[k] = it->second;
    }
    mesh.triangles.push_back(tri);
  }
  return mesh;
}

inline TriMesh load_mesh(const std::filesystem::path& path, double scale = 1.0) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open mesh file " + path.string());
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  TriMesh mesh;
  if (ext == ".obj") mesh = parse_obj(in, path.string());
  else if (ext == ".stl") mesh = parse_stl(in, path.string());
  else throw Error(ErrorCode::InvalidMesh, "unsupported mesh extension: " + path.string());
  return scale == 1.0 ? mesh : mesh.scaled(scale);
}

inline void write_stl(std::ostream& out, const TriMesh& mesh) {
  char header[80] = {};
  std::strncpy(header, "reorient binary stl", sizeof(header) - 1);
  out.write(header, 80);
  const auto count = static_cast<std::uint32_t>(mesh.triangles.size());
  out.write(reinterpret_cast<const char*>(&count), 4);
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Triangle t = mesh.triangle(i);
    const Vec3 n = t.normal();
    float rec[12] = {float(n.x()), float(n.y()), float(n.z())};
    const Vec3* corners[3] = {&t.a, &t.b, &t.c};
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j) rec[3 + 3 * k + j] = static_cast<float>((*corners[k])[j]);
    out.write(reinterpret_cast<const char*>(rec), 48);
    const std::uint16_t attr = 0;
    out.write(reinterpret_cast<const char*>(&attr), 2);
  }
}

/// Writes named groups into one OBJ; vertex indices are global across groups.
class ObjWriter {
 public:
  explicit ObjWriter(std::ostream& out) : out_(out) { out_ << std::setprecision(12); }

  void add(const std::string& group, const TriMesh& mesh) {
    out_ << "o " << group << '\n';
    for (const auto& v : mesh.vertices) out_ << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& t : mesh.triangles)
      out_ << "f " << t[0] + base_ + 1 << ' ' << t[1] + base_ + 1 << ' ' << t[2] + base_ + 1 << '\n';
    base_ += static_cast<int>(mesh.vertices.size());
  }

 private:
  std::ostream& out_;
  int base_ = 0;
};

inline void write_obj(std::ostream& out, const TriMesh& mesh) { ObjWriter(out).add("mesh", mesh); }

inline void write_obj(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_obj(out, mesh);
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace reorient

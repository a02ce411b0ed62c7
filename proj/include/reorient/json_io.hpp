#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "reorient/geometry.hpp"

namespace reorient {

using Json = nlohmann::json;

inline Json vec_to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::Schema, "expected a 3-vector, got " + j.dump());
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Vec2 vec2_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::Schema, "expected a 2-vector, got " + j.dump());
  return {j[0].get<double>(), j[1].get<double>()};
}

/// {"p": [x, y, z], "R": [9 values, row-major]}
inline Json pose_to_json(const Pose& pose) {
  Json r = Json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r.push_back(pose.rotation(i, k));
  return {{"p", vec_to_json(pose.position)}, {"R", r}};
}

inline Pose pose_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("p") || !j.contains("R"))
    throw Error(ErrorCode::Schema, "pose needs \"p\" and \"R\": " + j.dump());
  Pose pose;
  pose.position = vec_from_json(j.at("p"));
  const Json& r = j.at("R");
  if (!r.is_array() || r.size() != 9) throw Error(ErrorCode::Schema, "pose \"R\" must have 9 entries");
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) pose.rotation(i, k) = r[3 * i + k].get<double>();
  if (!pose.is_valid(1e-6)) throw Error(ErrorCode::Schema, "pose rotation is not a proper rotation: " + j.dump());
  return pose;
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::Schema, path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

/// FNV-1a over raw bytes; used as a cache key.
class Fnv1a {
 public:
  void add(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 1099511628211ull;
    }
  }
  void add(double v) { add(&v, sizeof v); }
  void add(std::uint64_t v) { add(&v, sizeof v); }
  void add(const std::string& s) { add(s.data(), s.size()); }

  std::uint64_t value() const { return hash_; }

  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 0; i < 16; ++i) out[15 - i] = digits[(hash_ >> (4 * i)) & 0xf];
    return out;
  }

 private:
  std::uint64_t hash_ = 14695981039346656037ull;
};

}  // namespace reorient

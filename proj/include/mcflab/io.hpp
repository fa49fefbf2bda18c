#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "mcflab/measure.hpp"

namespace mcflab {

using nlohmann::json;

// OBJ subset: `v x y z`, `f i j k` (triangles only), `l i j` (curve segments),
// comments and blank lines.  Indices are 1-based; negative (relative) indices
// and other element types are rejected with the offending line number.
inline Mesh read_obj(std::istream& in, const std::string& name = "<stream>") {
  Mesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments and trailing CR
    if (const size_t h = line.find('#'); h != std::string::npos) line.erase(h);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;

    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p[0] >> p[1] >> p[2]))
        throw parse_error(name + ": vertex needs three coordinates", lineno);
      double extra;
      if (ls >> extra) throw parse_error(name + ": vertex has more than three coordinates", lineno);
      if (!finite(p)) throw parse_error(name + ": non-finite vertex coordinate", lineno);
      mesh.vertices.push_back(p);
    } else if (tag == "f" || tag == "l") {
      std::vector<long> idx;
      std::string tok;
      while (ls >> tok) {
        // accept f v, f v/vt, f v/vt/vn; only the vertex index is used
        const size_t slash = tok.find('/');
        if (slash != std::string::npos) tok.erase(slash);
        size_t used = 0;
        long v = 0;
        try {
          v = std::stol(tok, &used);
        } catch (const std::exception&) {
          throw parse_error(name + ": bad index '" + tok + "'", lineno);
        }
        if (used != tok.size()) throw parse_error(name + ": bad index '" + tok + "'", lineno);
        if (v < 0) throw parse_error(name + ": negative (relative) indices are not supported", lineno);
        if (v == 0) throw parse_error(name + ": OBJ indices are 1-based", lineno);
        if (v > (long)mesh.vertices.size())
          throw parse_error(name + cat(": index ", v, " exceeds vertex count ",
                                       mesh.vertices.size()), lineno);
        idx.push_back(v - 1);
      }
      if (tag == "f") {
        if (idx.size() != 3)
          throw parse_error(name + cat(": face has ", idx.size(), " vertices; only triangles are supported"),
                            lineno);
        mesh.triangles.push_back({(int)idx[0], (int)idx[1], (int)idx[2]});
      } else {
        if (idx.size() < 2) throw parse_error(name + ": line element needs at least two vertices", lineno);
        for (size_t k = 0; k + 1 < idx.size(); ++k)
          mesh.segments.push_back({(int)idx[k], (int)idx[k + 1]});
      }
    } else if (tag == "vn" || tag == "vt" || tag == "s" || tag == "o" || tag == "g" ||
               tag == "mtllib" || tag == "usemtl") {
      continue;  // tolerated and ignored
    } else {
      throw parse_error(name + ": unsupported element '" + tag + "'", lineno);
    }
  }
  if (mesh.vertices.empty()) throw parse_error(name + ": no vertices");
  if (mesh.triangles.empty() && mesh.segments.empty())
    throw parse_error(name + ": no faces or line elements");
  return mesh;
}

inline Mesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path + "'");
  return read_obj(in, path);
}

// Writes coordinates with %.17g so geometry round-trips bitwise.
inline void write_obj(std::ostream& out, const Mesh& mesh) {
  char buf[96];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v[0], v[1], v[2]);
    out << buf;
  }
  for (const Tri& f : mesh.triangles)
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  for (const Seg& s : mesh.segments) out << "l " << s[0] + 1 << ' ' << s[1] + 1 << '\n';
}

inline void write_obj(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot open '" + path + "' for writing");
  write_obj(out, mesh);
  if (!out.good()) throw parse_error("write failed for '" + path + "'");
}

// Measure manifest:
//   { "components": [ { "mesh": "relative/or/absolute.obj", "multiplicity": 2 }, ... ] }
// Mesh paths resolve relative to the manifest location.
inline WeightedMeasure read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw parse_error(cat(path, ": ", e.what()));
  }
  if (!j.is_object() || !j.contains("components") || !j["components"].is_array() ||
      j["components"].empty())
    throw parse_error(path + ": manifest needs a non-empty 'components' array");

  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  WeightedMeasure mu;
  for (const json& c : j["components"]) {
    if (!c.is_object() || !c.contains("mesh"))
      throw parse_error(path + ": each component needs a 'mesh' path");
    WeightedComponent wc;
    if (c.contains("multiplicity")) {
      if (!c["multiplicity"].is_number_integer() || c["multiplicity"].get<long>() < 1)
        throw parse_error(path + ": multiplicity must be a positive integer");
      wc.multiplicity = (int)c["multiplicity"].get<long>();
    }
    const std::filesystem::path mesh_path = base / c["mesh"].get<std::string>();
    wc.mesh = read_obj(mesh_path.string());
    mu.components.push_back(std::move(wc));
  }
  return mu;
}

// Atomic-ish JSON dump: write to a sibling temp file, then rename.
inline void write_json(const std::string& path, const json& j) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw parse_error("cannot open '" + tmp + "' for writing");
    out << j.dump(2) << '\n';
    if (!out.good()) throw parse_error("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw parse_error(cat(path, ": ", e.what()));
  }
}

}  // namespace mcflab

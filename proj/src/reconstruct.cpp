#include "circcal/reconstruct.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <Eigen/Geometry>

#include "circcal/error.hpp"
#include "circcal/parallel.hpp"

namespace circcal {

OccupancyVolume BuildOccupancy(const CostEvaluator& evaluator, const RigParams& theta, int workers) {
  const auto evidence = evaluator.Evidence(theta, workers);
  OccupancyVolume vol;
  vol.grid = evaluator.grid();
  vol.occupancy.resize(evidence.size());
  for (std::size_t i = 0; i < evidence.size(); ++i) vol.occupancy[i] = evidence[i].pf / (evidence[i].pf + evidence[i].pb);
  return vol;
}

OccupancyVolume BuildOccupancy(const RigParams& theta, const std::vector<ProbabilityImage>& views,
                               const VoxelGrid& grid, const CameraRig& rig, const CostConfig& config, int workers) {
  return BuildOccupancy(CostEvaluator(views, grid, rig, config), theta, workers);
}

namespace mc {

namespace {

Vec3 CornerPos(int c) { return Vec3(c & 1, (c >> 1) & 1, (c >> 2) & 1); }

std::array<EdgeDef, 12> MakeEdges() {
  std::array<EdgeDef, 12> edges{};
  for (int axis = 0; axis < 3; ++axis) {
    int slot = 0;
    for (int c = 0; c < 8; ++c)
      if (!((c >> axis) & 1)) edges[4 * axis + slot++] = {c, axis};
  }
  return edges;
}

int EdgeBetween(int a, int b) {
  const int diff = a ^ b;
  const int axis = std::countr_zero(static_cast<unsigned>(diff));
  const int low = std::min(a, b);
  const auto& edges = Edges();
  for (int e = 4 * axis; e < 4 * axis + 4; ++e)
    if (edges[e].corner == low) return e;
  return -1;
}

// Bit 2 * axis + side for each of the two cell faces containing edge e.
int FaceMask(int e) {
  const auto& def = Edges()[e];
  int mask = 0;
  for (int axis = 0; axis < 3; ++axis)
    if (axis != def.axis) mask |= 1 << (2 * axis + ((def.corner >> axis) & 1));
  return mask;
}

Vec3 EdgeMid(int e) {
  const auto& def = Edges()[e];
  Vec3 p = CornerPos(def.corner);
  p[def.axis] += 0.5;
  return p;
}

std::vector<std::array<int, 3>> Triangulate(int mask) {
  auto inside = [mask](int c) { return ((mask >> c) & 1) != 0; };
  std::array<int, 12> next;
  next.fill(-1);

  // Orients a face segment so that (face normal x direction) points to the
  // outside region; `ref` is a corner on the segment's cut-off side.
  auto add_segment = [&](int e1, int e2, const Vec3& normal, int ref) {
    const Vec3 d = EdgeMid(e2) - EdgeMid(e1);
    const double side = normal.cross(d).dot(CornerPos(ref) - EdgeMid(e1));
    if ((side < 0.0) != inside(ref)) std::swap(e1, e2);
    next[e1] = e2;
  };

  for (int axis = 0; axis < 3; ++axis) {
    const int b = (axis + 1) % 3 < (axis + 2) % 3 ? (axis + 1) % 3 : (axis + 2) % 3;
    const int c = 3 - axis - b;
    for (int side = 0; side < 2; ++side) {
      Vec3 normal = Vec3::Zero();
      normal[axis] = side ? 1.0 : -1.0;
      const std::array<int, 4> q = {(side << axis), (side << axis) | (1 << b), (side << axis) | (1 << b) | (1 << c),
                                    (side << axis) | (1 << c)};
      std::array<int, 4> fe{};
      std::vector<int> crossing;
      for (int i = 0; i < 4; ++i) {
        fe[i] = EdgeBetween(q[i], q[(i + 1) % 4]);
        if (inside(q[i]) != inside(q[(i + 1) % 4])) crossing.push_back(i);
      }
      if (crossing.size() == 2) {
        add_segment(fe[crossing[0]], fe[crossing[1]], normal, q[0]);
      } else if (crossing.size() == 4) {
        // Ambiguous face: always cut off the corners of the q0-q2 diagonal.
        add_segment(fe[3], fe[0], normal, q[0]);
        add_segment(fe[1], fe[2], normal, q[2]);
      }
    }
  }

  std::vector<std::array<int, 3>> tris;
  std::array<bool, 12> used{};
  for (int start = 0; start < 12; ++start) {
    if (next[start] < 0 || used[start]) continue;
    std::vector<int> loop;
    for (int e = start; !used[e]; e = next[e]) {
      used[e] = true;
      loop.push_back(e);
    }
    // Fan from the smallest edge whose diagonals all leave every cell face, so
    // no triangle lies flat in a face shared with the neighbouring cell. The
    // choice depends only on the loop's edge set, hence on the complement too.
    const std::size_t n = loop.size();
    std::size_t apex = 0;
    int best = 12;
    for (std::size_t a = 0; a < n; ++a) {
      bool ok = true;
      for (std::size_t d = 2; d + 1 < n && ok; ++d) ok = (FaceMask(loop[a]) & FaceMask(loop[(a + d) % n])) == 0;
      if (ok && loop[a] < best) {
        best = loop[a];
        apex = a;
      }
    }
    for (std::size_t i = 1; i + 1 < n; ++i) tris.push_back({loop[apex], loop[(apex + i) % n], loop[(apex + i + 1) % n]});
  }
  return tris;
}

}  // namespace

const std::array<EdgeDef, 12>& Edges() {
  static const std::array<EdgeDef, 12> edges = MakeEdges();
  return edges;
}

const std::array<std::vector<std::array<int, 3>>, 256>& TriangleTable() {
  static const auto table = [] {
    std::array<std::vector<std::array<int, 3>>, 256> t;
    for (int mask = 0; mask < 256; ++mask) t[mask] = Triangulate(mask);
    return t;
  }();
  return table;
}

}  // namespace mc

TriangleMesh ExtractMesh(const OccupancyVolume& volume, double iso, int workers) {
  if (!(iso > 0.0 && iso < 1.0)) throw InvalidParameter("iso level must lie in (0, 1)");
  const VoxelGrid& g = volume.grid;
  CheckGrid(g);
  if (volume.occupancy.size() != g.Count()) throw InvalidParameter("occupancy size does not match its grid");
  TriangleMesh mesh;
  const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
  if (nx < 2 || ny < 2 || nz < 2) return mesh;

  const auto& edges = mc::Edges();
  const auto& table = mc::TriangleTable();
  const std::array<std::size_t, 3> stride = {1, static_cast<std::size_t>(nx), static_cast<std::size_t>(nx) * ny};
  const auto& occ = volume.occupancy;

  using EdgeKey = std::uint64_t;  // 3 * lattice index + axis
  std::vector<std::vector<std::array<EdgeKey, 3>>> slabs(static_cast<std::size_t>(nz - 1));
  ParallelFor(slabs.size(), workers, [&](std::size_t kz) {
    const int k = static_cast<int>(kz);
    auto& out = slabs[kz];
    for (int j = 0; j + 1 < ny; ++j) {
      for (int i = 0; i + 1 < nx; ++i) {
        const std::size_t base = g.FlatIndex(i, j, k);
        int mask = 0;
        for (int c = 0; c < 8; ++c) {
          const std::size_t idx = base + (c & 1) * stride[0] + ((c >> 1) & 1) * stride[1] + ((c >> 2) & 1) * stride[2];
          if (occ[idx] > iso) mask |= 1 << c;
        }
        for (const auto& tri : table[mask]) {
          std::array<EdgeKey, 3> keys{};
          for (int v = 0; v < 3; ++v) {
            const auto& e = edges[tri[v]];
            const std::size_t c = e.corner;
            const std::size_t p = base + (c & 1) * stride[0] + ((c >> 1) & 1) * stride[1] + ((c >> 2) & 1) * stride[2];
            keys[v] = 3 * static_cast<EdgeKey>(p) + e.axis;
          }
          out.push_back(keys);
        }
      }
    }
  });

  std::unordered_map<EdgeKey, std::uint32_t> vertex_of;
  auto vertex = [&](EdgeKey key) {
    auto [it, fresh] = vertex_of.try_emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
    if (fresh) {
      const std::size_t p = key / 3;
      const int axis = static_cast<int>(key % 3);
      const int i = static_cast<int>(p % nx), j = static_cast<int>((p / nx) % ny), k = static_cast<int>(p / stride[2]);
      const double va = occ[p], vb = occ[p + stride[axis]];
      // Clamped away from the endpoints so distinct edges never share a position.
      const double t = std::clamp((iso - va) / (vb - va), 1e-7, 1.0 - 1e-7);
      Vec3 pos = g.Center(i, j, k);
      pos[axis] += t * g.spacing;
      mesh.vertices.push_back(pos);
    }
    return it->second;
  };

  for (const auto& slab : slabs) {
    for (const auto& keys : slab) {
      const std::array<std::uint32_t, 3> tri = {vertex(keys[0]), vertex(keys[1]), vertex(keys[2])};
      const Vec3& a = mesh.vertices[tri[0]];
      const double area = 0.5 * (mesh.vertices[tri[1]] - a).cross(mesh.vertices[tri[2]] - a).norm();
      if (area >= kDegenerateArea) mesh.triangles.push_back(tri);
    }
  }
  return mesh;
}

bool IsWatertight(const TriangleMesh& mesh) {
  if (mesh.triangles.empty()) return false;
  // Directed edge -> count; a closed oriented 2-manifold uses each directed edge
  // once and its reverse once.
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) ++directed[{t[e], t[(e + 1) % 3]}];
  for (const auto& [edge, count] : directed) {
    if (count != 1) return false;
    auto rev = directed.find({edge.second, edge.first});
    if (rev == directed.end() || rev->second != 1) return false;
  }
  return true;
}

MeshMetrics Measure(const TriangleMesh& mesh) {
  MeshMetrics m;
  if (mesh.triangles.empty()) return m;
  for (const auto& t : mesh.triangles)
    for (auto idx : t)
      if (idx >= mesh.vertices.size()) throw InvalidParameter("mesh triangle references a missing vertex");

  Vec3 ref = Vec3::Zero();
  for (const auto& v : mesh.vertices) ref += v;
  ref /= static_cast<double>(mesh.vertices.size());

  std::vector<double> areas, volumes;
  areas.reserve(mesh.triangles.size());
  volumes.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const Vec3 a = mesh.vertices[t[0]] - ref, b = mesh.vertices[t[1]] - ref, c = mesh.vertices[t[2]] - ref;
    areas.push_back(0.5 * (b - a).cross(c - a).norm());
    volumes.push_back(a.dot(b.cross(c)) / 6.0);
  }
  m.surface_area = PairwiseSum(areas);
  m.volume = std::abs(PairwiseSum(volumes));
  m.watertight = IsWatertight(mesh);
  return m;
}

void WritePly(const std::filesystem::path& path, const TriangleMesh& mesh, PlyFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out << "ply\n"
      << (format == PlyFormat::kAscii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n")
      << "comment units mm\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "element face " << mesh.triangles.size() << "\n"
      << "property list uchar int vertex_indices\n"
      << "end_header\n";
  if (format == PlyFormat::kAscii) {
    out.precision(9);
    for (const auto& v : mesh.vertices)
      out << static_cast<float>(v.x()) << ' ' << static_cast<float>(v.y()) << ' ' << static_cast<float>(v.z()) << '\n';
    for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  } else {
    static_assert(std::endian::native == std::endian::little, "binary PLY writer assumes a little-endian host");
    for (const auto& v : mesh.vertices) {
      const float xyz[3] = {static_cast<float>(v.x()), static_cast<float>(v.y()), static_cast<float>(v.z())};
      out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    }
    for (const auto& t : mesh.triangles) {
      const unsigned char n = 3;
      const std::int32_t idx[3] = {static_cast<std::int32_t>(t[0]), static_cast<std::int32_t>(t[1]),
                                   static_cast<std::int32_t>(t[2])};
      out.put(static_cast<char>(n));
      out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

std::size_t PlyTypeSize(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "float" || type == "int32" || type == "uint32" || type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  throw IoError("unsupported PLY property type '" + type + "'");
}

double ReadBinaryScalar(std::istream& in, const std::string& type) {
  char buf[8];
  const std::size_t n = PlyTypeSize(type);
  in.read(buf, static_cast<std::streamsize>(n));
  if (!in) throw IoError("truncated binary PLY body");
  auto as = [&]<typename T>(T) {
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return static_cast<double>(v);
  };
  if (type == "char" || type == "int8") return as(std::int8_t{});
  if (type == "uchar" || type == "uint8") return as(std::uint8_t{});
  if (type == "short" || type == "int16") return as(std::int16_t{});
  if (type == "ushort" || type == "uint16") return as(std::uint16_t{});
  if (type == "int" || type == "int32") return as(std::int32_t{});
  if (type == "uint" || type == "uint32") return as(std::uint32_t{});
  if (type == "float" || type == "float32") return as(float{});
  return as(double{});
}

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list = false;
  std::string count_type;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

}  // namespace

TriangleMesh ReadPly(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "ply") throw IoError(path.string() + " is not a PLY file");

  bool binary = false;
  std::vector<PlyElement> elements;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian")
        binary = true;
      else if (fmt != "ascii")
        throw IoError("unsupported PLY format '" + fmt + "'");
    } else if (word == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (word == "property") {
      if (elements.empty()) throw IoError("PLY property before any element");
      PlyProperty p;
      ls >> p.type;
      if (p.type == "list") {
        p.is_list = true;
        ls >> p.count_type >> p.type;
      }
      ls >> p.name;
      elements.back().properties.push_back(p);
    } else if (word == "end_header") {
      break;
    }
  }

  TriangleMesh mesh;
  for (const auto& e : elements) {
    for (std::size_t r = 0; r < e.count; ++r) {
      std::istringstream row;
      if (!binary) {
        if (!std::getline(in, line)) throw IoError("truncated ASCII PLY body");
        row.str(line);
      }
      auto scalar = [&](const std::string& type) {
        if (binary) return ReadBinaryScalar(in, type);
        double v;
        if (!(row >> v)) throw IoError("malformed ASCII PLY row");
        return v;
      };
      Vec3 xyz = Vec3::Zero();
      std::vector<std::uint32_t> indices;
      for (const auto& p : e.properties) {
        if (p.is_list) {
          const auto n = static_cast<std::size_t>(scalar(p.count_type));
          for (std::size_t k = 0; k < n; ++k) {
            const double v = scalar(p.type);
            if (p.name == "vertex_indices" || p.name == "vertex_index") indices.push_back(static_cast<std::uint32_t>(v));
          }
        } else {
          const double v = scalar(p.type);
          if (p.name == "x") xyz.x() = v;
          if (p.name == "y") xyz.y() = v;
          if (p.name == "z") xyz.z() = v;
        }
      }
      if (e.name == "vertex") {
        mesh.vertices.push_back(xyz);
      } else if (e.name == "face") {
        for (std::size_t k = 1; k + 1 < indices.size(); ++k) mesh.triangles.push_back({indices[0], indices[k], indices[k + 1]});
      }
    }
  }
  for (const auto& t : mesh.triangles)
    for (auto idx : t)
      if (idx >= mesh.vertices.size()) throw IoError("PLY face references a missing vertex");
  return mesh;
}

}  // namespace circcal

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "circcal/cost.hpp"
#include "circcal/voxelgrid.hpp"

namespace circcal {

/// Per-voxel foreground occupancy in [0, 1], flat grid order.
struct OccupancyVolume {
  VoxelGrid grid;
  std::vector<double> occupancy;
};

/// occupancy = Pf / (Pf + Pb) of the fused evidence at fixed rig parameters.
OccupancyVolume BuildOccupancy(const RigParams& theta, const std::vector<ProbabilityImage>& views,
                               const VoxelGrid& grid, const CameraRig& rig, const CostConfig& config = {},
                               int workers = 1);
OccupancyVolume BuildOccupancy(const CostEvaluator& evaluator, const RigParams& theta, int workers = 1);

struct TriangleMesh {
  std::vector<Vec3> vertices;                        // mm
  std::vector<std::array<std::uint32_t, 3>> triangles;  // counter-clockwise seen from outside

  bool Empty() const { return triangles.empty(); }
};

/// Triangles below this area (mm^2) are dropped during extraction.
inline constexpr double kDegenerateArea = 1e-12;

/// Marching-cubes isosurface through the voxel-center samples. Voxels with
/// occupancy > iso are inside; triangle normals point from inside to outside.
/// Shared grid edges yield shared vertices regardless of worker count.
TriangleMesh ExtractMesh(const OccupancyVolume& volume, double iso = 0.5, int workers = 1);

struct MeshMetrics {
  double volume = 0.0;        // mm^3, meaningful only when watertight
  double surface_area = 0.0;  // mm^2
  bool watertight = false;    // every edge shared by exactly two oppositely oriented triangles
};

MeshMetrics Measure(const TriangleMesh& mesh);

bool IsWatertight(const TriangleMesh& mesh);

enum class PlyFormat { kAscii, kBinaryLittleEndian };

void WritePly(const std::filesystem::path& path, const TriangleMesh& mesh, PlyFormat format = PlyFormat::kBinaryLittleEndian);
TriangleMesh ReadPly(const std::filesystem::path& path);

namespace mc {

/// Corner c of a cell sits at offset (c & 1, (c >> 1) & 1, (c >> 2) & 1).
/// Edge e = 4 * axis + slot joins corner kEdgeCorners[e][0] to kEdgeCorners[e][1]
/// along `axis`.
struct EdgeDef {
  int corner;  // low end
  int axis;
};
const std::array<EdgeDef, 12>& Edges();

/// Triangles (as local edge triples) for each of the 256 inside-corner masks.
const std::array<std::vector<std::array<int, 3>>, 256>& TriangleTable();

}  // namespace mc

}  // namespace circcal

#include "circcal/voxelgrid.hpp"

#include <cmath>
#include <sstream>

#include "circcal/error.hpp"

namespace circcal {

void CheckGrid(const VoxelGrid& grid) {
  if (!(grid.spacing > 0.0) || !std::isfinite(grid.spacing)) throw InvalidParameter("voxel spacing must be positive");
  for (int d : grid.dims)
    if (d < 1) throw InvalidParameter("voxel grid dimensions must be >= 1");
  if (!grid.origin.allFinite()) throw InvalidParameter("voxel grid origin must be finite");
}

VoxelGrid InitGrid(const Vec3& center, const Vec3& half_extent, const std::array<int, 3>& resolution) {
  if (!center.allFinite() || !half_extent.allFinite()) throw InvalidParameter("grid center/extent must be finite");
  for (int a = 0; a < 3; ++a) {
    if (!(half_extent[a] > 0.0)) throw InvalidParameter("grid half extent must be positive");
    if (resolution[a] < 1) throw InvalidParameter("grid resolution must be >= 1");
  }
  const double spacing = 2.0 * half_extent[0] / resolution[0];
  for (int a = 1; a < 3; ++a) {
    const double s = 2.0 * half_extent[a] / resolution[a];
    if (std::abs(s - spacing) > kIsotropyTolerance * spacing) {
      std::ostringstream msg;
      msg << "anisotropic grid: spacing " << s << " along axis " << a << " vs " << spacing << " along x";
      throw InvalidParameter(msg.str());
    }
  }
  VoxelGrid g;
  g.origin = center - half_extent;
  g.spacing = spacing;
  g.dims = resolution;
  return g;
}

Vec3 VoxelCenter(const VoxelGrid& grid, std::size_t index) {
  if (index >= grid.Count()) throw InvalidParameter("voxel index out of range");
  const std::size_t nx = grid.dims[0], ny = grid.dims[1];
  const int i = static_cast<int>(index % nx);
  const int j = static_cast<int>((index / nx) % ny);
  const int k = static_cast<int>(index / (nx * ny));
  return grid.Center(i, j, k);
}

}  // namespace circcal

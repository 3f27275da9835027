#pragma once

#include <array>
#include <cstddef>

#include "circcal/camera.hpp"

namespace circcal {

/// Axis-aligned lattice of cubic voxels. Flat indices are x-fastest:
/// index = i + nx * (j + ny * k).
struct VoxelGrid {
  Vec3 origin = Vec3::Zero();  // lower corner of voxel (0, 0, 0)
  double spacing = 1.0;        // edge length (mm)
  std::array<int, 3> dims{1, 1, 1};

  std::size_t Count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(dims[2]);
  }
  std::size_t FlatIndex(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
  }
  /// Center of lattice cell (i, j, k) along one axis.
  double AxisCenter(int axis, int index) const { return origin[axis] + (index + 0.5) * spacing; }
  Vec3 Center(int i, int j, int k) const { return {AxisCenter(0, i), AxisCenter(1, j), AxisCenter(2, k)}; }
  double VoxelVolume() const { return spacing * spacing * spacing; }
};

/// Relative tolerance on per-axis spacing agreement.
inline constexpr double kIsotropyTolerance = 1e-9;

/// Grid spanning [center - half_extent, center + half_extent] with
/// resolution[a] cells along axis a. Throws kInvalidParameter when the
/// requested cells are not cubic.
VoxelGrid InitGrid(const Vec3& center, const Vec3& half_extent, const std::array<int, 3>& resolution);

/// Throws kInvalidParameter when index >= Count().
Vec3 VoxelCenter(const VoxelGrid& grid, std::size_t index);

/// Validates spacing > 0 and dims >= 1.
void CheckGrid(const VoxelGrid& grid);

}  // namespace circcal

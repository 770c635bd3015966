#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "trapwave/geometry.hpp"
#include "trapwave/parallel.hpp"

namespace trapwave {

/*!
 * Cell-centred box: cell (i, j, k), 0-based, has its centre at
 * center - half_width + (index + 1/2) h. Half widths are rounded to whole
 * cells.
 */
struct GridSpec {
    double h = 0;
    Vec3 center = Vec3::Zero();
    Vec3 half_width = Vec3::Zero();

    static GridSpec cube(double h, double L) { return {h, Vec3::Zero(), Vec3::Constant(L)}; }
};

//! Active cell next to an obstacle cell.
struct BoundaryCell {
    std::size_t index = 0;
    //! Closest boundary point to the cell centre.
    Vec3 foot = Vec3::Zero();
    //! Unit normal at the foot, pointing into the obstacle.
    Vec3 normal = Vec3::Zero();
    int obstacle = 0;
};

//! Quadrature node on an obstacle surface.
struct SurfacePoint {
    Vec3 x = Vec3::Zero();
    //! Unit normal pointing into the obstacle.
    Vec3 normal = Vec3::Zero();
    //! Area weight.
    double weight = 0;
    int obstacle = 0;
};

//! Face between an active cell and an inactive neighbour (obstacle or outer ghost layer).
struct Face {
    std::size_t index = 0;
    int axis = 0;
    //! +1 or -1: the neighbour sits at index + sign * stride[axis].
    int sign = 1;
};

/*!
 * Masked Cartesian grid for the exterior problem.
 *
 * Arrays are padded by one ghost layer on each side; ghost cells and cells
 * whose centre lies in an obstacle are inactive and hold u = 0, which
 * realises the Dirichlet condition on the staircase boundary and on the box.
 */
class ExteriorGrid {
  public:
    //! Throws ResolutionTooCoarse when h >= gap / 8 or an obstacle spans fewer than 8 cells.
    ExteriorGrid(const Scene& scene, const GridSpec& spec);

    const Scene& scene() const { return scene_; }
    const GridSpec& spec() const { return spec_; }
    double h() const { return spec_.h; }
    double cell_volume() const { return spec_.h * spec_.h * spec_.h; }

    //! Real cells per axis.
    const std::array<int, 3>& cells() const { return n_; }
    const std::array<std::ptrdiff_t, 3>& strides() const { return stride_; }
    std::size_t padded_size() const { return mask_.size(); }

    //! Flat index of padded cell (i, j, k); real cells have 1 <= i <= n.
    std::size_t index(int i, int j, int k) const
    {
        return static_cast<std::size_t>(i * stride_[0] + j * stride_[1] + k);
    }
    std::array<int, 3> coords(std::size_t idx) const;
    Vec3 position(int i, int j, int k) const;
    Vec3 position(std::size_t idx) const;

    bool active(std::size_t idx) const { return mask_[idx] != 0; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    //! 1 for obstacle cells, 0 otherwise (ghost cells are not obstacle cells).
    bool obstacle(std::size_t idx) const { return obstacle_[idx] != 0; }

    std::size_t active_count() const { return active_count_; }
    std::size_t obstacle_count() const { return obstacle_count_; }

    const std::vector<BoundaryCell>& boundary_cells() const { return boundary_; }
    const std::vector<Face>& obstacle_faces() const { return obstacle_faces_; }
    const std::vector<Face>& wall_faces() const { return wall_faces_; }
    //! Area-weighted Fibonacci nodes on every obstacle surface (about four per h^2).
    const std::vector<SurfacePoint>& surface_points() const { return surface_; }

    /*!
     * Normal derivative d_n u at a surface node, n pointing into the obstacle.
     *
     * The staircase boundary sits up to one cell away from the true surface,
     * so one-sided differences at the wall are biased. Instead u is sampled at
     * distances 2h, 3h and 4h into the fluid and the interpolating quadratic
     * is differentiated at the surface.
     */
    double normal_derivative(const double* values, const SurfacePoint& p) const;

    //! Trilinear interpolation of a padded array at x (zero outside the box).
    double interpolate(const double* values, const Vec3& x) const;

    //! Run body(i, j, begin, end) for every real row; [begin, end) are the flat indices k = 1..n_z.
    template <typename Body>
    void for_each_row(Body&& body) const;

    //! Deterministic reduction over x-slabs: slab(i) -> T, folded in order of i.
    template <typename T, typename Slab, typename Reduce>
    T reduce_slabs(T init, Slab slab, Reduce reduce) const;

  private:
    Scene scene_;
    GridSpec spec_;
    std::array<int, 3> n_{};
    std::array<std::ptrdiff_t, 3> stride_{};
    std::vector<std::uint8_t> mask_;
    std::vector<std::uint8_t> obstacle_;
    std::size_t active_count_ = 0;
    std::size_t obstacle_count_ = 0;
    std::vector<BoundaryCell> boundary_;
    std::vector<Face> obstacle_faces_;
    std::vector<Face> wall_faces_;
    std::vector<SurfacePoint> surface_;
};


template <typename Body>
void ExteriorGrid::for_each_row(Body&& body) const
{
    const auto nx = static_cast<std::size_t>(n_[0]);
    parallel_chunks(nx, 1, [&](std::size_t b, std::size_t e) {
        for (std::size_t s = b; s < e; ++s) {
            const int i = static_cast<int>(s) + 1;
            for (int j = 1; j <= n_[1]; ++j) {
                const std::size_t start = index(i, j, 1);
                body(i, j, start, start + static_cast<std::size_t>(n_[2]));
            }
        }
    });
}

template <typename T, typename Slab, typename Reduce>
T ExteriorGrid::reduce_slabs(T init, Slab slab, Reduce reduce) const
{
    return parallel_reduce(
        static_cast<std::size_t>(n_[0]), 1, init,
        [&](std::size_t b, std::size_t e) {
            T acc = init;
            for (std::size_t s = b; s < e; ++s) acc = reduce(acc, slab(static_cast<int>(s) + 1));
            return acc;
        },
        reduce);
}

}  // namespace trapwave

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace uor {

// Axis-aligned hyperrectangle of environment parameters.
class ParameterSpace {
 public:
  ParameterSpace(std::vector<double> lower, std::vector<double> upper);

  int dims() const { return static_cast<int>(lower_.size()); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  double extent(int axis) const { return upper_[axis] - lower_[axis]; }

  double diameter() const;
  double volume() const;
  bool contains(std::span<const double> p, double tol = 0.0) const;

  bool operator==(const ParameterSpace&) const = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

// One cell of a division: a sub-hyperrectangle already intersected with the
// space, a representative point inside it, and a probability mass.
struct Block {
  int id = 0;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> representative;  // cell center
  double mass = 0.0;

  double diameter() const;
};

// Axis-aligned grid division. Cells have per-axis edge delta/sqrt(d) (the
// last cell on each axis is clipped to the space), so every block diameter
// is at most delta. Boundary points belong to the lower-index cell.
class Division {
 public:
  const ParameterSpace& space() const { return space_; }
  double delta() const { return delta_; }
  double cell_edge() const { return cell_edge_; }
  const std::vector<int>& axis_counts() const { return axis_counts_; }

  std::vector<Block>& blocks() { return blocks_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t size() const { return blocks_.size(); }

  // Index of the block owning p. p must lie inside the space.
  std::size_t locate(std::span<const double> p) const;

  // Total volume of the blocks; equals the space volume for a grid division.
  double covered_volume() const;

 private:
  friend Division set_division(const ParameterSpace&, double);

  ParameterSpace space_{{0.0}, {1.0}};
  double delta_ = 0.0;
  double cell_edge_ = 0.0;
  std::vector<int> axis_counts_;
  std::vector<Block> blocks_;
};

// Grid divider: per-axis cell edge delta/sqrt(d), n_i = ceil(extent_i/edge)
// cells per axis, every block diameter <= delta.
Division set_division(const ParameterSpace& space, double delta);

}  // namespace uor

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace rhe {

// Dense row-major tensor of 64-bit floats.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  static Tensor zeros(std::vector<int> shape);

  std::size_t numel() const { return data.size(); }
  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_string(const std::vector<int>& shape);

}  // namespace rhe

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace wld {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

// Row-major n-dimensional array of 64-bit floats.
struct Tensor {
  std::vector<int> shape;
  Eigen::VectorXd data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);

  std::int64_t size() const { return data.size(); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  // View as [rows x cols]; rows*cols must equal size().
  MapRM mat(Eigen::Index rows, Eigen::Index cols);
  CMapRM mat(Eigen::Index rows, Eigen::Index cols) const;
};

std::int64_t shape_size(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

// Throws ValidationError listing expected vs got.
void require_shape(const Tensor& t, const std::vector<int>& expected, std::string_view where);
void require_ndim(const Tensor& t, int ndim, std::string_view where);

}  // namespace wld

#include "wldecode/tensor.hpp"

#include "wldecode/errors.hpp"

namespace wld {

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
  data = Eigen::VectorXd::Zero(shape_size(shape));
}

MapRM Tensor::mat(Eigen::Index rows, Eigen::Index cols) {
  return MapRM(data.data(), rows, cols);
}

CMapRM Tensor::mat(Eigen::Index rows, Eigen::Index cols) const {
  return CMapRM(data.data(), rows, cols);
}

std::int64_t shape_size(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void require_shape(const Tensor& t, const std::vector<int>& expected, std::string_view where) {
  if (t.shape != expected)
    throw ValidationError(std::string(where) + ": expected shape " + shape_str(expected) +
                          ", got " + shape_str(t.shape));
}

void require_ndim(const Tensor& t, int ndim, std::string_view where) {
  if (t.ndim() != ndim)
    throw ValidationError(std::string(where) + ": expected " + std::to_string(ndim) +
                          "-d input, got " + shape_str(t.shape));
}

}  // namespace wld

#include "bevmod/fusion_net/tensor.hpp"

#include <functional>
#include <numeric>
#include <string>

#include "bevmod/error.hpp"

namespace bevmod::nn {

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
  std::size_t n = 1;
  for (int d : shape_) {
    if (d < 0) throw Error(ErrorCode::kShapeError, "negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  data_.assign(n, fill);
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kShapeError, "dot of differently sized tensors");
  return std::inner_product(a.raw(), a.raw() + a.size(), b.raw(), 0.0);
}

}  // namespace bevmod::nn

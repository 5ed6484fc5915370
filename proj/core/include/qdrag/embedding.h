#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qdrag {

// A dense vector in the shared query/passage space. Non-empty, all values finite.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double norm() const;

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

// Sequential left-to-right accumulation, so equal inputs give bitwise equal scores.
double inner_product(std::span<const double> a, std::span<const double> b);

}  // namespace qdrag

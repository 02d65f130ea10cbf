#pragma once

#include <cstddef>
#include <string>

namespace llcp {

struct Shape {
  std::size_t rows = 1;
  std::size_t cols = 1;

  std::size_t size() const { return rows * cols; }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  bool is_square() const { return rows == cols; }
  bool is_vector() const { return cols == 1 || rows == 1; }

  friend bool operator==(const Shape&, const Shape&) = default;

  std::string str() const { return std::to_string(rows) + "x" + std::to_string(cols); }
};

inline constexpr Shape kScalar{1, 1};

}  // namespace llcp

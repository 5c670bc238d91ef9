#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace stagekit::graph {

// Unknown is the bottom element used while inferring recursive signatures.
enum class DType { Unknown, Bool, I64, F64 };

std::string_view dtype_name(DType d);
DType parse_dtype(std::string_view s);  // "bool" | "i64" | "f64"; Unknown otherwise

using Shape = std::vector<std::int64_t>;

std::int64_t num_elements(const Shape& s);
std::string shape_str(const Shape& s);  // "[2, 3]"

// Dense row-major tensor. Bool and i64 data live in `i`, f64 data in `f`.
struct Tensor {
  DType dtype = DType::F64;
  Shape shape;
  std::vector<double> f;
  std::vector<std::int64_t> i;

  static Tensor scalar_f64(double v);
  static Tensor scalar_i64(std::int64_t v);
  static Tensor scalar_bool(bool v);
  static Tensor zeros(DType d, Shape shape);

  std::size_t size() const;
  bool is_scalar() const { return shape.empty(); }
  double as_f64(std::size_t k) const;
  std::int64_t as_i64(std::size_t k) const;
  bool as_bool(std::size_t k) const { return i[k] != 0; }

  // Scalar accessors; throw TypeError when not a scalar of that dtype family.
  double f64() const;
  std::int64_t i64() const;
  bool boolean() const;

  Tensor cast(DType to) const;
};

bool exactly_equal(const Tensor& a, const Tensor& b);
// Exact for bool/i64; relative error <= tol (absolute near zero) for f64.
bool approx_equal(const Tensor& a, const Tensor& b, double tol);

// Shortest round-trip float text, following the host language's repr style.
std::string format_f64(double v);
// Scalars as literals, higher ranks as nested brackets.
std::string format_tensor(const Tensor& t);

}  // namespace stagekit::graph

#include "stagekit/graph/tensor.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

#include "stagekit/error.hpp"

namespace stagekit::graph {

std::string_view dtype_name(DType d) {
  switch (d) {
    case DType::Bool: return "bool";
    case DType::I64: return "i64";
    case DType::F64: return "f64";
    case DType::Unknown: return "?";
  }
  return "?";
}

DType parse_dtype(std::string_view s) {
  if (s == "bool") return DType::Bool;
  if (s == "i64") return DType::I64;
  if (s == "f64") return DType::F64;
  return DType::Unknown;
}

std::int64_t num_elements(const Shape& s) {
  std::int64_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) out += ", ";
    out += std::to_string(s[k]);
  }
  return out + "]";
}

Tensor Tensor::scalar_f64(double v) {
  Tensor t;
  t.dtype = DType::F64;
  t.f = {v};
  return t;
}

Tensor Tensor::scalar_i64(std::int64_t v) {
  Tensor t;
  t.dtype = DType::I64;
  t.i = {v};
  return t;
}

Tensor Tensor::scalar_bool(bool v) {
  Tensor t;
  t.dtype = DType::Bool;
  t.i = {v ? 1 : 0};
  return t;
}

Tensor Tensor::zeros(DType d, Shape shape) {
  Tensor t;
  t.dtype = d;
  auto n = static_cast<std::size_t>(num_elements(shape));
  t.shape = std::move(shape);
  if (d == DType::F64) {
    t.f.assign(n, 0.0);
  } else {
    t.i.assign(n, 0);
  }
  return t;
}

std::size_t Tensor::size() const { return dtype == DType::F64 ? f.size() : i.size(); }

double Tensor::as_f64(std::size_t k) const {
  return dtype == DType::F64 ? f[k] : static_cast<double>(i[k]);
}

std::int64_t Tensor::as_i64(std::size_t k) const {
  return dtype == DType::F64 ? static_cast<std::int64_t>(f[k]) : i[k];
}

double Tensor::f64() const {
  if (!is_scalar() || dtype == DType::Bool) {
    throw Error(ErrorKind::TypeError, "expected a numeric scalar");
  }
  return as_f64(0);
}

std::int64_t Tensor::i64() const {
  if (!is_scalar() || dtype != DType::I64) throw Error(ErrorKind::TypeError, "expected an int");
  return i[0];
}

bool Tensor::boolean() const {
  if (!is_scalar() || dtype != DType::Bool) throw Error(ErrorKind::TypeError, "expected a bool");
  return i[0] != 0;
}

Tensor Tensor::cast(DType to) const {
  if (to == dtype) return *this;
  Tensor out;
  out.dtype = to;
  out.shape = shape;
  const std::size_t n = size();
  if (to == DType::F64) {
    out.f.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.f[k] = as_f64(k);
  } else if (to == DType::I64) {
    out.i.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.i[k] = as_i64(k);
  } else {
    out.i.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.i[k] = as_f64(k) != 0.0 ? 1 : 0;
  }
  return out;
}

bool exactly_equal(const Tensor& a, const Tensor& b) {
  if (a.dtype != b.dtype || a.shape != b.shape) return false;
  if (a.dtype != DType::F64) return a.i == b.i;
  for (std::size_t k = 0; k < a.f.size(); ++k) {
    if (std::isnan(a.f[k]) && std::isnan(b.f[k])) continue;
    if (a.f[k] != b.f[k]) return false;
  }
  return true;
}

bool approx_equal(const Tensor& a, const Tensor& b, double tol) {
  if (a.dtype != b.dtype || a.shape != b.shape) return false;
  if (a.dtype != DType::F64) return a.i == b.i;
  for (std::size_t k = 0; k < a.f.size(); ++k) {
    double x = a.f[k];
    double y = b.f[k];
    if (std::isnan(x) || std::isnan(y)) {
      if (std::isnan(x) != std::isnan(y)) return false;
      continue;
    }
    if (x == y) continue;
    double scale = std::max({std::abs(x), std::abs(y), 1.0});
    if (std::abs(x - y) > tol * scale) return false;
  }
  return true;
}

std::string format_f64(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return std::signbit(v) ? "-0.0" : "0.0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
  std::string sci(buf, res.ptr);
  // sci looks like "-1.2345e+17"
  bool neg = sci[0] == '-';
  if (neg) sci.erase(0, 1);
  auto epos = sci.find('e');
  std::string mant = sci.substr(0, epos);
  int exp = std::atoi(sci.c_str() + epos + 1);
  std::string digits;
  for (char c : mant) {
    if (c != '.') digits += c;
  }
  std::string out;
  if (exp < -4 || exp >= 16) {
    out = digits.substr(0, 1);
    if (digits.size() > 1) out += "." + digits.substr(1);
    char ebuf[16];
    std::snprintf(ebuf, sizeof ebuf, "e%c%02d", exp < 0 ? '-' : '+', std::abs(exp));
    out += ebuf;
  } else if (exp < 0) {
    out = "0." + std::string(static_cast<std::size_t>(-exp - 1), '0') + digits;
  } else {
    auto int_len = static_cast<std::size_t>(exp + 1);
    if (digits.size() <= int_len) {
      out = digits + std::string(int_len - digits.size(), '0') + ".0";
    } else {
      out = digits.substr(0, int_len) + "." + digits.substr(int_len);
    }
  }
  return neg ? "-" + out : out;
}

namespace {

std::string element(const Tensor& t, std::size_t k) {
  switch (t.dtype) {
    case DType::F64: return format_f64(t.f[k]);
    case DType::Bool: return t.i[k] ? "True" : "False";
    default: return std::to_string(t.i[k]);
  }
}

std::string nested(const Tensor& t, std::size_t dim, std::size_t& k) {
  if (dim == t.shape.size()) return element(t, k++);
  std::string out = "[";
  for (std::int64_t j = 0; j < t.shape[dim]; ++j) {
    if (j) out += ", ";
    out += nested(t, dim + 1, k);
  }
  return out + "]";
}

}  // namespace

std::string format_tensor(const Tensor& t) {
  std::size_t k = 0;
  return nested(t, 0, k);
}

}  // namespace stagekit::graph

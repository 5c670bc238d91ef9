#include "stagekit/graph/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stagekit/error.hpp"

namespace stagekit::graph::kernels {

namespace {

[[noreturn]] void dtype_error(Op op, DType a, DType b) {
  throw Error(ErrorKind::DtypeMismatch, "unsupported operand types for " +
                                            std::string(op_name(op)) + ": " +
                                            std::string(dtype_name(a)) + " and " +
                                            std::string(dtype_name(b)));
}

bool numeric(DType d) { return d == DType::I64 || d == DType::F64 || d == DType::Unknown; }

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

std::int64_t int_mod(std::int64_t a, std::int64_t b) {
  if (b == 0) throw Error(ErrorKind::DivisionByZero, "integer modulo by zero");
  if (b == -1) return 0;
  std::int64_t r = a % b;
  if (r != 0 && ((r < 0) != (b < 0))) r += b;
  return r;
}

double float_mod(double a, double b) {
  if (b == 0.0) throw Error(ErrorKind::DivisionByZero, "float modulo");
  double r = std::fmod(a, b);
  if (r != 0.0) {
    if ((r < 0) != (b < 0)) r += b;
  } else {
    r = std::copysign(0.0, b);
  }
  return r;
}

// Strides for broadcasting `in` against `out` (0 on stretched dims).
std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  std::size_t stride = 1;
  for (std::size_t k = 0; k < in.size(); ++k) {
    std::size_t d = in.size() - 1 - k;
    std::size_t o = out.size() - 1 - k;
    strides[o] = in[d] == 1 ? 0 : stride;
    stride *= static_cast<std::size_t>(in[d]);
  }
  return strides;
}

template <typename F>
void for_each_broadcast(const Shape& out, const std::vector<const Shape*>& ins, F&& f) {
  const std::size_t total = static_cast<std::size_t>(num_elements(out));
  std::vector<std::vector<std::size_t>> strides;
  for (const Shape* s : ins) strides.push_back(broadcast_strides(*s, out));
  std::vector<std::size_t> offs(ins.size(), 0);
  std::vector<std::int64_t> counter(out.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    f(n, offs);
    for (std::size_t d = out.size(); d-- > 0;) {
      ++counter[d];
      for (std::size_t j = 0; j < ins.size(); ++j) offs[j] += strides[j][d];
      if (counter[d] < out[d]) break;
      for (std::size_t j = 0; j < ins.size(); ++j) {
        offs[j] -= strides[j][d] * static_cast<std::size_t>(out[d]);
      }
      counter[d] = 0;
    }
  }
}

}  // namespace

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (std::size_t k = 0; k < rank; ++k) {
    std::int64_t x = k < a.size() ? a[a.size() - 1 - k] : 1;
    std::int64_t y = k < b.size() ? b[b.size() - 1 - k] : 1;
    std::int64_t r;
    if (x == y) {
      r = x;
    } else if (x == 1) {
      r = y;
    } else if (y == 1) {
      r = x;
    } else if (x == -1) {
      r = y;
    } else if (y == -1) {
      r = x;
    } else {
      throw Error(ErrorKind::ShapeMismatch,
                  "shapes " + shape_str(a) + " and " + shape_str(b) + " do not broadcast");
    }
    out[rank - 1 - k] = r;
  }
  return out;
}

DType binary_dtype(Op op, DType a, DType b) {
  if (op == Op::Eq || op == Op::Ne) {
    if ((a == DType::Bool) != (b == DType::Bool) && a != DType::Unknown && b != DType::Unknown) {
      dtype_error(op, a, b);
    }
    return DType::Bool;
  }
  if (!numeric(a) || !numeric(b)) dtype_error(op, a, b);
  if (is_comparison(op)) return DType::Bool;
  if (op == Op::Div) return DType::F64;
  if (a == DType::F64 || b == DType::F64) return DType::F64;
  if (a == DType::Unknown || b == DType::Unknown) return DType::Unknown;
  return DType::I64;
}

Tensor binary(Op op, const Tensor& a, const Tensor& b) {
  const DType rd = binary_dtype(op, a.dtype, b.dtype);
  Tensor out;
  out.dtype = rd;
  out.shape = a.shape == b.shape ? a.shape : broadcast_shapes(a.shape, b.shape);
  const auto n = static_cast<std::size_t>(num_elements(out.shape));
  const bool ints = a.dtype != DType::F64 && b.dtype != DType::F64;
  if (rd == DType::F64) {
    out.f.resize(n);
  } else {
    out.i.resize(n);
  }
  auto apply = [&](std::size_t k, std::size_t ia, std::size_t ib) {
    if (ints && op != Op::Div) {
      std::int64_t x = a.i[ia];
      std::int64_t y = b.i[ib];
      switch (op) {
        case Op::Add: out.i[k] = wrap_add(x, y); return;
        case Op::Sub: out.i[k] = wrap_sub(x, y); return;
        case Op::Mul: out.i[k] = wrap_mul(x, y); return;
        case Op::Mod: out.i[k] = int_mod(x, y); return;
        case Op::Lt: out.i[k] = x < y; return;
        case Op::Gt: out.i[k] = x > y; return;
        case Op::Le: out.i[k] = x <= y; return;
        case Op::Ge: out.i[k] = x >= y; return;
        case Op::Eq: out.i[k] = x == y; return;
        case Op::Ne: out.i[k] = x != y; return;
        default: break;
      }
    } else {
      double x = a.as_f64(ia);
      double y = b.as_f64(ib);
      switch (op) {
        case Op::Add: out.f[k] = x + y; return;
        case Op::Sub: out.f[k] = x - y; return;
        case Op::Mul: out.f[k] = x * y; return;
        case Op::Div:
          if (y == 0.0) throw Error(ErrorKind::DivisionByZero, "division by zero");
          out.f[k] = x / y;
          return;
        case Op::Mod: out.f[k] = float_mod(x, y); return;
        case Op::Lt: out.i[k] = x < y; return;
        case Op::Gt: out.i[k] = x > y; return;
        case Op::Le: out.i[k] = x <= y; return;
        case Op::Ge: out.i[k] = x >= y; return;
        case Op::Eq: out.i[k] = x == y; return;
        case Op::Ne: out.i[k] = x != y; return;
        default: break;
      }
    }
    throw Error(ErrorKind::InternalError, "not a binary op: " + std::string(op_name(op)));
  };
  if (a.shape == b.shape) {
    for (std::size_t k = 0; k < n; ++k) apply(k, k, k);
  } else {
    for_each_broadcast(out.shape, {&a.shape, &b.shape},
                       [&](std::size_t k, const std::vector<std::size_t>& o) {
                         apply(k, o[0], o[1]);
                       });
  }
  return out;
}

Tensor neg(const Tensor& x) {
  if (x.dtype == DType::Bool) dtype_error(Op::Neg, x.dtype, x.dtype);
  Tensor out = x;
  for (auto& v : out.f) v = -v;
  for (auto& v : out.i) v = wrap_sub(0, v);
  return out;
}

Tensor logical_not(const Tensor& x) {
  if (x.dtype != DType::Bool) dtype_error(Op::Not, x.dtype, x.dtype);
  Tensor out = x;
  for (auto& v : out.i) v = v ? 0 : 1;
  return out;
}

namespace {

template <typename F>
Tensor float_map(Op op, const Tensor& x, F&& f) {
  if (x.dtype == DType::Bool) dtype_error(op, x.dtype, x.dtype);
  Tensor out = x.cast(DType::F64);
  for (auto& v : out.f) v = f(v);
  return out;
}

}  // namespace

Tensor tanh(const Tensor& x) {
  return float_map(Op::Tanh, x, [](double v) { return std::tanh(v); });
}

Tensor sigmoid(const Tensor& x) {
  return float_map(Op::Sigmoid, x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2) {
    throw Error(ErrorKind::ShapeMismatch, "matmul expects rank-2 operands, got " +
                                              shape_str(a.shape) + " and " + shape_str(b.shape));
  }
  if (a.shape[1] != b.shape[0]) {
    throw Error(ErrorKind::ShapeMismatch,
                "matmul inner dims differ: " + shape_str(a.shape) + " x " + shape_str(b.shape));
  }
  const DType rd = binary_dtype(Op::Mul, a.dtype, b.dtype);
  const auto n = static_cast<std::size_t>(a.shape[0]);
  const auto k = static_cast<std::size_t>(a.shape[1]);
  const auto m = static_cast<std::size_t>(b.shape[1]);
  Tensor out = Tensor::zeros(rd, {a.shape[0], b.shape[1]});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      if (rd == DType::F64) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) acc += a.as_f64(r * k + j) * b.as_f64(j * m + c);
        out.f[r * m + c] = acc;
      } else {
        std::int64_t acc = 0;
        for (std::size_t j = 0; j < k; ++j) acc = wrap_add(acc, wrap_mul(a.i[r * k + j], b.i[j * m + c]));
        out.i[r * m + c] = acc;
      }
    }
  }
  return out;
}

Tensor transpose(const Tensor& x, std::vector<std::int64_t> perm) {
  const std::size_t rank = x.shape.size();
  if (perm.empty()) {
    perm.resize(rank);
    for (std::size_t k = 0; k < rank; ++k) perm[k] = static_cast<std::int64_t>(rank - 1 - k);
  }
  std::vector<std::int64_t> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::int64_t> iota(rank);
  std::iota(iota.begin(), iota.end(), 0);
  if (sorted != iota) throw Error(ErrorKind::ShapeMismatch, "invalid transpose permutation");
  Tensor out;
  out.dtype = x.dtype;
  out.shape.resize(rank);
  for (std::size_t k = 0; k < rank; ++k) out.shape[k] = x.shape[static_cast<std::size_t>(perm[k])];
  const auto n = x.size();
  if (x.dtype == DType::F64) {
    out.f.resize(n);
  } else {
    out.i.resize(n);
  }
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t k = rank; k-- > 1;) {
    in_strides[k - 1] = in_strides[k] * static_cast<std::size_t>(x.shape[k]);
  }
  std::vector<std::int64_t> counter(rank, 0);
  for (std::size_t o = 0; o < n; ++o) {
    std::size_t src = 0;
    for (std::size_t k = 0; k < rank; ++k) {
      src += static_cast<std::size_t>(counter[k]) * in_strides[static_cast<std::size_t>(perm[k])];
    }
    if (x.dtype == DType::F64) {
      out.f[o] = x.f[src];
    } else {
      out.i[o] = x.i[src];
    }
    for (std::size_t d = rank; d-- > 0;) {
      if (++counter[d] < out.shape[d]) break;
      counter[d] = 0;
    }
  }
  return out;
}

Tensor reduce_sum(const Tensor& x) {
  if (x.dtype == DType::Bool) dtype_error(Op::ReduceSum, x.dtype, x.dtype);
  if (x.dtype == DType::F64) {
    double acc = 0.0;
    for (double v : x.f) acc += v;
    return Tensor::scalar_f64(acc);
  }
  std::int64_t acc = 0;
  for (auto v : x.i) acc = wrap_add(acc, v);
  return Tensor::scalar_i64(acc);
}

Tensor reduce_max(const Tensor& x) {
  if (x.dtype == DType::Bool) dtype_error(Op::ReduceMax, x.dtype, x.dtype);
  if (x.size() == 0) throw Error(ErrorKind::ShapeMismatch, "reduce_max of an empty tensor");
  if (x.dtype == DType::F64) {
    double m = x.f[0];
    for (double v : x.f) m = std::max(m, v);
    return Tensor::scalar_f64(m);
  }
  return Tensor::scalar_i64(*std::max_element(x.i.begin(), x.i.end()));
}

Tensor where(const Tensor& cond, const Tensor& a, const Tensor& b) {
  if (cond.dtype != DType::Bool) {
    throw Error(ErrorKind::DtypeMismatch, "where condition must be bool");
  }
  const DType rd = binary_dtype(Op::Add, a.dtype == DType::Bool ? DType::I64 : a.dtype,
                                b.dtype == DType::Bool ? DType::I64 : b.dtype);
  DType out_dtype = a.dtype == DType::Bool && b.dtype == DType::Bool ? DType::Bool : rd;
  if ((a.dtype == DType::Bool) != (b.dtype == DType::Bool)) dtype_error(Op::Where, a.dtype, b.dtype);
  Shape ab = broadcast_shapes(a.shape, b.shape);
  Shape cshape = cond.shape;
  bool rows = cond.shape.size() == 1 && ab.size() > 1 && cond.shape[0] == ab[0];
  if (rows) {
    cshape = Shape(ab.size(), 1);
    cshape[0] = cond.shape[0];
  }
  Tensor out;
  out.dtype = out_dtype;
  out.shape = broadcast_shapes(cshape, ab);
  const auto n = static_cast<std::size_t>(num_elements(out.shape));
  if (out_dtype == DType::F64) {
    out.f.resize(n);
  } else {
    out.i.resize(n);
  }
  for_each_broadcast(out.shape, {&cshape, &a.shape, &b.shape},
                     [&](std::size_t k, const std::vector<std::size_t>& o) {
                       const Tensor& src = cond.i[o[0]] ? a : b;
                       std::size_t at = cond.i[o[0]] ? o[1] : o[2];
                       if (out_dtype == DType::F64) {
                         out.f[k] = src.as_f64(at);
                       } else {
                         out.i[k] = src.i[at];
                       }
                     });
  return out;
}

Tensor shape_of(const Tensor& x) {
  Tensor out;
  out.dtype = DType::I64;
  out.shape = {static_cast<std::int64_t>(x.shape.size())};
  out.i = x.shape;
  return out;
}

Tensor range(std::int64_t start, std::int64_t limit, std::int64_t delta) {
  if (delta == 0) throw Error(ErrorKind::TypeError, "range step must not be zero");
  Tensor out;
  out.dtype = DType::I64;
  for (std::int64_t v = start; delta > 0 ? v < limit : v > limit; v += delta) out.i.push_back(v);
  out.shape = {static_cast<std::int64_t>(out.i.size())};
  return out;
}

std::int64_t normalize_index(std::int64_t i, std::int64_t size) {
  std::int64_t k = i < 0 ? i + size : i;
  if (k < 0 || k >= size) {
    throw Error(ErrorKind::IndexOutOfRange,
                "index " + std::to_string(i) + " out of range for size " + std::to_string(size));
  }
  return k;
}

Tensor index(const Tensor& x, std::int64_t i) {
  if (x.shape.empty()) throw Error(ErrorKind::TypeError, "cannot index a scalar");
  const std::int64_t k = normalize_index(i, x.shape[0]);
  Tensor out;
  out.dtype = x.dtype;
  out.shape.assign(x.shape.begin() + 1, x.shape.end());
  const auto row = static_cast<std::size_t>(num_elements(out.shape));
  const auto from = static_cast<std::size_t>(k) * row;
  if (x.dtype == DType::F64) {
    out.f.assign(x.f.begin() + static_cast<std::ptrdiff_t>(from),
                 x.f.begin() + static_cast<std::ptrdiff_t>(from + row));
  } else {
    out.i.assign(x.i.begin() + static_cast<std::ptrdiff_t>(from),
                 x.i.begin() + static_cast<std::ptrdiff_t>(from + row));
  }
  return out;
}

Tensor set_item(const Tensor& x, std::int64_t i, const Tensor& v) {
  if (x.shape.empty()) throw Error(ErrorKind::TypeError, "cannot assign into a scalar");
  const std::int64_t k = normalize_index(i, x.shape[0]);
  Shape row_shape(x.shape.begin() + 1, x.shape.end());
  if (v.shape != row_shape) {
    throw Error(ErrorKind::ShapeMismatch,
                "cannot assign " + shape_str(v.shape) + " into row of " + shape_str(x.shape));
  }
  Tensor val = v;
  if (v.dtype != x.dtype) {
    if (x.dtype == DType::F64 && v.dtype == DType::I64) {
      val = v.cast(DType::F64);
    } else {
      dtype_error(Op::SetItem, x.dtype, v.dtype);
    }
  }
  Tensor out = x;
  const auto row = static_cast<std::size_t>(num_elements(row_shape));
  const auto from = static_cast<std::size_t>(k) * row;
  for (std::size_t j = 0; j < row; ++j) {
    if (x.dtype == DType::F64) {
      out.f[from + j] = val.f[j];
    } else {
      out.i[from + j] = val.i[j];
    }
  }
  return out;
}

Tensor zeros(DType d, const Tensor& shape) {
  if (shape.dtype != DType::I64 || shape.shape.size() > 1) {
    throw Error(ErrorKind::TypeError, "zeros expects a vector of ints");
  }
  Shape s(shape.i.begin(), shape.i.end());
  for (auto dim : s) {
    if (dim < 0) throw Error(ErrorKind::ShapeMismatch, "negative dimension in zeros");
  }
  return Tensor::zeros(d, s);
}

Tensor sum_to(const Tensor& x, const Shape& shape) {
  if (x.shape == shape) return x;
  Shape check = broadcast_shapes(shape, x.shape);
  if (check != x.shape) {
    throw Error(ErrorKind::ShapeMismatch,
                "cannot sum " + shape_str(x.shape) + " down to " + shape_str(shape));
  }
  Tensor out = Tensor::zeros(x.dtype, shape);
  for_each_broadcast(x.shape, {&x.shape, &shape},
                     [&](std::size_t, const std::vector<std::size_t>& o) {
                       if (x.dtype == DType::F64) {
                         out.f[o[1]] += x.f[o[0]];
                       } else {
                         out.i[o[1]] = wrap_add(out.i[o[1]], x.i[o[0]]);
                       }
                     });
  return out;
}

Tensor stack(const std::vector<Tensor>& items, const TypeSig& elem) {
  if (items.empty()) {
    if (elem.dtype == DType::Unknown || !elem.shape ||
        std::any_of(elem.shape->begin(), elem.shape->end(), [](auto d) { return d < 0; })) {
      throw Error(ErrorKind::ElementTypeUnset, "cannot stack an empty list of unknown element type");
    }
    Shape s{0};
    s.insert(s.end(), elem.shape->begin(), elem.shape->end());
    return Tensor::zeros(elem.dtype, s);
  }
  DType d = items[0].dtype;
  for (const auto& t : items) {
    if (t.shape != items[0].shape) {
      throw Error(ErrorKind::ShapeMismatch, "stack of differently shaped elements " +
                                                shape_str(items[0].shape) + " and " +
                                                shape_str(t.shape));
    }
    if (t.dtype != d) {
      if ((t.dtype == DType::F64 || d == DType::F64) && t.dtype != DType::Bool &&
          d != DType::Bool) {
        d = DType::F64;
      } else {
        dtype_error(Op::ListStack, d, t.dtype);
      }
    }
  }
  Tensor out;
  out.dtype = d;
  out.shape = {static_cast<std::int64_t>(items.size())};
  out.shape.insert(out.shape.end(), items[0].shape.begin(), items[0].shape.end());
  for (const auto& t : items) {
    if (d == DType::F64) {
      Tensor c = t.cast(DType::F64);
      out.f.insert(out.f.end(), c.f.begin(), c.f.end());
    } else {
      out.i.insert(out.i.end(), t.i.begin(), t.i.end());
    }
  }
  return out;
}

std::vector<Tensor> unstack(const Tensor& x) {
  if (x.shape.empty()) throw Error(ErrorKind::TypeError, "cannot unstack a scalar");
  std::vector<Tensor> out;
  for (std::int64_t k = 0; k < x.shape[0]; ++k) out.push_back(index(x, k));
  return out;
}

}  // namespace stagekit::graph::kernels

#pragma once

// Dense double-precision tensors with a reverse-mode gradient tape.
// Layout is row-major; images use channels x height x width.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tae {

namespace detail {

struct TensorData {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first touched by backward
};

inline std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

inline std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape) {
    return filled(std::move(shape), 0.0);
  }

  static Tensor full(std::vector<std::size_t> shape, double value) {
    return filled(std::move(shape), value);
  }

  static Tensor from_data(std::vector<std::size_t> shape, std::vector<double> values) {
    check_shape(shape);
    if (detail::shape_numel(shape) != values.size()) {
      throw std::invalid_argument("tensor: data length " + std::to_string(values.size()) +
                                  " does not match shape " + detail::shape_str(shape));
    }
    Tensor t;
    t.d_ = std::make_shared<detail::TensorData>();
    t.d_->shape = std::move(shape);
    t.d_->data = std::move(values);
    return t;
  }

  static Tensor scalar(double value) { return from_data({1}, {value}); }

  bool defined() const { return static_cast<bool>(d_); }

  const std::vector<std::size_t>& shape() const { return ref().shape; }
  std::size_t rank() const { return ref().shape.size(); }
  std::size_t size() const { return ref().data.size(); }
  std::size_t extent(std::size_t dim) const { return ref().shape.at(dim); }

  double* data() { return ref().data.data(); }
  const double* data() const { return ref().data.data(); }

  double operator[](std::size_t i) const { return ref().data[i]; }
  double& operator[](std::size_t i) { return ref().data[i]; }

  // Element access for the canonical CHW layout.
  double& at(std::size_t c, std::size_t h, std::size_t w) {
    auto& t = ref();
    return t.data[(c * t.shape[1] + h) * t.shape[2] + w];
  }
  double at(std::size_t c, std::size_t h, std::size_t w) const {
    const auto& t = ref();
    return t.data[(c * t.shape[1] + h) * t.shape[2] + w];
  }

  // Sole element of a scalar tensor.
  double value() const {
    if (size() != 1) {
      throw std::invalid_argument("tensor: value() requires a scalar, got shape " +
                                  detail::shape_str(shape()));
    }
    return ref().data[0];
  }

  bool has_grad() const { return d_ && !d_->grad.empty(); }

  void ensure_grad() {
    auto& t = ref();
    if (t.grad.empty()) t.grad.assign(t.data.size(), 0.0);
  }

  double* grad_data() {
    ensure_grad();
    return ref().grad.data();
  }
  const double* grad_data() const {
    if (!has_grad()) {
      throw std::logic_error("tensor: gradient buffer not populated");
    }
    return ref().grad.data();
  }

  void zero_grad() {
    if (d_ && !d_->grad.empty()) std::fill(d_->grad.begin(), d_->grad.end(), 0.0);
  }

  // Deep copy of the values; gradient buffer is not copied.
  Tensor clone() const {
    const auto& t = ref();
    return from_data(t.shape, t.data);
  }

  bool shares_storage(const Tensor& other) const { return d_ == other.d_; }

 private:
  static void check_shape(const std::vector<std::size_t>& shape) {
    if (shape.empty()) throw std::invalid_argument("tensor: empty shape");
    for (std::size_t e : shape) {
      if (e == 0) throw std::invalid_argument("tensor: zero extent in shape " + detail::shape_str(shape));
    }
  }

  static Tensor filled(std::vector<std::size_t> shape, double value) {
    check_shape(shape);
    Tensor t;
    t.d_ = std::make_shared<detail::TensorData>();
    t.d_->data.assign(detail::shape_numel(shape), value);
    t.d_->shape = std::move(shape);
    return t;
  }

  detail::TensorData& ref() {
    if (!d_) throw std::logic_error("tensor: undefined");
    return *d_;
  }
  const detail::TensorData& ref() const {
    if (!d_) throw std::logic_error("tensor: undefined");
    return *d_;
  }

  std::shared_ptr<detail::TensorData> d_;
};

// Ordered record of executed primitives. backward() replays the recorded
// closures in exact reverse execution order and may run once per tape.
class Tape {
 public:
  void record(std::function<void()> step) { steps_.push_back(std::move(step)); }

  std::size_t node_count() const { return steps_.size(); }

  void backward(const Tensor& loss) {
    if (used_) throw std::logic_error("tape: backward already ran on this tape");
    if (loss.size() != 1) {
      throw std::invalid_argument("tape: backward requires a scalar loss, got shape " +
                                  detail::shape_str(loss.shape()));
    }
    used_ = true;
    Tensor seed = loss;
    seed.grad_data()[0] += 1.0;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
  }

  bool consumed() const { return used_; }

 private:
  std::vector<std::function<void()>> steps_;
  bool used_ = false;
};

namespace detail {

enum class Broadcast { kSame, kScalar, kPerChannel };

inline Broadcast classify_broadcast(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (b.size() == 1) return Broadcast::kScalar;
  if (b.rank() == 1 && a.rank() >= 2 && a.shape()[0] == b.size()) return Broadcast::kPerChannel;
  throw std::invalid_argument(std::string(op) + ": broadcast mismatch between shapes " +
                              shape_str(a.shape()) + " and " + shape_str(b.shape()));
}

// Pointwise binary op with gradients for both operands. b may be a scalar
// tensor or a per-channel vector against a leading channel dimension.
template <class F, class DA, class DB>
Tensor binary_map(const Tensor& a, const Tensor& b, Tape* tape, const char* op, F f, DA dfda, DB dfdb) {
  const Broadcast bc = classify_broadcast(a, b, op);
  const std::size_t n = a.size();
  const std::size_t ch_stride = bc == Broadcast::kPerChannel ? n / b.size() : 0;
  Tensor out = Tensor::zeros(a.shape());
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bi = bc == Broadcast::kSame ? i : (bc == Broadcast::kScalar ? 0 : i / ch_stride);
    po[i] = f(pa[i], pb[bi]);
  }
  if (tape) {
    tape->record([a = a, b = b, out, bc, ch_stride, dfda, dfdb]() mutable {
      if (!out.has_grad()) return;
      const std::size_t n = a.size();
      const double* go = out.grad_data();
      const double* pa = a.data();
      const double* pb = b.data();
      const double* po = out.data();
      double* ga = a.grad_data();
      double* gb = b.grad_data();
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t bi = bc == Broadcast::kSame ? i : (bc == Broadcast::kScalar ? 0 : i / ch_stride);
        ga[i] += go[i] * dfda(pa[i], pb[bi], po[i]);
        gb[bi] += go[i] * dfdb(pa[i], pb[bi], po[i]);
      }
    });
  }
  return out;
}

// Pointwise unary op, possibly with a captured constant.
template <class F, class D>
Tensor unary_map(const Tensor& a, Tape* tape, F f, D dfdx) {
  const std::size_t n = a.size();
  Tensor out = Tensor::zeros(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  for (std::size_t i = 0; i < n; ++i) po[i] = f(pa[i]);
  if (tape) {
    tape->record([a = a, out, dfdx]() mutable {
      if (!out.has_grad()) return;
      const std::size_t n = a.size();
      const double* go = out.grad_data();
      const double* pa = a.data();
      const double* po = out.data();
      double* ga = a.grad_data();
      for (std::size_t i = 0; i < n; ++i) ga[i] += go[i] * dfdx(pa[i], po[i]);
    });
  }
  return out;
}

inline bool is_integer_value(double v) { return std::isfinite(v) && v == std::floor(v); }

// Gradient of a^b w.r.t. the base, with the degenerate base-zero rule:
// pow(0, p) for p > 0 is 0 with gradient 0.
inline double pow_dbase(double a, double b) {
  if (a == 0.0) return 0.0;
  return b * std::pow(a, b - 1.0);
}

// Gradient of a^b w.r.t. the exponent; zero where log(a) is undefined.
inline double pow_dexp(double a, double out) {
  if (a <= 0.0) return 0.0;
  return out * std::log(a);
}

inline double pow_checked(double a, double b, const char* op) {
  if (a < 0.0 && !is_integer_value(b)) {
    throw std::domain_error(std::string(op) + ": negative base " + std::to_string(a) +
                            " with non-integer exponent " + std::to_string(b));
  }
  if (a == 0.0 && b < 0.0) {
    throw std::domain_error(std::string(op) + ": zero base with negative exponent");
  }
  return std::pow(a, b);
}

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

// ---- elementwise ops ----

inline Tensor add(const Tensor& a, const Tensor& b, Tape* tape) {
  return detail::binary_map(a, b, tape, "add",
                            [](double x, double y) { return x + y; },
                            [](double, double, double) { return 1.0; },
                            [](double, double, double) { return 1.0; });
}

inline Tensor add(const Tensor& a, double c, Tape* tape) {
  return detail::unary_map(a, tape, [c](double x) { return x + c; },
                           [](double, double) { return 1.0; });
}

inline Tensor sub(const Tensor& a, const Tensor& b, Tape* tape) {
  return detail::binary_map(a, b, tape, "sub",
                            [](double x, double y) { return x - y; },
                            [](double, double, double) { return 1.0; },
                            [](double, double, double) { return -1.0; });
}

inline Tensor sub(const Tensor& a, double c, Tape* tape) { return add(a, -c, tape); }

inline Tensor sub(double c, const Tensor& a, Tape* tape) {
  return detail::unary_map(a, tape, [c](double x) { return c - x; },
                           [](double, double) { return -1.0; });
}

inline Tensor mul(const Tensor& a, const Tensor& b, Tape* tape) {
  return detail::binary_map(a, b, tape, "mul",
                            [](double x, double y) { return x * y; },
                            [](double, double y, double) { return y; },
                            [](double x, double, double) { return x; });
}

inline Tensor mul(const Tensor& a, double c, Tape* tape) {
  return detail::unary_map(a, tape, [c](double x) { return x * c; },
                           [c](double, double) { return c; });
}

inline Tensor div(const Tensor& a, const Tensor& b, Tape* tape) {
  return detail::binary_map(a, b, tape, "div",
                            [](double x, double y) { return x / y; },
                            [](double, double y, double) { return 1.0 / y; },
                            [](double x, double y, double) { return -x / (y * y); });
}

inline Tensor div(const Tensor& a, double c, Tape* tape) { return mul(a, 1.0 / c, tape); }

inline Tensor pow(const Tensor& a, const Tensor& b, Tape* tape) {
  return detail::binary_map(a, b, tape, "pow",
                            [](double x, double y) { return detail::pow_checked(x, y, "pow"); },
                            [](double x, double y, double) { return detail::pow_dbase(x, y); },
                            [](double x, double, double out) { return detail::pow_dexp(x, out); });
}

inline Tensor pow(const Tensor& a, double e, Tape* tape) {
  return detail::unary_map(a, tape,
                           [e](double x) { return detail::pow_checked(x, e, "pow"); },
                           [e](double x, double) { return detail::pow_dbase(x, e); });
}

inline Tensor exp(const Tensor& a, Tape* tape) {
  return detail::unary_map(a, tape, [](double x) { return std::exp(x); },
                           [](double, double out) { return out; });
}

inline Tensor log(const Tensor& a, Tape* tape) {
  const double* pa = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(pa[i] > 0.0)) {
      throw std::domain_error("log: non-positive input " + std::to_string(pa[i]));
    }
  }
  return detail::unary_map(a, tape, [](double x) { return std::log(x); },
                           [](double x, double) { return 1.0 / x; });
}

inline Tensor sigmoid(const Tensor& a, Tape* tape) {
  return detail::unary_map(a, tape, [](double x) { return detail::stable_sigmoid(x); },
                           [](double, double out) { return out * (1.0 - out); });
}

// Straight-through clamp: unit gradient where the input lies inside
// [lo, hi], zero gradient where the value was clamped.
inline Tensor clamp(const Tensor& a, double lo, double hi, Tape* tape) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo > hi");
  return detail::unary_map(a, tape,
                           [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
                           [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

inline Tensor abs(const Tensor& a, Tape* tape) {
  return detail::unary_map(a, tape, [](double x) { return std::abs(x); },
                           [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

inline Tensor leaky_relu(const Tensor& a, double slope, Tape* tape) {
  return detail::unary_map(a, tape,
                           [slope](double x) { return x >= 0.0 ? x : slope * x; },
                           [slope](double x, double) { return x >= 0.0 ? 1.0 : slope; });
}

// ---- reductions ----

inline Tensor sum(const Tensor& a, Tape* tape) {
  double s = 0.0;
  const double* pa = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) s += pa[i];
  Tensor out = Tensor::scalar(s);
  if (tape) {
    tape->record([a = a, out]() mutable {
      if (!out.has_grad()) return;
      const double g = out.grad_data()[0];
      double* ga = a.grad_data();
      for (std::size_t i = 0; i < a.size(); ++i) ga[i] += g;
    });
  }
  return out;
}

inline Tensor mean(const Tensor& a, Tape* tape) {
  const double inv = 1.0 / static_cast<double>(a.size());
  return mul(sum(a, tape), inv, tape);
}

// Per-channel spatial mean of a CHW tensor; backward spreads grad/(H*W).
inline Tensor global_avg_pool(const Tensor& a, Tape* tape) {
  if (a.rank() != 3) {
    throw std::invalid_argument("global_avg_pool: expected CHW input, got " +
                                detail::shape_str(a.shape()));
  }
  const std::size_t c = a.extent(0), hw = a.extent(1) * a.extent(2);
  Tensor out = Tensor::zeros({c});
  const double* pa = a.data();
  double* po = out.data();
  for (std::size_t ci = 0; ci < c; ++ci) {
    double s = 0.0;
    for (std::size_t i = 0; i < hw; ++i) s += pa[ci * hw + i];
    po[ci] = s / static_cast<double>(hw);
  }
  if (tape) {
    tape->record([a = a, out, c, hw]() mutable {
      if (!out.has_grad()) return;
      const double* go = out.grad_data();
      double* ga = a.grad_data();
      const double inv = 1.0 / static_cast<double>(hw);
      for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t i = 0; i < hw; ++i) ga[ci * hw + i] += go[ci] * inv;
    });
  }
  return out;
}

// Mean over the channel dimension of a CHW tensor -> 1xHxW.
inline Tensor channel_mean(const Tensor& a, Tape* tape) {
  if (a.rank() != 3) {
    throw std::invalid_argument("channel_mean: expected CHW input, got " +
                                detail::shape_str(a.shape()));
  }
  const std::size_t c = a.extent(0), hw = a.extent(1) * a.extent(2);
  Tensor out = Tensor::zeros({1, a.extent(1), a.extent(2)});
  const double* pa = a.data();
  double* po = out.data();
  const double inv = 1.0 / static_cast<double>(c);
  for (std::size_t ci = 0; ci < c; ++ci)
    for (std::size_t i = 0; i < hw; ++i) po[i] += pa[ci * hw + i] * inv;
  if (tape) {
    tape->record([a = a, out, c, hw, inv]() mutable {
      if (!out.has_grad()) return;
      const double* go = out.grad_data();
      double* ga = a.grad_data();
      for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t i = 0; i < hw; ++i) ga[ci * hw + i] += go[i] * inv;
    });
  }
  return out;
}

// Non-overlapping when stride == kernel; trailing partial windows dropped.
inline Tensor avg_pool2d(const Tensor& a, std::size_t kernel, std::size_t stride, Tape* tape) {
  if (a.rank() != 3) {
    throw std::invalid_argument("avg_pool2d: expected CHW input, got " + detail::shape_str(a.shape()));
  }
  if (kernel == 0 || stride == 0) throw std::invalid_argument("avg_pool2d: zero kernel/stride");
  const std::size_t c = a.extent(0), h = a.extent(1), w = a.extent(2);
  if (h < kernel || w < kernel) {
    throw std::invalid_argument("avg_pool2d: input " + detail::shape_str(a.shape()) +
                                " smaller than kernel " + std::to_string(kernel));
  }
  const std::size_t oh = (h - kernel) / stride + 1;
  const std::size_t ow = (w - kernel) / stride + 1;
  Tensor out = Tensor::zeros({c, oh, ow});
  const double inv = 1.0 / static_cast<double>(kernel * kernel);
  const double* pa = a.data();
  double* po = out.data();
  for (std::size_t ci = 0; ci < c; ++ci)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double s = 0.0;
        for (std::size_t ky = 0; ky < kernel; ++ky)
          for (std::size_t kx = 0; kx < kernel; ++kx)
            s += pa[(ci * h + y * stride + ky) * w + x * stride + kx];
        po[(ci * oh + y) * ow + x] = s * inv;
      }
  if (tape) {
    tape->record([a = a, out, kernel, stride, c, h, w, oh, ow, inv]() mutable {
      if (!out.has_grad()) return;
      const double* go = out.grad_data();
      double* ga = a.grad_data();
      for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t y = 0; y < oh; ++y)
          for (std::size_t x = 0; x < ow; ++x) {
            const double g = go[(ci * oh + y) * ow + x] * inv;
            for (std::size_t ky = 0; ky < kernel; ++ky)
              for (std::size_t kx = 0; kx < kernel; ++kx)
                ga[(ci * h + y * stride + ky) * w + x * stride + kx] += g;
          }
    });
  }
  return out;
}

// ---- softmax ----

// Softmax over the last dimension. Accepts a length-K vector or an RxK
// matrix (row-wise). Max-subtraction keeps large logits finite.
inline Tensor softmax(const Tensor& a, Tape* tape) {
  if (a.rank() > 2) {
    throw std::invalid_argument("softmax: expected vector or matrix, got " +
                                detail::shape_str(a.shape()));
  }
  const std::size_t k = a.shape().back();
  const std::size_t rows = a.size() / k;
  Tensor out = Tensor::zeros(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = pa + r * k;
    double* y = po + r * k;
    double mx = x[0];
    for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, x[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      y[i] = std::exp(x[i] - mx);
      z += y[i];
    }
    for (std::size_t i = 0; i < k; ++i) y[i] /= z;
  }
  if (tape) {
    tape->record([a = a, out, rows, k]() mutable {
      if (!out.has_grad()) return;
      const double* go = out.grad_data();
      const double* po = out.data();
      double* ga = a.grad_data();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* g = go + r * k;
        const double* s = po + r * k;
        double dot = 0.0;
        for (std::size_t i = 0; i < k; ++i) dot += g[i] * s[i];
        for (std::size_t i = 0; i < k; ++i) ga[r * k + i] += s[i] * (g[i] - dot);
      }
    });
  }
  return out;
}

inline Tensor channel_softmax(const Tensor& logits, Tape* tape) {
  if (logits.rank() != 1) {
    throw std::invalid_argument("channel_softmax: expected a vector, got " +
                                detail::shape_str(logits.shape()));
  }
  return softmax(logits, tape);
}

// ---- structural ops ----

inline Tensor select(const Tensor& a, std::size_t index, Tape* tape) {
  if (index >= a.size()) throw std::invalid_argument("select: index out of range");
  Tensor out = Tensor::scalar(a[index]);
  if (tape) {
    tape->record([a = a, out, index]() mutable {
      if (!out.has_grad()) return;
      a.grad_data()[index] += out.grad_data()[0];
    });
  }
  return out;
}

// Contiguous slice over the flattened buffer, returned as a vector.
inline Tensor slice(const Tensor& a, std::size_t offset, std::size_t len, Tape* tape) {
  if (offset + len > a.size()) throw std::invalid_argument("slice: range out of bounds");
  std::vector<double> v(a.data() + offset, a.data() + offset + len);
  Tensor out = Tensor::from_data({len}, std::move(v));
  if (tape) {
    tape->record([a = a, out, offset, len]() mutable {
      if (!out.has_grad()) return;
      const double* go = out.grad_data();
      double* ga = a.grad_data();
      for (std::size_t i = 0; i < len; ++i) ga[offset + i] += go[i];
    });
  }
  return out;
}

inline Tensor reshape(const Tensor& a, std::vector<std::size_t> shape, Tape* tape) {
  if (detail::shape_numel(shape) != a.size()) {
    throw std::invalid_argument("reshape: cannot view " + detail::shape_str(a.shape()) + " as " +
                                detail::shape_str(shape));
  }
  Tensor out = Tensor::from_data(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
  if (tape) {
    tape->record([a = a, out]() mutable {
      if (!out.has_grad()) return;
      const double* go = out.grad_data();
      double* ga = a.grad_data();
      for (std::size_t i = 0; i < a.size(); ++i) ga[i] += go[i];
    });
  }
  return out;
}

// Column k of an RxK matrix as a length-R vector.
inline Tensor matrix_column(const Tensor& a, std::size_t k, Tape* tape) {
  if (a.rank() != 2) throw std::invalid_argument("matrix_column: expected a matrix");
  const std::size_t rows = a.extent(0), cols = a.extent(1);
  if (k >= cols) throw std::invalid_argument("matrix_column: column out of range");
  Tensor out = Tensor::zeros({rows});
  for (std::size_t r = 0; r < rows; ++r) out[r] = a[r * cols + k];
  if (tape) {
    tape->record([a = a, out, rows, cols, k]() mutable {
      if (!out.has_grad()) return;
      const double* go = out.grad_data();
      double* ga = a.grad_data();
      for (std::size_t r = 0; r < rows; ++r) ga[r * cols + k] += go[r];
    });
  }
  return out;
}

inline Tensor concat_channels(const Tensor& a, const Tensor& b, Tape* tape) {
  if (a.rank() != 3 || b.rank() != 3 || a.extent(1) != b.extent(1) || a.extent(2) != b.extent(2)) {
    throw std::invalid_argument("concat_channels: incompatible shapes " +
                                detail::shape_str(a.shape()) + " and " + detail::shape_str(b.shape()));
  }
  const std::size_t ca = a.extent(0), cb = b.extent(0);
  Tensor out = Tensor::zeros({ca + cb, a.extent(1), a.extent(2)});
  std::copy(a.data(), a.data() + a.size(), out.data());
  std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
  if (tape) {
    tape->record([a = a, b = b, out]() mutable {
      if (!out.has_grad()) return;
      const double* go = out.grad_data();
      double* ga = a.grad_data();
      double* gb = b.grad_data();
      for (std::size_t i = 0; i < a.size(); ++i) ga[i] += go[i];
      for (std::size_t i = 0; i < b.size(); ++i) gb[i] += go[a.size() + i];
    });
  }
  return out;
}

// Affine map y = W x + b for vectors.
inline Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias, Tape* tape) {
  if (x.rank() != 1 || weight.rank() != 2 || bias.rank() != 1 ||
      weight.extent(1) != x.size() || weight.extent(0) != bias.size()) {
    throw std::invalid_argument("linear: incompatible shapes x=" + detail::shape_str(x.shape()) +
                                " W=" + detail::shape_str(weight.shape()) +
                                " b=" + detail::shape_str(bias.shape()));
  }
  const std::size_t in = x.size(), out_n = bias.size();
  Tensor out = Tensor::zeros({out_n});
  for (std::size_t o = 0; o < out_n; ++o) {
    double s = bias[o];
    for (std::size_t i = 0; i < in; ++i) s += weight[o * in + i] * x[i];
    out[o] = s;
  }
  if (tape) {
    tape->record([x = x, weight = weight, bias = bias, out, in, out_n]() mutable {
      if (!out.has_grad()) return;
      const double* go = out.grad_data();
      double* gx = x.grad_data();
      double* gw = weight.grad_data();
      double* gb = bias.grad_data();
      for (std::size_t o = 0; o < out_n; ++o) {
        const double g = go[o];
        gb[o] += g;
        for (std::size_t i = 0; i < in; ++i) {
          gx[i] += g * weight[o * in + i];
          gw[o * in + i] += g * x[i];
        }
      }
    });
  }
  return out;
}

inline bool all_finite(const Tensor& t) {
  const double* p = t.data();
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

}  // namespace tae

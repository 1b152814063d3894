#pragma once

// Linear and ReLU networks: G-CNN (full-width correlations over a group),
// CNN (G-CNN over the cyclic group of the input size), fully connected,
// and the band-limited Fourier-space variant over a list of block sizes.

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gbias/error.hpp"
#include "gbias/fourier.hpp"
#include "gbias/group.hpp"
#include "gbias/irreps.hpp"
#include "gbias/linalg.hpp"

namespace gbias {

enum class ArchKind { gcnn, cnn, fully_connected, fourier_space_bandlimited };
enum class Activation { linear, relu };

inline const char* to_string(ArchKind k) {
  switch (k) {
    case ArchKind::gcnn: return "gcnn";
    case ArchKind::cnn: return "cnn";
    case ArchKind::fully_connected: return "fc";
    case ArchKind::fourier_space_bandlimited: return "bandlimited";
  }
  return "unknown";
}

inline ArchKind arch_kind_from_string(const std::string& s) {
  if (s == "gcnn") return ArchKind::gcnn;
  if (s == "cnn") return ArchKind::cnn;
  if (s == "fc" || s == "fully_connected") return ArchKind::fully_connected;
  if (s == "bandlimited" || s == "fourier_space_bandlimited") return ArchKind::fourier_space_bandlimited;
  throw Error(ErrorKind::config, "unknown architecture kind '" + s + "'");
}

inline const char* to_string(Activation a) { return a == Activation::linear ? "linear" : "relu"; }

inline Activation activation_from_string(const std::string& s) {
  if (s == "linear") return Activation::linear;
  if (s == "relu") return Activation::relu;
  throw Error(ErrorKind::config, "unknown activation '" + s + "'");
}

struct ArchitectureSpec {
  ArchKind kind = ArchKind::gcnn;
  std::size_t layers = 1;
  Activation activation = Activation::linear;
  std::optional<GroupTable> group;    // gcnn / cnn
  std::vector<std::size_t> band_dims; // bandlimited
  double band_scale = 1.0;            // bandlimited forward = c <X, W_L..W_1>_M
  std::size_t input_dim = 0;          // fc (and cnn when no group given)

  static ArchitectureSpec gcnn(const GroupTable& g, std::size_t L, Activation act = Activation::linear) {
    ArchitectureSpec s;
    s.kind = ArchKind::gcnn;
    s.layers = L;
    s.activation = act;
    s.group = g;
    s.input_dim = g.order();
    return s;
  }
  static ArchitectureSpec cnn(std::size_t n, std::size_t L, Activation act = Activation::linear) {
    ArchitectureSpec s = gcnn(cyclic_group(n), L, act);
    s.kind = ArchKind::cnn;
    return s;
  }
  static ArchitectureSpec fully_connected(std::size_t n, std::size_t L, Activation act = Activation::linear) {
    ArchitectureSpec s;
    s.kind = ArchKind::fully_connected;
    s.layers = L;
    s.activation = act;
    s.input_dim = n;
    return s;
  }
  static ArchitectureSpec bandlimited(std::vector<std::size_t> dims, std::size_t L, double scale = 1.0) {
    ArchitectureSpec s;
    s.kind = ArchKind::fourier_space_bandlimited;
    s.layers = L;
    s.band_dims = std::move(dims);
    s.band_scale = scale;
    for (auto d : s.band_dims) s.input_dim += d * d;
    return s;
  }

  bool is_group_conv() const { return kind == ArchKind::gcnn || kind == ArchKind::cnn; }

  void validate() const {
    if (layers < 1) throw Error(ErrorKind::validation, "architecture needs at least one layer");
    if (is_group_conv() && !group) throw Error(ErrorKind::validation, "group convolution needs a group");
    if (kind == ArchKind::fourier_space_bandlimited) {
      if (band_dims.empty()) throw Error(ErrorKind::validation, "band-limited network needs at least one block");
      for (auto d : band_dims)
        if (d == 0) throw Error(ErrorKind::validation, "band-limited block dimensions must be positive");
      if (activation != Activation::linear)
        throw Error(ErrorKind::wrong_variant, "band-limited networks are linear only");
    }
    if (input_dim == 0) throw Error(ErrorKind::validation, "input dimension must be positive");
  }
};

/// Parameters as a list of real matrices:
///   gcnn/cnn: L column vectors of length |G|
///   fc:       L-1 square matrices, then one column vector
///   band:     layer-major, one d x d block per band entry
struct NetworkParams {
  ArchitectureSpec spec;
  std::vector<Mat> tensors;
  std::uint64_t seed = 0;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
    return n;
  }
  const Mat& band_block(std::size_t layer, std::size_t k) const { return tensors[layer * spec.band_dims.size() + k]; }
  Mat& band_block(std::size_t layer, std::size_t k) { return tensors[layer * spec.band_dims.size() + k]; }
};

using ParamGrad = std::vector<Mat>;

inline void axpy(ParamGrad& y, double a, const ParamGrad& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

inline double squared_norm(const ParamGrad& g) {
  double s = 0;
  for (const auto& m : g) s += m.squaredNorm();
  return s;
}

inline ParamGrad zeros_like(const NetworkParams& p) {
  ParamGrad g;
  for (const auto& t : p.tensors) g.push_back(Mat::Zero(t.rows(), t.cols()));
  return g;
}

/// Uniform in [-scale/sqrt(fan_in), scale/sqrt(fan_in)], deterministic in seed.
inline NetworkParams init_network(const ArchitectureSpec& spec, std::uint64_t seed, double scale = 1.0) {
  spec.validate();
  if (scale < 0) throw Error(ErrorKind::validation, "init scale must be nonnegative");
  NetworkParams p;
  p.spec = spec;
  p.seed = seed;
  std::mt19937_64 rng(seed);
  auto fill = [&](Eigen::Index r, Eigen::Index c, double fan_in) {
    const double s = scale / std::sqrt(fan_in);
    std::uniform_real_distribution<double> u(-s, s);
    Mat m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = s > 0 ? u(rng) : 0.0;
    return m;
  };
  const auto n = static_cast<Eigen::Index>(spec.input_dim);
  switch (spec.kind) {
    case ArchKind::gcnn:
    case ArchKind::cnn:
      for (std::size_t l = 0; l < spec.layers; ++l) p.tensors.push_back(fill(n, 1, static_cast<double>(n)));
      break;
    case ArchKind::fully_connected:
      for (std::size_t l = 0; l + 1 < spec.layers; ++l) p.tensors.push_back(fill(n, n, static_cast<double>(n)));
      p.tensors.push_back(fill(n, 1, static_cast<double>(n)));
      break;
    case ArchKind::fourier_space_bandlimited:
      for (std::size_t l = 0; l < spec.layers; ++l)
        for (auto d : spec.band_dims) {
          const auto di = static_cast<Eigen::Index>(d);
          p.tensors.push_back(fill(di, di, static_cast<double>(d)));
        }
      break;
  }
  return p;
}

namespace detail {

inline void check_input(const NetworkParams& p, const Vec& x) {
  if (static_cast<std::size_t>(x.size()) != p.spec.input_dim)
    throw Error(ErrorKind::shape_mismatch, "input has length " + std::to_string(x.size()) + ", network expects " +
                                               std::to_string(p.spec.input_dim));
}

// y(u) = sum_v h(uv) w(v)
inline Vec correlate_layer(const GroupTable& g, const Vec& h, const Vec& w) {
  const auto n = static_cast<Eigen::Index>(g.order());
  Vec y(n);
  for (Eigen::Index u = 0; u < n; ++u) {
    const auto row = g.row(static_cast<Element>(u));
    double acc = 0;
    for (Eigen::Index v = 0; v < n; ++v) acc += h(row[static_cast<std::size_t>(v)]) * w(v);
    y(u) = acc;
  }
  return y;
}

// Given dL/dy for y = h * w, accumulates dL/dw and returns dL/dh.
inline Vec correlate_layer_backward(const GroupTable& g, const Vec& h, const Vec& w, const Vec& dy, Mat& dw) {
  const auto n = static_cast<Eigen::Index>(g.order());
  Vec dh = Vec::Zero(n);
  for (Eigen::Index u = 0; u < n; ++u) {
    const double d = dy(u);
    if (d == 0) continue;
    const auto row = g.row(static_cast<Element>(u));
    for (Eigen::Index v = 0; v < n; ++v) {
      const auto t = row[static_cast<std::size_t>(v)];
      dw(v, 0) += d * h(t);
      dh(t) += d * w(v);
    }
  }
  return dh;
}

inline Vec apply_hidden(const NetworkParams& p, std::size_t l, const Vec& h) {
  if (p.spec.is_group_conv()) return correlate_layer(*p.spec.group, h, p.tensors[l].col(0));
  return p.tensors[l] * h;
}

inline Vec hidden_backward(const NetworkParams& p, std::size_t l, const Vec& h, const Vec& dy, Mat& dparam) {
  if (p.spec.is_group_conv()) return correlate_layer_backward(*p.spec.group, h, p.tensors[l].col(0), dy, dparam);
  dparam.noalias() += dy * h.transpose();
  return p.tensors[l].transpose() * dy;
}

// Band-limited product W_L ... W_1 per block.
inline std::vector<Mat> band_product(const NetworkParams& p) {
  const std::size_t k = p.spec.band_dims.size();
  std::vector<Mat> prod;
  for (std::size_t b = 0; b < k; ++b) {
    Mat m = p.band_block(0, b);
    for (std::size_t l = 1; l < p.spec.layers; ++l) m = p.band_block(l, b) * m;
    prod.push_back(std::move(m));
  }
  return prod;
}

inline std::vector<Mat> unpack_blocks(const Vec& x, const std::vector<std::size_t>& dims) {
  std::vector<Mat> out;
  Eigen::Index off = 0;
  for (auto d : dims) {
    const auto di = static_cast<Eigen::Index>(d);
    out.push_back(Eigen::Map<const Mat>(x.data() + off, di, di));
    off += di * di;
  }
  return out;
}

inline Vec pack_blocks(const std::vector<Mat>& blocks) {
  Eigen::Index n = 0;
  for (const auto& b : blocks) n += b.size();
  Vec v(n);
  Eigen::Index off = 0;
  for (const auto& b : blocks) {
    Eigen::Map<Mat>(v.data() + off, b.rows(), b.cols()) = b;
    off += b.size();
  }
  return v;
}

struct Tape {
  std::vector<Vec> inputs;  // input to each hidden layer
  std::vector<Vec> pre;     // pre-activations of hidden layers
  Vec last;                 // input to the final inner product
  double out = 0;
};

inline Tape run_forward(const NetworkParams& p, const Vec& x) {
  Tape t;
  Vec h = x;
  const std::size_t L = p.spec.layers;
  for (std::size_t l = 0; l + 1 < L; ++l) {
    t.inputs.push_back(h);
    Vec y = apply_hidden(p, l, h);
    t.pre.push_back(y);
    if (p.spec.activation == Activation::relu) y = y.cwiseMax(0.0);
    h = std::move(y);
  }
  t.last = h;
  t.out = h.dot(p.tensors[L - 1].col(0));
  return t;
}

// Backprop of scale * out; accumulates parameter gradient into `grad`
// (when non-null) and returns d(scale*out)/dx.
inline Vec run_backward(const NetworkParams& p, const Tape& t, double scale, ParamGrad* grad) {
  const std::size_t L = p.spec.layers;
  if (grad) (*grad)[L - 1].col(0) += scale * t.last;
  Vec dh = scale * p.tensors[L - 1].col(0);
  Mat scratch;
  for (std::size_t l = L - 1; l-- > 0;) {
    if (p.spec.activation == Activation::relu)
      for (Eigen::Index i = 0; i < dh.size(); ++i)
        if (!(t.pre[l](i) > 0)) dh(i) = 0.0;
    Mat* dparam = grad ? &(*grad)[l] : &scratch;
    if (!grad) scratch = Mat::Zero(p.tensors[l].rows(), p.tensors[l].cols());
    dh = hidden_backward(p, l, t.inputs[l], dh, *dparam);
  }
  return dh;
}

}  // namespace detail

/// Scalar network output.
inline double forward(const NetworkParams& p, const Vec& x) {
  detail::check_input(p, x);
  if (p.spec.kind == ArchKind::fourier_space_bandlimited) {
    const auto xb = detail::unpack_blocks(x, p.spec.band_dims);
    const auto prod = detail::band_product(p);
    double s = 0;
    for (std::size_t b = 0; b < prod.size(); ++b)
      s += static_cast<double>(p.spec.band_dims[b]) * (xb[b].array() * prod[b].array()).sum();
    return p.spec.band_scale * s;
  }
  return detail::run_forward(p, x).out;
}

/// Gradient of the output with respect to the input at x.
inline Vec local_linearization(const NetworkParams& p, const Vec& x) {
  detail::check_input(p, x);
  if (p.spec.kind == ArchKind::fourier_space_bandlimited) {
    auto prod = detail::band_product(p);
    for (std::size_t b = 0; b < prod.size(); ++b) prod[b] *= p.spec.band_scale * static_cast<double>(p.spec.band_dims[b]);
    return detail::pack_blocks(prod);
  }
  const auto tape = detail::run_forward(p, x);
  return detail::run_backward(p, tape, 1.0, nullptr);
}

/// End-to-end linear predictor: forward(x) = <x, beta>.
///   gcnn/cnn: beta = w_L * w_{L-1}^- * ... * w_1^-
///   fc:       beta = W_1^T ... W_{L-1}^T w_L
///   band:     packed blocks c d_rho (W_L ... W_1)
inline Vec linearize(const NetworkParams& p) {
  if (p.spec.activation != Activation::linear)
    throw Error(ErrorKind::wrong_variant, "linearize needs a linear network; use local_linearization");
  const std::size_t L = p.spec.layers;
  switch (p.spec.kind) {
    case ArchKind::gcnn:
    case ArchKind::cnn: {
      const GroupTable& g = *p.spec.group;
      Vec beta = p.tensors[L - 1].col(0);
      for (std::size_t l = L - 1; l-- > 0;) beta = cross_correlate<double>(beta, involution<double>(Vec(p.tensors[l].col(0)), g), g);
      return beta;
    }
    case ArchKind::fully_connected: {
      Vec beta = p.tensors[L - 1].col(0);
      for (std::size_t l = L - 1; l-- > 0;) beta = p.tensors[l].transpose() * beta;
      return beta;
    }
    case ArchKind::fourier_space_bandlimited:
      return local_linearization(p, Vec::Zero(static_cast<Eigen::Index>(p.spec.input_dim)));
  }
  throw Error(ErrorKind::wrong_variant, "unknown architecture");
}

/// Band-limited layer blocks as FourierBlocks (real entries).
inline FourierBlocks band_layer_blocks(const NetworkParams& p, std::size_t layer) {
  FourierBlocks b;
  for (std::size_t k = 0; k < p.spec.band_dims.size(); ++k) b.blocks.push_back(p.band_block(layer, k).cast<cplx>());
  return b;
}

/// Gradient of sum_n c_n * forward(x_n) with respect to the parameters.
inline ParamGrad output_gradient(const NetworkParams& p, const std::vector<Vec>& xs, const std::vector<double>& coef) {
  ParamGrad grad = zeros_like(p);
  const std::size_t L = p.spec.layers;
  if (p.spec.kind == ArchKind::fourier_space_bandlimited) {
    Vec agg = Vec::Zero(static_cast<Eigen::Index>(p.spec.input_dim));
    for (std::size_t n = 0; n < xs.size(); ++n) agg += coef[n] * xs[n];
    const auto X = detail::unpack_blocks(agg, p.spec.band_dims);
    for (std::size_t b = 0; b < p.spec.band_dims.size(); ++b) {
      const double c = p.spec.band_scale * static_cast<double>(p.spec.band_dims[b]);
      // d/dW_l c d tr(X^T W_L..W_1) = c d (W_L..W_{l+1})^T X (W_{l-1}..W_1)^T
      std::vector<Mat> below(L), above(L);
      const auto db = static_cast<Eigen::Index>(p.spec.band_dims[b]);
      Mat acc = Mat::Identity(db, db);
      for (std::size_t l = 0; l < L; ++l) {
        below[l] = acc;
        acc = p.band_block(l, b) * acc;
      }
      acc = Mat::Identity(db, db);
      for (std::size_t l = L; l-- > 0;) {
        above[l] = acc;
        acc = acc * p.band_block(l, b);
      }
      for (std::size_t l = 0; l < L; ++l) grad[l * p.spec.band_dims.size() + b] = c * above[l].transpose() * X[b] * below[l].transpose();
    }
    return grad;
  }
  if (p.spec.activation == Activation::linear) {
    Vec agg = Vec::Zero(static_cast<Eigen::Index>(p.spec.input_dim));
    for (std::size_t n = 0; n < xs.size(); ++n) agg += coef[n] * xs[n];
    const auto tape = detail::run_forward(p, agg);
    detail::run_backward(p, tape, 1.0, &grad);
    return grad;
  }
  for (std::size_t n = 0; n < xs.size(); ++n) {
    if (coef[n] == 0) continue;
    const auto tape = detail::run_forward(p, xs[n]);
    detail::run_backward(p, tape, coef[n], &grad);
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Data and loss

struct Dataset {
  std::vector<Vec> inputs;
  std::vector<double> labels;  // each +1 or -1

  std::size_t size() const { return inputs.size(); }
  void validate() const {
    if (inputs.size() != labels.size()) throw Error(ErrorKind::validation, "dataset: input/label count mismatch");
    for (double y : labels)
      if (y != 1.0 && y != -1.0) throw Error(ErrorKind::validation, "dataset: labels must be +1 or -1");
    for (const auto& x : inputs)
      if (x.size() != inputs.front().size()) throw Error(ErrorKind::validation, "dataset: inconsistent input sizes");
  }
};

struct LossEval {
  double loss = 0;
  double min_margin = 0;
  std::vector<double> outputs;
};

inline LossEval evaluate_loss(const NetworkParams& p, const Dataset& d) {
  LossEval e;
  e.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < d.size(); ++n) {
    const double f = forward(p, d.inputs[n]);
    e.outputs.push_back(f);
    e.loss += std::exp(-d.labels[n] * f);
    e.min_margin = std::min(e.min_margin, d.labels[n] * f);
  }
  return e;
}

/// Exact gradient of sum_n exp(-y_n forward(x_n)).
inline ParamGrad gradient(const NetworkParams& p, const Dataset& d) {
  d.validate();
  std::vector<double> coef(d.size());
  for (std::size_t n = 0; n < d.size(); ++n) coef[n] = -d.labels[n] * std::exp(-d.labels[n] * forward(p, d.inputs[n]));
  return output_gradient(p, d.inputs, coef);
}

}  // namespace gbias

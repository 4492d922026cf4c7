#pragma once

// Small dense networks over a flat parameter vector, plus Adam.
//
// Every network keeps all trainable values in one std::vector<double>; layers
// are Eigen views into it. Gradients use the same layout, which keeps the
// optimizer, finite-difference checks and serialization layout-agnostic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lbreuse/errors.hpp"
#include "lbreuse/rng.hpp"

namespace lbreuse {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowMatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

struct TensorShape {
  std::string name;
  int rows = 0;
  int cols = 1;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

// Named tensors laid out back to back.
class ParamLayout {
 public:
  std::size_t add(std::string name, int rows, int cols = 1) {
    TensorShape t{std::move(name), rows, cols, total_};
    total_ += t.size();
    tensors_.push_back(t);
    return tensors_.size() - 1;
  }
  std::size_t total() const { return total_; }
  const std::vector<TensorShape>& tensors() const { return tensors_; }
  const TensorShape& operator[](std::size_t i) const { return tensors_[i]; }

  friend bool operator==(const ParamLayout& a, const ParamLayout& b) {
    if (a.tensors_.size() != b.tensors_.size()) return false;
    for (std::size_t i = 0; i < a.tensors_.size(); ++i)
      if (a.tensors_[i].name != b.tensors_[i].name || a.tensors_[i].rows != b.tensors_[i].rows ||
          a.tensors_[i].cols != b.tensors_[i].cols)
        return false;
    return true;
  }

 private:
  std::vector<TensorShape> tensors_;
  std::size_t total_ = 0;
};

inline RowMatMap mat_view(std::vector<double>& p, const TensorShape& t) {
  return RowMatMap(p.data() + t.offset, t.rows, t.cols);
}
inline ConstRowMatMap mat_view(const std::vector<double>& p, const TensorShape& t) {
  return ConstRowMatMap(p.data() + t.offset, t.rows, t.cols);
}
inline VecMap vec_view(std::vector<double>& p, const TensorShape& t) { return VecMap(p.data() + t.offset, t.size()); }
inline ConstVecMap vec_view(const std::vector<double>& p, const TensorShape& t) {
  return ConstVecMap(p.data() + t.offset, t.size());
}

// Gaussian init scaled by gain / sqrt(fan_in); biases zero.
inline void init_dense(std::vector<double>& p, const TensorShape& w, const TensorShape& b, double gain, Rng& rng) {
  const double sd = gain / std::sqrt(static_cast<double>(w.cols));
  for (std::size_t k = 0; k < w.size(); ++k) p[w.offset + k] = rng.normal(0.0, sd);
  for (std::size_t k = 0; k < b.size(); ++k) p[b.offset + k] = 0.0;
}

// Y = X W^T + b for a batch of row vectors.
inline Mat dense_forward(const Mat& x, const std::vector<double>& p, const TensorShape& w, const TensorShape& b) {
  Mat y = x * mat_view(p, w).transpose();
  y.rowwise() += vec_view(p, b).transpose();
  return y;
}

// Accumulates dW, db and returns dX.
inline Mat dense_backward(const Mat& x, const Mat& dy, const std::vector<double>& p, std::vector<double>& g,
                          const TensorShape& w, const TensorShape& b) {
  mat_view(g, w) += dy.transpose() * x;
  vec_view(g, b) += dy.colwise().sum().transpose();
  return dy * mat_view(p, w);
}

inline bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline double global_norm(const std::vector<double>& g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

// Scale g so its L2 norm is at most max_norm (no-op when max_norm <= 0).
inline void clip_global_norm(std::vector<double>& g, double max_norm) {
  if (!(max_norm > 0.0)) return;
  const double n = global_norm(g);
  if (n > max_norm)
    for (double& v : g) v *= max_norm / n;
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw InvalidArgument("Adam: size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t k = 0; k < params.size(); ++k) {
      m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * grad[k];
      v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * grad[k] * grad[k];
      params[k] -= cfg_.learning_rate * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + cfg_.eps);
    }
  }

  std::int64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  int checked = 0;
};

// Central differences on `count` randomly chosen parameters. loss(params)
// must be a pure function of the vector it is given.
template <class LossFn>
GradCheckResult finite_difference_check(std::vector<double> params, const std::vector<double>& analytic, LossFn&& loss,
                                        int count, std::uint64_t seed, double h = 1e-5, double floor = 1e-6) {
  Rng rng(seed);
  GradCheckResult res;
  for (int c = 0; c < count; ++c) {
    const std::size_t k = rng.below(params.size());
    const double orig = params[k];
    params[k] = orig + h;
    const double lp = loss(params);
    params[k] = orig - h;
    const double lm = loss(params);
    params[k] = orig;
    const double numeric = (lp - lm) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[k]), floor});
    res.max_relative_error = std::max(res.max_relative_error, std::abs(numeric - analytic[k]) / denom);
    ++res.checked;
  }
  return res;
}

}  // namespace lbreuse

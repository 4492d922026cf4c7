#pragma once

// Actor-critic MLP: shared tanh trunk, Gaussian mean head squashed by tanh,
// state-independent log-std, linear value head.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <vector>

#include "lbreuse/env.hpp"
#include "lbreuse/nn.hpp"
#include "lbreuse/serialize.hpp"

namespace lbreuse {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 1.0;

struct PolicyNetShape {
  int obs = 48;
  int hidden1 = 64;
  int hidden2 = 64;
  int act = kActionSize;
};

// log(1 - tanh(u)^2), stable for large |u|.
inline double log1m_tanh2(double u) {
  const double a = std::abs(u);
  return 2.0 * (std::numbers::ln2 - a - std::log1p(std::exp(-2.0 * a)));
}

struct PolicyForward {
  Mat x, h1, h2, mu;
  Vec value;
};

struct ActionSample {
  std::vector<double> u;  // pre-squash
  ActionVector a;         // tanh(u)
  double log_prob = 0.0;
  double value = 0.0;
};

class PolicyNet {
 public:
  explicit PolicyNet(PolicyNetShape shape = {}) : shape_(shape) {
    w1_ = layout_.add("trunk1.weight", shape.hidden1, shape.obs);
    b1_ = layout_.add("trunk1.bias", shape.hidden1);
    w2_ = layout_.add("trunk2.weight", shape.hidden2, shape.hidden1);
    b2_ = layout_.add("trunk2.bias", shape.hidden2);
    wm_ = layout_.add("mean.weight", shape.act, shape.hidden2);
    bm_ = layout_.add("mean.bias", shape.act);
    ls_ = layout_.add("log_std", shape.act);
    wv_ = layout_.add("value.weight", 1, shape.hidden2);
    bv_ = layout_.add("value.bias", 1);
    params_.assign(layout_.total(), 0.0);
  }

  // Trunk ~ N(0, 1/fan_in); mean head scaled by mean_gain so the untrained
  // policy starts near the centre of the action box.
  void init(std::uint64_t seed, double init_log_std = -0.5, double mean_gain = 0.01) {
    Rng rng(seed);
    init_dense(params_, layout_[w1_], layout_[b1_], 1.0, rng);
    init_dense(params_, layout_[w2_], layout_[b2_], 1.0, rng);
    init_dense(params_, layout_[wm_], layout_[bm_], mean_gain, rng);
    init_dense(params_, layout_[wv_], layout_[bv_], 1.0, rng);
    vec_view(params_, layout_[ls_]).setConstant(std::clamp(init_log_std, kLogStdMin, kLogStdMax));
  }

  const PolicyNetShape& shape() const { return shape_; }
  const ParamLayout& layout() const { return layout_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  const TensorShape& tensor(std::size_t i) const { return layout_[i]; }
  std::size_t log_std_index() const { return ls_; }
  std::size_t value_weight_index() const { return wv_; }
  std::size_t value_bias_index() const { return bv_; }

  Vec log_std() const {
    return vec_view(params_, layout_[ls_]).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  }

  void project() {
    for (std::size_t k = 0; k < layout_[ls_].size(); ++k) {
      double& v = params_[layout_[ls_].offset + k];
      v = std::clamp(v, kLogStdMin, kLogStdMax);
    }
  }

  PolicyForward forward(const Mat& x) const { return forward_with(params_, x); }

  PolicyForward forward_with(const std::vector<double>& p, const Mat& x) const {
    if (x.cols() != shape_.obs) throw InvalidArgument("policy input has wrong width");
    PolicyForward f;
    f.x = x;
    f.h1 = dense_forward(x, p, layout_[w1_], layout_[b1_]).array().tanh();
    f.h2 = dense_forward(f.h1, p, layout_[w2_], layout_[b2_]).array().tanh();
    f.mu = dense_forward(f.h2, p, layout_[wm_], layout_[bm_]);
    f.value = dense_forward(f.h2, p, layout_[wv_], layout_[bv_]).col(0);
    return f;
  }

  // Log-density of a = tanh(u) given the Gaussian (mu, log_std) over u.
  static double squashed_log_prob(const double* u, const double* mu, const Vec& log_std) {
    double lp = 0.0;
    for (int k = 0; k < log_std.size(); ++k) {
      const double z = (u[k] - mu[k]) * std::exp(-log_std[k]);
      lp += -0.5 * z * z - log_std[k] - 0.5 * std::log(2.0 * std::numbers::pi) - log1m_tanh2(u[k]);
    }
    return lp;
  }

  ActionSample sample(const std::vector<double>& state, Rng& rng) const {
    const PolicyForward f = forward(row(state));
    const Vec ls = log_std();
    ActionSample s;
    s.u.resize(shape_.act);
    s.a.resize(shape_.act);
    for (int k = 0; k < shape_.act; ++k) {
      s.u[k] = f.mu(0, k) + std::exp(ls[k]) * rng.normal();
      s.a[k] = std::tanh(s.u[k]);
    }
    const Vec mu_row = f.mu.row(0).transpose();
    s.log_prob = squashed_log_prob(s.u.data(), mu_row.data(), ls);
    s.value = f.value[0];
    return s;
  }

  // Mean action tanh(mu).
  ActionVector act(const std::vector<double>& state) const {
    const PolicyForward f = forward(row(state));
    ActionVector a(shape_.act);
    for (int k = 0; k < shape_.act; ++k) a[k] = std::tanh(f.mu(0, k));
    return a;
  }

  double value(const std::vector<double>& state) const { return forward(row(state)).value[0]; }

  NetEnvelope to_envelope(nlohmann::json meta = nlohmann::json::object()) const {
    meta["shape"] = {shape_.obs, shape_.hidden1, shape_.hidden2, shape_.act};
    return NetEnvelope{"LBPN", kEnvelopeVersion, layout_, params_, std::move(meta)};
  }

  static PolicyNet from_envelope(const NetEnvelope& e) {
    std::vector<int> s;
    try {
      s = e.meta.at("shape").get<std::vector<int>>();
    } catch (const nlohmann::json::exception&) {
      throw ArtifactError("policy file lacks shape metadata");
    }
    if (s.size() != 4) throw ArtifactError("policy file has malformed shape metadata");
    PolicyNet net(PolicyNetShape{s[0], s[1], s[2], s[3]});
    if (!(net.layout_ == e.layout)) throw ArtifactError("policy tensor shapes do not match metadata");
    net.params_ = e.values;
    if (!all_finite(net.params_)) throw ArtifactError("policy file contains non-finite parameters");
    return net;
  }

  void save(std::ostream& os, nlohmann::json meta = nlohmann::json::object()) const {
    write_envelope(os, to_envelope(std::move(meta)));
  }
  static PolicyNet load(std::istream& is) { return from_envelope(read_envelope(is, "LBPN")); }

  friend bool operator==(const PolicyNet& a, const PolicyNet& b) {
    return a.layout_ == b.layout_ && a.params_ == b.params_;
  }

 private:
  Mat row(const std::vector<double>& state) const {
    if (static_cast<int>(state.size()) != shape_.obs) throw InvalidArgument("state has wrong length");
    Mat x(1, shape_.obs);
    for (int k = 0; k < shape_.obs; ++k) x(0, k) = state[k];
    return x;
  }

  PolicyNetShape shape_;
  ParamLayout layout_;
  std::vector<double> params_;
  std::size_t w1_, b1_, w2_, b2_, wm_, bm_, ls_, wv_, bv_;
};

}  // namespace lbreuse

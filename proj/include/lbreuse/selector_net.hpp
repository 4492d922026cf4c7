#pragma once

// Classifier: [BN -> Linear -> ReLU] x 3 hidden layers, then Linear -> softmax.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <vector>

#include "lbreuse/nn.hpp"
#include "lbreuse/serialize.hpp"

namespace lbreuse {

struct SelectorNetShape {
  int input = 288;
  std::vector<int> hidden{128, 64, 32};
  int classes = 9;
};

inline constexpr double kBnEps = 1e-5;

// Softmax of each row.
inline Mat softmax_rows(const Mat& logits) {
  Mat p = logits;
  for (int r = 0; r < p.rows(); ++r) {
    const double m = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

class SelectorNet {
 public:
  explicit SelectorNet(SelectorNetShape shape = {}) : shape_(std::move(shape)) {
    if (shape_.input < 1 || shape_.classes < 1 || shape_.hidden.empty())
      throw InvalidArgument("selector shape must have input, classes and at least one hidden layer");
    int in = shape_.input;
    for (std::size_t l = 0; l < shape_.hidden.size(); ++l) {
      const std::string p = "hidden" + std::to_string(l);
      Block b;
      b.bn_gamma = layout_.add(p + ".bn.gamma", in);
      b.bn_beta = layout_.add(p + ".bn.beta", in);
      b.w = layout_.add(p + ".weight", shape_.hidden[l], in);
      b.b = layout_.add(p + ".bias", shape_.hidden[l]);
      b.width_in = in;
      blocks_.push_back(b);
      in = shape_.hidden[l];
    }
    out_w_ = layout_.add("output.weight", shape_.classes, in);
    out_b_ = layout_.add("output.bias", shape_.classes);
    params_.assign(layout_.total(), 0.0);
    for (const auto& b : blocks_) vec_view(params_, layout_[b.bn_gamma]).setOnes();
    for (const auto& b : blocks_) {
      running_mean_.push_back(Vec::Zero(b.width_in));
      running_var_.push_back(Vec::Ones(b.width_in));
    }
  }

  // He-style init for ReLU layers.
  void init(std::uint64_t seed) {
    Rng rng(seed);
    for (const auto& b : blocks_) init_dense(params_, layout_[b.w], layout_[b.b], std::sqrt(2.0), rng);
    init_dense(params_, layout_[out_w_], layout_[out_b_], 1.0, rng);
  }

  const SelectorNetShape& shape() const { return shape_; }
  const ParamLayout& layout() const { return layout_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  int classes() const { return shape_.classes; }

  struct Cache {
    std::vector<Mat> x;      // block input
    std::vector<Mat> xhat;   // normalized input
    std::vector<Vec> inv_std;
    std::vector<Vec> batch_mean, batch_var;
    int batch = 0;
    std::vector<Mat> pre;    // pre-activation of the linear layer
    Mat last;                // input of the output layer
    Mat logits;
  };

  // training = true: batch statistics; training = false: frozen running
  // statistics.
  Mat logits_with(const std::vector<double>& p, const Mat& x, bool training, Cache* cache = nullptr) const {
    if (x.cols() != shape_.input) throw InvalidArgument("selector input has wrong width");
    Mat h = x;
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
      const Block& b = blocks_[l];
      Vec mean, var;
      if (training) {
        if (h.rows() < 2) throw InvalidArgument("batch-norm training needs a batch of >= 2");
        mean = h.colwise().mean().transpose();
        var = (h.rowwise() - mean.transpose()).array().square().colwise().mean().transpose();
      } else {
        mean = running_mean_[l];
        var = running_var_[l];
      }
      const Vec inv_std = (var.array() + kBnEps).rsqrt();
      Mat xhat = (h.rowwise() - mean.transpose()).array().rowwise() * inv_std.transpose().array();
      Mat y = xhat.array().rowwise() * vec_view(p, layout_[b.bn_gamma]).transpose().array();
      y.rowwise() += vec_view(p, layout_[b.bn_beta]).transpose();
      Mat pre = dense_forward(y, p, layout_[b.w], layout_[b.b]);
      if (cache) {
        cache->x.push_back(h);
        cache->xhat.push_back(xhat);
        cache->inv_std.push_back(inv_std);
        cache->pre.push_back(pre);
        cache->batch_mean.push_back(mean);
        cache->batch_var.push_back(var);
        cache->batch = static_cast<int>(h.rows());
      }
      h = pre.cwiseMax(0.0);
    }
    Mat logits = dense_forward(h, p, layout_[out_w_], layout_[out_b_]);
    if (cache) {
      cache->last = h;
      cache->logits = logits;
    }
    return logits;
  }

  // Mean cross-entropy over the batch, batch statistics in BN; fills grad
  // (overwritten) when given.
  double loss(const std::vector<double>& p, const Mat& x, const std::vector<int>& labels, std::vector<double>* grad,
              Cache* keep = nullptr) const {
    Cache local;
    Cache& c = keep ? *keep : local;
    c = Cache{};
    logits_with(p, x, true, &c);
    const int n = static_cast<int>(x.rows());
    const Mat prob = softmax_rows(c.logits);
    double l = 0.0;
    for (int r = 0; r < n; ++r) {
      const double m = c.logits.row(r).maxCoeff();
      const double lse = m + std::log((c.logits.row(r).array() - m).exp().sum());
      l += (lse - c.logits(r, labels[r])) / n;
    }
    if (!std::isfinite(l)) throw NumericalError("non-finite selector loss");
    if (!grad) return l;

    grad->assign(p.size(), 0.0);
    Mat d = prob;
    for (int r = 0; r < n; ++r) d(r, labels[r]) -= 1.0;
    d /= n;
    Mat dh = dense_backward(c.last, d, p, *grad, layout_[out_w_], layout_[out_b_]);
    for (std::size_t l2 = blocks_.size(); l2-- > 0;) {
      const Block& b = blocks_[l2];
      const Mat dpre = (c.pre[l2].array() > 0.0).cast<double>() * dh.array();
      const Vec gamma = vec_view(p, layout_[b.bn_gamma]);
      const Mat y = (c.xhat[l2].array().rowwise() * gamma.transpose().array()).rowwise() +
                    vec_view(p, layout_[b.bn_beta]).transpose().array();
      const Mat dy = dense_backward(y, dpre, p, *grad, layout_[b.w], layout_[b.b]);
      vec_view(*grad, layout_[b.bn_gamma]) += (dy.array() * c.xhat[l2].array()).colwise().sum().transpose().matrix();
      vec_view(*grad, layout_[b.bn_beta]) += dy.colwise().sum().transpose();
      if (l2 == 0) break;  // no gradient needed w.r.t. the raw input
      const Mat dxhat = dy.array().rowwise() * gamma.transpose().array();
      const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
      const Eigen::RowVectorXd sum_dxhat_xhat = (dxhat.array() * c.xhat[l2].array()).colwise().sum();
      Mat dx = (n * dxhat).rowwise() - sum_dxhat;
      dx -= (c.xhat[l2].array().rowwise() * sum_dxhat_xhat.array()).matrix();
      dx = dx.array().rowwise() * (c.inv_std[l2].transpose().array() / n);
      dh = dx;
    }
    return l;
  }

  // Inference with frozen statistics, one row at a time so a row's output does
  // not depend on the product kernel Eigen picks for the batch size.
  Mat predict_proba(const Mat& x) const {
    Mat logits(x.rows(), shape_.classes);
    for (int r = 0; r < x.rows(); ++r) logits.row(r) = logits_with(params_, x.row(r), false);
    return softmax_rows(logits);
  }

  // Argmax class per row, ties to the lowest index.
  std::vector<int> predict(const Mat& x) const {
    const Mat p = predict_proba(x);
    std::vector<int> out(p.rows());
    for (int r = 0; r < p.rows(); ++r) {
      int best = 0;
      for (int c = 1; c < p.cols(); ++c)
        if (p(r, c) > p(r, best)) best = c;
      out[r] = best;
    }
    return out;
  }

  // Fold the batch statistics of a training forward pass into the running
  // estimates (unbiased variance).
  void absorb_batch_stats(const Cache& c, double momentum = 0.1) {
    const double unbias = c.batch > 1 ? static_cast<double>(c.batch) / (c.batch - 1) : 1.0;
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
      running_mean_[l] = (1.0 - momentum) * running_mean_[l] + momentum * c.batch_mean[l];
      running_var_[l] = (1.0 - momentum) * running_var_[l] + momentum * unbias * c.batch_var[l];
    }
  }

  const std::vector<Vec>& running_mean() const { return running_mean_; }
  const std::vector<Vec>& running_var() const { return running_var_; }

  NetEnvelope to_envelope(nlohmann::json meta = nlohmann::json::object()) const {
    meta["shape"] = {{"input", shape_.input}, {"hidden", shape_.hidden}, {"classes", shape_.classes}};
    NetEnvelope e{"LBSN", kEnvelopeVersion, layout_, params_, std::move(meta)};
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
      e.layout.add("hidden" + std::to_string(l) + ".bn.running_mean", blocks_[l].width_in);
      e.layout.add("hidden" + std::to_string(l) + ".bn.running_var", blocks_[l].width_in);
      e.values.insert(e.values.end(), running_mean_[l].data(), running_mean_[l].data() + running_mean_[l].size());
      e.values.insert(e.values.end(), running_var_[l].data(), running_var_[l].data() + running_var_[l].size());
    }
    return e;
  }

  static SelectorNet from_envelope(const NetEnvelope& e) {
    SelectorNetShape s;
    try {
      const auto& js = e.meta.at("shape");
      s.input = js.at("input").get<int>();
      s.hidden = js.at("hidden").get<std::vector<int>>();
      s.classes = js.at("classes").get<int>();
    } catch (const nlohmann::json::exception&) {
      throw ArtifactError("selector file lacks shape metadata");
    }
    SelectorNet net(s);
    const std::size_t n = net.layout_.total();
    const std::size_t buffers = e.layout.tensors().size() - net.layout_.tensors().size();
    if (buffers != 2 * net.blocks_.size() || e.values.size() < n)
      throw ArtifactError("selector tensor shapes do not match metadata");
    for (std::size_t k = 0; k < net.layout_.tensors().size(); ++k)
      if (e.layout[k].name != net.layout_[k].name || e.layout[k].size() != net.layout_[k].size())
        throw ArtifactError("selector tensor shapes do not match metadata");
    net.params_.assign(e.values.begin(), e.values.begin() + n);
    std::size_t off = n;
    for (std::size_t l = 0; l < net.blocks_.size(); ++l) {
      const int w = net.blocks_[l].width_in;
      if (e.values.size() < off + 2 * w) throw ArtifactError("selector file truncated");
      net.running_mean_[l] = Eigen::Map<const Vec>(e.values.data() + off, w);
      net.running_var_[l] = Eigen::Map<const Vec>(e.values.data() + off + w, w);
      off += 2 * w;
    }
    if (!all_finite(e.values)) throw ArtifactError("selector file contains non-finite values");
    return net;
  }

  void save(std::ostream& os, nlohmann::json meta = nlohmann::json::object()) const {
    write_envelope(os, to_envelope(std::move(meta)));
  }
  static SelectorNet load(std::istream& is) { return from_envelope(read_envelope(is, "LBSN")); }

  friend bool operator==(const SelectorNet& a, const SelectorNet& b) {
    if (!(a.layout_ == b.layout_) || a.params_ != b.params_) return false;
    for (std::size_t l = 0; l < a.running_mean_.size(); ++l)
      if (a.running_mean_[l] != b.running_mean_[l] || a.running_var_[l] != b.running_var_[l]) return false;
    return true;
  }

 private:
  struct Block {
    std::size_t bn_gamma, bn_beta, w, b;
    int width_in;
  };
  SelectorNetShape shape_;
  ParamLayout layout_;
  std::vector<Block> blocks_;
  std::size_t out_w_ = 0, out_b_ = 0;
  std::vector<double> params_;
  std::vector<Vec> running_mean_, running_var_;
};

}  // namespace lbreuse

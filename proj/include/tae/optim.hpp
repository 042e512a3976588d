#pragma once

// AdamW with decoupled weight decay and bias correction.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tae/tensor.hpp"

namespace tae {

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

class AdamW {
 public:
  AdamW(std::vector<std::pair<std::string, Tensor>> params, AdamWConfig cfg)
      : cfg_(cfg), params_(std::move(params)) {
    for (const auto& [name, p] : params_) {
      slots_.push_back({Tensor::zeros(p.shape()), Tensor::zeros(p.shape())});
    }
  }

  // One update over all registered parameters. A parameter with no gradient
  // buffer is treated as having zero gradient.
  void step() {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Tensor& p = params_[k].second;
      Tensor& m = slots_[k].m;
      Tensor& v = slots_[k].v;
      const double* g = p.has_grad() ? p.grad_data() : nullptr;
      double* pd = p.data();
      double* md = m.data();
      double* vd = v.data();
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = g ? g[i] : 0.0;
        md[i] = cfg_.beta1 * md[i] + (1.0 - cfg_.beta1) * gi;
        vd[i] = cfg_.beta2 * vd[i] + (1.0 - cfg_.beta2) * gi * gi;
        const double mhat = md[i] / bc1;
        const double vhat = vd[i] / bc2;
        pd[i] -= cfg_.lr * cfg_.weight_decay * pd[i] + cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  void zero_grad() {
    for (auto& [name, p] : params_) p.zero_grad();
  }

  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  long step_count() const { return step_; }
  void set_step_count(long s) { step_ = s; }

  // Moment buffers as named tensors for checkpointing.
  std::vector<std::pair<std::string, Tensor>> state() const {
    std::vector<std::pair<std::string, Tensor>> out;
    out.reserve(slots_.size() * 2 + 1);
    for (std::size_t k = 0; k < params_.size(); ++k) {
      out.emplace_back("optim." + params_[k].first + ".m", slots_[k].m);
      out.emplace_back("optim." + params_[k].first + ".v", slots_[k].v);
    }
    out.emplace_back("optim.step", Tensor::scalar(static_cast<double>(step_)));
    return out;
  }

 private:
  struct Slot {
    Tensor m, v;
  };

  AdamWConfig cfg_;
  std::vector<std::pair<std::string, Tensor>> params_;
  std::vector<Slot> slots_;
  long step_ = 0;
};

}  // namespace tae

#pragma once

#include <vector>

#include "mvmi/dense.hpp"
#include "mvmi/rng.hpp"

namespace mvmi {

// Adam with bias correction. Moment buffers are created on first use
// from the registered parameter shapes.
class AdamState {
 public:
  explicit AdamState(float lr = 0.001f, float beta1 = 0.9f, float beta2 = 0.999f,
                     float eps = 1e-8f)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<DenseMatrix*>& params,
            const std::vector<const DenseMatrix*>& grads);

  long step_count() const { return t_; }
  float learning_rate() const { return lr_; }

 private:
  float lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<DenseMatrix> m_, v_;
};

// Uniform on (-a, a) with a = sqrt(6 / (rows + cols)).
DenseMatrix glorot_init(int rows, int cols, Pcg32& rng);

}  // namespace mvmi

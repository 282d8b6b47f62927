#include "mvmi/optim.hpp"

#include <cmath>

namespace mvmi {

void AdamState::step(const std::vector<DenseMatrix*>& params,
                     const std::vector<const DenseMatrix*>& grads) {
  contract(params.size() == grads.size(), "adam_step: params/grads count mismatch");
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  }
  contract(m_.size() == params.size(), "adam_step: parameter count changed between steps");
  ++t_;
  const double bc1 = 1.0 - std::pow(double(beta1_), double(t_));
  const double bc2 = 1.0 - std::pow(double(beta2_), double(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    DenseMatrix& p = *params[k];
    const DenseMatrix& g = *grads[k];
    contract(p.same_shape(g), "adam_step: gradient shape " + g.shape_str() +
                                  " != parameter shape " + p.shape_str());
    contract(p.same_shape(m_[k]), "adam_step: parameter shape changed between steps");
    float* pd = p.data();
    const float* gd = g.data();
    float* md = m_[k].data();
    float* vd = v_[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = gd[i];
      const double m = beta1_ * md[i] + (1.0 - beta1_) * gi;
      const double v = beta2_ * vd[i] + (1.0 - beta2_) * gi * gi;
      md[i] = static_cast<float>(m);
      vd[i] = static_cast<float>(v);
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      pd[i] = static_cast<float>(pd[i] - lr_ * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

DenseMatrix glorot_init(int rows, int cols, Pcg32& rng) {
  contract(rows > 0 && cols > 0, "glorot_init: dimensions must be positive");
  const float a = std::sqrt(6.0f / (rows + cols));
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-a, a);
  return m;
}

}  // namespace mvmi

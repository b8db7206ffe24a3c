// RMSProp parameter update.
#pragma once

#include <cmath>

#include "speechfcn/common.hpp"
#include "speechfcn/ops.hpp"

namespace speechfcn {

template <class T>
struct OptimizerConfigT {
  T learning_rate = T(1e-5);
  T decay = T(0.9);  // rho
  T epsilon = T(1e-8);

  void validate() const {
    if (!(learning_rate >= T(0))) throw Error(ErrorKind::shape, "learning_rate must be >= 0");
    if (!(decay > T(0) && decay < T(1))) throw Error(ErrorKind::shape, "decay must be in (0,1)");
    if (!(epsilon > T(0))) throw Error(ErrorKind::shape, "epsilon must be > 0");
  }
};

using OptimizerConfig = OptimizerConfigT<float>;

// acc <- rho*acc + (1-rho)*g^2 ;  value <- value - lr*g / (sqrt(acc) + eps)
template <class T>
void rmsprop_step(ParameterT<T>& param, const OptimizerConfigT<T>& cfg) {
  cfg.validate();
  const double rho = static_cast<double>(cfg.decay);
  const double lr = static_cast<double>(cfg.learning_rate);
  const double eps = static_cast<double>(cfg.epsilon);
  for (long i = 0; i < param.value.size(); ++i) {
    const double g = static_cast<double>(param.gradient[i]);
    const double acc = rho * static_cast<double>(param.rms_accumulator[i]) + (1.0 - rho) * g * g;
    param.rms_accumulator[i] = static_cast<T>(acc);
    param.value[i] = static_cast<T>(static_cast<double>(param.value[i]) - lr * g / (std::sqrt(acc) + eps));
  }
}

}  // namespace speechfcn

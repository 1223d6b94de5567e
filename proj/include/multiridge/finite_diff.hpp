#pragma once

#include <cmath>

#include "multiridge/errors.hpp"
#include "multiridge/types.hpp"

namespace multiridge {

/// Central-difference gradient of a scalar objective of lambda, used as the
/// independent check on the analytic gradients. The per-coordinate step is
/// step * max(1, |lambda_j|). Deterministic; objective failures propagate.
template <typename Scalar, typename Objective>
Vector<Scalar> finite_diff_grad(Objective&& objective, const Vector<Scalar>& lambda, Scalar step) {
  if (!(step > Scalar(0))) throw InvalidInputError("finite difference step must be positive");
  Vector<Scalar> grad(lambda.size());
  Vector<Scalar> probe = lambda;
  for (Index j = 0; j < lambda.size(); ++j) {
    const Scalar h = step * std::max(Scalar(1), std::abs(lambda[j]));
    probe[j] = lambda[j] + h;
    const Scalar upper = objective(probe);
    probe[j] = lambda[j] - h;
    const Scalar lower = objective(probe);
    probe[j] = lambda[j];
    grad[j] = (upper - lower) / (Scalar(2) * h);
  }
  return grad;
}

}  // namespace multiridge

#pragma once

// Feature-level distillation: mean absolute difference between student and
// teacher layer outputs, averaged over layers. The teacher is behind a
// stop-gradient and contributes nothing to any derivative.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tcpssm/errors.hpp"
#include "tcpssm/tensor.hpp"

namespace tcpssm {

inline constexpr double kDefaultDistillWeight = 6e-2;

inline void require_matched_layers(const std::vector<Tensor>& student,
                                   const std::vector<Tensor>& teacher) {
  if (student.size() != teacher.size() || student.empty()) {
    throw ShapeMismatch("student and teacher must have the same nonzero layer count");
  }
  for (std::size_t l = 0; l < student.size(); ++l) {
    if (student[l].shape() != teacher[l].shape()) {
      throw ShapeMismatch("layer " + std::to_string(l) + " shapes differ");
    }
  }
}

inline double distill_loss(const std::vector<Tensor>& student,
                           const std::vector<Tensor>& teacher) {
  require_matched_layers(student, teacher);
  double total = 0.0;
  for (std::size_t l = 0; l < student.size(); ++l) {
    double layer_sum = 0.0;
    const std::size_t n = student[l].numel();
    for (std::size_t i = 0; i < n; ++i) {
      layer_sum += std::fabs(student[l].get(i) - teacher[l].get(i));
    }
    total += layer_sum / double(n);
  }
  return total / double(student.size());
}

// d loss / d student. L1 subgradient: sign(diff), 0 at exact ties.
inline std::vector<Tensor> distill_loss_grad_student(const std::vector<Tensor>& student,
                                                     const std::vector<Tensor>& teacher) {
  require_matched_layers(student, teacher);
  std::vector<Tensor> grads;
  grads.reserve(student.size());
  const double layer_weight = 1.0 / double(student.size());
  for (std::size_t l = 0; l < student.size(); ++l) {
    const std::size_t n = student[l].numel();
    Tensor g = Tensor::zeros(DType::f64, student[l].shape());
    const double w = layer_weight / double(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = student[l].get(i) - teacher[l].get(i);
      g.set(i, diff > 0.0 ? w : (diff < 0.0 ? -w : 0.0));
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

// d loss / d teacher under the stop-gradient: identically zero. Kept as an
// explicit function so the gradient contract is testable.
inline std::vector<Tensor> distill_loss_grad_teacher(const std::vector<Tensor>& student,
                                                     const std::vector<Tensor>& teacher) {
  require_matched_layers(student, teacher);
  std::vector<Tensor> grads;
  grads.reserve(teacher.size());
  for (const auto& layer : teacher) grads.push_back(Tensor::zeros(DType::f64, layer.shape()));
  return grads;
}

inline double combined_objective(double task_loss, double distill,
                                 double lambda_distill = kDefaultDistillWeight) {
  if (!std::isfinite(task_loss) || !std::isfinite(distill)) {
    throw NumericError("combined objective inputs must be finite");
  }
  return task_loss + lambda_distill * distill;
}

}  // namespace tcpssm

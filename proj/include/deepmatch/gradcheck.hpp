#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace deepmatch {

/// One named bundle of learnable scalars plus its gradient accumulator.
/// Pointers reference vectors owned by a model; the model must outlive any
/// ParamBlock list built from it.
struct ParamBlock {
  std::string name;
  std::vector<double>* values = nullptr;
  std::vector<double>* grads = nullptr;
};

void zero_grads(std::span<ParamBlock> blocks);

struct GradCheckBlockResult {
  std::string name;
  std::size_t count = 0;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::vector<GradCheckBlockResult> blocks;
  bool passed(double tolerance) const { return max_rel_err < tolerance; }
  std::string summary() const;
};

/// Central-finite-difference check of analytic gradients.
///
/// `loss_backward` must zero the block gradients, run a deterministic
/// forward+backward, and return the scalar loss; `loss_forward` must evaluate
/// the same scalar without touching gradients. Both must be repeatable:
/// calling either twice gives bit-identical losses.
///
/// Each parameter is perturbed by +/-step and the two-sided slope is compared
/// against the analytic gradient with relative error
/// |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult gradient_check(const std::function<double()>& loss_backward,
                               const std::function<double()>& loss_forward,
                               std::span<ParamBlock> blocks,
                               double step = 1e-5);

}  // namespace deepmatch

#include "deepmatch/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "deepmatch/errors.hpp"

namespace deepmatch {

void zero_grads(std::span<ParamBlock> blocks) {
  for (ParamBlock& b : blocks) {
    std::fill(b.grads->begin(), b.grads->end(), 0.0);
  }
}

std::string GradCheckResult::summary() const {
  std::ostringstream os;
  os << "max rel err " << max_rel_err;
  for (const auto& b : blocks) {
    os << "\n  " << b.name << ": " << b.max_rel_err << " (" << b.count
       << " params, worst idx " << b.worst_index << ", analytic " << b.analytic
       << ", numeric " << b.numeric << ")";
  }
  return os.str();
}

GradCheckResult gradient_check(const std::function<double()>& loss_backward,
                               const std::function<double()>& loss_forward,
                               std::span<ParamBlock> blocks, double step) {
  loss_backward();

  // Snapshot analytic gradients before the perturbation loop.
  std::vector<std::vector<double>> analytic;
  analytic.reserve(blocks.size());
  for (const ParamBlock& b : blocks) analytic.push_back(*b.grads);

  GradCheckResult result;
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    ParamBlock& block = blocks[bi];
    GradCheckBlockResult br;
    br.name = block.name;
    br.count = block.values->size();
    for (std::size_t i = 0; i < block.values->size(); ++i) {
      double& theta = (*block.values)[i];
      const double saved = theta;
      theta = saved + step;
      const double loss_plus = loss_forward();
      theta = saved - step;
      const double loss_minus = loss_forward();
      theta = saved;

      const double numeric = (loss_plus - loss_minus) / (2.0 * step);
      const double a = analytic[bi][i];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), 1e-6});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > br.max_rel_err) {
        br.max_rel_err = rel;
        br.worst_index = i;
        br.analytic = a;
        br.numeric = numeric;
      }
    }
    result.max_rel_err = std::max(result.max_rel_err, br.max_rel_err);
    result.blocks.push_back(std::move(br));
  }
  return result;
}

}  // namespace deepmatch

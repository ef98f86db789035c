#pragma once

#include "fosae/graph.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fosae {

struct GradBlockReport {
  std::string name;
  real max_rel_err = 0;
  Eigen::Index worst_index = -1;
  real autodiff_value = 0;
  real central_diff_value = 0;
};

struct GradCheckReport {
  std::vector<GradBlockReport> blocks;
  real max_rel_err = 0;

  bool pass(real tolerance) const { return max_rel_err < tolerance; }
};

// Central finite differences against recorded autodiff gradients.
//
// loss_fn must re-run the same pure forward pass against the current
// parameter values. autodiff_grads holds one matrix per param, captured
// after a backward pass. Error is |fd - ad| scaled by the gradient
// magnitude, floored at 1 so near-zero entries compare absolutely.
inline GradCheckReport grad_check(const std::function<real()>& loss_fn,
                                  const std::vector<Param*>& params,
                                  const std::vector<Mat>& autodiff_grads,
                                  real base_step = real(1e-5)) {
  GradCheckReport report;
  for (size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    const Mat& ad = autodiff_grads[i];
    GradBlockReport block;
    block.name = p.name;
    for (Eigen::Index k = 0; k < p.w.size(); ++k) {
      real& w = p.w.data()[k];
      const real saved = w;
      const real h = base_step * std::max(real(1), std::abs(saved));
      w = saved + h;
      const real up = loss_fn();
      w = saved - h;
      const real down = loss_fn();
      w = saved;
      const real fd = (up - down) / (2 * h);
      const real a = ad.data()[k];
      const real denom = std::max({real(1), std::abs(fd), std::abs(a)});
      const real err = std::abs(fd - a) / denom;
      if (err > block.max_rel_err) {
        block.max_rel_err = err;
        block.worst_index = k;
        block.autodiff_value = a;
        block.central_diff_value = fd;
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, block.max_rel_err);
    report.blocks.push_back(std::move(block));
  }
  return report;
}

}  // namespace fosae

#pragma once

#include "fosae/graph.hpp"

#include <vector>

namespace fosae {

// Bias-corrected Adam over a fixed parameter list.
struct AdamState {
  long step = 0;
  real beta1 = real(0.9);
  real beta2 = real(0.999);
  real epsilon = real(1e-8);
  real learning_rate = real(1e-3);
  std::vector<Mat> m, v;

  void init(const std::vector<Param*>& params) {
    step = 0;
    m.clear();
    v.clear();
    for (const Param* p : params) {
      m.push_back(Mat::Zero(p->w.rows(), p->w.cols()));
      v.push_back(Mat::Zero(p->w.rows(), p->w.cols()));
    }
  }
};

// One update. Rejects non-finite gradients before touching any state, so a
// failed step leaves parameters and moments untouched.
inline void adam_step(const std::vector<Param*>& params, AdamState& st) {
  if (st.m.size() != params.size())
    throw dimension_error("adam_step: state not initialized for this set");
  for (const Param* p : params)
    if (!p->g.allFinite())
      throw numeric_error("adam_step: non-finite gradient in " + p->name +
                          ", update aborted");
  st.step += 1;
  const real c1 = real(1) - std::pow(st.beta1, real(st.step));
  const real c2 = real(1) - std::pow(st.beta2, real(st.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    st.m[i] = st.beta1 * st.m[i] + (real(1) - st.beta1) * p.g;
    st.v[i].array() = st.beta2 * st.v[i].array() +
                      (real(1) - st.beta2) * p.g.array().square();
    p.w.array() -= st.learning_rate * (st.m[i].array() / c1) /
                   ((st.v[i].array() / c2).sqrt() + st.epsilon);
  }
}

inline void zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) p->zero_grad();
}

}  // namespace fosae

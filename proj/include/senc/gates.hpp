#pragma once

namespace senc {

// Hard-concrete gate distribution: a sigmoid sample stretched to
// (gamma, zeta) and clamped to [0, 1], so the gate can sit exactly at
// 0 or 1 while remaining differentiable in between.
struct gate_params {
  double beta = 2.0 / 3.0;
  double gamma = -0.1;
  double zeta = 1.1;
};

struct gate_sample {
  double z;          // clamped gate value in [0, 1]
  double dz_dlogit;  // derivative of z w.r.t. the logit; 0 where clamped
};

// Draw a gate from uniform noise u in (0, 1).
gate_sample sample_gate(double logit, double u, const gate_params& p = {});

// Probability that the gate is strictly positive.
double prob_nonzero(double logit, const gate_params& p = {});

}  // namespace senc

#include "senc/gates.hpp"

#include <cmath>

#include "senc/error.hpp"

namespace senc {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check(const gate_params& p) {
  if (!(p.beta > 0.0)) throw error("gate beta must be positive");
  if (!(p.gamma < 0.0 && p.zeta > 1.0))
    throw error("gate stretch must satisfy gamma < 0 < 1 < zeta");
}

}  // namespace

gate_sample sample_gate(double logit, double u, const gate_params& p) {
  check(p);
  if (!(u > 0.0 && u < 1.0)) throw error("gate noise u must lie in (0, 1)");
  double s = sigmoid((std::log(u / (1.0 - u)) + logit) / p.beta);
  double stretched = s * (p.zeta - p.gamma) + p.gamma;
  gate_sample out;
  if (stretched <= 0.0) {
    out.z = 0.0;
    out.dz_dlogit = 0.0;
  } else if (stretched >= 1.0) {
    out.z = 1.0;
    out.dz_dlogit = 0.0;
  } else {
    out.z = stretched;
    out.dz_dlogit = (p.zeta - p.gamma) / p.beta * s * (1.0 - s);
  }
  return out;
}

double prob_nonzero(double logit, const gate_params& p) {
  check(p);
  return sigmoid(logit - p.beta * std::log(-p.gamma / p.zeta));
}

}  // namespace senc

#include "calfoa/objective.hpp"

#include <cmath>

#include "calfoa/error.hpp"

namespace calfoa {

Criterion parse_criterion(const std::string& s) {
  if (s == "PLA") return Criterion::PLA;
  if (s == "VAR") return Criterion::VAR;
  if (s == "AVG") return Criterion::AVG;
  throw ConfigError("unknown criterion '" + s + "'");
}

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::PLA: return "PLA";
    case Criterion::VAR: return "VAR";
    case Criterion::AVG: return "AVG";
  }
  return "?";
}

void ObjectiveParams::validate() const {
  if (!(lambda_c >= 0) || !(lambda_e >= 0) || !(lambda_s >= 0)) throw ConfigError("objective: lambdas must be >= 0");
  if (!(zeta_s > 0 && zeta_s < 1)) throw ConfigError("objective: zeta_s must be in (0,1)");
  if (!(dt_s > 0)) throw ConfigError("objective: dt_s must be > 0");
}

EntropyState make_entropy_state(Criterion criterion, const ObjectiveParams& params, int symbols) {
  params.validate();
  if (symbols < 2) throw Error("entropy state: need at least two symbols");
  const std::vector<double> uniform(static_cast<std::size_t>(symbols), 1.0 / symbols);
  return EntropyState{criterion, params, uniform, uniform, uniform};
}

SupportOutputs gather_support(const OutputDistribution& out, const DensitySupport& support, int origin_x,
                              int origin_y) {
  SupportOutputs s;
  s.symbols = out.symbols;
  s.probs.resize(support.entries.size() * out.symbols);
  s.weights.reserve(support.entries.size());
  for (std::size_t i = 0; i < support.entries.size(); ++i) {
    const auto& e = support.entries[i];
    const int x = e.x - origin_x, y = e.y - origin_y;
    if (x < 0 || y < 0 || x >= out.width || y >= out.height) throw Error("support pixel outside the evaluated patch");
    for (int j = 0; j < out.symbols; ++j) s.probs[i * out.symbols + j] = out.p(j, x, y);
    s.weights.push_back(e.weight);
  }
  return s;
}

std::vector<double> avg_activation(const SupportOutputs& outputs) {
  std::vector<double> avg(static_cast<std::size_t>(outputs.symbols), 0.0);
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const double* p = outputs.row(i);
    for (int j = 0; j < outputs.symbols; ++j) avg[j] += outputs.weights[i] * p[j];
  }
  return avg;
}

namespace {

double plogp(double p, double clamp) { return p > 0.0 ? p * std::log(std::max(p, clamp)) : 0.0; }
// d/dp of p log(max(p, clamp))
double dplogp(double p, double clamp) { return p > clamp ? std::log(p) + 1.0 : std::log(clamp); }

void check_finite(double v, const char* term) {
  if (!std::isfinite(v)) throw NumericalError(std::string("non-finite ") + term);
}

}  // namespace

double conditional_entropy(const SupportOutputs& outputs, double clamp) {
  const double inv_log_m = 1.0 / std::log(static_cast<double>(outputs.symbols));
  double h = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const double* p = outputs.row(i);
    double s = 0.0;
    for (int j = 0; j < outputs.symbols; ++j) s += plogp(p[j], clamp);
    h -= outputs.weights[i] * s;
  }
  return h * inv_log_m;
}

double output_entropy(const std::vector<double>& q, double clamp) {
  double h = 0.0;
  for (double v : q) h -= plogp(v, clamp);
  return h / std::log(static_cast<double>(q.size()));
}

void update_entropy_state(EntropyState& state, const std::vector<double>& avg) {
  const double z = state.params.zeta_s;
  switch (state.criterion) {
    case Criterion::PLA: break;
    case Criterion::AVG:
      for (std::size_t j = 0; j < avg.size(); ++j) state.nu[j] = z * state.nu[j] + (1.0 - z) * avg[j];
      break;
    case Criterion::VAR: {
      state.s_prev = state.s;
      double total = 0.0;
      for (std::size_t j = 0; j < avg.size(); ++j) {
        state.s[j] += state.params.dt_s * avg[j];
        total += state.s[j];
      }
      for (double& v : state.s) v /= total;
      break;
    }
  }
}

Patch support_patch(const Frame& frame, const DensitySupport& support, int rf) {
  if (support.entries.empty()) throw Error("empty density support");
  const PixelRect b = support.bounds();
  const int margin = rf / 2;
  return crop_region(frame, {b.x0 - margin, b.y0 - margin, b.x1 + margin, b.y1 + margin});
}

PotentialResult evaluate_potential(const ParamVector& params, const Frame& frame, const DensitySupport& support,
                                   const EntropyState& state) {
  const Architecture& arch = params.layout.arch();
  const int m = arch.symbols();
  if (static_cast<int>(state.nu.size()) != m) throw Error("entropy state symbol count does not match the network");

  const Patch patch = support_patch(frame, support, receptive_field(arch));
  ForwardCache cache;
  const OutputDistribution out = forward(params, patch, &cache);

  PotentialResult r;
  r.outputs = gather_support(out, support, patch.origin_x, patch.origin_y);
  r.avg = avg_activation(r.outputs);
  const ObjectiveParams& P = state.params;
  const double inv_log_m = 1.0 / std::log(static_cast<double>(m));

  // q and dq/dP̄ (as a dense m x m Jacobian)
  std::vector<double> q(m);
  std::vector<double> J(static_cast<std::size_t>(m) * m, 0.0);
  switch (state.criterion) {
    case Criterion::PLA:
      q = r.avg;
      for (int j = 0; j < m; ++j) J[j * m + j] = 1.0;
      break;
    case Criterion::AVG:
      for (int j = 0; j < m; ++j) {
        q[j] = P.zeta_s * state.nu[j] + (1.0 - P.zeta_s) * r.avg[j];
        J[j * m + j] = 1.0 - P.zeta_s;
      }
      break;
    case Criterion::VAR: {
      std::vector<double> raw(m);
      double total = 0.0;
      for (int j = 0; j < m; ++j) {
        raw[j] = state.s[j] + P.dt_s * r.avg[j];
        total += raw[j];
      }
      for (int i = 0; i < m; ++i) {
        q[i] = raw[i] / total;
        for (int j = 0; j < m; ++j) J[i * m + j] = P.dt_s * ((i == j ? 1.0 : 0.0) / total - raw[i] / (total * total));
      }
      break;
    }
  }

  FramePotential& pot = r.potential;
  pot.h_cond = conditional_entropy(r.outputs);
  pot.h_out = output_entropy(q);
  check_finite(pot.h_cond, "conditional entropy");
  check_finite(pot.h_out, "output entropy");

  // G = dU/dP̄ from the output-entropy and penalty terms
  std::vector<double> G(m, 0.0);
  std::vector<double> dh_dq(m);
  for (int i = 0; i < m; ++i) dh_dq[i] = -dplogp(q[i], kLogClamp) * inv_log_m;
  for (int j = 0; j < m; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += J[i * m + j] * dh_dq[i];
    G[j] = -P.lambda_e * s;
  }
  if (state.criterion == Criterion::VAR) {
    std::vector<double> e(m);
    for (int i = 0; i < m; ++i) {
      e[i] = (q[i] - state.s[i]) / P.dt_s - r.avg[i];
      pot.penalty += e[i] * e[i];
    }
    check_finite(pot.penalty, "VAR penalty");
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += e[i] * (J[i * m + j] / P.dt_s - (i == j ? 1.0 : 0.0));
      G[j] += P.lambda_s * 2.0 * s;
    }
  }
  pot.U = P.lambda_c * pot.h_cond - P.lambda_e * pot.h_out + P.lambda_s * pot.penalty;
  check_finite(pot.U, "potential");

  // upstream gradient with respect to every output probability of the patch
  std::vector<double> gp(out.probs.size(), 0.0);
  const std::size_t plane = out.plane_size();
  for (std::size_t i = 0; i < support.entries.size(); ++i) {
    const auto& e = support.entries[i];
    const std::size_t pix = static_cast<std::size_t>(e.y - patch.origin_y) * out.width + (e.x - patch.origin_x);
    const double* p = r.outputs.row(i);
    for (int j = 0; j < m; ++j) {
      gp[plane * j + pix] += e.weight * (-P.lambda_c * dplogp(p[j], kLogClamp) * inv_log_m + G[j]);
    }
  }
  r.grad = backward(params, cache, gp);
  for (double g : r.grad) check_finite(g, "gradient");

  r.next_state = state;
  update_entropy_state(r.next_state, r.avg);
  return r;
}

PotentialResult frame_potential_and_grad(const ParamVector& params, const Frame& frame,
                                         const DensitySupport& support, EntropyState& state) {
  PotentialResult r = evaluate_potential(params, frame, support, state);
  state = r.next_state;
  return r;
}

}  // namespace calfoa

#pragma once

#include <string>
#include <vector>

#include "calfoa/architecture.hpp"
#include "calfoa/attention.hpp"
#include "calfoa/frame.hpp"
#include "calfoa/network.hpp"

namespace calfoa {

/// Probabilities below this are clamped inside logarithms.
inline constexpr double kLogClamp = 1e-12;

/// Temporal-locality criterion for the output-entropy term.
enum class Criterion { PLA, VAR, AVG };

Criterion parse_criterion(const std::string& s);
std::string to_string(Criterion c);

struct ObjectiveParams {
  double lambda_c = 100.0;
  double lambda_e = 400.0;
  double lambda_s = 100.0;  // VAR only
  double zeta_s = 0.95;     // AVG: weight of the history
  double dt_s = 1.0;        // VAR auxiliary step

  void validate() const;
  bool operator==(const ObjectiveParams&) const = default;
};

struct EntropyState {
  Criterion criterion = Criterion::PLA;
  ObjectiveParams params;
  std::vector<double> nu;      // AVG moving average
  std::vector<double> s;       // VAR auxiliary variable
  std::vector<double> s_prev;  // VAR, previous s for the derivative estimate

  bool operator==(const EntropyState&) const = default;
};

/// State with uniform nu, s, s_prev over m symbols.
EntropyState make_entropy_state(Criterion criterion, const ObjectiveParams& params, int symbols);

/// Output vectors of the support pixels, row-major [entry][symbol].
struct SupportOutputs {
  int symbols = 0;
  std::vector<double> probs;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  const double* row(std::size_t i) const { return probs.data() + i * symbols; }
};

/// Gathers the outputs at the support pixels; `origin_*` maps frame to output coordinates.
SupportOutputs gather_support(const OutputDistribution& out, const DensitySupport& support, int origin_x,
                              int origin_y);

/// P̄_j = sum_x weight(x) p_j(x).
std::vector<double> avg_activation(const SupportOutputs& outputs);
/// -sum_x weight(x) sum_j p_j log_m p_j.
double conditional_entropy(const SupportOutputs& outputs, double clamp = kLogClamp);
/// -sum_j q_j log_m q_j, m = q.size().
double output_entropy(const std::vector<double>& q, double clamp = kLogClamp);

/// PLA: unchanged. AVG: nu <- zeta nu + (1-zeta) P̄. VAR: s_prev <- s, s <- normalize(s + dt_s P̄).
void update_entropy_state(EntropyState& state, const std::vector<double>& avg);

struct FramePotential {
  double h_cond = 0.0;
  double h_out = 0.0;
  double penalty = 0.0;
  double U = 0.0;
};

struct PotentialResult {
  FramePotential potential;
  std::vector<double> grad;  // ParamVector layout
  EntropyState next_state;
  std::vector<double> avg;   // P̄ of this frame
  SupportOutputs outputs;
};

/// Patch covering the support plus the receptive-field margin, clipped to the retina.
Patch support_patch(const Frame& frame, const DensitySupport& support, int rf);

/// Evaluates U and its exact gradient without touching `state`; history terms
/// (nu, s_prev) are constants, the current frame's contribution is differentiated.
PotentialResult evaluate_potential(const ParamVector& params, const Frame& frame, const DensitySupport& support,
                                   const EntropyState& state);

/// evaluate_potential followed by the once-per-frame state update.
PotentialResult frame_potential_and_grad(const ParamVector& params, const Frame& frame,
                                         const DensitySupport& support, EntropyState& state);

}  // namespace calfoa

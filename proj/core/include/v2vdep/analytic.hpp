#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "v2vdep/quadrature.hpp"
#include "v2vdep/scenario.hpp"

namespace v2vdep::analytic {

// Closed-form delay distribution under the interference-limited (SIR)
// approximation with Rayleigh fading and a 1-D Poisson field of interferers:
// per-link delay CDF F_i, joint delay CDF H, and the multivariate Blomqvist
// beta concordance measure evaluated at the marginal medians.

struct MarginalCdfQuery {
  std::size_t link_index = 0;
  double delay_threshold_s = 0.0;
  PowerAllocation allocation;
};

struct JointCdfQuery {
  std::vector<double> delay_thresholds_s;  // +infinity drops a link from the event
  PowerAllocation allocation;
};

struct CdfValue {
  double value = 0.0;
  bool silent_link = false;  // some involved link transmits zero power
};

struct SurvivalValue {
  double value = 0.0;
  double clamped_magnitude = 0.0;  // amount removed when clamping to [0, 1]
  bool silent_link = false;
};

struct MedianResult {
  double delay_s = 0.0;
  bool degenerate = false;  // CDF already above 1/2 at the bracket floor
};

struct BetaReport {
  double beta = 0.0;
  std::vector<double> medians_s;
  double joint_cdf_at_medians = 0.0;       // copula term C(1/2,...,1/2)
  double joint_survival_at_medians = 0.0;  // survival term evaluated at the medians
};

class MedianError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// SIR threshold 2^(S/(w v)) - 1 that a link must clear to deliver the packet
// within v seconds. Returns +infinity once the exponent would overflow, which
// forces the CDF to zero.
double sir_threshold(double delay_s, const RadioParams& radio);

// Interference exposure integral of a single receiver against a unit-density
// field: integral over the road of c / (|x - rx|^alpha + c). The caller
// scales by the field density inside exp(-lambda * integral).
double ppp_integral(double coeff, double rx_position_m, double path_loss_exponent,
                    const quad::QuadOptions& opt = {});

// Joint exposure integral: integral of 1 - prod_i 1/(1 + c_i |x - rx_i|^-alpha).
// Reduces to ppp_integral when exactly one coefficient is positive.
double joint_ppp_integral(std::span<const double> coeffs, std::span<const double> rx_positions_m,
                          double path_loss_exponent, const quad::QuadOptions& opt = {});

CdfValue marginal_cdf(const MarginalCdfQuery& query, const ValidatedScenario& scenario);
CdfValue marginal_cdf(std::size_t link_index, double delay_s, std::span<const double> powers_watts,
                      const ValidatedScenario& scenario);

// Median delay F_i^{-1}(1/2), by bracketing and bisection. Throws MedianError
// if the CDF never reaches 1/2 on the expanded bracket.
MedianResult marginal_median(std::size_t link_index, std::span<const double> powers_watts,
                             const ValidatedScenario& scenario);

CdfValue joint_cdf(const JointCdfQuery& query, const ValidatedScenario& scenario);
CdfValue joint_cdf(std::span<const double> delays_s, std::span<const double> powers_watts,
                   const ValidatedScenario& scenario);

// P(t_1 > s_1, ..., t_M > s_M) by inclusion-exclusion over joint CDFs of all
// link subsets. The alternating sum is clamped to [0, 1]; the clamped amount
// is reported.
SurvivalValue joint_survival_at(std::span<const double> thresholds_s,
                                std::span<const double> powers_watts,
                                const ValidatedScenario& scenario);

// Blomqvist beta from its two copula terms:
//   (2^(M-1) [C + C_hat] - 1) / (2^(M-1) - 1).
// Exposed separately so the normalization can be checked against synthetic
// comonotone and independent inputs.
double beta_from_terms(double joint_cdf_at_medians, double joint_survival_at_medians,
                       std::size_t link_count);

// Full concordance evaluation: medians, both copula terms, beta. Requires
// M >= 2 and strictly positive power on every link.
BetaReport blomqvist_beta(std::span<const double> powers_watts, const ValidatedScenario& scenario);

}  // namespace v2vdep::analytic

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fuseclust/types.hpp"

namespace fuseclust {

enum class Family { gaussian, bernoulli, poisson, multinomial, cox };

// A loss family ties a supervising variable to its negative log-likelihood.
// Multinomial carries the class count K; every other kind is parameter-free.
struct LossFamily {
  Family kind = Family::gaussian;
  int classes = 1;

  static LossFamily gaussian() { return {Family::gaussian, 1}; }
  static LossFamily bernoulli() { return {Family::bernoulli, 1}; }
  static LossFamily poisson() { return {Family::poisson, 1}; }
  static LossFamily multinomial(int k);
  static LossFamily cox() { return {Family::cox, 1}; }

  // Number of columns of the linear predictor (K for multinomial, else 1).
  int predictor_cols() const {
    return kind == Family::multinomial ? classes : 1;
  }
  bool has_link() const { return kind != Family::cox; }
  bool operator==(const LossFamily&) const = default;
};

std::string family_name(const LossFamily& family);
LossFamily family_from_name(const std::string& name, int classes = 0);

// Supervising auxiliary variable. `values` is n x 1 for scalar families and
// an n x K indicator (or soft-probability) matrix for multinomial. Cox data
// lives in (time, event); risk-set bookkeeping is built once at construction.
struct SupervisingVariable {
  LossFamily family;
  Matrix values;      // n x 1 or n x K
  Vector time;        // cox only, strictly positive
  IntVector event;    // cox only, 0/1

  // Cox risk sets, precomputed by sorting times ascending. Observations with
  // tied times share one block (Breslow).
  std::vector<int> sorted;       // observation indices, time ascending
  std::vector<int> block_start;  // position in `sorted` where each tie block starts
  std::vector<int> block_of;     // tie block index per sorted position
  std::vector<int> block_events; // event count per tie block

  Index size() const {
    return family.kind == Family::cox ? time.size() : values.rows();
  }

  static SupervisingVariable gaussian(Vector y);
  static SupervisingVariable bernoulli(Vector y);       // entries exactly 0/1
  static SupervisingVariable bernoulli_mean(Vector p);  // entries in [0,1]
  static SupervisingVariable poisson(Vector y);         // non-negative
  static SupervisingVariable multinomial(Matrix indicators);  // rows sum to 1
  static SupervisingVariable multinomial_labels(const std::vector<int>& labels, int k);
  static SupervisingVariable cox(Vector time, IntVector event);

  SupervisingVariable subset(const std::vector<int>& idx) const;
};

// Total loss sum_i l(y_i; eta_i). eta is n x predictor_cols().
double eval_loss(const LossFamily& family, const SupervisingVariable& y,
                 const Matrix& eta);

// Gradient of eval_loss with respect to eta, same shape as eta.
Matrix eval_grad(const LossFamily& family, const SupervisingVariable& y,
                 const Matrix& eta);

struct CenterResult {
  Matrix eta;    // n x q, constant rows
  bool clipped = false;
};

// Best constant predictor (loss-specific center). Cox has no identified
// constant minimizer; its center is fixed at zero.
CenterResult loss_center(const LossFamily& family, const SupervisingVariable& y);

// Loss at the loss-specific center.
double null_deviance(const LossFamily& family, const SupervisingVariable& y);

// Data-driven loss weights: pi_x = 1 / (1/2 ||X - Xbar||_F^2),
// pi_y = 1 / null_deviance(y). Throws on degenerate (constant) input.
std::pair<double, double> default_pi(const Matrix& X, const LossFamily& family,
                                     const SupervisingVariable& y);

// Scalar link / inverse link. Throws for cox (none exists) and multinomial
// (vector-valued; see the *_probs variants). Domain violations clip to
// +-kEtaClip and set *clipped when provided.
double link(const LossFamily& family, double mu, bool* clipped = nullptr);
double inverse_link(const LossFamily& family, double eta);

// Multinomial link pair under the sum-to-zero identification.
Vector link_probs(const Vector& probs, bool* clipped = nullptr);
Vector inverse_link_probs(const Vector& eta);

}  // namespace fuseclust

#include "fuseclust/glm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fuseclust {

namespace {

void check_eta(const LossFamily& family, const SupervisingVariable& y,
               const Matrix& eta) {
  if (family.kind != y.family.kind || family.classes != y.family.classes) {
    throw std::invalid_argument("loss family does not match supervising variable");
  }
  if (eta.rows() != y.size() || eta.cols() != family.predictor_cols()) {
    throw std::invalid_argument("linear predictor dimensions do not match data");
  }
  if (!eta.allFinite()) {
    throw std::invalid_argument("linear predictor has non-finite entries");
  }
}

// log(1 + e^x) without overflow.
double log1pexp(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

LossFamily LossFamily::multinomial(int k) {
  if (k < 2) throw std::invalid_argument("multinomial requires at least 2 classes");
  return {Family::multinomial, k};
}

std::string family_name(const LossFamily& family) {
  switch (family.kind) {
    case Family::gaussian: return "gaussian";
    case Family::bernoulli: return "bernoulli";
    case Family::poisson: return "poisson";
    case Family::multinomial: return "multinomial";
    case Family::cox: return "cox";
  }
  return "unknown";
}

LossFamily family_from_name(const std::string& name, int classes) {
  if (name == "gaussian") return LossFamily::gaussian();
  if (name == "bernoulli" || name == "binary") return LossFamily::bernoulli();
  if (name == "poisson" || name == "count") return LossFamily::poisson();
  if (name == "multinomial" || name == "categorical")
    return LossFamily::multinomial(classes);
  if (name == "cox" || name == "survival") return LossFamily::cox();
  throw std::invalid_argument("unknown loss family: " + name);
}

SupervisingVariable SupervisingVariable::gaussian(Vector y) {
  SupervisingVariable v;
  v.family = LossFamily::gaussian();
  v.values = std::move(y);
  return v;
}

SupervisingVariable SupervisingVariable::bernoulli(Vector y) {
  for (Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0)
      throw std::invalid_argument("bernoulli supervising variable must be 0/1");
  }
  return bernoulli_mean(std::move(y));
}

SupervisingVariable SupervisingVariable::bernoulli_mean(Vector p) {
  if ((p.array() < 0.0).any() || (p.array() > 1.0).any())
    throw std::invalid_argument("bernoulli values must lie in [0,1]");
  SupervisingVariable v;
  v.family = LossFamily::bernoulli();
  v.values = std::move(p);
  return v;
}

SupervisingVariable SupervisingVariable::poisson(Vector y) {
  if ((y.array() < 0.0).any())
    throw std::invalid_argument("poisson supervising variable must be non-negative");
  SupervisingVariable v;
  v.family = LossFamily::poisson();
  v.values = std::move(y);
  return v;
}

SupervisingVariable SupervisingVariable::multinomial(Matrix indicators) {
  if (indicators.cols() < 2)
    throw std::invalid_argument("multinomial requires at least 2 classes");
  for (Index i = 0; i < indicators.rows(); ++i) {
    if (std::abs(indicators.row(i).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("multinomial indicator rows must sum to 1");
    if ((indicators.row(i).array() < 0.0).any())
      throw std::invalid_argument("multinomial indicators must be non-negative");
  }
  SupervisingVariable v;
  v.family = LossFamily::multinomial(static_cast<int>(indicators.cols()));
  v.values = std::move(indicators);
  return v;
}

SupervisingVariable SupervisingVariable::multinomial_labels(
    const std::vector<int>& labels, int k) {
  Matrix ind = Matrix::Zero(static_cast<Index>(labels.size()), k);
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || labels[i] > k)
      throw std::invalid_argument("class labels must lie in 1..K");
    ind(static_cast<Index>(i), labels[i] - 1) = 1.0;
  }
  return multinomial(std::move(ind));
}

SupervisingVariable SupervisingVariable::cox(Vector time, IntVector event) {
  if (time.size() != event.size())
    throw std::invalid_argument("survival time and event vectors differ in length");
  if ((time.array() <= 0.0).any())
    throw std::invalid_argument("survival times must be strictly positive");
  for (Index i = 0; i < event.size(); ++i) {
    if (event[i] != 0 && event[i] != 1)
      throw std::invalid_argument("event indicators must be 0/1");
  }
  SupervisingVariable v;
  v.family = LossFamily::cox();
  v.time = std::move(time);
  v.event = std::move(event);

  const int n = static_cast<int>(v.time.size());
  v.sorted.resize(n);
  std::iota(v.sorted.begin(), v.sorted.end(), 0);
  std::sort(v.sorted.begin(), v.sorted.end(),
            [&](int a, int b) { return v.time[a] < v.time[b]; });
  v.block_of.resize(n);
  for (int s = 0; s < n; ++s) {
    if (s == 0 || v.time[v.sorted[s]] != v.time[v.sorted[s - 1]]) {
      v.block_start.push_back(s);
      v.block_events.push_back(0);
    }
    v.block_of[s] = static_cast<int>(v.block_start.size()) - 1;
    v.block_events.back() += v.event[v.sorted[s]];
  }
  return v;
}

SupervisingVariable SupervisingVariable::subset(const std::vector<int>& idx) const {
  if (family.kind == Family::cox) {
    Vector t(idx.size());
    IntVector e(idx.size());
    for (size_t r = 0; r < idx.size(); ++r) {
      t[static_cast<Index>(r)] = time[idx[r]];
      e[static_cast<Index>(r)] = event[idx[r]];
    }
    return cox(std::move(t), std::move(e));
  }
  Matrix v(idx.size(), values.cols());
  for (size_t r = 0; r < idx.size(); ++r) v.row(static_cast<Index>(r)) = values.row(idx[r]);
  SupervisingVariable out;
  out.family = family;
  out.values = std::move(v);
  return out;
}

double eval_loss(const LossFamily& family, const SupervisingVariable& y,
                 const Matrix& eta) {
  check_eta(family, y, eta);
  const Index n = y.size();
  switch (family.kind) {
    case Family::gaussian:
      return 0.5 * (y.values.col(0) - eta.col(0)).squaredNorm();
    case Family::bernoulli: {
      double total = 0.0;
      for (Index i = 0; i < n; ++i)
        total += -y.values(i, 0) * eta(i, 0) + log1pexp(eta(i, 0));
      return total;
    }
    case Family::poisson: {
      double total = 0.0;
      for (Index i = 0; i < n; ++i)
        total += -y.values(i, 0) * eta(i, 0) + std::exp(std::min(eta(i, 0), kEtaClip));
      return total;
    }
    case Family::multinomial: {
      double total = 0.0;
      for (Index i = 0; i < n; ++i) {
        const double m = eta.row(i).maxCoeff();
        double lse = 0.0;
        for (Index k = 0; k < eta.cols(); ++k) lse += std::exp(eta(i, k) - m);
        total += m + std::log(lse) - y.values.row(i).dot(eta.row(i));
      }
      return total;
    }
    case Family::cox: {
      // Breslow partial likelihood: events in one tie block share the
      // risk-set sum taken from the block start.
      const double m = eta.col(0).maxCoeff();
      const int nn = static_cast<int>(n);
      std::vector<double> suffix(nn + 1, 0.0);
      for (int s = nn - 1; s >= 0; --s)
        suffix[s] = suffix[s + 1] + std::exp(eta(y.sorted[s], 0) - m);
      double total = 0.0;
      for (size_t b = 0; b < y.block_start.size(); ++b) {
        if (y.block_events[b] == 0) continue;
        total += y.block_events[b] * (m + std::log(suffix[y.block_start[b]]));
      }
      for (Index i = 0; i < n; ++i)
        if (y.event[i]) total -= eta(i, 0);
      return total;
    }
  }
  throw std::logic_error("unreachable");
}

Matrix eval_grad(const LossFamily& family, const SupervisingVariable& y,
                 const Matrix& eta) {
  check_eta(family, y, eta);
  const Index n = y.size();
  Matrix g(eta.rows(), eta.cols());
  switch (family.kind) {
    case Family::gaussian:
      g.col(0) = eta.col(0) - y.values.col(0);
      return g;
    case Family::bernoulli:
      for (Index i = 0; i < n; ++i)
        g(i, 0) = sigmoid(eta(i, 0)) - y.values(i, 0);
      return g;
    case Family::poisson:
      for (Index i = 0; i < n; ++i)
        g(i, 0) = std::exp(std::min(eta(i, 0), kEtaClip)) - y.values(i, 0);
      return g;
    case Family::multinomial:
      for (Index i = 0; i < n; ++i) {
        const double m = eta.row(i).maxCoeff();
        double lse = 0.0;
        for (Index k = 0; k < eta.cols(); ++k) lse += std::exp(eta(i, k) - m);
        for (Index k = 0; k < eta.cols(); ++k)
          g(i, k) = std::exp(eta(i, k) - m) / lse - y.values(i, k);
      }
      return g;
    case Family::cox: {
      const double m = eta.col(0).maxCoeff();
      const int nn = static_cast<int>(n);
      std::vector<double> suffix(nn + 1, 0.0);
      for (int s = nn - 1; s >= 0; --s)
        suffix[s] = suffix[s + 1] + std::exp(eta(y.sorted[s], 0) - m);
      // Prefix over tie blocks of d_b / S_b; observation i accumulates every
      // block whose time is <= t_i, i.e. up to and including its own block.
      const size_t nblocks = y.block_start.size();
      std::vector<double> prefix(nblocks);
      double acc = 0.0;
      for (size_t b = 0; b < nblocks; ++b) {
        acc += y.block_events[b] / suffix[y.block_start[b]];
        prefix[b] = acc;
      }
      for (int s = 0; s < nn; ++s) {
        const int i = y.sorted[s];
        g(i, 0) = std::exp(eta(i, 0) - m) * prefix[y.block_of[s]] -
                  static_cast<double>(y.event[i]);
      }
      return g;
    }
  }
  throw std::logic_error("unreachable");
}

CenterResult loss_center(const LossFamily& family, const SupervisingVariable& y) {
  if (family.kind != y.family.kind || family.classes != y.family.classes)
    throw std::invalid_argument("loss family does not match supervising variable");
  const Index n = y.size();
  CenterResult res;
  res.eta = Matrix::Zero(n, family.predictor_cols());
  switch (family.kind) {
    case Family::gaussian:
      res.eta.col(0).setConstant(y.values.col(0).mean());
      return res;
    case Family::bernoulli: {
      const double p = y.values.col(0).mean();
      double e;
      if (p <= 0.0 || p >= 1.0) {
        e = p <= 0.0 ? -kEtaClip : kEtaClip;
        res.clipped = true;
      } else {
        e = std::log(p / (1.0 - p));
        if (std::abs(e) > kEtaClip) {
          e = std::clamp(e, -kEtaClip, kEtaClip);
          res.clipped = true;
        }
      }
      res.eta.col(0).setConstant(e);
      return res;
    }
    case Family::poisson: {
      const double mu = y.values.col(0).mean();
      double e;
      if (mu <= 0.0) {
        e = -kEtaClip;
        res.clipped = true;
      } else {
        e = std::log(mu);
      }
      res.eta.col(0).setConstant(e);
      return res;
    }
    case Family::multinomial: {
      Vector freq = y.values.colwise().mean();
      Vector eta(freq.size());
      for (Index k = 0; k < freq.size(); ++k) {
        if (freq[k] <= 0.0) {
          eta[k] = -kEtaClip;
          res.clipped = true;
        } else {
          eta[k] = std::log(freq[k]);
        }
      }
      eta.array() -= eta.mean();  // sum-to-zero identification
      res.eta.rowwise() = eta.transpose();
      return res;
    }
    case Family::cox:
      // No constant minimizer is identified (shift invariance); zero by convention.
      return res;
  }
  throw std::logic_error("unreachable");
}

double null_deviance(const LossFamily& family, const SupervisingVariable& y) {
  return eval_loss(family, y, loss_center(family, y).eta);
}

std::pair<double, double> default_pi(const Matrix& X, const LossFamily& family,
                                     const SupervisingVariable& y) {
  const Matrix centered = X.rowwise() - X.colwise().mean();
  const double dx = 0.5 * centered.squaredNorm();
  if (dx <= 0.0)
    throw std::invalid_argument("constant data matrix: zero null deviance");
  const double dy = null_deviance(family, y);
  if (dy <= 0.0)
    throw std::invalid_argument("constant supervising variable: zero null deviance");
  return {1.0 / dx, 1.0 / dy};
}

double link(const LossFamily& family, double mu, bool* clipped) {
  switch (family.kind) {
    case Family::gaussian:
      return mu;
    case Family::bernoulli: {
      if (mu <= 0.0 || mu >= 1.0) {
        if (clipped) *clipped = true;
        return mu <= 0.0 ? -kEtaClip : kEtaClip;
      }
      const double e = std::log(mu / (1.0 - mu));
      if (std::abs(e) > kEtaClip) {
        if (clipped) *clipped = true;
        return std::clamp(e, -kEtaClip, kEtaClip);
      }
      return e;
    }
    case Family::poisson: {
      if (mu <= 0.0) {
        if (clipped) *clipped = true;
        return -kEtaClip;
      }
      return std::log(mu);
    }
    case Family::multinomial:
      throw std::invalid_argument("multinomial link is vector-valued, use link_probs");
    case Family::cox:
      throw std::invalid_argument("cox has no link function");
  }
  throw std::logic_error("unreachable");
}

double inverse_link(const LossFamily& family, double eta) {
  switch (family.kind) {
    case Family::gaussian:
      return eta;
    case Family::bernoulli:
      return sigmoid(eta);
    case Family::poisson:
      return std::exp(std::min(eta, kEtaClip));
    case Family::multinomial:
      throw std::invalid_argument("multinomial link is vector-valued, use inverse_link_probs");
    case Family::cox:
      throw std::invalid_argument("cox has no link function");
  }
  throw std::logic_error("unreachable");
}

Vector link_probs(const Vector& probs, bool* clipped) {
  Vector eta(probs.size());
  for (Index k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) {
      eta[k] = -kEtaClip;
      if (clipped) *clipped = true;
    } else {
      eta[k] = std::log(probs[k]);
    }
  }
  eta.array() -= eta.mean();
  return eta;
}

Vector inverse_link_probs(const Vector& eta) {
  const double m = eta.maxCoeff();
  Vector p = (eta.array() - m).exp();
  return p / p.sum();
}

}  // namespace fuseclust

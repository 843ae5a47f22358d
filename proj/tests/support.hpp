// Apache License, Version 2.0, refer to LICENSE

#pragma once

#include <cmath>
#include <vector>

#include "cviat/model.hpp"
#include "cviat/rng.hpp"

namespace cviat::testing {

/// State with K topics, positive m on the simplex and lambda > eta.
inline GlobalState random_state(RngStream& rng, ModelKind kind, int K, int W) {
  Hyper h;
  h.alpha = 0.5 + 6.0 * rng.uniform();
  h.gamma = 0.5 + 6.0 * rng.uniform();
  h.eta = 0.1 + 2.0 * rng.uniform();
  h.num_docs = 40;
  h.batch_size = 4;
  GlobalState s = GlobalState::empty(kind, h, W, kind == ModelKind::kGdp ? 0.5 + 20 * rng.uniform() : 0.0);
  s.m.resize(K + 1);
  for (int k = 0; k <= K; ++k) s.m(k) = 0.05 + rng.uniform();
  s.m /= s.m.sum();
  s.lambda.resize(K + 1, W);
  for (int k = 0; k <= K; ++k) {
    for (int w = 0; w < W; ++w) s.lambda(k, w) = h.eta + (k == 0 ? 0.0 : 10.0 * rng.uniform());
  }
  return s;
}

/// Batch of S documents with T recorded count vectors each; zeros included.
inline LocalSamples random_batch(RngStream& rng, int K, int S, int T) {
  LocalSamples batch(static_cast<std::size_t>(S));
  for (auto& doc : batch) {
    doc.num_tokens = 0;
    for (int t = 0; t < T; ++t) {
      IntVector n = IntVector::Zero(K + 1);
      for (int k = 0; k <= K; ++k) {
        n(k) = rng.uniform() < 0.3 ? 0 : static_cast<int>(rng.below(12));
      }
      if (t == 0) {
        doc.num_tokens = n.sum();
      } else {
        // keep the total fixed across samples: move surplus onto topic 0
        const int diff = doc.num_tokens - n.sum();
        if (diff >= 0) {
          n(0) += diff;
        } else {
          n = doc.counts.front();
        }
      }
      doc.counts.push_back(n);
    }
  }
  return batch;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

/// npelbo_hat with m = softmax(theta).
inline double npelbo_softmax(GlobalState s, const LocalSamples& batch, const Vector& theta) {
  const Vector e = (theta.array() - theta.maxCoeff()).exp().matrix();
  s.m = e / e.sum();
  return npelbo_hat(s, batch);
}

/// Largest relative error between the analytic softmax gradient
/// Lambda (m*/Lambda - m) and central differences of npelbo_hat.
inline double softmax_gradient_error(const GlobalState& s, const LocalSamples& batch) {
  const Vector u = mstar(s, batch);
  const double lambda = u.sum();
  const Vector analytic = u - lambda * s.m;
  const Vector theta = s.m.array().log().matrix();
  double worst = 0.0;
  double scale = analytic.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double h = 1e-5;
    Vector tp = theta, tm = theta;
    tp(k) += h;
    tm(k) -= h;
    const double fd = (npelbo_softmax(s, batch, tp) - npelbo_softmax(s, batch, tm)) / (2 * h);
    worst = std::max(worst, std::abs(fd - analytic(k)) / std::max(std::abs(analytic(k)), 1e-3 * scale));
  }
  return worst;
}

inline double mu_gradient_error(GlobalState s, const LocalSamples& batch, double mu) {
  s.mu = mu;
  const double analytic = mu_grad(s, batch);
  const double h = 1e-5 * mu;
  GlobalState a = s, b = s;
  a.mu = mu + h;
  b.mu = mu - h;
  const double fd = (npelbo_hat(a, batch) - npelbo_hat(b, batch)) / (2 * h);
  return rel_err(fd, analytic);
}

}  // namespace cviat::testing

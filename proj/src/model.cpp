// Apache License, Version 2.0, refer to LICENSE

#include "cviat/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cviat/error.hpp"

namespace cviat {

std::string_view to_string(ModelKind kind) { return kind == ModelKind::kHdp ? "hdp" : "gdp"; }

ModelKind parse_model_kind(std::string_view name) {
  if (name == "hdp") return ModelKind::kHdp;
  if (name == "gdp") return ModelKind::kGdp;
  throw UsageError("unknown model '" + std::string(name) + "' (expected hdp or gdp)");
}

void Hyper::validate() const {
  if (!(alpha > 0.0 && gamma > 0.0 && eta > 0.0)) {
    throw std::invalid_argument("alpha, gamma and eta must be positive");
  }
  if (batch_size < 1 || num_docs < 1) {
    throw std::invalid_argument("batch size and document count must be positive");
  }
  if (batch_size > num_docs) {
    throw std::invalid_argument("batch size " + std::to_string(batch_size) +
                                " exceeds the document count " + std::to_string(num_docs));
  }
}

GlobalState GlobalState::empty(ModelKind kind, const Hyper& hyper, int vocab_size, double mu) {
  if (vocab_size < 1) throw std::invalid_argument("vocabulary size must be positive");
  GlobalState state;
  state.kind = kind;
  state.hyper = hyper;
  state.m = Vector::Ones(1);
  state.lambda = Matrix::Constant(1, vocab_size, hyper.eta);
  state.mu = mu;
  return state;
}

void GlobalState::check_invariants(double simplex_tol) const {
  if (m.size() < 1 || lambda.rows() != m.size()) {
    throw std::logic_error("state: m and lambda disagree on the topic count");
  }
  if (std::abs(m.sum() - 1.0) > simplex_tol) {
    throw std::logic_error("state: m sums to " + std::to_string(m.sum()));
  }
  if (!(m.array() > 0.0).all()) throw std::logic_error("state: m has a nonpositive entry");
  if (!(lambda.array() >= hyper.eta).all()) throw std::logic_error("state: lambda below eta");
  if ((lambda.row(0).array() != hyper.eta).any()) {
    throw std::logic_error("state: remainder row of lambda must equal eta");
  }
  if (kind == ModelKind::kGdp && !(mu > 0.0)) throw std::logic_error("state: mu must be positive");
}

Vector expected_log_word_weights(const GlobalState& state, int k) {
  if (k < 0 || k > state.num_topics()) {
    throw std::out_of_range("expected_log_word_weights: topic " + std::to_string(k) +
                            " out of range");
  }
  const double eta = state.hyper.eta;
  const int W = state.vocab_size();
  if (k == kZeroTopic) {
    return Vector::Constant(W, digamma(eta) - digamma(W * eta));
  }
  const auto row = state.lambda.row(k).transpose().array();
  return (cviat::digamma(row) - cviat::digamma(row.sum())).matrix();
}

Matrix expected_log_word_weights(const GlobalState& state) {
  Matrix out(state.lambda.rows(), state.lambda.cols());
  for (int k = 0; k <= state.num_topics(); ++k) {
    out.row(k) = expected_log_word_weights(state, k).transpose();
  }
  return out;
}

namespace {

void check_batch(const GlobalState& state, const LocalSamples& batch) {
  const auto width = state.m.size();
  for (const auto& doc : batch) {
    for (const auto& n : doc.counts) {
      if (n.size() != width) {
        throw std::invalid_argument("batch count vector has " + std::to_string(n.size()) +
                                    " entries, state has " + std::to_string(width));
      }
    }
  }
}

Vector brackets_at(const GlobalState& state, const LocalSamples& batch, double c) {
  const int K = state.num_topics();
  Vector sums = Vector::Zero(K + 1);
  Vector base(K + 1);
  for (int k = 1; k <= K; ++k) base(k) = digamma(c * state.m(k));
  for (const auto& doc : batch) {
    if (doc.counts.empty()) continue;
    const double inv_t = 1.0 / doc.num_samples();
    for (const auto& n : doc.counts) {
      for (int k = 1; k <= K; ++k) {
        if (n(k) > 0) sums(k) += inv_t * (digamma(c * state.m(k) + n(k)) - base(k));
      }
    }
  }
  sums *= state.hyper.corpus_scale() * c;
  sums(0) = 0.0;
  return sums;
}

double mu_grad_at(const GlobalState& state, const LocalSamples& batch, double mu) {
  const int K = state.num_topics();
  const double alpha = state.hyper.alpha;
  double data = 0.0;
  Vector base(K + 1);
  for (int k = 1; k <= K; ++k) base(k) = digamma(mu * state.m(k));
  const double digamma_mu = digamma(mu);
  for (const auto& doc : batch) {
    double term = digamma_mu - digamma(mu + doc.num_tokens);
    if (!doc.counts.empty()) {
      const double inv_t = 1.0 / doc.num_samples();
      for (const auto& n : doc.counts) {
        for (int k = 1; k <= K; ++k) {
          if (n(k) > 0) term += inv_t * state.m(k) * (digamma(mu * state.m(k) + n(k)) - base(k));
        }
      }
    }
    data += term;
  }
  return -1.0 + (alpha - 1.0) / mu + state.hyper.corpus_scale() * data;
}

}  // namespace

Vector topic_brackets(const GlobalState& state, const LocalSamples& batch) {
  check_batch(state, batch);
  return brackets_at(state, batch, state.concentration());
}

Vector mstar(const GlobalState& state, const LocalSamples& batch) {
  Vector out = topic_brackets(state, batch).cwiseProduct(state.m).array() - 1.0;
  out(0) = state.hyper.alpha - 1.0;
  return out;
}

Matrix lambdastar(const LocalSamples& batch, std::span<const Document* const> docs,
                  const Hyper& hyper, int num_topics, int vocab_size) {
  if (docs.size() != batch.size()) {
    throw std::invalid_argument("lambdastar: batch and document lists differ in length");
  }
  Matrix counts = Matrix::Zero(num_topics + 1, vocab_size);
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto& doc = batch[s];
    if (doc.assignments.empty()) continue;
    const double inv_t = 1.0 / static_cast<double>(doc.assignments.size());
    const auto& tokens = docs[s]->tokens;
    for (const auto& z : doc.assignments) {
      if (z.size() != tokens.size()) {
        throw std::invalid_argument("lambdastar: assignment length differs from document");
      }
      for (std::size_t i = 0; i < z.size(); ++i) {
        if (z[i] < 0 || z[i] > num_topics) throw std::invalid_argument("lambdastar: bad topic");
        counts(z[i], tokens[i]) += inv_t;
      }
    }
  }
  counts.row(0).setZero();
  return (counts * hyper.corpus_scale()).array() + hyper.eta;
}

double npelbo_hat(const GlobalState& state, const LocalSamples& batch) {
  check_batch(state, batch);
  const int K = state.num_topics();
  const double alpha = state.hyper.alpha;
  const double c = state.concentration();

  double prior = -state.m.tail(K).array().log().sum();
  if (state.kind == ModelKind::kHdp) {
    prior += (alpha - 1.0) * std::log(state.m(0));
  } else {
    prior += -state.mu + (alpha - 1.0) * std::log(state.mu * state.m(0));
  }

  double data = 0.0;
  for (const auto& doc : batch) {
    double term = 0.0;
    if (state.kind == ModelKind::kGdp) term -= log_gamma_ratio(state.mu, doc.num_tokens);
    if (!doc.counts.empty()) {
      const double inv_t = 1.0 / doc.num_samples();
      for (const auto& n : doc.counts) {
        for (int k = 1; k <= K; ++k) {
          if (n(k) > 0) term += inv_t * log_gamma_ratio(c * state.m(k), n(k));
        }
      }
    }
    data += term;
  }
  return prior + state.hyper.corpus_scale() * data;
}

double mu_grad(const GlobalState& state, const LocalSamples& batch) {
  if (state.kind != ModelKind::kGdp) throw std::logic_error("mu_grad: state is not a GDP model");
  check_batch(state, batch);
  return mu_grad_at(state, batch, state.mu);
}

double mu_batch_optimum(const GlobalState& state, const LocalSamples& batch, double mu_min,
                        double mu_max) {
  if (state.kind != ModelKind::kGdp) throw std::logic_error("mu_batch_optimum: not a GDP model");
  check_batch(state, batch);
  double lo = std::log(mu_min);
  double hi = std::log(mu_max);
  if (mu_grad_at(state, batch, mu_min) <= 0.0) return mu_min;
  if (mu_grad_at(state, batch, mu_max) >= 0.0) return mu_max;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (mu_grad_at(state, batch, std::exp(mid)) > 0.0 ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

void apply_global_update(GlobalState& state, const LocalSamples& batch,
                         std::span<const Document* const> docs, const UpdateOptions& options) {
  const Vector m_target = floor_normalize(mstar(state, batch), options.floor_eps);
  const Matrix lambda_target =
      lambdastar(batch, docs, state.hyper, state.num_topics(), state.vocab_size());
  double log_mu_target = 0.0;
  if (state.kind == ModelKind::kGdp) log_mu_target = std::log(mu_batch_optimum(state, batch));

  state.m = blend(state.m, m_target, options.rho);
  state.m /= state.m.sum();
  state.lambda = blend(state.lambda, lambda_target, options.rho);
  state.lambda.row(0).setConstant(state.hyper.eta);
  if (state.kind == ModelKind::kGdp) {
    state.mu = std::exp((1.0 - options.rho) * std::log(state.mu) + options.rho * log_mu_target);
  }
  if (!std::isfinite(state.m.sum()) || !std::isfinite(state.lambda.sum()) ||
      !std::isfinite(state.mu)) {
    throw NumericalError("global update produced a non-finite parameter");
  }
}

}  // namespace cviat

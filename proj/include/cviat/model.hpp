// Apache License, Version 2.0, refer to LICENSE

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cviat/corpus.hpp"
#include "cviat/numerics.hpp"

namespace cviat {

enum class ModelKind { kHdp, kGdp };

std::string_view to_string(ModelKind kind);
/// Accepts "hdp" or "gdp"; throws UsageError otherwise.
ModelKind parse_model_kind(std::string_view name);

/// Index of the remainder ("zeroth") topic in every topic-indexed vector.
inline constexpr int kZeroTopic = 0;

struct Hyper {
  double alpha = 5.0;  // concentration of the top-level measure
  double gamma = 5.0;  // document-level concentration (HDP)
  double eta = 5.0;    // symmetric topic-word prior
  std::int64_t batch_size = 256;
  std::int64_t num_docs = 1;

  void validate() const;
  /// J / S, the factor that scales batch statistics to the whole corpus.
  double corpus_scale() const {
    return static_cast<double>(num_docs) / static_cast<double>(batch_size);
  }
};

/// Spike-and-slab variational state of the top-level measure plus the
/// topic-word Dirichlet parameters.
///
/// Topic k in 1..K owns m(k) and lambda.row(k). Index 0 is the remainder:
/// m(0) is the mass spread over unseen topics and lambda.row(0) is fixed at
/// the prior eta, so every topic-indexed array lines up with topic ids.
struct GlobalState {
  ModelKind kind = ModelKind::kHdp;
  Hyper hyper;
  Vector m;       // K + 1, sums to one
  Matrix lambda;  // (K + 1) x W
  double mu = 0.0;  // total mass of the top-level measure (GDP only)

  int num_topics() const { return static_cast<int>(m.size()) - 1; }
  int vocab_size() const { return static_cast<int>(lambda.cols()); }
  /// gamma for HDP, mu for GDP.
  double concentration() const { return kind == ModelKind::kHdp ? hyper.gamma : mu; }

  /// K = 0 state with all mass on the remainder.
  static GlobalState empty(ModelKind kind, const Hyper& hyper, int vocab_size, double mu = 0.0);

  /// Throws std::logic_error if the simplex, lambda >= eta or mu > 0
  /// invariants are violated.
  void check_invariants(double simplex_tol = 1e-12) const;
};

/// Entries Phi(lambda_kw) - Phi(sum_w lambda_kw) for topic k, or the constant
/// Phi(eta) - Phi(W eta) for kZeroTopic.
Vector expected_log_word_weights(const GlobalState& state, int k);
/// All topics at once, (K + 1) x W.
Matrix expected_log_word_weights(const GlobalState& state);

/// Recorded Gibbs output for one batch document.
///
/// counts[t](k) is the number of tokens on topic k in recorded sweep t and
/// assignments[t][i] the topic of token i in that sweep.
struct DocSamples {
  std::int32_t num_tokens = 0;
  std::vector<IntVector> counts;
  std::vector<std::vector<std::int32_t>> assignments;

  int num_samples() const { return static_cast<int>(counts.size()); }
};

using LocalSamples = std::vector<DocSamples>;

/// Per-topic derivative factor
///   B_k = (J/S) c sum_s T_s^-1 sum_t [Phi(c m_k + n_skt) - Phi(c m_k)],
/// entry 0 unused (zero).
Vector topic_brackets(const GlobalState& state, const LocalSamples& batch);

/// Unnormalized stationary point for m: B_k m_k - 1 for topics, alpha - 1
/// for the remainder. Pass through floor_normalize before use.
Vector mstar(const GlobalState& state, const LocalSamples& batch);

/// lambda*_kw = eta + (J/S) sum_s T_s^-1 sum_t #{i : z_sit = k, x_si = w},
/// (K + 1) x W with row 0 held at eta.
Matrix lambdastar(const LocalSamples& batch, std::span<const Document* const> docs,
                  const Hyper& hyper, int num_topics, int vocab_size);

/// Stochastic lower bound for the top-level measure, up to an additive
/// constant.
double npelbo_hat(const GlobalState& state, const LocalSamples& batch);

/// d npelbo_hat / d mu for the gamma-Dirichlet model.
double mu_grad(const GlobalState& state, const LocalSamples& batch);

/// Maximizer of the batch objective in mu with m held fixed, found by
/// bisection on mu_grad in log space and clamped to [mu_min, mu_max].
double mu_batch_optimum(const GlobalState& state, const LocalSamples& batch,
                        double mu_min = 1e-3, double mu_max = 1e6);

struct UpdateOptions {
  double rho = 1.0;
  double floor_eps = 1e-12;
};

/// One stochastic step: blend m toward the floored m*, lambda toward lambda*
/// and, for GDP, log mu toward the batch optimum.
void apply_global_update(GlobalState& state, const LocalSamples& batch,
                         std::span<const Document* const> docs, const UpdateOptions& options);

}  // namespace cviat

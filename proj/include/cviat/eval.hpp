// Apache License, Version 2.0, refer to LICENSE

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cviat/corpus.hpp"
#include "cviat/model.hpp"
#include "cviat/sampler.hpp"

namespace cviat {

/// Default Gibbs settings for test-document inference.
inline SamplerConfig default_eval_sampler() { return {50, 10, 1, false}; }

/// Expected topic-word distributions, (K + 1) x W. Row 0 is the prior mean
/// of the remainder topic.
Matrix expected_topic_word(const GlobalState& state);

/// Posterior-mean topic proportions of one test document from its observed
/// half: G_k = (c m_k + nbar_k) / (c + N_obs), births disabled.
Vector fit_test_doc(const Document& observed, const GlobalState& state, const SamplerConfig& cfg,
                    RngStream rng);

/// exp(-sum log sum_k G_jk beta_kw / #heldout words) for given proportions
/// (one vector per test document) and word distributions.
double perplexity_from(const HeldoutSplit& split, const std::vector<Vector>& proportions,
                       const Matrix& word_dists);

/// Fits every test document (in parallel, one stream per document) and
/// returns the held-out perplexity.
double heldout_perplexity(const HeldoutSplit& split, const GlobalState& state,
                          const SamplerConfig& cfg, std::uint64_t seed, int threads = 0);

struct TopicWords {
  int topic = 0;
  double weight = 0.0;  // m_k
  std::vector<WordId> words;
  std::vector<double> scores;  // lambda_kw
};

/// Topics by descending m_k, each with its n highest-lambda words (ties by
/// ascending word id). Limit the topic count with max_topics (0 = all).
std::vector<TopicWords> top_words(const GlobalState& state, int n, int max_topics = 0);

void write_top_words_tsv(const std::vector<TopicWords>& topics,
                         const std::vector<std::string>& vocab, std::ostream& out);
void write_top_words_json(const std::vector<TopicWords>& topics,
                          const std::vector<std::string>& vocab, std::ostream& out);

/// Exact law of the assignment vector of one document with births disabled.
/// Entry code(z) = sum_i z_i (K+1)^i holds
///   prod_{k>=1} Gamma(c m_k + n_k) / Gamma(c m_k) * (c m_0)^{n_0}
///   * prod_i exp(E[log beta_{z_i x_i}]),
/// normalized. Remainder tokens never share an atom, hence the power term.
struct JointDistribution {
  int num_outcomes = 0;  // K + 1
  int num_tokens = 0;
  Vector probability;

  std::vector<int> decode(Eigen::Index code) const;
  Eigen::Index encode(const std::vector<int>& z) const;
};

inline constexpr std::int64_t kMaxEnumerationStates = 1'000'000;

JointDistribution enumerate_joint(const Document& doc, const GlobalState& state);

/// Total-variation distance between two distributions on the same support.
double total_variation(const Vector& p, const Vector& q);

struct OracleReport {
  double tv = 0.0;
  double max_conditional_error = 0.0;
  std::int64_t sweeps = 0;
};

/// Runs a birth-free chain for `sweeps` recorded sweeps and compares its
/// empirical assignment law with enumerate_joint, and every single-site
/// conditional with the ratios of the exact joint.
OracleReport oracle_check(const Document& doc, const GlobalState& state, std::int64_t sweeps,
                          RngStream rng);

/// Random tiny instance for oracle checks: K in {1,2}, W <= 5, N <= 8.
struct TinyInstance {
  Document doc;
  GlobalState state;
};
TinyInstance random_tiny_instance(RngStream& rng, ModelKind kind = ModelKind::kHdp);

}  // namespace cviat

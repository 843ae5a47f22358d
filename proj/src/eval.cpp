// Apache License, Version 2.0, refer to LICENSE

#include "cviat/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <omp.h>

#include "json.hpp"

namespace cviat {

Matrix expected_topic_word(const GlobalState& state) {
  Matrix beta = state.lambda;
  for (Eigen::Index k = 0; k < beta.rows(); ++k) beta.row(k) /= beta.row(k).sum();
  return beta;
}

Vector fit_test_doc(const Document& observed, const GlobalState& state, const SamplerConfig& cfg,
                    RngStream rng) {
  if (observed.empty()) throw std::invalid_argument("fit_test_doc: observed half is empty");
  SamplerConfig fixed = cfg;
  fixed.birth_enabled = false;
  const TopicSnapshot snapshot(state);
  DocChain chain(observed, snapshot, rng);
  const ChainRun run = collect_samples(chain, snapshot, fixed);

  Vector mean_counts = Vector::Zero(state.num_topics() + 1);
  for (const auto& n : run.samples.counts) mean_counts += n.cast<double>();
  mean_counts /= run.samples.num_samples();

  const double c = state.concentration();
  const double n_obs = static_cast<double>(observed.size());
  return (c * state.m + mean_counts) / (c + n_obs);
}

double perplexity_from(const HeldoutSplit& split, const std::vector<Vector>& proportions,
                       const Matrix& word_dists) {
  if (proportions.size() != split.test.size()) {
    throw std::invalid_argument("perplexity: one proportion vector per test document required");
  }
  double log_lik = 0.0;
  std::size_t words = 0;
  for (std::size_t j = 0; j < split.test.size(); ++j) {
    const Vector& g = proportions[j];
    if (g.size() != word_dists.rows()) throw std::invalid_argument("perplexity: size mismatch");
    for (WordId w : split.test[j].heldout.tokens) {
      const double p = g.dot(word_dists.col(w));
      if (!(p > 0.0)) throw std::logic_error("perplexity: zero predictive probability");
      log_lik += std::log(p);
    }
    words += split.test[j].heldout.size();
  }
  if (words == 0) throw std::invalid_argument("perplexity: no held-out words");
  return std::exp(-log_lik / static_cast<double>(words));
}

double heldout_perplexity(const HeldoutSplit& split, const GlobalState& state,
                          const SamplerConfig& cfg, std::uint64_t seed, int threads) {
  if (split.train.vocab_size != state.vocab_size()) {
    throw std::invalid_argument("perplexity: split and model disagree on the vocabulary size");
  }
  std::vector<Vector> proportions(split.test.size());
  const auto n = static_cast<std::int64_t>(split.test.size());
  const int workers = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (std::int64_t j = 0; j < n; ++j) {
    const auto idx = static_cast<std::size_t>(j);
    proportions[idx] = fit_test_doc(split.test[idx].observed, state, cfg,
                                    RngStream(seed, {static_cast<std::uint64_t>(j), kEvalStream}));
  }
  return perplexity_from(split, proportions, expected_topic_word(state));
}

std::vector<TopicWords> top_words(const GlobalState& state, int n, int max_topics) {
  if (n < 1) throw std::invalid_argument("top_words: n must be positive");
  const int K = state.num_topics();
  const int W = state.vocab_size();
  std::vector<int> order(static_cast<std::size_t>(K));
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return state.m(a) > state.m(b); });
  if (max_topics > 0 && static_cast<int>(order.size()) > max_topics) order.resize(max_topics);

  const int take = std::min(n, W);
  std::vector<TopicWords> out;
  for (int k : order) {
    std::vector<WordId> words(static_cast<std::size_t>(W));
    std::iota(words.begin(), words.end(), 0);
    const auto row = state.lambda.row(k);
    std::partial_sort(words.begin(), words.begin() + take, words.end(), [&](WordId a, WordId b) {
      return row(a) > row(b) || (row(a) == row(b) && a < b);
    });
    words.resize(static_cast<std::size_t>(take));
    TopicWords t{k, state.m(k), words, {}};
    for (WordId w : words) t.scores.push_back(row(w));
    out.push_back(std::move(t));
  }
  return out;
}

namespace {
std::string term(const std::vector<std::string>& vocab, WordId w) {
  return static_cast<std::size_t>(w) < vocab.size() ? vocab[static_cast<std::size_t>(w)]
                                                     : "w" + std::to_string(w);
}
}  // namespace

void write_top_words_tsv(const std::vector<TopicWords>& topics,
                         const std::vector<std::string>& vocab, std::ostream& out) {
  out << "rank\ttopic\tweight\twords\n";
  int rank = 1;
  for (const auto& t : topics) {
    out << rank++ << '\t' << t.topic << '\t' << t.weight << '\t';
    for (std::size_t i = 0; i < t.words.size(); ++i) out << (i ? " " : "") << term(vocab, t.words[i]);
    out << '\n';
  }
}

void write_top_words_json(const std::vector<TopicWords>& topics,
                          const std::vector<std::string>& vocab, std::ostream& out) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& t : topics) {
    nlohmann::json words = nlohmann::json::array();
    for (std::size_t i = 0; i < t.words.size(); ++i) {
      words.push_back({{"term", term(vocab, t.words[i])}, {"lambda", t.scores[i]}});
    }
    doc.push_back({{"topic", t.topic}, {"weight", t.weight}, {"words", words}});
  }
  out << doc.dump(2) << '\n';
}

std::vector<int> JointDistribution::decode(Eigen::Index code) const {
  std::vector<int> z(static_cast<std::size_t>(num_tokens));
  for (auto& v : z) {
    v = static_cast<int>(code % num_outcomes);
    code /= num_outcomes;
  }
  return z;
}

Eigen::Index JointDistribution::encode(const std::vector<int>& z) const {
  Eigen::Index code = 0;
  for (auto it = z.rbegin(); it != z.rend(); ++it) code = code * num_outcomes + *it;
  return code;
}

JointDistribution enumerate_joint(const Document& doc, const GlobalState& state) {
  const int outcomes = state.num_topics() + 1;
  const int n_tokens = static_cast<int>(doc.size());
  double states = std::pow(static_cast<double>(outcomes), n_tokens);
  if (states > static_cast<double>(kMaxEnumerationStates)) {
    throw std::invalid_argument("enumerate_joint: state space exceeds 10^6 assignments");
  }
  JointDistribution joint{outcomes, n_tokens, Vector(static_cast<Eigen::Index>(states))};
  const Matrix elw = expected_log_word_weights(state);
  const double c = state.concentration();

  std::vector<int> n(static_cast<std::size_t>(outcomes));
  for (Eigen::Index code = 0; code < joint.probability.size(); ++code) {
    const auto z = joint.decode(code);
    std::fill(n.begin(), n.end(), 0);
    double log_w = 0.0;
    for (int i = 0; i < n_tokens; ++i) {
      ++n[static_cast<std::size_t>(z[i])];
      log_w += elw(z[i], doc.tokens[static_cast<std::size_t>(i)]);
    }
    log_w += n[0] * std::log(c * state.m(0));
    for (int k = 1; k < outcomes; ++k) log_w += log_gamma_ratio(c * state.m(k), n[k]);
    joint.probability(code) = log_w;
  }
  const double top = joint.probability.maxCoeff();
  joint.probability = (joint.probability.array() - top).exp().matrix();
  joint.probability /= joint.probability.sum();
  return joint;
}

double total_variation(const Vector& p, const Vector& q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
  return 0.5 * (p - q).cwiseAbs().sum();
}

OracleReport oracle_check(const Document& doc, const GlobalState& state, std::int64_t sweeps,
                          RngStream rng) {
  const JointDistribution joint = enumerate_joint(doc, state);
  const TopicSnapshot snapshot(state);
  SamplerConfig cfg{1, 1, 1, false};
  OracleReport report;

  // Single-site conditionals against ratios of the exact joint, every state.
  DocChain probe(doc, snapshot, rng);
  for (Eigen::Index code = 0; code < joint.probability.size(); ++code) {
    auto z = joint.decode(code);
    probe.z.assign(z.begin(), z.end());
    probe.counts.setZero();
    for (int k : z) ++probe.counts(k);
    for (int i = 0; i < joint.num_tokens; ++i) {
      const Vector p = full_conditional(probe, static_cast<std::size_t>(i), snapshot);
      Vector exact(joint.num_outcomes);
      auto alt = z;
      for (int k = 0; k < joint.num_outcomes; ++k) {
        alt[static_cast<std::size_t>(i)] = k;
        exact(k) = joint.probability(joint.encode(alt));
      }
      exact /= exact.sum();
      report.max_conditional_error =
          std::max(report.max_conditional_error, (p - exact).cwiseAbs().maxCoeff());
    }
  }

  DocChain chain(doc, snapshot, rng);
  initialize_chain(chain, snapshot, cfg);
  for (int b = 0; b < 100; ++b) gibbs_sweep(chain, snapshot, cfg);
  Vector freq = Vector::Zero(joint.probability.size());
  std::vector<int> z(chain.z.size());
  for (std::int64_t t = 0; t < sweeps; ++t) {
    gibbs_sweep(chain, snapshot, cfg);
    std::copy(chain.z.begin(), chain.z.end(), z.begin());
    freq(joint.encode(z)) += 1.0;
  }
  freq /= static_cast<double>(sweeps);
  report.tv = total_variation(freq, joint.probability);
  report.sweeps = sweeps;
  return report;
}

TinyInstance random_tiny_instance(RngStream& rng, ModelKind kind) {
  const int K = 1 + static_cast<int>(rng.below(2));
  const int W = 2 + static_cast<int>(rng.below(4));
  const int N = 1 + static_cast<int>(rng.below(8));
  Hyper hyper;
  hyper.alpha = 0.5 + 4.5 * rng.uniform();
  hyper.gamma = 0.5 + 4.5 * rng.uniform();
  hyper.eta = 0.2 + 2.0 * rng.uniform();
  hyper.batch_size = 1;
  hyper.num_docs = 1;

  GlobalState state = GlobalState::empty(kind, hyper, W, 0.5 + 4.5 * rng.uniform());
  Vector m(K + 1);
  for (int k = 0; k <= K; ++k) m(k) = 0.1 + rng.uniform();
  state.m = m / m.sum();
  state.lambda.conservativeResize(K + 1, Eigen::NoChange);
  for (int k = 1; k <= K; ++k) {
    for (int w = 0; w < W; ++w) state.lambda(k, w) = hyper.eta + 4.0 * rng.uniform();
  }
  Document doc;
  for (int i = 0; i < N; ++i) doc.tokens.push_back(static_cast<WordId>(rng.below(W)));
  return {std::move(doc), std::move(state)};
}

}  // namespace cviat

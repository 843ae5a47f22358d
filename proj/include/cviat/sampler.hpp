// Apache License, Version 2.0, refer to LICENSE

#pragma once

#include <cstdint>
#include <vector>

#include "cviat/corpus.hpp"
#include "cviat/model.hpp"
#include "cviat/rng.hpp"

namespace cviat {

struct SamplerConfig {
  int burnin = 20;
  int samples = 5;  // recorded sweeps per document
  int thin = 2;
  bool birth_enabled = true;

  void validate() const;
};

/// Read-only view of the global state that chains sample against during one
/// batch. word_factor(k, w) = exp(E[log beta_kw]), stored so that column w
/// holds every topic's factor for word w.
struct TopicSnapshot {
  double concentration = 0.0;
  double alpha = 0.0;
  Vector m;                   // K + 1
  Vector prior;               // concentration * m
  Matrix word_factor;         // (K + 1) x W
  double zero_factor = 0.0;   // exp(Phi(eta) - Phi(W eta)), also used by newborn topics

  explicit TopicSnapshot(const GlobalState& state);
  int num_topics() const { return static_cast<int>(m.size()) - 1; }
};

/// Gibbs chain over the token assignments of one document.
///
/// Topics 0..K follow the snapshot; a chain that draws the remainder while
/// births are enabled appends a private topic K+1, K+2, ... whose mass is
/// split off its own copy of m_0. The engine later promotes private topics
/// that survive into recorded samples to global topics.
struct DocChain {
  const Document* doc = nullptr;
  std::vector<std::int32_t> z;  // -1 while unassigned
  IntVector counts;             // indexed like z values
  double remainder_mass = 0.0;  // chain-local m_0
  std::vector<double> born_mass;  // masses of private topics
  int births = 0;
  RngStream rng;

  DocChain(const Document& document, const TopicSnapshot& snapshot, RngStream stream);

  int num_topics() const { return static_cast<int>(counts.size()) - 1; }
  int base_topics() const { return num_topics() - static_cast<int>(born_mass.size()); }
};

/// Normalized conditional for token i given every other token, length K+1
/// (plus private topics). Token i's own assignment is excluded from counts.
Vector full_conditional(const DocChain& chain, std::size_t i, const TopicSnapshot& snapshot);

/// Sequential constructive pass: assigns tokens 0..N-1 in order, each from
/// the conditional given the tokens already placed.
int initialize_chain(DocChain& chain, const TopicSnapshot& snapshot, const SamplerConfig& cfg);

/// Resamples every token once in ascending order; returns the births.
int gibbs_sweep(DocChain& chain, const TopicSnapshot& snapshot, const SamplerConfig& cfg);

/// Appends a private topic with mass m_0 / (1 + alpha) to the chain.
int chain_topic_birth(DocChain& chain, double alpha);

/// Appends topic K+1 to the global state: m_{K+1} = m_0 / (1 + alpha),
/// m_0 <- m_0 alpha / (1 + alpha), lambda_{K+1} = eta.
int topic_birth(GlobalState& state);

bool counts_consistent(const DocChain& chain);

struct ChainRun {
  DocSamples samples;
  int births = 0;
  int sweeps = 0;
};

/// Initialize, burn in, then record cfg.samples sweeps spaced cfg.thin
/// apart. Count vectors are padded to the chain's final topic count.
ChainRun collect_samples(DocChain& chain, const TopicSnapshot& snapshot, const SamplerConfig& cfg);

}  // namespace cviat

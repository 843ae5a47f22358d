// Apache License, Version 2.0, refer to LICENSE

#include "cviat/sampler.hpp"

#include <cassert>
#include <stdexcept>

namespace cviat {

void SamplerConfig::validate() const {
  if (burnin < 1 || samples < 1 || thin < 1) {
    throw std::invalid_argument("sampler: burnin, samples and thin must be at least 1");
  }
}

TopicSnapshot::TopicSnapshot(const GlobalState& state)
    : concentration(state.concentration()), alpha(state.hyper.alpha), m(state.m) {
  prior = concentration * m;
  word_factor = expected_log_word_weights(state).array().exp().matrix();
  zero_factor = std::exp(digamma(state.hyper.eta) -
                         digamma(state.vocab_size() * state.hyper.eta));
}

DocChain::DocChain(const Document& document, const TopicSnapshot& snapshot, RngStream stream)
    : doc(&document),
      z(document.size(), -1),
      counts(IntVector::Zero(snapshot.num_topics() + 1)),
      remainder_mass(snapshot.m(0)),
      rng(stream) {}

namespace {

// Unnormalized conditional weights for a token of word w; counts must not
// include the token itself.
void conditional_weights(const DocChain& chain, WordId w, const TopicSnapshot& snapshot,
                         std::vector<double>& out) {
  const int base = chain.base_topics();
  const int total = chain.num_topics();
  out.resize(static_cast<std::size_t>(total) + 1);
  const double* factor = snapshot.word_factor.col(w).data();
  out[0] = snapshot.concentration * chain.remainder_mass * snapshot.zero_factor;
  for (int k = 1; k <= base; ++k) out[k] = (snapshot.prior(k) + chain.counts(k)) * factor[k];
  for (int k = base + 1; k <= total; ++k) {
    const double mass = chain.born_mass[static_cast<std::size_t>(k - base - 1)];
    out[k] = (snapshot.concentration * mass + chain.counts(k)) * snapshot.zero_factor;
  }
}

int draw(const std::vector<double>& weights, RngStream& rng) {
  double total = 0.0;
  for (double v : weights) total += v;
  double u = rng.uniform() * total;
  const int last = static_cast<int>(weights.size()) - 1;
  for (int k = 0; k < last; ++k) {
    u -= weights[k];
    if (u < 0.0) return k;
  }
  return last;
}

// Places token i (currently unassigned) by one draw from its conditional.
int place_token(DocChain& chain, std::size_t i, const TopicSnapshot& snapshot,
                const SamplerConfig& cfg, std::vector<double>& buffer) {
  const WordId w = chain.doc->tokens[i];
  conditional_weights(chain, w, snapshot, buffer);
  int k = draw(buffer, chain.rng);
  int born = 0;
  if (k == kZeroTopic && cfg.birth_enabled) {
    k = chain_topic_birth(chain, snapshot.alpha);
    born = 1;
  }
  chain.z[i] = k;
  ++chain.counts(k);
  return born;
}

}  // namespace

Vector full_conditional(const DocChain& chain, std::size_t i, const TopicSnapshot& snapshot) {
  if (i >= chain.z.size()) throw std::out_of_range("full_conditional: token index out of range");
  DocChain scratch = chain;
  if (scratch.z[i] >= 0) {
    --scratch.counts(scratch.z[i]);
    scratch.z[i] = -1;
  }
  std::vector<double> weights;
  conditional_weights(scratch, scratch.doc->tokens[i], snapshot, weights);
  Vector p = Eigen::Map<const Vector>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return p / p.sum();
}

int chain_topic_birth(DocChain& chain, double alpha) {
  const double mass = chain.remainder_mass / (1.0 + alpha);
  chain.remainder_mass *= alpha / (1.0 + alpha);
  chain.born_mass.push_back(mass);
  chain.counts.conservativeResize(chain.counts.size() + 1);
  chain.counts(chain.counts.size() - 1) = 0;
  ++chain.births;
  return chain.num_topics();
}

int topic_birth(GlobalState& state) {
  const double alpha = state.hyper.alpha;
  const int K = state.num_topics();
  const double m0 = state.m(0);
  state.m.conservativeResize(K + 2);
  state.m(K + 1) = m0 / (1.0 + alpha);
  state.m(0) = m0 - state.m(K + 1);
  state.lambda.conservativeResize(K + 2, Eigen::NoChange);
  state.lambda.row(K + 1).setConstant(state.hyper.eta);
  return K + 1;
}

bool counts_consistent(const DocChain& chain) {
  IntVector expected = IntVector::Zero(chain.counts.size());
  for (auto k : chain.z) {
    if (k < 0) continue;
    if (k >= expected.size()) return false;
    ++expected(k);
  }
  return expected == chain.counts;
}

int initialize_chain(DocChain& chain, const TopicSnapshot& snapshot, const SamplerConfig& cfg) {
  std::vector<double> buffer;
  int births = 0;
  for (std::size_t i = 0; i < chain.z.size(); ++i) {
    if (chain.z[i] >= 0) {
      --chain.counts(chain.z[i]);
      chain.z[i] = -1;
    }
    births += place_token(chain, i, snapshot, cfg, buffer);
  }
  return births;
}

int gibbs_sweep(DocChain& chain, const TopicSnapshot& snapshot, const SamplerConfig& cfg) {
  std::vector<double> buffer;
  buffer.reserve(static_cast<std::size_t>(chain.num_topics()) + 8);
  int births = 0;
  for (std::size_t i = 0; i < chain.z.size(); ++i) {
    if (chain.z[i] >= 0) {
      --chain.counts(chain.z[i]);
      chain.z[i] = -1;
    }
    births += place_token(chain, i, snapshot, cfg, buffer);
  }
  assert(counts_consistent(chain));
  return births;
}

ChainRun collect_samples(DocChain& chain, const TopicSnapshot& snapshot, const SamplerConfig& cfg) {
  cfg.validate();
  ChainRun run;
  run.samples.num_tokens = static_cast<std::int32_t>(chain.z.size());
  run.births += initialize_chain(chain, snapshot, cfg);
  for (int b = 0; b < cfg.burnin; ++b, ++run.sweeps) run.births += gibbs_sweep(chain, snapshot, cfg);
  for (int t = 0; t < cfg.samples; ++t) {
    for (int j = 0; j < cfg.thin; ++j, ++run.sweeps) run.births += gibbs_sweep(chain, snapshot, cfg);
    run.samples.counts.push_back(chain.counts);
    run.samples.assignments.push_back(chain.z);
  }
  const auto width = chain.counts.size();
  for (auto& n : run.samples.counts) {
    const auto old = n.size();
    if (old < width) {
      n.conservativeResize(width);
      n.tail(width - old).setZero();
    }
  }
  return run;
}

}  // namespace cviat

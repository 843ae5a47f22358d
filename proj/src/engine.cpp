// Apache License, Version 2.0, refer to LICENSE

#include "cviat/engine.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <omp.h>

#include "cviat/error.hpp"
#include "cviat/log.hpp"
#include "text_io.hpp"

namespace cviat {

void RunConfig::validate() const {
  hyper.validate();
  sampler.validate();
  eval_sampler.validate();
  Schedule(schedule.tau0(), schedule.kappa());
  if (iters < 0) throw std::invalid_argument("iters must be nonnegative");
  if (init_topics < 0) throw std::invalid_argument("init_topics must be nonnegative");
  if (!(prune_eps > 0.0) || prune_window < 1) {
    throw std::invalid_argument("prune_eps and prune_window must be positive");
  }
  if (!(floor_eps > 0.0)) throw std::invalid_argument("floor_eps must be positive");
  if (eval_every < 0) throw std::invalid_argument("eval_every must be nonnegative");
  if (threads < 0) throw std::invalid_argument("threads must be nonnegative");
}

std::string metrics_header() { return "iter,elapsed_sec,K,npelbo_hat,rho,births,prunes,perplexity"; }

std::string format_metrics_row(const MetricsRow& row) {
  std::string out = std::to_string(row.iter) + ",";
  if (row.elapsed_sec) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", *row.elapsed_sec);
    out += buf;
  }
  out += "," + std::to_string(row.num_topics) + "," + text::format_double(row.npelbo) + "," +
         text::format_double(row.rho) + "," + std::to_string(row.births) + "," +
         std::to_string(row.prunes) + ",";
  if (row.perplexity) out += text::format_double(*row.perplexity);
  return out;
}

GlobalState initial_state(const RunConfig& config, const Corpus& corpus) {
  Hyper hyper = config.hyper;
  hyper.num_docs = static_cast<std::int64_t>(corpus.num_docs());
  const int W = corpus.vocab_size;
  const int K = config.init_topics;
  GlobalState state =
      GlobalState::empty(config.model, hyper, W, config.model == ModelKind::kGdp ? hyper.alpha : 0.0);
  state.m = Vector::Constant(K + 1, 1.0 / (K + 1));
  state.lambda = Matrix::Constant(K + 1, W, hyper.eta);
  if (K > 0) {
    RngStream rng(config.seed, {0, kInitStream});
    const double scale =
        static_cast<double>(corpus.num_tokens()) / (static_cast<double>(K) * W);
    for (int k = 1; k <= K; ++k) {
      for (int w = 0; w < W; ++w) state.lambda(k, w) += -std::log1p(-rng.uniform()) * scale;
    }
  }
  return state;
}

PruneOutcome prune(GlobalState& state, std::vector<std::int64_t>& last_active,
                   std::int64_t iteration, double eps, int window) {
  const int K = state.num_topics();
  if (static_cast<int>(last_active.size()) != K + 1) {
    throw std::invalid_argument("prune: activity record does not match the topic count");
  }
  PruneOutcome outcome;
  outcome.old_to_new.assign(static_cast<std::size_t>(K) + 1, -1);
  outcome.old_to_new[0] = 0;
  std::vector<int> keep{0};
  for (int k = 1; k <= K; ++k) {
    const bool dead = state.m(k) < eps && iteration - last_active[static_cast<std::size_t>(k)] >= window;
    if (dead) {
      ++outcome.removed;
      continue;
    }
    outcome.old_to_new[static_cast<std::size_t>(k)] = static_cast<int>(keep.size());
    keep.push_back(k);
  }
  if (outcome.removed == 0) return outcome;

  Vector m(static_cast<Eigen::Index>(keep.size()));
  Matrix lambda(static_cast<Eigen::Index>(keep.size()), state.lambda.cols());
  std::vector<std::int64_t> active(keep.size());
  double freed = 0.0;
  for (int k = 1; k <= K; ++k) {
    if (outcome.old_to_new[static_cast<std::size_t>(k)] < 0) freed += state.m(k);
  }
  for (std::size_t i = 0; i < keep.size(); ++i) {
    m(static_cast<Eigen::Index>(i)) = state.m(keep[i]);
    lambda.row(static_cast<Eigen::Index>(i)) = state.lambda.row(keep[i]);
    active[i] = last_active[static_cast<std::size_t>(keep[i])];
  }
  m(0) += freed;
  state.m = std::move(m);
  state.lambda = std::move(lambda);
  last_active = std::move(active);
  return outcome;
}

std::uint64_t eval_seed(std::uint64_t seed, std::int64_t tau) {
  return seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(tau + 1));
}

namespace {

Hyper hyper_for(const RunConfig& config, const Corpus& corpus) {
  Hyper hyper = config.hyper;
  hyper.num_docs = static_cast<std::int64_t>(corpus.num_docs());
  if (hyper.batch_size > hyper.num_docs) {
    log_warn("batch size " + std::to_string(hyper.batch_size) + " exceeds the " +
             std::to_string(hyper.num_docs) + " training documents; using " +
             std::to_string(hyper.num_docs));
    hyper.batch_size = hyper.num_docs;
  }
  return hyper;
}

}  // namespace

Trainer::Trainer(RunConfig config, const Corpus& corpus)
    : config_(std::move(config)), corpus_(&corpus), started_(std::chrono::steady_clock::now()) {
  if (corpus.num_docs() == 0) throw DataError("training corpus is empty");
  corpus.validate();
  config_.hyper = hyper_for(config_, corpus);
  config_.validate();
  state_ = initial_state(config_, corpus);
  last_active_.assign(static_cast<std::size_t>(state_.num_topics()) + 1, 0);
}

Trainer::Trainer(const Checkpoint& checkpoint, const Corpus& corpus)
    : config_(checkpoint.config),
      corpus_(&corpus),
      state_(checkpoint.state),
      iteration_(checkpoint.iteration),
      last_active_(checkpoint.last_active),
      started_(std::chrono::steady_clock::now()) {
  corpus.validate();
  if (static_cast<std::int64_t>(corpus.num_docs()) != config_.hyper.num_docs ||
      corpus.vocab_size != state_.vocab_size()) {
    throw DataError("checkpoint was written for a corpus with " +
                    std::to_string(config_.hyper.num_docs) + " documents and W=" +
                    std::to_string(state_.vocab_size()));
  }
  config_.validate();
}

Checkpoint Trainer::checkpoint() const { return {config_, iteration_, state_, last_active_}; }

std::vector<std::size_t> Trainer::select_batch(std::int64_t tau) const {
  const std::size_t J = corpus_->num_docs();
  const auto S = static_cast<std::size_t>(config_.hyper.batch_size);
  std::vector<std::size_t> order(J);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RngStream rng(config_.seed, {static_cast<std::uint64_t>(tau), kBatchStream});
  for (std::size_t i = 0; i < S; ++i) std::swap(order[i], order[i + rng.below(J - i)]);
  order.resize(S);
  return order;
}

MetricsRow Trainer::step() {
  const std::int64_t tau = ++iteration_;
  MetricsRow row;
  row.iter = tau;
  row.rho = step_size(tau, config_.schedule);

  const auto batch = select_batch(tau);
  std::vector<ChainRun> runs(batch.size());
  std::vector<std::vector<int>> remap(batch.size());
  const int workers = config_.threads > 0 ? config_.threads : omp_get_max_threads();

  // Chains run in fixed waves against a snapshot taken at the wave start.
  // Private topics are promoted in batch order at the end of each wave, so
  // later waves see them and the reduced m_0, independent of thread timing.
  for (std::size_t begin = 0; begin < batch.size(); begin += kBirthWave) {
    const std::size_t end = std::min(batch.size(), begin + kBirthWave);
    const TopicSnapshot snapshot(state_);
    const int base = snapshot.num_topics();
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (std::int64_t s = static_cast<std::int64_t>(begin); s < static_cast<std::int64_t>(end); ++s) {
      const std::size_t d = batch[static_cast<std::size_t>(s)];
      DocChain chain(corpus_->docs[d], snapshot,
                     RngStream(config_.seed, {static_cast<std::uint64_t>(tau), d}));
      runs[static_cast<std::size_t>(s)] = collect_samples(chain, snapshot, config_.sampler);
    }
    // Only private topics holding tokens in some recorded sample survive.
    for (std::size_t s = begin; s < end; ++s) {
      const auto& run = runs[s];
      const auto width = run.samples.counts.empty() ? base + 1 : run.samples.counts[0].size();
      IntVector total = IntVector::Zero(static_cast<Eigen::Index>(width));
      for (const auto& n : run.samples.counts) total += n;
      auto& map = remap[s];
      map.resize(static_cast<std::size_t>(width));
      std::iota(map.begin(), map.begin() + base + 1, 0);
      for (auto k = static_cast<Eigen::Index>(base) + 1; k < total.size(); ++k) {
        if (total(k) > 0) {
          map[static_cast<std::size_t>(k)] = topic_birth(state_);
          ++row.births;
        } else {
          map[static_cast<std::size_t>(k)] = -1;
        }
      }
    }
  }
  const int K = state_.num_topics();
  last_active_.resize(static_cast<std::size_t>(K) + 1, tau);

  LocalSamples samples(batch.size());
  std::vector<const Document*> docs(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    docs[s] = &corpus_->docs[batch[s]];
    auto& local = runs[s].samples;
    auto& out = samples[s];
    out.num_tokens = local.num_tokens;
    const auto& map = remap[s];
    for (const auto& n : local.counts) {
      IntVector g = IntVector::Zero(K + 1);
      for (Eigen::Index k = 0; k < n.size(); ++k) {
        if (n(k) > 0) g(map[static_cast<std::size_t>(k)]) += n(k);
      }
      out.counts.push_back(std::move(g));
    }
    for (auto& z : local.assignments) {
      for (auto& k : z) k = map[static_cast<std::size_t>(k)];
      out.assignments.push_back(std::move(z));
    }
    for (const auto& n : out.counts) {
      for (int k = 1; k <= K; ++k) {
        if (n(k) > 0) last_active_[static_cast<std::size_t>(k)] = tau;
      }
    }
  }

  row.npelbo = npelbo_hat(state_, samples);
  if (!std::isfinite(row.npelbo)) {
    throw NumericalError("non-finite npelbo_hat at iteration " + std::to_string(tau));
  }
  apply_global_update(state_, samples, docs, {row.rho, config_.floor_eps});

  if (config_.prune) {
    const auto outcome =
        prune(state_, last_active_, tau, config_.prune_eps, config_.prune_window);
    row.prunes = outcome.removed;
    if (outcome.removed > 0 && log_level() >= LogLevel::kInfo) {
      std::string msg = "iteration " + std::to_string(tau) + ": pruned topics";
      for (std::size_t k = 1; k < outcome.old_to_new.size(); ++k) {
        msg += " " + std::to_string(k) + "->" + std::to_string(outcome.old_to_new[k]);
      }
      log_info(msg);
    }
  }
  row.num_topics = state_.num_topics();

  if (config_.eval_every > 0 && heldout_ != nullptr && tau % config_.eval_every == 0) {
    row.perplexity = heldout_perplexity(*heldout_, state_, config_.eval_sampler,
                                        eval_seed(config_.seed, tau), config_.threads);
  }
  if (config_.record_time) {
    row.elapsed_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  }
  return row;
}

TrainResult train(const RunConfig& config, const Corpus& corpus, const HeldoutSplit* heldout,
                  std::ostream* metrics) {
  Trainer trainer(config, corpus);
  trainer.set_heldout(heldout);
  TrainResult result;
  if (metrics != nullptr) *metrics << metrics_header() << '\n' << std::flush;
  for (std::int64_t t = 0; t < config.iters; ++t) {
    result.metrics.push_back(trainer.step());
    if (metrics != nullptr) *metrics << format_metrics_row(result.metrics.back()) << '\n' << std::flush;
  }
  result.state = trainer.state();
  result.checkpoint = trainer.checkpoint();
  return result;
}

}  // namespace cviat

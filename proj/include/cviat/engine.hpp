// Apache License, Version 2.0, refer to LICENSE

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cviat/corpus.hpp"
#include "cviat/eval.hpp"
#include "cviat/model.hpp"
#include "cviat/sampler.hpp"

namespace cviat {

struct RunPaths {
  std::string corpus;
  std::string vocab;
  std::string checkpoint;
  std::string metrics;
};

/// Documents per wave of parallel chains; births become visible between waves.
inline constexpr std::size_t kBirthWave = 16;

struct RunConfig {
  ModelKind model = ModelKind::kHdp;
  Hyper hyper;  // num_docs is taken from the training corpus
  Schedule schedule;
  SamplerConfig sampler;
  SamplerConfig eval_sampler = default_eval_sampler();
  std::int64_t iters = 100;
  int init_topics = 100;
  std::uint64_t seed = 1;
  bool prune = true;
  double prune_eps = 1e-8;
  int prune_window = 10;
  double floor_eps = 1e-12;
  std::int64_t eval_every = 0;  // 0 disables inline held-out evaluation
  int threads = 0;              // 0 = all available cores
  bool record_time = false;     // wall-clock column in the metrics log
  RunPaths paths;

  void validate() const;
};

struct MetricsRow {
  std::int64_t iter = 0;
  std::optional<double> elapsed_sec;
  int num_topics = 0;
  double npelbo = 0.0;
  double rho = 0.0;
  int births = 0;
  int prunes = 0;
  std::optional<double> perplexity;
};

std::string metrics_header();
std::string format_metrics_row(const MetricsRow& row);

/// Everything needed to continue a run bit-for-bit.
struct Checkpoint {
  static constexpr int kVersion = 1;

  RunConfig config;
  std::int64_t iteration = 0;
  GlobalState state;
  std::vector<std::int64_t> last_active;  // per topic, index 0 unused
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& text, const std::string& source = "checkpoint");
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// K0 topics with equal mass (remainder included) and lambda_kw = eta + e,
/// e ~ Exponential with mean (tokens in corpus) / (K0 W).
GlobalState initial_state(const RunConfig& config, const Corpus& corpus);

struct PruneOutcome {
  int removed = 0;
  std::vector<int> old_to_new;  // -1 for removed topics
};

/// Removes topics with m_k < eps that saw no batch counts in the last
/// `window` iterations; their mass moves to m_0 and indices are compacted.
PruneOutcome prune(GlobalState& state, std::vector<std::int64_t>& last_active,
                   std::int64_t iteration, double eps, int window);

/// Outer loop: per iteration, sample a batch without replacement, run one
/// Gibbs chain per batch document, promote surviving births, blend the
/// global parameters toward their batch targets and prune dead topics.
class Trainer {
 public:
  Trainer(RunConfig config, const Corpus& corpus);
  Trainer(const Checkpoint& checkpoint, const Corpus& corpus);

  /// Enables inline perplexity every config.eval_every iterations.
  void set_heldout(const HeldoutSplit* split) { heldout_ = split; }

  MetricsRow step();

  std::int64_t iteration() const { return iteration_; }
  const GlobalState& state() const { return state_; }
  const RunConfig& config() const { return config_; }
  const std::vector<std::int64_t>& last_active() const { return last_active_; }
  Checkpoint checkpoint() const;

  /// Documents of iteration tau's batch, in reduction order.
  std::vector<std::size_t> select_batch(std::int64_t tau) const;

 private:
  RunConfig config_;
  const Corpus* corpus_;
  GlobalState state_;
  std::int64_t iteration_ = 0;
  std::vector<std::int64_t> last_active_;
  const HeldoutSplit* heldout_ = nullptr;
  std::chrono::steady_clock::time_point started_;
};

struct TrainResult {
  GlobalState state;
  std::vector<MetricsRow> metrics;
  Checkpoint checkpoint;
};

/// Runs config.iters iterations; rows are written to `metrics` as they are
/// produced when given.
TrainResult train(const RunConfig& config, const Corpus& corpus,
                  const HeldoutSplit* heldout = nullptr, std::ostream* metrics = nullptr);

/// Seed for the inline evaluation at iteration tau.
std::uint64_t eval_seed(std::uint64_t seed, std::int64_t tau);

}  // namespace cviat

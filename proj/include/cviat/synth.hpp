// Apache License, Version 2.0, refer to LICENSE

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "cviat/corpus.hpp"
#include "cviat/model.hpp"
#include "cviat/numerics.hpp"
#include "cviat/rng.hpp"

namespace cviat {

struct SynthConfig {
  int num_topics = 10;     // K_true
  int num_docs = 2000;     // J
  double mean_length = 100.0;
  int vocab_size = 200;    // W
  double alpha = 5.0;
  double gamma = 5.0;
  double eta = 5.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct GroundTruth {
  SynthConfig config;
  Vector global_weights;           // G_0, length K_true
  std::vector<Vector> doc_weights;  // G_j, one per document
  Matrix topics;                    // beta, K_true x W
  std::vector<std::vector<int>> assignments;  // z_ji
};

/// Draws a corpus from the two-level Dirichlet generative process with a
/// finite Dirichlet(alpha / K_true) surrogate for the top-level measure:
///   G_0 ~ Dir(alpha / K), beta_k ~ Dir(eta), N_j ~ max(1, Poisson(N_mean)),
///   G_j ~ Dir(gamma G_0), z ~ Cat(G_j), x ~ Cat(beta_z).
std::pair<Corpus, GroundTruth> generate(const SynthConfig& config);

/// Dirichlet draw computed in log space so tiny shape parameters do not
/// underflow every component to zero.
Vector sample_dirichlet(const Vector& shape, RngStream& rng);

/// HDP state holding the generating parameters: m = (~0, G_0), gamma as the
/// document concentration, and lambda = eta + scale * beta so that the
/// expected word distributions match beta to within eta / scale.
GlobalState truth_state(const GroundTruth& truth, double scale = 1e7);

/// Held-out perplexity when every test document is scored with its own
/// generating G_j and the true topics.
double oracle_perplexity(const GroundTruth& truth, const HeldoutSplit& split);

void write_ground_truth(const GroundTruth& truth, std::ostream& out);
GroundTruth read_ground_truth(std::istream& in);
void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);

}  // namespace cviat

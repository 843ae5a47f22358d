// Apache License, Version 2.0, refer to LICENSE

#include "cviat/synth.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "cviat/eval.hpp"
#include "text_io.hpp"

namespace cviat {

void SynthConfig::validate() const {
  if (num_topics < 1) throw std::invalid_argument("synth: need at least one topic");
  if (num_docs < 1 || vocab_size < 1) throw std::invalid_argument("synth: J and W must be positive");
  if (!(mean_length > 0.0 && alpha > 0.0 && gamma > 0.0 && eta > 0.0)) {
    throw std::invalid_argument("synth: mean length and concentrations must be positive");
  }
}

Vector sample_dirichlet(const Vector& shape, RngStream& rng) {
  // Gamma(a) = Gamma(a + 1) * U^(1/a), kept in logs.
  Vector log_g(shape.size());
  for (Eigen::Index k = 0; k < shape.size(); ++k) {
    std::gamma_distribution<double> boosted(shape(k) + 1.0, 1.0);
    double u = rng.uniform();
    while (u == 0.0) u = rng.uniform();
    log_g(k) = std::log(boosted(rng)) + std::log(u) / shape(k);
  }
  const double top = log_g.maxCoeff();
  Vector out = (log_g.array() - top).exp().matrix();
  return out / out.sum();
}

namespace {
int draw_categorical(const Vector& p, RngStream& rng) {
  double u = rng.uniform();
  const auto last = static_cast<int>(p.size()) - 1;
  for (int k = 0; k < last; ++k) {
    u -= p(k);
    if (u < 0.0) return k;
  }
  return last;
}
}  // namespace

std::pair<Corpus, GroundTruth> generate(const SynthConfig& config) {
  config.validate();
  const int K = config.num_topics;
  const int W = config.vocab_size;
  GroundTruth truth;
  truth.config = config;

  RngStream global_rng(config.seed, {0, kSynthStream});
  truth.global_weights = sample_dirichlet(Vector::Constant(K, config.alpha / K), global_rng);
  truth.topics.resize(K, W);
  for (int k = 0; k < K; ++k) {
    truth.topics.row(k) = sample_dirichlet(Vector::Constant(W, config.eta), global_rng).transpose();
  }

  Corpus corpus;
  corpus.vocab_size = W;
  for (int w = 0; w < W; ++w) {
    std::string id = std::to_string(w + 1);
    corpus.vocab.push_back("w" + std::string(id.size() < 4 ? 4 - id.size() : 0, '0') + id);
  }
  for (int j = 0; j < config.num_docs; ++j) {
    RngStream rng(config.seed, {static_cast<std::uint64_t>(j) + 1, kSynthStream});
    std::poisson_distribution<int> length(config.mean_length);
    const int n = std::max(1, length(rng));
    Vector g = sample_dirichlet(config.gamma * truth.global_weights, rng);
    Document doc;
    std::vector<int> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      z[i] = draw_categorical(g, rng);
      doc.tokens.push_back(static_cast<WordId>(draw_categorical(truth.topics.row(z[i]).transpose(), rng)));
    }
    corpus.docs.push_back(std::move(doc));
    truth.doc_weights.push_back(std::move(g));
    truth.assignments.push_back(std::move(z));
  }
  return {std::move(corpus), std::move(truth)};
}

void write_ground_truth(const GroundTruth& truth, std::ostream& out) {
  const auto& c = truth.config;
  const auto row = [&out](const std::string& key, const auto& values) {
    out << key;
    for (Eigen::Index i = 0; i < values.size(); ++i) out << ' ' << text::format_double(values(i));
    out << '\n';
  };
  out << "cviat-ground-truth 1\n";
  out << "topics " << c.num_topics << "\ndocs " << c.num_docs << "\nvocab " << c.vocab_size << '\n';
  out << "mean_length " << text::format_double(c.mean_length) << '\n';
  out << "alpha " << text::format_double(c.alpha) << "\ngamma " << text::format_double(c.gamma)
      << "\neta " << text::format_double(c.eta) << "\nseed " << c.seed << '\n';
  row("global", truth.global_weights);
  for (Eigen::Index k = 0; k < truth.topics.rows(); ++k) row("topic", truth.topics.row(k));
  for (const auto& g : truth.doc_weights) row("doc", g);
  for (const auto& z : truth.assignments) {
    out << "assign";
    for (int k : z) out << ' ' << k;
    out << '\n';
  }
}

GroundTruth read_ground_truth(std::istream& in) {
  text::KeyValueReader reader(in, "ground truth");
  GroundTruth truth;
  auto& c = truth.config;
  if (reader.expect("cviat-ground-truth")[0] != "1") reader.fail("unsupported version");
  c.num_topics = static_cast<int>(text::parse_int(reader.expect("topics")[0], reader.context()));
  c.num_docs = static_cast<int>(text::parse_int(reader.expect("docs")[0], reader.context()));
  c.vocab_size = static_cast<int>(text::parse_int(reader.expect("vocab")[0], reader.context()));
  c.mean_length = text::parse_double(reader.expect("mean_length")[0], reader.context());
  c.alpha = text::parse_double(reader.expect("alpha")[0], reader.context());
  c.gamma = text::parse_double(reader.expect("gamma")[0], reader.context());
  c.eta = text::parse_double(reader.expect("eta")[0], reader.context());
  c.seed = text::parse_uint(reader.expect("seed")[0], reader.context());
  c.validate();

  const auto read_vector = [&](const std::string& key, int n) {
    auto f = reader.expect(key, static_cast<std::size_t>(n));
    if (f.size() != static_cast<std::size_t>(n)) reader.fail("'" + key + "' has the wrong length");
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = text::parse_double(f[static_cast<std::size_t>(i)], reader.context());
    return v;
  };
  truth.global_weights = read_vector("global", c.num_topics);
  truth.topics.resize(c.num_topics, c.vocab_size);
  for (int k = 0; k < c.num_topics; ++k) truth.topics.row(k) = read_vector("topic", c.vocab_size).transpose();
  for (int j = 0; j < c.num_docs; ++j) truth.doc_weights.push_back(read_vector("doc", c.num_topics));
  for (int j = 0; j < c.num_docs; ++j) {
    auto f = reader.expect("assign");
    std::vector<int> z;
    for (const auto& s : f) z.push_back(static_cast<int>(text::parse_int(s, reader.context())));
    truth.assignments.push_back(std::move(z));
  }
  return truth;
}

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_ground_truth(truth, out);
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_ground_truth(in);
}

GlobalState truth_state(const GroundTruth& truth, double scale) {
  const SynthConfig& c = truth.config;
  Hyper hyper;
  hyper.alpha = c.alpha;
  hyper.gamma = c.gamma;
  hyper.eta = c.eta;
  GlobalState state = GlobalState::empty(ModelKind::kHdp, hyper, c.vocab_size);
  const int K = c.num_topics;
  state.m.resize(K + 1);
  state.m(0) = 1e-12;
  state.m.tail(K) = truth.global_weights * (1.0 - 1e-12) / truth.global_weights.sum();
  state.lambda.resize(K + 1, c.vocab_size);
  state.lambda.row(0).setConstant(c.eta);
  state.lambda.bottomRows(K) = (scale * truth.topics.array() + c.eta).matrix();
  return state;
}

double oracle_perplexity(const GroundTruth& truth, const HeldoutSplit& split) {
  const int K = truth.config.num_topics;
  Matrix dists(K + 1, truth.config.vocab_size);
  dists.row(0).setConstant(1.0 / truth.config.vocab_size);
  dists.bottomRows(K) = truth.topics;
  std::vector<Vector> props;
  props.reserve(split.test.size());
  for (const auto& doc : split.test) {
    if (doc.source_index >= truth.doc_weights.size()) {
      throw std::invalid_argument("oracle_perplexity: split does not match the ground truth");
    }
    Vector g = Vector::Zero(K + 1);
    g.tail(K) = truth.doc_weights[doc.source_index];
    props.push_back(std::move(g));
  }
  return perplexity_from(split, props, dists);
}

}  // namespace cviat

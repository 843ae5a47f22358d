// Apache License, Version 2.0, refer to LICENSE

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cviat/error.hpp"
#include "cviat/eval.hpp"
#include "cviat/synth.hpp"
#include "doctest.h"

using namespace cviat;

namespace {

double mean_doc_entropy(const GroundTruth& truth) {
  double total = 0.0;
  for (const auto& g : truth.doc_weights) {
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      if (g(k) > 0) total -= g(k) * std::log(g(k));
    }
  }
  return total / static_cast<double>(truth.doc_weights.size());
}

}  // namespace

TEST_CASE("config validation") {
  SynthConfig c;
  CHECK_NOTHROW(c.validate());
  c.vocab_size = 0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("dirichlet draws lie on the simplex even for tiny shapes") {
  RngStream rng(1, {0, 0});
  for (double a : {1e-3, 0.1, 1.0, 30.0}) {
    const Vector p = sample_dirichlet(Vector::Constant(6, a), rng);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    CHECK((p.array() >= 0).all());
    CHECK(p.allFinite());
  }
}

TEST_CASE("generation is seeded") {
  SynthConfig c;
  c.num_docs = 50;
  c.mean_length = 20;
  c.vocab_size = 30;
  c.num_topics = 3;
  const auto [a, ta] = generate(c);
  const auto [b, tb] = generate(c);
  CHECK(a.docs == b.docs);
  CHECK(ta.topics == tb.topics);
  c.seed = 2;
  CHECK(generate(c).first.docs != a.docs);
  CHECK(a.num_docs() == 50);
  CHECK(a.vocab.size() == 30);
  CHECK_NOTHROW(a.validate());
  for (std::size_t j = 0; j < a.num_docs(); ++j) {
    CHECK(ta.assignments[j].size() == a.docs[j].size());
  }
}

TEST_CASE("a single topic reproduces its word distribution") {
  SynthConfig c;
  c.num_topics = 1;
  c.num_docs = 400;
  c.mean_length = 100;
  c.vocab_size = 8;
  c.eta = 2.0;
  const auto [corpus, truth] = generate(c);
  Vector freq = Vector::Zero(8);
  for (const auto& d : corpus.docs) {
    for (WordId w : d.tokens) freq(w) += 1.0;
  }
  freq /= freq.sum();
  CHECK((freq - truth.topics.row(0).transpose()).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("smaller gamma concentrates documents on fewer topics") {
  double low = 0.0, high = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    SynthConfig c;
    c.seed = 100 + rep;
    c.mean_length = 5;  // the proportions do not depend on the length
    c.gamma = 1.0;
    low += mean_doc_entropy(generate(c).second);
    c.gamma = 50.0;
    high += mean_doc_entropy(generate(c).second);
  }
  CHECK(low < high);
}

TEST_CASE("corpus and ground truth round trip") {
  SynthConfig c;
  c.num_docs = 30;
  c.mean_length = 15;
  c.vocab_size = 12;
  c.num_topics = 3;
  const auto [corpus, truth] = generate(c);
  std::ostringstream bow;
  write_bow(corpus, bow);
  std::istringstream in(bow.str());
  const Corpus back = read_bow(in);
  for (std::size_t j = 0; j < corpus.num_docs(); ++j) {
    auto x = back.docs[j].tokens, y = corpus.docs[j].tokens;
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    CHECK(x == y);
  }

  std::ostringstream out;
  write_ground_truth(truth, out);
  std::istringstream tin(out.str());
  const GroundTruth t2 = read_ground_truth(tin);
  CHECK(t2.topics == truth.topics);
  CHECK(t2.global_weights == truth.global_weights);
  CHECK(t2.assignments == truth.assignments);
  std::ostringstream again;
  write_ground_truth(t2, again);
  CHECK(again.str() == out.str());

  std::istringstream bad("cviat-ground-truth 2\n");
  CHECK_THROWS_AS(read_ground_truth(bad), DataError);
}

TEST_CASE("ground-truth perplexity is reproducible and beats the uniform model") {
  SynthConfig c;
  c.num_docs = 200;
  c.mean_length = 40;
  c.vocab_size = 50;
  c.eta = 0.1;
  const auto [corpus, truth] = generate(c);
  const HeldoutSplit split = split_heldout(corpus, 20, 4);
  const double p = oracle_perplexity(truth, split);
  CHECK(p == oracle_perplexity(truth, split));
  CHECK(p < 50.0);
  const GlobalState s = truth_state(truth);
  CHECK_NOTHROW(s.check_invariants());
  CHECK(expected_topic_word(s).bottomRows(c.num_topics).isApprox(truth.topics, 1e-5));
}

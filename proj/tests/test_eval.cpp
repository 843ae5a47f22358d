// Apache License, Version 2.0, refer to LICENSE

#include <cmath>
#include <numeric>
#include <sstream>

#include "cviat/engine.hpp"
#include "cviat/eval.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using namespace cviat;

namespace {

GlobalState make_state(double gamma, std::vector<double> m, int W, double eta) {
  Hyper h;
  h.gamma = gamma;
  h.eta = eta;
  GlobalState s = GlobalState::empty(ModelKind::kHdp, h, W);
  s.m = Eigen::Map<Vector>(m.data(), static_cast<Eigen::Index>(m.size()));
  s.lambda = Matrix::Constant(s.m.size(), W, eta);
  return s;
}

HeldoutSplit split_of(std::vector<std::pair<Document, Document>> docs, int W) {
  HeldoutSplit split;
  split.train.vocab_size = W;
  for (std::size_t j = 0; j < docs.size(); ++j) {
    split.test.push_back({j, docs[j].first, docs[j].second});
  }
  return split;
}

// Independent brute force: log weight of each assignment summed term by term.
Vector brute_force_joint(const Document& doc, const GlobalState& s) {
  const int K1 = s.num_topics() + 1;
  const int N = static_cast<int>(doc.size());
  const Matrix elw = expected_log_word_weights(s);
  const double c = s.concentration();
  Eigen::Index states = 1;
  for (int i = 0; i < N; ++i) states *= K1;
  Vector logw(states);
  for (Eigen::Index code = 0; code < states; ++code) {
    std::vector<int> n(static_cast<std::size_t>(K1), 0);
    double lw = 0.0;
    Eigen::Index rest = code;
    for (int i = 0; i < N; ++i) {
      const int k = static_cast<int>(rest % K1);
      rest /= K1;
      lw += elw(k, doc.tokens[static_cast<std::size_t>(i)]);
      if (k == 0) {
        lw += std::log(c * s.m(0));
      } else {
        lw += std::log(c * s.m(k) + n[static_cast<std::size_t>(k)]);
      }
      ++n[static_cast<std::size_t>(k)];
    }
    logw(code) = lw;
  }
  const Vector w = (logw.array() - logw.maxCoeff()).exp().matrix();
  return w / w.sum();
}

}  // namespace

TEST_CASE("expected topic-word rows") {
  GlobalState s = make_state(1, {0.5, 0.5}, 4, 2.0);
  s.lambda.row(1) << 2, 4, 6, 8;
  const Matrix b = expected_topic_word(s);
  CHECK(b.row(0).isApproxToConstant(0.25));
  CHECK(b(1, 3) == doctest::Approx(0.4));
  CHECK(std::abs(b.row(1).sum() - 1.0) <= 1e-15);
}

TEST_CASE("posterior-mean proportions") {
  GlobalState s = make_state(2, {0.5, 0.5}, 2, 1e-3);
  s.lambda.row(1) << 1000, 1000;
  const Document obs{{0, 1}};
  const Vector g = fit_test_doc(obs, s, default_eval_sampler(), RngStream(1, {0, 0}));
  CHECK(g(0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(g(1) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS_AS(fit_test_doc(Document{}, s, default_eval_sampler(), RngStream(1, {0, 0})),
                  std::invalid_argument);

  RngStream rng(3, {0, 0});
  const GlobalState r = cviat::testing::random_state(rng, ModelKind::kHdp, 4, 6);
  const Vector h = fit_test_doc(Document{{0, 1, 2, 3, 5, 5}}, r, default_eval_sampler(),
                                RngStream(2, {0, 0}));
  CHECK(std::abs(h.sum() - 1.0) <= 1e-12);
}

TEST_CASE("uniform model has perplexity W") {
  Hyper h;
  h.eta = 0.7;
  const GlobalState s = GlobalState::empty(ModelKind::kHdp, h, 37);
  const HeldoutSplit split = split_of({{Document{{1, 2}}, Document{{3, 4, 36}}},
                                       {Document{{0}}, Document{{0, 0, 9}}}},
                                      37);
  const double ppl = heldout_perplexity(split, s, default_eval_sampler(), 1);
  CHECK(std::abs(ppl - 37.0) <= 1e-12 * 37.0);
}

TEST_CASE("perplexity ignores topic labels") {
  RngStream rng(6, {0, 0});
  const int K = 4, W = 7;
  const GlobalState s = cviat::testing::random_state(rng, ModelKind::kHdp, K, W);
  std::vector<std::pair<Document, Document>> docs;
  for (int j = 0; j < 5; ++j) {
    Document a, b;
    for (int i = 0; i < 6; ++i) a.tokens.push_back(static_cast<WordId>(rng.below(W)));
    for (int i = 0; i < 6; ++i) b.tokens.push_back(static_cast<WordId>(rng.below(W)));
    docs.emplace_back(a, b);
  }
  const HeldoutSplit split = split_of(docs, W);
  std::vector<Vector> props;
  for (const auto& t : split.test) {
    props.push_back(fit_test_doc(t.observed, s, default_eval_sampler(), RngStream(1, {0, 0})));
  }
  const Matrix beta = expected_topic_word(s);
  const std::vector<int> perm{0, 3, 1, 4, 2};
  Matrix pbeta(beta.rows(), beta.cols());
  std::vector<Vector> pprops(props.size(), Vector(K + 1));
  for (int k = 0; k <= K; ++k) {
    pbeta.row(perm[k]) = beta.row(k);
    for (std::size_t j = 0; j < props.size(); ++j) pprops[j](perm[k]) = props[j](k);
  }
  const double a = perplexity_from(split, props, beta), b = perplexity_from(split, pprops, pbeta);
  CHECK(std::abs(a - b) <= 1e-10 * a);
}

TEST_CASE("pruning a dead topic leaves perplexity unchanged") {
  RngStream rng(12, {0, 0});
  GlobalState s = cviat::testing::random_state(rng, ModelKind::kHdp, 3, 6);
  GlobalState with_dead = s;
  topic_birth(with_dead);
  with_dead.m(0) += with_dead.m(4) - 1e-10;
  with_dead.m(4) = 1e-10;
  std::vector<std::pair<Document, Document>> docs;
  for (int j = 0; j < 8; ++j) {
    Document a, b;
    for (int i = 0; i < 10; ++i) a.tokens.push_back(static_cast<WordId>(rng.below(6)));
    for (int i = 0; i < 10; ++i) b.tokens.push_back(static_cast<WordId>(rng.below(6)));
    docs.emplace_back(a, b);
  }
  const HeldoutSplit split = split_of(docs, 6);
  const double before = heldout_perplexity(split, with_dead, default_eval_sampler(), 4);
  std::vector<std::int64_t> active{0, 10, 10, 10, 0};
  GlobalState pruned = with_dead;
  const PruneOutcome out = prune(pruned, active, 20, 1e-8, 10);
  REQUIRE(out.removed == 1);
  const double after = heldout_perplexity(split, pruned, default_eval_sampler(), 4);
  CHECK(std::abs(before - after) <= 1e-6 * before);
}

TEST_CASE("top words") {
  GlobalState s = make_state(1, {0.1, 0.3, 0.6}, 10, 0.5);
  s.lambda(1, 7) = 100.5;
  const auto all = top_words(s, 20);
  REQUIRE(all.size() == 2);
  CHECK(all[0].topic == 2);
  CHECK(all[0].words.size() == 10);
  CHECK(all[0].words == std::vector<WordId>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(all[1].words.front() == 7);
  CHECK(all[1].scores.front() == 100.5);
  const auto limited = top_words(s, 3, 1);
  REQUIRE(limited.size() == 1);
  CHECK(limited[0].words == std::vector<WordId>{0, 1, 2});
  CHECK_THROWS(top_words(s, 0));

  std::ostringstream tsv, js;
  std::vector<std::string> vocab;
  for (int w = 0; w < 10; ++w) vocab.push_back("t" + std::to_string(w));
  write_top_words_tsv(top_words(s, 2), vocab, tsv);
  CHECK(tsv.str().find("t7") != std::string::npos);
  write_top_words_json(top_words(s, 2), vocab, js);
  const auto parsed = nlohmann::json::parse(js.str());
  CHECK(parsed.is_array());
  CHECK(parsed.size() == 2);
}

TEST_CASE("joint enumeration") {
  RngStream rng(31, {0, 0});
  const GlobalState s = cviat::testing::random_state(rng, ModelKind::kHdp, 2, 3);

  const Document one{{2}};
  const JointDistribution j1 = enumerate_joint(one, s);
  const TopicSnapshot snap(s);
  DocChain empty_chain(one, snap, RngStream(1, {0, 0}));
  const Vector cond = full_conditional(empty_chain, 0, snap);
  CHECK((j1.probability - cond).cwiseAbs().maxCoeff() <= 1e-12);

  const Document two{{0, 2}};
  const JointDistribution j2 = enumerate_joint(two, s);
  CHECK(j2.probability.size() == 9);
  CHECK((j2.probability - brute_force_joint(two, s)).cwiseAbs().maxCoeff() <= 1e-12);
  const std::vector<int> z{2, 1};
  CHECK(j2.decode(j2.encode(z)) == z);

  const OracleReport report = oracle_check(two, s, 100000, RngStream(2, {0, 0}));
  CHECK(report.tv <= 0.05);
  CHECK(report.max_conditional_error <= 1e-12);

  GlobalState big = cviat::testing::random_state(rng, ModelKind::kHdp, 9, 3);
  Document many;
  for (int i = 0; i < 7; ++i) many.tokens.push_back(0);
  CHECK_THROWS(enumerate_joint(many, big));
}

TEST_CASE("symmetric instance is exchangeable under topic swap") {
  GlobalState s = make_state(3, {0.2, 0.4, 0.4}, 2, 1.0);
  s.lambda.row(1) << 4, 4;
  s.lambda.row(2) << 4, 4;
  const Document doc{{0, 1, 1}};
  const JointDistribution j = enumerate_joint(doc, s);
  for (Eigen::Index code = 0; code < j.probability.size(); ++code) {
    auto z = j.decode(code);
    for (auto& k : z) k = k == 1 ? 2 : k == 2 ? 1 : 0;
    CHECK(j.probability(code) == doctest::Approx(j.probability(j.encode(z))).epsilon(1e-12));
  }
}

TEST_CASE("total variation") {
  CHECK(total_variation(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)) == 1.0);
  CHECK(total_variation(Eigen::Vector3d(0.2, 0.3, 0.5), Eigen::Vector3d(0.2, 0.3, 0.5)) == 0.0);
  CHECK_THROWS(total_variation(Eigen::Vector2d(1, 0), Eigen::Vector3d(1, 0, 0)));
}

TEST_CASE("random tiny instances stay small") {
  RngStream rng(1, {0, 0});
  for (int i = 0; i < 50; ++i) {
    const TinyInstance t = random_tiny_instance(rng, i % 2 ? ModelKind::kGdp : ModelKind::kHdp);
    CHECK(t.doc.size() >= 1);
    CHECK(t.doc.size() <= 8);
    CHECK(t.state.num_topics() >= 1);
    CHECK(t.state.num_topics() <= 2);
    CHECK(t.state.vocab_size() <= 5);
    CHECK_NOTHROW(t.state.check_invariants());
  }
}

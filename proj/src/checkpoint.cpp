// Apache License, Version 2.0, refer to LICENSE

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cviat/engine.hpp"
#include "cviat/error.hpp"
#include "text_io.hpp"

namespace cviat {
namespace {

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Thread count, timing and output paths are left out so that runs which
// differ only in those produce identical checkpoints.
void write_config(std::ostream& out, const RunConfig& c) {
  using text::format_double;
  out << "model " << to_string(c.model) << '\n'
      << "alpha " << format_double(c.hyper.alpha) << '\n'
      << "gamma " << format_double(c.hyper.gamma) << '\n'
      << "eta " << format_double(c.hyper.eta) << '\n'
      << "batch_size " << c.hyper.batch_size << '\n'
      << "num_docs " << c.hyper.num_docs << '\n'
      << "tau0 " << format_double(c.schedule.tau0()) << '\n'
      << "kappa " << format_double(c.schedule.kappa()) << '\n'
      << "burnin " << c.sampler.burnin << '\n'
      << "samples " << c.sampler.samples << '\n'
      << "thin " << c.sampler.thin << '\n'
      << "birth " << (c.sampler.birth_enabled ? 1 : 0) << '\n'
      << "eval_burnin " << c.eval_sampler.burnin << '\n'
      << "eval_samples " << c.eval_sampler.samples << '\n'
      << "eval_thin " << c.eval_sampler.thin << '\n'
      << "iters " << c.iters << '\n'
      << "init_topics " << c.init_topics << '\n'
      << "seed " << c.seed << '\n'
      << "prune " << (c.prune ? 1 : 0) << '\n'
      << "prune_eps " << format_double(c.prune_eps) << '\n'
      << "prune_window " << c.prune_window << '\n'
      << "floor_eps " << format_double(c.floor_eps) << '\n'
      << "eval_every " << c.eval_every << '\n'
      << "corpus " << (c.paths.corpus.empty() ? "-" : c.paths.corpus) << '\n'
      << "vocab " << (c.paths.vocab.empty() ? "-" : c.paths.vocab) << '\n';
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  std::ostringstream out;
  const auto& s = ck.state;
  out << "cviat-checkpoint " << Checkpoint::kVersion << '\n';
  write_config(out, ck.config);
  out << "iteration " << ck.iteration << '\n'
      << "topics " << s.num_topics() << '\n'
      << "vocab_size " << s.vocab_size() << '\n'
      << "mu " << text::format_double(s.mu) << '\n'
      << "m";
  for (Eigen::Index k = 0; k < s.m.size(); ++k) out << ' ' << text::format_double(s.m(k));
  out << "\nactive";
  for (auto a : ck.last_active) out << ' ' << a;
  out << '\n';
  for (Eigen::Index k = 0; k < s.lambda.rows(); ++k) {
    out << "lambda";
    for (Eigen::Index w = 0; w < s.lambda.cols(); ++w) out << ' ' << text::format_double(s.lambda(k, w));
    out << '\n';
  }
  std::string body = out.str();
  body += "checksum " + hex64(fnv1a(body)) + "\n";
  return body;
}

Checkpoint parse_checkpoint(const std::string& data, const std::string& source) {
  // The version line is checked first so files from other format versions
  // are reported as such rather than as corrupt.
  {
    std::istringstream head(data.substr(0, data.find('\n')));
    text::KeyValueReader r(head, source);
    const auto version = text::parse_int(r.expect("cviat-checkpoint")[0], r.context());
    if (version != Checkpoint::kVersion) {
      r.fail("unsupported checkpoint version " + std::to_string(version) + " (expected " +
             std::to_string(Checkpoint::kVersion) + ")");
    }
  }
  const auto marker = data.rfind("checksum ");
  if (marker == std::string::npos) throw DataError(source + ": missing checksum");
  const std::string body = data.substr(0, marker);
  std::string stored = data.substr(marker + 9);
  while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
  if (stored != hex64(fnv1a(body))) throw DataError(source + ": checksum mismatch (corrupted file)");

  std::istringstream in(body);
  text::KeyValueReader r(in, source);
  const auto ctx = [&r] { return r.context(); };
  r.expect("cviat-checkpoint");
  const auto dbl = [&](const char* key) { return text::parse_double(r.expect(key)[0], ctx()); };
  const auto num = [&](const char* key) { return text::parse_int(r.expect(key)[0], ctx()); };

  Checkpoint ck;
  auto& c = ck.config;
  c.model = parse_model_kind(r.expect("model")[0]);
  c.hyper.alpha = dbl("alpha");
  c.hyper.gamma = dbl("gamma");
  c.hyper.eta = dbl("eta");
  c.hyper.batch_size = num("batch_size");
  c.hyper.num_docs = num("num_docs");
  const double tau0 = dbl("tau0");
  const double kappa = dbl("kappa");
  try {
    c.schedule = Schedule(tau0, kappa);
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
  c.sampler.burnin = static_cast<int>(num("burnin"));
  c.sampler.samples = static_cast<int>(num("samples"));
  c.sampler.thin = static_cast<int>(num("thin"));
  c.sampler.birth_enabled = num("birth") != 0;
  c.eval_sampler.burnin = static_cast<int>(num("eval_burnin"));
  c.eval_sampler.samples = static_cast<int>(num("eval_samples"));
  c.eval_sampler.thin = static_cast<int>(num("eval_thin"));
  c.eval_sampler.birth_enabled = false;
  c.iters = num("iters");
  c.init_topics = static_cast<int>(num("init_topics"));
  c.seed = text::parse_uint(r.expect("seed")[0], ctx());
  c.prune = num("prune") != 0;
  c.prune_eps = dbl("prune_eps");
  c.prune_window = static_cast<int>(num("prune_window"));
  c.floor_eps = dbl("floor_eps");
  c.eval_every = num("eval_every");
  c.paths.corpus = r.expect("corpus")[0];
  c.paths.vocab = r.expect("vocab")[0];
  if (c.paths.corpus == "-") c.paths.corpus.clear();
  if (c.paths.vocab == "-") c.paths.vocab.clear();

  ck.iteration = num("iteration");
  const auto K = num("topics");
  const auto W = num("vocab_size");
  if (K < 0 || W < 1) r.fail("invalid dimensions");
  auto& s = ck.state;
  s.kind = c.model;
  s.hyper = c.hyper;
  s.mu = dbl("mu");

  auto m = r.expect("m", static_cast<std::size_t>(K + 1));
  if (m.size() != static_cast<std::size_t>(K + 1)) r.fail("m has the wrong length");
  s.m.resize(K + 1);
  for (std::int64_t k = 0; k <= K; ++k) s.m(k) = text::parse_double(m[static_cast<std::size_t>(k)], ctx());

  auto active = r.expect("active", static_cast<std::size_t>(K + 1));
  if (active.size() != static_cast<std::size_t>(K + 1)) r.fail("active has the wrong length");
  for (const auto& a : active) ck.last_active.push_back(text::parse_int(a, ctx()));

  s.lambda.resize(K + 1, W);
  for (std::int64_t k = 0; k <= K; ++k) {
    auto row = r.expect("lambda", static_cast<std::size_t>(W));
    if (row.size() != static_cast<std::size_t>(W)) r.fail("lambda row has the wrong length");
    for (std::int64_t w = 0; w < W; ++w) {
      s.lambda(k, w) = text::parse_double(row[static_cast<std::size_t>(w)], ctx());
    }
  }
  try {
    s.check_invariants(1e-9);
    c.validate();
  } catch (const std::exception& e) {
    throw DataError(source + ": " + e.what());
  }
  return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::string data = serialize_checkpoint(checkpoint);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + tmp);
    out << data;
    if (!out) throw DataError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str(), path.string());
}

}  // namespace cviat

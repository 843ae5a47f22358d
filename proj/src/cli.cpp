// Apache License, Version 2.0, refer to LICENSE

#include "cviat/cli.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "cviat/corpus.hpp"
#include "cviat/engine.hpp"
#include "cviat/error.hpp"
#include "cviat/eval.hpp"
#include "cviat/log.hpp"
#include "cviat/synth.hpp"
#include "text_io.hpp"

namespace cviat {

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) throw UsageError(path + ":" + std::to_string(line_no) + ": empty key");
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

namespace {

struct TrainOptions {
  RunConfig run;
  std::string model = "hdp";
  double tau0 = 64.0;
  double kappa = 0.6;
  bool no_birth = false;
  bool no_prune = false;
  std::string resume;
  std::int64_t checkpoint_every = 0;
  std::size_t n_test = 0;
  double split_ratio = 0.5;
};

struct EvalOptions {
  std::string checkpoint, corpus, vocab, metrics;
  std::size_t n_test = 0;
  double split_ratio = 0.5;
  std::uint64_t seed = 1;
  SamplerConfig sampler = default_eval_sampler();
  int threads = 0;
};

struct TopicsOptions {
  std::string checkpoint, vocab, output, format = "tsv";
  int top_n = 12;
  int n_topics = 10;
};

struct SynthOptions {
  SynthConfig config;
  std::string docword, vocab, truth;
};

struct OracleOptions {
  std::uint64_t seed = 3;
  int instances = 5;
  std::int64_t sweeps = 100000;
  double tv_threshold = 0.05;
  std::string model = "hdp";
};

void add_sampler_flags(CLI::App* app, SamplerConfig& s, const std::string& prefix,
                       const std::string& what) {
  app->add_option("--" + prefix + "burnin", s.burnin, "Burn-in sweeps per " + what)
      ->check(CLI::PositiveNumber);
  app->add_option("--" + prefix + "samples", s.samples, "Recorded sweeps per " + what)
      ->check(CLI::PositiveNumber);
  app->add_option("--" + prefix + "thin", s.thin, "Sweeps between recorded samples")
      ->check(CLI::PositiveNumber);
}

void add_common_flags(CLI::App* app, int& threads, bool& quiet, bool& verbose) {
  app->add_option("--threads", threads, "Worker threads for document-parallel work (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  app->add_flag("--quiet", quiet, "Suppress warnings");
  app->add_flag("--verbose", verbose, "Print progress and pruning remaps");
  app->add_option("--config", "Key = value file; command-line flags take precedence");
}

void write_metrics_config(const std::string& metrics_path, const CLI::App* sub) {
  std::ofstream out(metrics_path + ".config");
  if (!out) throw DataError("cannot write " + metrics_path + ".config");
  out << sub->config_to_str(true, false);
}

int do_train(TrainOptions& o, const CLI::App* sub, std::ostream& out) {
  RunConfig& run = o.run;
  run.model = parse_model_kind(o.model);
  try {
    run.schedule = Schedule(o.tau0, o.kappa);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  run.sampler.birth_enabled = !o.no_birth;
  run.eval_sampler.birth_enabled = false;
  run.prune = !o.no_prune;
  if (run.eval_every > 0 && o.n_test == 0) throw UsageError("--eval-every requires --n-test");

  Corpus corpus = run.paths.vocab.empty() ? load_bow(run.paths.corpus)
                                          : load_bow(run.paths.corpus, run.paths.vocab);
  HeldoutSplit split;
  const Corpus* training = &corpus;
  if (o.n_test > 0) {
    split = split_heldout(corpus, o.n_test, run.seed, o.split_ratio);
    training = &split.train;
  }

  std::optional<Trainer> trainer;
  bool resumed = false;
  if (!o.resume.empty()) {
    Checkpoint ck = load_checkpoint(o.resume);
    if (sub->count("--iters") > 0) ck.config.iters = run.iters;
    ck.config.threads = run.threads;
    ck.config.record_time = run.record_time;
    ck.config.paths = run.paths;
    trainer.emplace(ck, *training);
    resumed = true;
  } else {
    trainer.emplace(run, *training);
  }
  if (o.n_test > 0) trainer->set_heldout(&split);
  const RunConfig& cfg = trainer->config();

  std::ofstream metrics;
  if (!cfg.paths.metrics.empty()) {
    const bool append = resumed && std::filesystem::exists(cfg.paths.metrics);
    metrics.open(cfg.paths.metrics, append ? std::ios::app : std::ios::trunc);
    if (!metrics) throw DataError("cannot write " + cfg.paths.metrics);
    if (!append) metrics << metrics_header() << '\n' << std::flush;
    write_metrics_config(cfg.paths.metrics, sub);
  }

  const auto flush_checkpoint = [&] {
    if (!cfg.paths.checkpoint.empty()) save_checkpoint(trainer->checkpoint(), cfg.paths.checkpoint);
  };
  try {
    while (trainer->iteration() < cfg.iters) {
      const MetricsRow row = trainer->step();
      if (metrics.is_open()) {
        metrics << format_metrics_row(row) << '\n' << std::flush;
        if (!metrics) throw DataError("write failed for " + cfg.paths.metrics);
      }
      log_info("iter " + std::to_string(row.iter) + " K=" + std::to_string(row.num_topics) +
               " npelbo_hat=" + text::format_double(row.npelbo));
      if (o.checkpoint_every > 0 && row.iter % o.checkpoint_every == 0) flush_checkpoint();
    }
  } catch (...) {
    flush_checkpoint();
    throw;
  }
  flush_checkpoint();
  out << "iterations " << trainer->iteration() << "\ntopics " << trainer->state().num_topics()
      << '\n';
  return kExitOk;
}

int do_eval(EvalOptions& o, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  Corpus corpus = o.vocab.empty() ? load_bow(o.corpus) : load_bow(o.corpus, o.vocab);
  if (o.n_test == 0) throw UsageError("--n-test must be positive");
  const HeldoutSplit split = split_heldout(corpus, o.n_test, o.seed, o.split_ratio);
  o.sampler.birth_enabled = false;
  const double ppl = heldout_perplexity(split, ck.state, o.sampler, eval_seed(o.seed, ck.iteration),
                                        o.threads);
  out << "perplexity " << text::format_double(ppl) << '\n';
  if (!o.metrics.empty()) {
    const bool exists = std::filesystem::exists(o.metrics);
    std::ofstream m(o.metrics, std::ios::app);
    if (!m) throw DataError("cannot write " + o.metrics);
    if (!exists) m << metrics_header() << '\n';
    m << ck.iteration << ",," << ck.state.num_topics() << ",,,,," << text::format_double(ppl) << '\n';
  }
  return kExitOk;
}

int do_topics(TopicsOptions& o, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  std::vector<std::string> vocab;
  if (!o.vocab.empty()) {
    std::ifstream in(o.vocab);
    if (!in) throw DataError("cannot open " + o.vocab);
    vocab = read_vocab(in);
    if (vocab.size() != static_cast<std::size_t>(ck.state.vocab_size())) {
      throw DataError(o.vocab + ": vocabulary has " + std::to_string(vocab.size()) +
                      " terms, model has W=" + std::to_string(ck.state.vocab_size()));
    }
  }
  const auto topics = top_words(ck.state, o.top_n, o.n_topics);
  std::ofstream file;
  std::ostream* sink = &out;
  if (!o.output.empty()) {
    file.open(o.output);
    if (!file) throw DataError("cannot write " + o.output);
    sink = &file;
  }
  if (o.format == "json") {
    write_top_words_json(topics, vocab, *sink);
  } else {
    write_top_words_tsv(topics, vocab, *sink);
  }
  return kExitOk;
}

int do_synth(SynthOptions& o, std::ostream& out) {
  const auto [corpus, truth] = generate(o.config);
  save_bow(corpus, o.docword, o.vocab);
  if (!o.truth.empty()) save_ground_truth(truth, o.truth);
  out << "documents " << corpus.num_docs() << "\ntokens " << corpus.num_tokens() << '\n';
  return kExitOk;
}

int do_oracle(OracleOptions& o, std::ostream& out) {
  const ModelKind kind = parse_model_kind(o.model);
  RngStream rng(o.seed, {0, 0});
  bool pass = true;
  for (int i = 0; i < o.instances; ++i) {
    auto inst = random_tiny_instance(rng, kind);
    const auto report = oracle_check(inst.doc, inst.state, o.sweeps,
                                     RngStream(o.seed, {1, static_cast<std::uint64_t>(i)}));
    const bool ok = report.tv <= o.tv_threshold && report.max_conditional_error <= 1e-12;
    pass = pass && ok;
    out << "instance " << i << " N=" << inst.doc.size() << " K=" << inst.state.num_topics()
        << " W=" << inst.state.vocab_size() << " tv=" << text::format_double(report.tv)
        << " conditional_err=" << text::format_double(report.max_conditional_error) << ' '
        << (ok ? "PASS" : "FAIL") << '\n';
  }
  out << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? kExitOk : kExitNumerical;
}

// Splices `--config` entries in front of the real flags; with TakeLast
// semantics the command line wins.
std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
  if (args.empty()) return args;
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args[0]);
  } catch (const CLI::OptionNotFound&) {
    return args;
  }
  std::vector<std::string> expanded{args[0]};
  for (const auto& [key, value] : read_config_file(path)) {
    if (key == "config") continue;
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) throw UsageError(path + ": unknown key '" + key + "'");
    if (opt->get_expected_min() == 0) {
      if (value == "true" || value == "1" || value.empty()) expanded.push_back("--" + key);
    } else {
      expanded.push_back("--" + key);
      expanded.push_back(value);
    }
  }
  expanded.insert(expanded.end(), args.begin() + 1, args.end());
  return expanded;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional variational inference with adaptive truncation for HDP and "
               "gamma-Dirichlet topic models",
               "cviat"};
  app.option_defaults()->always_capture_default()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  int threads = 0;
  bool quiet = false, verbose = false;

  TrainOptions train_o;
  auto* train = app.add_subcommand("train", "Fit a model with stochastic updates and Gibbs sampling");
  {
    auto& r = train_o.run;
    train->add_option("--model", train_o.model, "Model: hdp or gdp")
        ->check(CLI::IsMember({"hdp", "gdp"}));
    train->add_option("--corpus", r.paths.corpus, "UCI docword file")->required();
    train->add_option("--vocab", r.paths.vocab, "Vocabulary file, one term per line");
    train->add_option("--iters", r.iters, "Iterations")->check(CLI::NonNegativeNumber);
    train->add_option("--seed", r.seed, "Master seed");
    train->add_option("--metrics", r.paths.metrics, "Metrics CSV output");
    train->add_option("--checkpoint", r.paths.checkpoint, "Checkpoint output");
    train->add_option("--checkpoint-every", train_o.checkpoint_every,
                      "Also write the checkpoint every N iterations (0 = only at the end)")
        ->check(CLI::NonNegativeNumber);
    train->add_option("--resume", train_o.resume, "Continue from a checkpoint");
    train->add_option("--alpha", r.hyper.alpha, "Top-level concentration")->check(CLI::PositiveNumber);
    train->add_option("--gamma", r.hyper.gamma, "Document-level concentration (hdp)")
        ->check(CLI::PositiveNumber);
    train->add_option("--eta", r.hyper.eta, "Topic-word prior")->check(CLI::PositiveNumber);
    train->add_option("--batch-size", r.hyper.batch_size, "Documents per iteration")
        ->check(CLI::PositiveNumber);
    train->add_option("--tau0", train_o.tau0, "Step-size delay")->check(CLI::NonNegativeNumber);
    train->add_option("--kappa", train_o.kappa, "Step-size decay, in (0.5, 1]");
    train->add_option("--init-topics", r.init_topics, "Initial number of topics")
        ->check(CLI::NonNegativeNumber);
    add_sampler_flags(train, r.sampler, "", "batch document");
    train->add_flag("--no-birth", train_o.no_birth, "Disable topic births");
    train->add_option("--prune-eps", r.prune_eps, "Mass below which idle topics are pruned")
        ->check(CLI::PositiveNumber);
    train->add_option("--prune-window", r.prune_window, "Idle iterations before pruning")
        ->check(CLI::PositiveNumber);
    train->add_flag("--no-prune", train_o.no_prune, "Never remove topics");
    train->add_option("--floor-eps", r.floor_eps, "Floor applied to m* before normalizing")
        ->check(CLI::PositiveNumber);
    train->add_option("--eval-every", r.eval_every, "Held-out perplexity every N iterations (0 = off)")
        ->check(CLI::NonNegativeNumber);
    train->add_option("--n-test", train_o.n_test, "Documents held out for inline evaluation");
    train->add_option("--split-ratio", train_o.split_ratio, "Observed fraction of each test document");
    add_sampler_flags(train, r.eval_sampler, "eval-", "test document");
    train->add_flag("--timing", r.record_time, "Record wall-clock seconds in the metrics log");
    add_common_flags(train, threads, quiet, verbose);
  }

  EvalOptions eval_o;
  auto* eval = app.add_subcommand("eval", "Held-out perplexity of a checkpoint");
  eval->add_option("--checkpoint", eval_o.checkpoint, "Checkpoint to evaluate")->required();
  eval->add_option("--corpus", eval_o.corpus, "UCI docword file")->required();
  eval->add_option("--vocab", eval_o.vocab, "Vocabulary file");
  eval->add_option("--n-test", eval_o.n_test, "Held-out documents")->required();
  eval->add_option("--split-ratio", eval_o.split_ratio, "Observed fraction of each test document");
  eval->add_option("--seed", eval_o.seed, "Split and sampling seed");
  eval->add_option("--metrics", eval_o.metrics, "Append the result to this metrics CSV");
  add_sampler_flags(eval, eval_o.sampler, "eval-", "test document");
  add_common_flags(eval, threads, quiet, verbose);

  TopicsOptions topics_o;
  auto* topics = app.add_subcommand("topics", "Top words of the heaviest topics");
  topics->add_option("--checkpoint", topics_o.checkpoint, "Checkpoint")->required();
  topics->add_option("--vocab", topics_o.vocab, "Vocabulary file");
  topics->add_option("--top-n", topics_o.top_n, "Words per topic")->check(CLI::PositiveNumber);
  topics->add_option("--n-topics", topics_o.n_topics, "Topics to list (0 = all)")
      ->check(CLI::NonNegativeNumber);
  topics->add_option("--format", topics_o.format, "tsv or json")->check(CLI::IsMember({"tsv", "json"}));
  topics->add_option("--output", topics_o.output, "Output file (default: standard output)");
  add_common_flags(topics, threads, quiet, verbose);

  SynthOptions synth_o;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with known topics");
  {
    auto& c = synth_o.config;
    synth->add_option("--topics", c.num_topics, "True number of topics")->check(CLI::PositiveNumber);
    synth->add_option("--docs", c.num_docs, "Documents")->check(CLI::PositiveNumber);
    synth->add_option("--mean-length", c.mean_length, "Mean document length")->check(CLI::PositiveNumber);
    synth->add_option("--vocab-size", c.vocab_size, "Vocabulary size")->check(CLI::PositiveNumber);
    synth->add_option("--alpha", c.alpha, "Top-level concentration")->check(CLI::PositiveNumber);
    synth->add_option("--gamma", c.gamma, "Document-level concentration")->check(CLI::PositiveNumber);
    synth->add_option("--eta", c.eta, "Topic-word concentration")->check(CLI::PositiveNumber);
    synth->add_option("--seed", c.seed, "Seed");
    synth->add_option("--docword", synth_o.docword, "Output docword file")->required();
    synth->add_option("--vocab", synth_o.vocab, "Output vocabulary file")->required();
    synth->add_option("--truth", synth_o.truth, "Output ground-truth file");
  }
  add_common_flags(synth, threads, quiet, verbose);

  OracleOptions oracle_o;
  auto* oracle = app.add_subcommand("oracle-check",
                                    "Compare Gibbs frequencies with exact enumeration on tiny instances");
  oracle->add_option("--seed", oracle_o.seed, "Seed");
  oracle->add_option("--instances", oracle_o.instances, "Random instances")->check(CLI::PositiveNumber);
  oracle->add_option("--sweeps", oracle_o.sweeps, "Recorded sweeps per instance")
      ->check(CLI::PositiveNumber);
  oracle->add_option("--tv-threshold", oracle_o.tv_threshold, "Largest accepted total variation");
  oracle->add_option("--model", oracle_o.model, "hdp or gdp")->check(CLI::IsMember({"hdp", "gdp"}));
  add_common_flags(oracle, threads, quiet, verbose);

  const LogLevel saved_level = log_level();
  try {
    const auto expanded = expand_config(args, app);
    std::vector<const char*> argv{"cviat"};
    for (const auto& a : expanded) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
    set_log_level(quiet ? LogLevel::kQuiet : verbose ? LogLevel::kInfo : saved_level);

    int code = kExitOk;
    if (*train) {
      train_o.run.threads = threads;
      code = do_train(train_o, train, out);
    } else if (*eval) {
      eval_o.threads = threads;
      code = do_eval(eval_o, out);
    } else if (*topics) {
      code = do_topics(topics_o, out);
    } else if (*synth) {
      code = do_synth(synth_o, out);
    } else if (*oracle) {
      code = do_oracle(oracle_o, out);
    }
    set_log_level(saved_level);
    return code;
  } catch (const CLI::ParseError& e) {
    set_log_level(saved_level);
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    set_log_level(saved_level);
    err << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    set_log_level(saved_level);
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    set_log_level(saved_level);
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    set_log_level(saved_level);
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace cviat

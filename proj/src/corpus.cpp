// Apache License, Version 2.0, refer to LICENSE

#include "cviat/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "cviat/error.hpp"
#include "cviat/log.hpp"
#include "cviat/rng.hpp"

namespace cviat {

std::vector<std::pair<WordId, std::int32_t>> Document::counts() const {
  std::map<WordId, std::int32_t> tally;
  for (WordId w : tokens) ++tally[w];
  return {tally.begin(), tally.end()};
}

Document Document::from_counts(const std::vector<std::pair<WordId, std::int32_t>>& counts) {
  Document doc;
  for (const auto& [word, count] : counts) doc.tokens.insert(doc.tokens.end(), count, word);
  return doc;
}

std::size_t Corpus::num_tokens() const {
  std::size_t total = 0;
  for (const auto& d : docs) total += d.size();
  return total;
}

void Corpus::validate() const {
  if (vocab_size < 1) throw DataError("corpus: vocabulary size must be at least 1");
  if (!vocab.empty() && vocab.size() != static_cast<std::size_t>(vocab_size)) {
    throw DataError("corpus: vocabulary has " + std::to_string(vocab.size()) +
                    " terms, expected " + std::to_string(vocab_size));
  }
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (docs[d].empty()) throw DataError("corpus: document " + std::to_string(d) + " is empty");
    for (WordId w : docs[d].tokens) {
      if (w < 0 || w >= vocab_size) {
        throw DataError("corpus: document " + std::to_string(d) + " has word id " +
                        std::to_string(w) + " outside [0, " + std::to_string(vocab_size) + ")");
      }
    }
  }
}

namespace {

struct LineReader {
  std::istream& in;
  const std::string& source;
  std::size_t line_no = 0;
  std::string line;

  // Next non-blank line; false at end of input.
  bool next() {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(source + ":" + std::to_string(line_no) + ": " + what);
  }
};

std::vector<std::int64_t> parse_ints(LineReader& reader, std::size_t expected) {
  std::vector<std::int64_t> values;
  const char* p = reader.line.data();
  const char* end = p + reader.line.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    if (p == end) break;
    std::int64_t v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t')) {
      reader.fail("expected integer fields, got '" + reader.line + "'");
    }
    values.push_back(v);
    p = next;
  }
  if (values.size() != expected) {
    reader.fail("expected " + std::to_string(expected) + " integer field(s), got " +
                std::to_string(values.size()));
  }
  return values;
}

}  // namespace

Corpus read_bow(std::istream& docword, const std::string& source) {
  LineReader reader{docword, source};
  std::int64_t header[3];
  const char* names[3] = {"document count", "vocabulary size", "row count"};
  for (int h = 0; h < 3; ++h) {
    if (!reader.next()) reader.fail(std::string("malformed header: missing ") + names[h]);
    header[h] = parse_ints(reader, 1)[0];
    if (header[h] < (h == 2 ? 0 : 1)) {
      reader.fail(std::string("malformed header: invalid ") + names[h]);
    }
  }
  const std::int64_t num_docs = header[0];
  const std::int64_t vocab_size = header[1];
  const std::int64_t nnz = header[2];
  if (vocab_size > std::numeric_limits<WordId>::max()) reader.fail("vocabulary size too large");

  std::vector<std::map<WordId, std::int64_t>> rows(static_cast<std::size_t>(num_docs));
  std::int64_t last_doc = 0;
  std::int64_t seen = 0;
  while (reader.next()) {
    auto f = parse_ints(reader, 3);
    ++seen;
    if (seen > nnz) reader.fail("more rows than the header's row count " + std::to_string(nnz));
    const std::int64_t doc = f[0], word = f[1], count = f[2];
    if (doc < 1 || doc > num_docs) reader.fail("document id " + std::to_string(doc) + " out of range");
    if (doc < last_doc) reader.fail("document ids must be ascending");
    if (word < 1 || word > vocab_size) {
      reader.fail("word id " + std::to_string(word) + " out of range [1, " +
                  std::to_string(vocab_size) + "]");
    }
    if (count <= 0) reader.fail("count must be positive, got " + std::to_string(count));
    last_doc = doc;
    auto& slot = rows[static_cast<std::size_t>(doc - 1)][static_cast<WordId>(word - 1)];
    if (slot != 0) {
      log_warn(source + ":" + std::to_string(reader.line_no) + ": duplicate row for document " +
               std::to_string(doc) + ", word " + std::to_string(word) + "; counts summed");
    }
    slot += count;
  }
  if (seen != nnz) {
    reader.fail("header declares " + std::to_string(nnz) + " rows, found " + std::to_string(seen));
  }

  Corpus corpus;
  corpus.vocab_size = static_cast<std::int32_t>(vocab_size);
  std::size_t dropped = 0;
  for (const auto& doc_rows : rows) {
    if (doc_rows.empty()) {
      ++dropped;
      continue;
    }
    Document doc;
    for (const auto& [word, count] : doc_rows) doc.tokens.insert(doc.tokens.end(), count, word);
    corpus.docs.push_back(std::move(doc));
  }
  if (corpus.docs.empty()) throw DataError(source + ": no documents");
  if (dropped > 0) log_warn(source + ": dropped " + std::to_string(dropped) + " empty document(s)");
  return corpus;
}

std::vector<std::string> read_vocab(std::istream& vocab) {
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(vocab, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    terms.push_back(line);
  }
  // A trailing blank line is a file-ending artifact, not a term.
  while (!terms.empty() && terms.back().empty()) terms.pop_back();
  return terms;
}

Corpus load_bow(const std::filesystem::path& docword_path) {
  std::ifstream in(docword_path);
  if (!in) throw DataError("cannot open " + docword_path.string());
  Corpus corpus = read_bow(in, docword_path.string());
  corpus.vocab.reserve(static_cast<std::size_t>(corpus.vocab_size));
  for (std::int32_t w = 0; w < corpus.vocab_size; ++w) corpus.vocab.push_back("w" + std::to_string(w));
  return corpus;
}

Corpus load_bow(const std::filesystem::path& docword_path,
                const std::filesystem::path& vocab_path) {
  std::ifstream in(docword_path);
  if (!in) throw DataError("cannot open " + docword_path.string());
  Corpus corpus = read_bow(in, docword_path.string());
  std::ifstream vin(vocab_path);
  if (!vin) throw DataError("cannot open " + vocab_path.string());
  corpus.vocab = read_vocab(vin);
  if (corpus.vocab.size() != static_cast<std::size_t>(corpus.vocab_size)) {
    throw DataError(vocab_path.string() + ":" + std::to_string(corpus.vocab.size()) +
                    ": vocabulary has " + std::to_string(corpus.vocab.size()) +
                    " lines, header declares W=" + std::to_string(corpus.vocab_size));
  }
  return corpus;
}

void write_bow(const Corpus& corpus, std::ostream& out) {
  std::vector<std::vector<std::pair<WordId, std::int32_t>>> sparse;
  sparse.reserve(corpus.docs.size());
  std::size_t nnz = 0;
  for (const auto& doc : corpus.docs) {
    sparse.push_back(doc.counts());
    nnz += sparse.back().size();
  }
  out << corpus.docs.size() << '\n' << corpus.vocab_size << '\n' << nnz << '\n';
  for (std::size_t d = 0; d < sparse.size(); ++d) {
    for (const auto& [word, count] : sparse[d]) {
      out << d + 1 << ' ' << word + 1 << ' ' << count << '\n';
    }
  }
}

void write_vocab(const Corpus& corpus, std::ostream& out) {
  for (const auto& term : corpus.vocab) out << term << '\n';
}

void save_bow(const Corpus& corpus, const std::filesystem::path& docword_path,
              const std::filesystem::path& vocab_path) {
  std::ofstream out(docword_path);
  if (!out) throw DataError("cannot write " + docword_path.string());
  write_bow(corpus, out);
  std::ofstream vout(vocab_path);
  if (!vout) throw DataError("cannot write " + vocab_path.string());
  write_vocab(corpus, vout);
  if (!out || !vout) throw DataError("write failed for " + docword_path.string());
}

std::pair<Document, Document> alternate_split(const Document& shuffled, double ratio) {
  Document observed, heldout;
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    // Position i is observed when it advances ceil(i * ratio).
    const auto before = std::ceil(static_cast<double>(i) * ratio);
    const auto after = std::ceil(static_cast<double>(i + 1) * ratio);
    (after > before ? observed : heldout).tokens.push_back(shuffled.tokens[i]);
  }
  return {std::move(observed), std::move(heldout)};
}

HeldoutSplit split_heldout(const Corpus& corpus, std::size_t n_test, std::uint64_t seed,
                           double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must lie in (0, 1)");
  if (n_test == 0) throw std::invalid_argument("split_heldout: n_test must be positive");
  if (n_test >= corpus.num_docs()) {
    throw std::invalid_argument("split_heldout: n_test (" + std::to_string(n_test) +
                                ") must be smaller than the document count (" +
                                std::to_string(corpus.num_docs()) + ")");
  }

  std::vector<std::size_t> order(corpus.num_docs());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  RngStream rng(seed, {0, kSplitStream});
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  HeldoutSplit split;
  std::vector<bool> is_test(corpus.num_docs(), false);
  for (std::size_t d : order) {
    if (split.test.size() == n_test) break;
    Document shuffled = corpus.docs[d];
    RngStream doc_rng(seed, {1, d});
    auto& t = shuffled.tokens;
    for (std::size_t i = t.size(); i > 1; --i) std::swap(t[i - 1], t[doc_rng.below(i)]);
    auto [observed, heldout] = alternate_split(shuffled, ratio);
    if (observed.empty() || heldout.empty()) {
      log_warn("split_heldout: document " + std::to_string(d) + " has " +
               std::to_string(t.size()) + " token(s); skipped as a test document");
      continue;
    }
    is_test[d] = true;
    split.test.push_back({d, std::move(observed), std::move(heldout)});
  }
  if (split.test.size() < n_test) {
    throw std::invalid_argument("split_heldout: only " + std::to_string(split.test.size()) +
                                " documents are long enough to split");
  }

  split.train.vocab_size = corpus.vocab_size;
  split.train.vocab = corpus.vocab;
  for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
    if (is_test[d]) continue;
    split.train.docs.push_back(corpus.docs[d]);
    split.train_index.push_back(d);
  }
  return split;
}

}  // namespace cviat

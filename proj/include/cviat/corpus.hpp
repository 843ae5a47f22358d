// Apache License, Version 2.0, refer to LICENSE

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace cviat {

using WordId = std::int32_t;

/// A bag of words kept in token order (repeats expanded).
struct Document {
  std::vector<WordId> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }

  /// Sparse (word id, count) pairs sorted by word id.
  std::vector<std::pair<WordId, std::int32_t>> counts() const;
  /// Expands sparse pairs in the given order.
  static Document from_counts(const std::vector<std::pair<WordId, std::int32_t>>& counts);

  bool operator==(const Document&) const = default;
};

struct Corpus {
  std::int32_t vocab_size = 0;
  std::vector<Document> docs;
  std::vector<std::string> vocab;  // empty, or exactly vocab_size terms

  std::size_t num_docs() const { return docs.size(); }
  std::size_t num_tokens() const;

  /// Throws DataError when an invariant is broken.
  void validate() const;
};

/// Parse the UCI bag-of-words format: header lines D, W, NNZ followed by
/// NNZ rows "docID wordID count" with 1-based ids. Documents without rows
/// are dropped with a warning. `source` names the stream in error messages.
Corpus read_bow(std::istream& docword, const std::string& source = "docword");
std::vector<std::string> read_vocab(std::istream& vocab);

Corpus load_bow(const std::filesystem::path& docword_path,
                const std::filesystem::path& vocab_path);
/// Loads the docword file alone; terms default to "w<id>".
Corpus load_bow(const std::filesystem::path& docword_path);

/// Canonical writer: rows sorted by (doc, word), one row per pair.
void write_bow(const Corpus& corpus, std::ostream& out);
void write_vocab(const Corpus& corpus, std::ostream& out);
void save_bow(const Corpus& corpus, const std::filesystem::path& docword_path,
              const std::filesystem::path& vocab_path);

struct HeldoutDoc {
  std::size_t source_index = 0;  // position in the original corpus
  Document observed;
  Document heldout;
};

struct HeldoutSplit {
  Corpus train;
  std::vector<HeldoutDoc> test;
  std::vector<std::size_t> train_index;  // original position of each training doc
};

/// Pick n_test documents by seeded shuffle and divide each one into an
/// observed and a held-out part after a seeded within-document shuffle.
/// With ratio 0.5 even positions are observed and odd ones held out.
HeldoutSplit split_heldout(const Corpus& corpus, std::size_t n_test, std::uint64_t seed,
                           double ratio = 0.5);

/// Position rule used by split_heldout on an already shuffled document.
std::pair<Document, Document> alternate_split(const Document& shuffled, double ratio);

}  // namespace cviat

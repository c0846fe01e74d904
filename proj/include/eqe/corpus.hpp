#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "eqe/textcore.hpp"

namespace eqe {

struct Document {
  std::string doc_id;
  std::string text;

  bool operator==(const Document&) const = default;
};

/// Documents plus their BM25 index, addressable by id.
class DocumentCorpus {
 public:
  DocumentCorpus() = default;
  /// Throws DataError on a duplicate doc_id.
  explicit DocumentCorpus(std::vector<Document> docs, BM25Params params = {});

  std::size_t size() const { return docs_.size(); }
  const std::vector<Document>& docs() const { return docs_; }
  const Document& doc(std::size_t i) const { return docs_[i]; }
  const Bm25Index& index() const { return index_; }
  const CorpusStats& stats() const { return index_.stats(); }
  std::optional<std::size_t> position(const std::string& doc_id) const;

 private:
  std::vector<Document> docs_;
  Bm25Index index_;
  std::unordered_map<std::string, std::size_t> pos_;
};

/// corpus.jsonl: {"doc_id","text"} per line.
std::vector<Document> load_documents(const std::filesystem::path& path);
void save_documents(const std::filesystem::path& path, std::span<const Document> docs);

}  // namespace eqe

#include "eqe/corpus.hpp"

#include "eqe/common.hpp"
#include "eqe/jsonl.hpp"

namespace eqe {

DocumentCorpus::DocumentCorpus(std::vector<Document> docs, BM25Params params) : docs_(std::move(docs)) {
  std::vector<TokenSeq> toks;
  toks.reserve(docs_.size());
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    if (!pos_.emplace(docs_[i].doc_id, i).second) throw DataError("duplicate doc_id " + docs_[i].doc_id);
    toks.push_back(tokenize(docs_[i].text));
  }
  index_ = Bm25Index(std::move(toks), params);
}

std::optional<std::size_t> DocumentCorpus::position(const std::string& doc_id) const {
  const auto it = pos_.find(doc_id);
  if (it == pos_.end()) return std::nullopt;
  return it->second;
}

std::vector<Document> load_documents(const std::filesystem::path& path) {
  std::vector<Document> out;
  for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
    out.push_back({require_string(rec, "doc_id", line), require_string(rec, "text", line)});
  });
  return out;
}

void save_documents(const std::filesystem::path& path, std::span<const Document> docs) {
  std::vector<Json> recs;
  recs.reserve(docs.size());
  for (const auto& d : docs) recs.push_back({{"doc_id", d.doc_id}, {"text", d.text}});
  write_jsonl(path, recs);
}

}  // namespace eqe

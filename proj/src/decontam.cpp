#include "mathcur/decontam.hpp"

#include "mathcur/text.hpp"

namespace mathcur {

namespace {

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin, std::size_t n, char sep) {
  std::string out;
  for (std::size_t k = begin; k < begin + n; ++k) {
    if (k > begin) out.push_back(sep);
    out += tokens[k];
  }
  return out;
}

template <typename Record>
ScanResult<Record> scan_impl(const std::vector<Record>& records, const NgramIndex& index) {
  std::vector<std::optional<std::string>> hits(records.size());
  parallel_for(records.size(), [&](std::size_t i) {
    for (auto field : record_fields(records[i])) {
      hits[i] = find_contaminating_gram(field, index);
      if (hits[i]) break;
    }
  });

  ScanResult<Record> result;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!hits[i]) {
      result.clean.push_back(records[i]);
      continue;
    }
    ++result.removed;
    const auto* entry = index.find(*hits[i]);
    std::string spaced = *hits[i];
    for (auto& c : spaced)
      if (c == '\x1f') c = ' ';
    for (const auto& src : entry->sources)
      result.matches.push_back({records[i].id, src.benchmark_id, src.suite, spaced});
  }
  return result;
}

}  // namespace

const NgramIndex::Entry* NgramIndex::find(std::string_view joined_gram) const {
  auto it = grams_.find(hash128(joined_gram));
  if (it == grams_.end() || it->second.gram != joined_gram) return nullptr;
  return &it->second;
}

NgramIndex build_ngram_index(std::span<const BenchmarkItem> items, const IndexOptions& opts) {
  if (opts.n < 1) throw InputError("n-gram size must be >= 1");
  NgramIndex index;
  index.n_ = opts.n;
  if (items.empty()) index.warnings_.push_back("empty benchmark set: index has no grams");

  for (const auto& item : items) {
    std::vector<std::string_view> fields{item.question};
    if (opts.include_answers && !item.answer.empty()) fields.push_back(item.answer);
    std::size_t contributed = 0;
    for (auto field : fields) {
      const auto tokens = tokenize_for_matching(field);
      if (tokens.size() < opts.n) continue;
      for (std::size_t i = 0; i + opts.n <= tokens.size(); ++i) {
        auto gram = join_tokens(tokens, i, opts.n, '\x1f');
        auto& entry = index.grams_[hash128(gram)];
        if (entry.gram.empty()) {
          entry.gram = std::move(gram);
        } else if (entry.gram != gram) {
          throw InvariantError("128-bit n-gram hash collision");
        }
        ++contributed;
        bool listed = false;
        for (const auto& s : entry.sources) listed = listed || s.benchmark_id == item.id;
        if (!listed) entry.sources.push_back({item.id, item.suite});
      }
    }
    if (contributed == 0) index.skipped_.push_back(item.id);
  }
  return index;
}

Json ContaminationMatch::to_json() const {
  Json j = Json::object();
  j["record_id"] = record_id;
  j["benchmark_id"] = benchmark_id;
  j["suite"] = suite;
  j["gram"] = gram;
  return j;
}

std::optional<std::string> find_contaminating_gram(std::string_view text, const NgramIndex& index) {
  if (index.empty()) return std::nullopt;
  const auto tokens = tokenize_for_matching(text);
  const std::size_t n = index.n();
  if (tokens.size() < n) return std::nullopt;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    auto gram = join_tokens(tokens, i, n, '\x1f');
    if (index.find(gram)) return gram;
  }
  return std::nullopt;
}

ScanResult<Document> contamination_scan(const std::vector<Document>& records, const NgramIndex& index) {
  return scan_impl(records, index);
}

ScanResult<Sample> contamination_scan(const std::vector<Sample>& records, const NgramIndex& index) {
  return scan_impl(records, index);
}

}  // namespace mathcur

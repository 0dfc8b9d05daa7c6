#include "mathcur/corpus.hpp"

#include <cmath>
#include <unordered_set>

#include "mathcur/common.hpp"

namespace mathcur {

namespace {

const Json* field(const Json& j, std::string_view key) {
  auto it = j.find(std::string(key));
  return it == j.end() ? nullptr : &*it;
}

std::string required_string(const Json& j, std::string_view key, bool allow_empty = true) {
  const Json* v = field(j, key);
  if (!v) throw InputError("missing field '" + std::string(key) + "'");
  if (!v->is_string()) throw InputError("field '" + std::string(key) + "' must be a string");
  auto s = v->get<std::string>();
  if (!allow_empty && s.empty()) throw InputError("field '" + std::string(key) + "' must be non-empty");
  return s;
}

std::optional<std::string> optional_string(const Json& j, std::string_view key) {
  const Json* v = field(j, key);
  if (!v || v->is_null()) return std::nullopt;
  if (!v->is_string()) throw InputError("field '" + std::string(key) + "' must be a string");
  return v->get<std::string>();
}

std::optional<double> optional_real(const Json& j, std::string_view key, bool unit_interval) {
  const Json* v = field(j, key);
  if (!v || v->is_null()) return std::nullopt;
  if (!v->is_number()) throw InputError("field '" + std::string(key) + "' must be a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) throw InputError("field '" + std::string(key) + "' must be finite");
  if (unit_interval && (x < 0.0 || x > 1.0)) throw InputError("field '" + std::string(key) + "' must lie in [0,1]");
  return x;
}

std::size_t resolve_count(const Json& j, std::string_view key, std::string_view text, const ParseOptions& opts) {
  const std::size_t computed = opts.counter->count(text);
  const Json* v = field(j, key);
  if (!v || v->is_null()) return computed;
  if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
    throw InputError("field '" + std::string(key) + "' must be a non-negative integer");
  const auto given = v->get<std::size_t>();
  if (!opts.trust_token_counts && given != computed)
    throw InputError("field '" + std::string(key) + "' is " + std::to_string(given) + " but text counts " +
                     std::to_string(computed));
  return given;
}

Json collect_extra(const Json& j, std::initializer_list<std::string_view> known) {
  Json extra = Json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool is_known = false;
    for (auto k : known) is_known = is_known || it.key() == k;
    if (!is_known) extra[it.key()] = it.value();
  }
  return extra;
}

void append_extra(Json& out, const Json& extra) {
  for (auto it = extra.begin(); it != extra.end(); ++it) out[it.key()] = it.value();
}

template <typename Record, typename Parse>
IngestResult<Record> ingest_impl(std::span<const std::filesystem::path> shards, Parse parse) {
  struct Parsed {
    std::vector<std::pair<std::size_t, Record>> records;  // (line, record)
    std::vector<IngestIssue> malformed;
    std::size_t lines = 0;
  };
  std::vector<Parsed> per_shard(shards.size());
  parallel_for(shards.size(), [&](std::size_t s) {
    auto& out = per_shard[s];
    for_each_line(shards[s], [&](std::size_t line, std::string_view text) {
      ++out.lines;
      if (text.find_first_not_of(" \t") == std::string_view::npos) return;
      try {
        auto j = Json::parse(text);
        if (!j.is_object()) throw InputError("line is not a JSON object");
        out.records.emplace_back(line, parse(j));
      } catch (const Json::exception& e) {
        out.malformed.push_back({s, line, {}, e.what()});
      } catch (const InputError& e) {
        out.malformed.push_back({s, line, {}, e.what()});
      }
    });
  });

  IngestResult<Record> result;
  std::unordered_set<std::string> seen;
  for (std::size_t s = 0; s < per_shard.size(); ++s) {
    auto& shard = per_shard[s];
    result.report.lines_read += shard.lines;
    for (auto& issue : shard.malformed) result.report.malformed.push_back(std::move(issue));
    for (auto& [line, record] : shard.records) {
      if (!seen.insert(record.id).second) {
        result.report.duplicates.push_back({s, line, record.id, "duplicate id"});
        continue;
      }
      result.records.push_back(std::move(record));
    }
  }
  return result;
}

}  // namespace

std::string_view to_string(Lang lang) {
  switch (lang) {
    case Lang::en: return "en";
    case Lang::zh: return "zh";
    case Lang::other: return "other";
  }
  return "other";
}

std::optional<Lang> parse_lang(std::string_view s) {
  if (s == "en") return Lang::en;
  if (s == "zh") return Lang::zh;
  if (s == "other") return Lang::other;
  return std::nullopt;
}

std::optional<RecordKind> parse_record_kind(std::string_view s) {
  if (s == "document") return RecordKind::document;
  if (s == "sample") return RecordKind::sample;
  if (s == "benchmark") return RecordKind::benchmark;
  return std::nullopt;
}

std::string record_text(const Sample& s) { return s.prompt + "\n" + s.response; }

Document document_from_json(const Json& j, const ParseOptions& opts) {
  Document d;
  d.id = required_string(j, "id", false);
  d.text = required_string(j, "text");
  if (auto lang = optional_string(j, "lang")) {
    auto parsed = parse_lang(*lang);
    if (!parsed) throw InputError("field 'lang' must be one of en, zh, other");
    d.lang = *parsed;
  }
  d.source = optional_string(j, "source").value_or("");
  d.quality_score = optional_real(j, "quality_score", true);
  d.token_count = resolve_count(j, "token_count", d.text, opts);
  d.extra = collect_extra(j, {"id", "text", "lang", "source", "quality_score", "token_count"});
  return d;
}

Sample sample_from_json(const Json& j, const ParseOptions& opts) {
  Sample s;
  s.id = required_string(j, "id", false);
  s.prompt = required_string(j, "prompt");
  s.response = required_string(j, "response");
  s.gold_answer = optional_string(j, "gold_answer");
  s.reward_score = optional_real(j, "reward_score", false);
  s.response_token_count = resolve_count(j, "response_token_count", s.response, opts);
  s.pass_rate = optional_real(j, "pass_rate", true);
  s.extra = collect_extra(
      j, {"id", "prompt", "response", "gold_answer", "reward_score", "response_token_count", "pass_rate"});
  return s;
}

BenchmarkItem benchmark_from_json(const Json& j, const ParseOptions&) {
  BenchmarkItem b;
  b.id = required_string(j, "id", false);
  b.question = required_string(j, "question", false);
  b.answer = optional_string(j, "answer").value_or("");
  b.suite = optional_string(j, "suite").value_or("");
  b.extra = collect_extra(j, {"id", "question", "answer", "suite"});
  return b;
}

Json to_json(const Document& d) {
  Json j = Json::object();
  j["id"] = d.id;
  j["text"] = d.text;
  j["lang"] = to_string(d.lang);
  j["source"] = d.source;
  if (d.quality_score) j["quality_score"] = *d.quality_score;
  j["token_count"] = d.token_count;
  append_extra(j, d.extra);
  return j;
}

Json to_json(const Sample& s) {
  Json j = Json::object();
  j["id"] = s.id;
  j["prompt"] = s.prompt;
  j["response"] = s.response;
  if (s.gold_answer) j["gold_answer"] = *s.gold_answer;
  if (s.reward_score) j["reward_score"] = *s.reward_score;
  j["response_token_count"] = s.response_token_count;
  if (s.pass_rate) j["pass_rate"] = *s.pass_rate;
  append_extra(j, s.extra);
  return j;
}

Json to_json(const BenchmarkItem& b) {
  Json j = Json::object();
  j["id"] = b.id;
  j["question"] = b.question;
  j["answer"] = b.answer;
  j["suite"] = b.suite;
  append_extra(j, b.extra);
  return j;
}

Json IngestReport::to_json() const {
  auto issues = [](const std::vector<IngestIssue>& list) {
    Json arr = Json::array();
    for (const auto& i : list) {
      Json e = Json::object();
      e["shard"] = i.shard;
      e["line"] = i.line;
      if (!i.id.empty()) e["id"] = i.id;
      e["message"] = i.message;
      arr.push_back(std::move(e));
    }
    return arr;
  };
  Json j = Json::object();
  j["lines_read"] = lines_read;
  j["malformed"] = issues(malformed);
  j["duplicates"] = issues(duplicates);
  return j;
}

IngestResult<Document> ingest_documents(std::span<const std::filesystem::path> shards, const ParseOptions& opts) {
  return ingest_impl<Document>(shards, [&](const Json& j) { return document_from_json(j, opts); });
}

IngestResult<Sample> ingest_samples(std::span<const std::filesystem::path> shards, const ParseOptions& opts) {
  return ingest_impl<Sample>(shards, [&](const Json& j) { return sample_from_json(j, opts); });
}

IngestResult<BenchmarkItem> ingest_benchmarks(std::span<const std::filesystem::path> shards,
                                              const ParseOptions& opts) {
  return ingest_impl<BenchmarkItem>(shards, [&](const Json& j) { return benchmark_from_json(j, opts); });
}

}  // namespace mathcur

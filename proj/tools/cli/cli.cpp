#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "mathcur/common.hpp"
#include "mathcur/config.hpp"
#include "mathcur/corpus.hpp"
#include "mathcur/curriculum.hpp"
#include "mathcur/decontam.hpp"
#include "mathcur/dedup.hpp"
#include "mathcur/difficulty.hpp"
#include "mathcur/filters.hpp"
#include "mathcur/grpo.hpp"
#include "mathcur/io.hpp"
#include "mathcur/mathverify.hpp"
#include "mathcur/qualgate.hpp"
#include "mathcur/text.hpp"

#ifndef MATHCUR_VERSION
#define MATHCUR_VERSION "0.0.0"
#endif

namespace mathcur::cli {

namespace fs = std::filesystem;

namespace {

struct Session {
  PipelineConfig cfg;
  std::ostream& out;
  std::ostream& err;
  std::string summary;  // explicit --summary path, empty derives one
  bool no_summary = false;
};

// ---------------------------------------------------------------- helpers

std::vector<fs::path> to_paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

fs::path sibling(const fs::path& output, const std::string& suffix) {
  fs::path p = output;
  p.replace_filename(output.stem().string() + suffix);
  return p;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

RecordKind detect_kind(const fs::path& path) {
  std::optional<RecordKind> kind;
  for_each_line(path, [&](std::size_t, std::string_view line) {
    if (kind || line.find_first_not_of(" \t") == std::string_view::npos) return;
    const auto j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return;
    if (j.contains("prompt")) kind = RecordKind::sample;
    else if (j.contains("question")) kind = RecordKind::benchmark;
    else if (j.contains("text")) kind = RecordKind::document;
  });
  if (!kind) throw InputError("cannot infer record kind from " + path.string() + "; pass --kind");
  return *kind;
}

RecordKind resolve_kind(const std::string& flag, const std::vector<std::string>& inputs) {
  if (flag != "auto") {
    auto k = parse_record_kind(flag);
    if (!k) throw InputError("unknown record kind '" + flag + "'");
    return *k;
  }
  if (inputs.empty()) throw InputError("no input files");
  return detect_kind(inputs.front());
}

template <typename Record>
std::vector<Record> load_clean(const std::vector<std::string>& inputs,
                               IngestResult<Record> (*ingest)(std::span<const fs::path>, const ParseOptions&)) {
  if (inputs.empty()) throw InputError("no input files");
  const auto paths = to_paths(inputs);
  auto res = ingest(paths, ParseOptions{});
  if (!res.report.empty()) {
    const auto& issue = !res.report.malformed.empty() ? res.report.malformed.front() : res.report.duplicates.front();
    throw InputError(inputs.at(issue.shard) + ":" + std::to_string(issue.line) + ": " + issue.message +
                     " (run `mathcur ingest` first to clean the input)");
  }
  return std::move(res.records);
}

std::vector<Document> load_documents(const std::vector<std::string>& inputs) {
  return load_clean<Document>(inputs, &ingest_documents);
}
std::vector<Sample> load_samples(const std::vector<std::string>& inputs) {
  return load_clean<Sample>(inputs, &ingest_samples);
}

std::string sample_id_of(const Sample& s) {
  if (auto it = s.extra.find("sample_id"); it != s.extra.end() && it->is_string()) return it->get<std::string>();
  const auto hash = s.id.rfind('#');
  return hash == std::string::npos ? s.id : s.id.substr(0, hash);
}

std::unordered_map<std::string, std::string> read_gold(const std::string& path) {
  std::unordered_map<std::string, std::string> gold;
  if (path.empty()) return gold;
  for_each_line(path, [&](std::size_t line, std::string_view text) {
    if (text.find_first_not_of(" \t") == std::string_view::npos) return;
    try {
      const auto j = Json::parse(text);
      const auto id = j.at("id").get<std::string>();
      std::string answer;
      if (j.contains("gold_answer")) answer = j.at("gold_answer").get<std::string>();
      else answer = j.at("answer").get<std::string>();
      gold.emplace(id, std::move(answer));
    } catch (const Json::exception& e) {
      throw InputError(path + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return gold;
}

std::unordered_map<std::string, double> read_scores(const std::string& path) {
  std::unordered_map<std::string, double> scores;
  for_each_line(path, [&](std::size_t line, std::string_view text) {
    if (text.find_first_not_of(" \t") == std::string_view::npos) return;
    try {
      const auto j = Json::parse(text);
      const auto& v = j.contains("reward_score") ? j.at("reward_score") : j.at("score");
      scores[j.at("id").get<std::string>()] = v.get<double>();
    } catch (const Json::exception& e) {
      throw InputError(path + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return scores;
}

MetricMap read_metrics(const std::string& path) {
  const Json j = read_json_file(path);
  if (!j.is_object()) throw InputError(path + ": metrics file must be a JSON object");
  MetricMap m;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number()) throw InputError(path + ": metric '" + it.key() + "' is not a number");
    m[it.key()] = it.value().get<double>();
  }
  return m;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

// Upserts this stage's entry into the run summary.
void record_stage(Session& s, const fs::path& primary_output, Json entry) {
  if (s.no_summary) return;
  const fs::path path = !s.summary.empty() ? fs::path(s.summary)
                        : primary_output.has_parent_path() ? primary_output.parent_path() / "run-summary.json"
                                                           : fs::path("run-summary.json");
  Json doc = Json::object();
  if (fs::exists(path)) doc = read_json_file(path);
  if (!doc.is_object()) throw InputError(path.string() + ": run summary must be a JSON object");
  doc["tool"] = "mathcur";
  doc["version"] = MATHCUR_VERSION;
  if (!doc.contains("stages") || !doc["stages"].is_array()) doc["stages"] = Json::array();
  bool replaced = false;
  for (auto& e : doc["stages"]) {
    if (e.value("stage", "") == entry.value("stage", "")) {
      e = entry;
      replaced = true;
    }
  }
  if (!replaced) doc["stages"].push_back(std::move(entry));
  ensure_parent(path);
  write_json_file(path, doc);
}

Json stage_entry(std::string_view stage, std::size_t in, std::size_t out, const std::vector<fs::path>& outputs) {
  Json e = Json::object();
  e["stage"] = stage;
  e["records_in"] = in;
  e["records_out"] = out;
  Json files = Json::array();
  for (const auto& p : outputs) files.push_back(p.filename().string());
  e["outputs"] = std::move(files);
  return e;
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string kind = "auto";
  std::string output;
  std::string report;
  bool trust = false;
  std::vector<std::string> inputs;
};

template <typename Record>
int do_ingest(Session& s, const IngestArgs& a, IngestResult<Record> (*ingest)(std::span<const fs::path>, const ParseOptions&),
              std::string_view stage) {
  ParseOptions opts;
  opts.trust_token_counts = a.trust;
  const auto paths = to_paths(a.inputs);
  auto res = ingest(paths, opts);
  const fs::path out = a.output;
  const fs::path report = a.report.empty() ? sibling(out, ".ingest-report.json") : fs::path(a.report);
  ensure_parent(out);
  Json rep = res.report.to_json();
  Json shards = Json::array();
  for (const auto& p : a.inputs) shards.push_back(fs::path(p).filename().string());
  rep["shards"] = std::move(shards);
  rep["records_out"] = res.records.size();
  write_json_file(report, rep);
  write_records(out, res.records);
  for (const auto& issue : res.report.malformed)
    s.err << "warning: " << a.inputs.at(issue.shard) << ":" << issue.line << ": " << issue.message << "\n";
  for (const auto& issue : res.report.duplicates)
    s.err << "warning: " << a.inputs.at(issue.shard) << ":" << issue.line << ": duplicate id '" << issue.id << "'\n";
  auto entry = stage_entry(stage, res.report.lines_read, res.records.size(), {out, report});
  entry["malformed"] = res.report.malformed.size();
  entry["duplicates"] = res.report.duplicates.size();
  record_stage(s, out, std::move(entry));
  s.out << "ingest: " << res.records.size() << " records from " << res.report.lines_read << " lines ("
        << res.report.malformed.size() << " malformed, " << res.report.duplicates.size() << " duplicate ids)\n";
  return kExitOk;
}

int cmd_ingest(Session& s, IngestArgs a) {
  if (a.inputs.empty()) a.inputs = s.cfg.inputs;
  if (a.inputs.empty()) throw InputError("ingest: no input shards");
  if (a.output.empty()) throw InputError("ingest: --output is required");
  switch (resolve_kind(a.kind, a.inputs)) {
    case RecordKind::document: return do_ingest<Document>(s, a, &ingest_documents, "ingest");
    case RecordKind::sample: return do_ingest<Sample>(s, a, &ingest_samples, "ingest");
    case RecordKind::benchmark: return do_ingest<BenchmarkItem>(s, a, &ingest_benchmarks, "ingest");
  }
  return kExitOk;
}

// ---------------------------------------------------------------- dedup

struct DedupArgs {
  std::string kind = "auto";
  std::string output;
  std::string report;
  std::optional<double> threshold;
  std::optional<std::size_t> shingle_n;
  bool exact_only = false;
  std::vector<std::string> inputs;
};

template <typename Record>
int do_dedup(Session& s, const DedupArgs& a, std::vector<Record> records) {
  std::vector<std::string> storage;
  const std::size_t n_in = records.size();

  auto items = dedup_items(records, storage);
  auto exact = exact_dedup(items);
  auto after_exact = select_indices(records, exact.survivors);

  Json rep = Json::object();
  rep["records_in"] = n_in;
  rep["exact"] = exact.report.to_json();
  std::vector<Record> kept = std::move(after_exact);
  if (!a.exact_only) {
    NearDedupConfig cfg;
    cfg.jaccard_threshold = a.threshold.value_or(s.cfg.dedup_threshold);
    cfg.shingle_n = a.shingle_n.value_or(s.cfg.dedup_shingle_n);
    auto near_items = dedup_items(kept, storage);
    auto near = near_dedup(near_items, cfg);
    rep["near"] = near.report.to_json();
    rep["near"]["jaccard_threshold"] = cfg.jaccard_threshold;
    rep["near"]["shingle_n"] = cfg.shingle_n;
    kept = select_indices(kept, near.survivors);
  }
  rep["records_out"] = kept.size();

  const fs::path out = a.output;
  const fs::path report = a.report.empty() ? sibling(out, ".dedup-report.json") : fs::path(a.report);
  ensure_parent(out);
  write_json_file(report, rep);
  write_records(out, kept);
  record_stage(s, out, stage_entry("dedup", n_in, kept.size(), {out, report}));
  s.out << "dedup: kept " << kept.size() << " of " << n_in << "\n";
  return kExitOk;
}

int cmd_dedup(Session& s, DedupArgs a) {
  if (a.inputs.empty()) a.inputs = s.cfg.inputs;
  if (a.output.empty()) throw InputError("dedup: --output is required");
  switch (resolve_kind(a.kind, a.inputs)) {
    case RecordKind::document: return do_dedup(s, a, load_documents(a.inputs));
    case RecordKind::sample: return do_dedup(s, a, load_samples(a.inputs));
    case RecordKind::benchmark: throw InputError("dedup: benchmark files are not deduplicated");
  }
  return kExitOk;
}

// ---------------------------------------------------------------- decontam

struct DecontamArgs {
  std::string kind = "auto";
  std::string output = "out.jsonl";
  std::string report;
  std::string benchmarks;
  std::optional<std::size_t> n;
  bool questions_only = false;
  std::vector<std::string> inputs;
};

template <typename Record>
int do_decontam(Session& s, const DecontamArgs& a, const std::vector<Record>& records, const NgramIndex& index) {
  auto res = contamination_scan(records, index);
  Json rep = Json::object();
  rep["n"] = index.n();
  rep["indexed_grams"] = index.size();
  rep["records_in"] = records.size();
  rep["removed"] = res.removed;
  rep["records_out"] = res.clean.size();
  Json matches = Json::array();
  for (const auto& m : res.matches) matches.push_back(m.to_json());
  rep["matches"] = std::move(matches);
  rep["skipped_benchmark_items"] = index.skipped_items();
  rep["warnings"] = index.warnings();
  for (const auto& w : index.warnings()) s.err << "warning: " << w << "\n";

  const fs::path out = a.output;
  const fs::path report = a.report.empty() ? sibling(out, ".contamination.json") : fs::path(a.report);
  ensure_parent(out);
  write_json_file(report, rep);
  write_records(out, res.clean);
  auto entry = stage_entry("decontam", records.size(), res.clean.size(), {out, report});
  entry["contaminated"] = res.removed;
  record_stage(s, out, std::move(entry));
  s.out << "decontam: removed " << res.removed << " of " << records.size() << " records (" << index.n()
        << "-gram overlap)\n";
  return kExitOk;
}

int cmd_decontam(Session& s, DecontamArgs a) {
  if (a.inputs.empty()) a.inputs = s.cfg.inputs;
  if (a.benchmarks.empty()) a.benchmarks = s.cfg.benchmarks;
  if (a.benchmarks.empty()) throw InputError("decontam: --benchmarks is required");
  const std::vector<fs::path> bench_paths{a.benchmarks};
  auto bench = ingest_benchmarks(bench_paths, ParseOptions{});
  for (const auto& issue : bench.report.malformed)
    s.err << "warning: " << a.benchmarks << ":" << issue.line << ": " << issue.message << "\n";
  IndexOptions opts;
  opts.n = a.n.value_or(s.cfg.decontam_n);
  opts.include_answers = !a.questions_only && s.cfg.decontam_include_answers;
  const auto index = build_ngram_index(bench.records, opts);
  switch (resolve_kind(a.kind, a.inputs)) {
    case RecordKind::document: return do_decontam(s, a, load_documents(a.inputs), index);
    case RecordKind::sample: return do_decontam(s, a, load_samples(a.inputs), index);
    case RecordKind::benchmark: throw InputError("decontam: inputs must be documents or samples");
  }
  return kExitOk;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  std::string output;
  std::string report;
  std::string gold;
  std::vector<std::string> inputs;
};

int cmd_verify(Session& s, VerifyArgs a) {
  if (a.inputs.empty()) a.inputs = s.cfg.inputs;
  if (a.output.empty()) throw InputError("verify: --output is required");
  const auto samples = load_samples(a.inputs);
  const auto gold = read_gold(a.gold);

  struct Row {
    std::string sample_id;
    std::optional<std::string> extracted;
    VerifyOutcome outcome;
    bool has_reference = false;
  };
  std::vector<Row> rows(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const auto& smp = samples[i];
    auto& r = rows[i];
    r.sample_id = sample_id_of(smp);
    const std::string* ref = nullptr;
    if (auto it = gold.find(smp.id); it != gold.end()) ref = &it->second;
    else if (auto it2 = gold.find(r.sample_id); it2 != gold.end()) ref = &it2->second;
    else if (smp.gold_answer) ref = &*smp.gold_answer;
    r.extracted = extract_final_answer(smp.response);
    if (!ref || ref->empty()) {
      r.outcome = {Verdict::Unparseable, VerifyMethod::string, "no reference answer"};
      return;
    }
    r.has_reference = true;
    r.outcome = verify_response(smp.response, *ref);
  });

  const fs::path out = a.output;
  ensure_parent(out);
  AtomicFileWriter writer(out);
  std::map<std::string, std::size_t> by_verdict;
  std::size_t correct = 0;
  std::size_t no_reference = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& r = rows[i];
    Json j = Json::object();
    j["id"] = samples[i].id;
    j["sample_id"] = r.sample_id;
    j["verdict"] = to_string(r.outcome.verdict);
    j["method"] = to_string(r.outcome.method);
    const int reward = r.outcome.verdict == Verdict::Equivalent ? 1 : -1;
    j["reward"] = reward;
    j["extracted"] = r.extracted ? Json(*r.extracted) : Json(nullptr);
    if (!r.outcome.detail.empty()) j["detail"] = r.outcome.detail;
    writer.write_line(dump_line(j));
    ++by_verdict[std::string(to_string(r.outcome.verdict))];
    if (reward == 1) ++correct;
    if (!r.has_reference) ++no_reference;
  }
  const fs::path report = a.report.empty() ? sibling(out, ".verify-report.json") : fs::path(a.report);
  Json rep = Json::object();
  rep["responses"] = samples.size();
  rep["correct"] = correct;
  rep["no_reference"] = no_reference;
  Json counts = Json::object();
  for (const auto& [k, v] : by_verdict) counts[k] = v;
  rep["verdicts"] = std::move(counts);
  write_json_file(report, rep);
  writer.commit();
  auto entry = stage_entry("verify", samples.size(), samples.size(), {out, report});
  entry["correct"] = correct;
  record_stage(s, out, std::move(entry));
  s.out << "verify: " << correct << " of " << samples.size() << " responses correct\n";
  return kExitOk;
}

// ---------------------------------------------------------------- filter

struct FilterArgs {
  std::string kind = "auto";
  std::string output;
  std::string report;
  std::string gold;
  std::string scores;
  std::string stage = "all";
  std::optional<double> quantile;
  std::optional<std::size_t> bucket;
  std::optional<std::size_t> min_tokens;
  std::optional<std::size_t> max_tokens;
  std::optional<double> top_fraction;
  std::vector<std::string> inputs;
};

int cmd_filter(Session& s, FilterArgs a) {
  if (a.inputs.empty()) a.inputs = s.cfg.inputs;
  if (a.scores.empty()) a.scores = s.cfg.scores;
  if (a.output.empty()) throw InputError("filter: --output is required");
  FilterConfig fc = s.cfg.filter;
  if (a.quantile) fc.keep_quantile = *a.quantile;
  if (a.bucket) fc.bucket_width_tokens = *a.bucket;
  if (a.min_tokens) fc.min_tokens = *a.min_tokens;
  if (a.max_tokens) fc.max_tokens = *a.max_tokens;
  if (a.top_fraction) fc.top_fraction = *a.top_fraction;
  fc.validate();

  const fs::path out = a.output;
  const fs::path report = a.report.empty() ? sibling(out, ".filter-report.json") : fs::path(a.report);
  ensure_parent(out);
  Json rep = Json::object();

  if (resolve_kind(a.kind, a.inputs) == RecordKind::document) {
    auto docs = load_documents(a.inputs);
    if (!a.scores.empty()) {
      const auto scores = read_scores(a.scores);
      for (auto& d : docs)
        if (auto it = scores.find(d.id); it != scores.end()) d.quality_score = it->second;
    }
    const auto kept = select_top_fraction(docs, fc.top_fraction);
    rep["mode"] = "top-fraction";
    rep["top_fraction"] = fc.top_fraction;
    rep["records_in"] = docs.size();
    rep["records_out"] = kept.size();
    write_json_file(report, rep);
    write_records(out, kept);
    record_stage(s, out, stage_entry("filter", docs.size(), kept.size(), {out, report}));
    s.out << "filter: kept " << kept.size() << " of " << docs.size() << " documents\n";
    return kExitOk;
  }

  if (a.stage != "all" && a.stage != "rule" && a.stage != "quantile")
    throw InputError("filter: --stage must be all, rule or quantile");
  auto samples = load_samples(a.inputs);
  const std::size_t n_in = samples.size();
  rep["records_in"] = n_in;

  if (a.stage != "quantile") {
    const auto gold = read_gold(a.gold);
    std::unordered_map<std::string, std::string> refs;
    for (const auto& smp : samples) {
      if (auto it = gold.find(smp.id); it != gold.end()) refs.emplace(smp.id, it->second);
      else if (auto it2 = gold.find(sample_id_of(smp)); it2 != gold.end()) refs.emplace(smp.id, it2->second);
    }
    auto rule = rule_filter(samples, refs, fc);
    std::map<std::string, std::size_t> reasons;
    Json rejected = Json::array();
    for (const auto& r : rule.rejected) {
      ++reasons[std::string(to_string(r.reason))];
      Json e = Json::object();
      e["id"] = r.sample.id;
      e["reason"] = to_string(r.reason);
      if (!r.detail.empty()) e["detail"] = r.detail;
      rejected.push_back(std::move(e));
    }
    Json rr = Json::object();
    rr["kept"] = rule.kept.size();
    Json rc = Json::object();
    for (const auto& [k, v] : reasons) rc[k] = v;
    rr["rejected_by_reason"] = std::move(rc);
    rr["rejected"] = std::move(rejected);
    rep["rule"] = std::move(rr);
    samples = std::move(rule.kept);
  }

  if (a.stage != "rule") {
    if (!a.scores.empty()) {
      const auto missing = attach_scores(samples, read_scores(a.scores));
      if (!missing.empty()) throw InputError("filter: no reward score for sample '" + missing.front() + "'");
    }
    auto q = reward_quantile_filter(samples, fc);
    Json qr = q.report_json();
    qr["keep_quantile"] = fc.keep_quantile;
    qr["bucket_width_tokens"] = fc.bucket_width_tokens;
    rep["quantile"] = std::move(qr);
    samples = std::move(q.kept);
  }
  rep["records_out"] = samples.size();
  write_json_file(report, rep);
  write_records(out, samples);
  record_stage(s, out, stage_entry("filter", n_in, samples.size(), {out, report}));
  s.out << "filter: kept " << samples.size() << " of " << n_in << " samples\n";
  return kExitOk;
}

// ---------------------------------------------------------------- difficulty

struct DifficultyArgs {
  std::string output;
  std::string report;
  std::string verdicts;
  std::string gate = "instruct_rl";
  std::vector<std::string> samples;
};

Gate parse_gate(const std::string& g) {
  if (g == "instruct_rl" || g == "instruct") return Gate::instruct_rl;
  if (g == "thinking_rl" || g == "thinking") return Gate::thinking_rl;
  if (g == "long_context" || g == "long") return Gate::long_context;
  throw InputError("unknown gate '" + g + "' (expected instruct_rl, thinking_rl or long_context)");
}

int cmd_difficulty(Session& s, DifficultyArgs a) {
  if (a.verdicts.empty()) a.verdicts = s.cfg.verdicts;
  if (a.verdicts.empty()) throw InputError("difficulty: --verdicts is required");
  if (a.output.empty()) throw InputError("difficulty: --output is required");
  const Gate gate = parse_gate(a.gate);
  const auto stats = estimate_pass_rates(read_verdicts(a.verdicts));
  const auto kept_ids = apply_gate(gate, stats);
  const std::set<std::string> kept(kept_ids.begin(), kept_ids.end());
  std::unordered_map<std::string, const RolloutStats*> by_id;
  for (const auto& st : stats) by_id[st.sample_id] = &st;

  const fs::path out = a.output;
  const fs::path report = a.report.empty() ? sibling(out, ".difficulty-report.json") : fs::path(a.report);
  ensure_parent(out);
  std::size_t n_in = stats.size();
  std::size_t n_out = kept_ids.size();
  if (!a.samples.empty()) {
    auto samples = load_samples(a.samples);
    std::vector<Sample> selected;
    for (auto& smp : samples) {
      const auto sid = sample_id_of(smp);
      if (!kept.count(sid)) continue;
      smp.pass_rate = by_id.at(sid)->pass_rate();
      selected.push_back(std::move(smp));
    }
    n_in = samples.size();
    n_out = selected.size();
    write_records(out, selected);
  } else {
    AtomicFileWriter writer(out);
    for (const auto& st : stats)
      if (kept.count(st.sample_id)) writer.write_line(dump_line(st.to_json()));
    writer.commit();
  }
  Json rep = Json::object();
  rep["gate"] = a.gate;
  rep["queries"] = stats.size();
  rep["queries_kept"] = kept_ids.size();
  Json all = Json::array();
  for (const auto& st : stats) {
    Json e = st.to_json();
    e["kept"] = kept.count(st.sample_id) > 0;
    all.push_back(std::move(e));
  }
  rep["stats"] = std::move(all);
  write_json_file(report, rep);
  auto entry = stage_entry("difficulty", n_in, n_out, {out, report});
  entry["queries"] = stats.size();
  entry["queries_kept"] = kept_ids.size();
  record_stage(s, out, std::move(entry));
  s.out << "difficulty: kept " << kept_ids.size() << " of " << stats.size() << " queries (" << a.gate << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- qualgate

struct JudgeArgs {
  std::string record;
  std::string batch_id;
  std::string base;
  std::string candidate;
  std::string key_metrics;
  std::string output;
};

int cmd_qual_judge(Session& s, const JudgeArgs& a) {
  QualificationRecord rec;
  if (!a.record.empty() && fs::exists(a.record)) {
    rec = QualificationRecord::from_json(read_json_file(a.record));
  } else {
    if (a.batch_id.empty()) throw InputError("qualgate judge: --batch-id is required for a new record");
    rec.batch_id = a.batch_id;
  }
  if (!a.base.empty()) rec.base_metrics = read_metrics(a.base);
  if (!a.candidate.empty()) rec.candidate_metrics = read_metrics(a.candidate);
  const auto next = judge_round(rec, split_commas(a.key_metrics));
  const fs::path out = !a.output.empty() ? fs::path(a.output) : fs::path(a.record);
  if (out.empty()) throw InputError("qualgate judge: --output or --record is required");
  ensure_parent(out);
  write_json_file(out, next.to_json());
  Json entry = stage_entry("qualgate", 1, next.state == QualState::Accepted ? 1 : 0, {out});
  entry["batch_id"] = next.batch_id;
  entry["state"] = to_string(next.state);
  record_stage(s, out, std::move(entry));
  s.out << "qualgate: " << next.batch_id << " round " << next.history.back().round << " -> " << to_string(next.state)
        << "\n";
  return kExitOk;
}

struct AdmitArgs {
  std::string manifest;
  std::string record;
  std::uint64_t tokens = 0;
  std::string shares;
  std::string fixed_shares;
  std::optional<std::uint64_t> quantum;
  std::string output;
};

int cmd_qual_admit(Session& s, const AdmitArgs& a) {
  if (a.manifest.empty()) throw InputError("qualgate admit: --manifest is required");
  CorpusManifest m;
  if (fs::exists(a.manifest)) m = CorpusManifest::from_json(read_json_file(a.manifest));
  else if (!a.fixed_shares.empty()) m.fixed_shares = read_metrics(a.fixed_shares);
  if (a.quantum) m.refresh_quantum_tokens = *a.quantum;
  const auto rec = QualificationRecord::from_json(read_json_file(a.record));
  const MetricMap shares = a.shares.empty() ? MetricMap{} : read_metrics(a.shares);
  const auto next = corpus_admit(m, rec, a.tokens, shares);
  const fs::path out = a.output.empty() ? fs::path(a.manifest) : fs::path(a.output);
  ensure_parent(out);
  write_json_file(out, next.to_json());
  Json entry = stage_entry("qualgate-admit", m.entries.size(), next.entries.size(), {out});
  entry["total_tokens"] = next.total_tokens;
  entry["seed_refresh_due"] = next.seed_refresh_due;
  record_stage(s, out, std::move(entry));
  s.out << "qualgate: admitted " << rec.batch_id << " (" << a.tokens << " tokens, total " << next.total_tokens << ")\n";
  if (next.seed_refresh_due) s.out << "qualgate: seed refresh due (seed data and base model should be updated)\n";
  return kExitOk;
}

// ---------------------------------------------------------------- curriculum

struct CurriculumArgs {
  std::string kind;
  std::string stages;
  std::string output;
  std::vector<std::string> datasets;
};

int cmd_curriculum(Session& s, CurriculumArgs a, std::uint64_t seed) {
  if (a.datasets.empty()) a.datasets = s.cfg.inputs;
  if (a.datasets.empty()) throw InputError("curriculum: no datasets");
  if (a.output.empty()) throw InputError("curriculum: --output directory is required");
  const RlKind kind = a.kind.empty() ? s.cfg.curriculum_kind : parse_rl_kind(a.kind);
  std::vector<std::uint64_t> stages = s.cfg.stages;
  if (!a.stages.empty()) {
    stages.clear();
    for (const auto& part : split_commas(a.stages)) {
      try {
        stages.push_back(std::stoull(part));
      } catch (const std::exception&) {
        throw InputError("curriculum: bad stage length '" + part + "'");
      }
    }
  }
  std::vector<StageDataset> datasets;
  std::size_t n_in = 0;
  for (const auto& path : a.datasets) {
    StageDataset ds;
    ds.path = path;
    for (const auto& smp : load_samples({path})) {
      std::uint64_t prompt_tokens = count_tokens(smp.prompt);
      if (auto it = smp.extra.find("prompt_token_count"); it != smp.extra.end() && it->is_number_unsigned())
        prompt_tokens = it->get<std::uint64_t>();
      ds.entries.push_back({smp.id, prompt_tokens});
    }
    n_in += ds.entries.size();
    datasets.push_back(std::move(ds));
  }
  const auto chain = build_stage_chain(kind, datasets, seed, stages);
  const fs::path dir = a.output;
  fs::create_directories(dir);
  std::vector<fs::path> written;
  std::size_t last_included = 0;
  for (const auto& m : chain) {
    const fs::path ids = dir / (m.stage_name + ".ids.txt");
    AtomicFileWriter w(ids);
    last_included = 0;
    for (const auto& ref : m.dataset_refs) {
      for (const auto& id : ref.included_ids) w.write_line(id);
      last_included += ref.included;
    }
    w.commit();
    const fs::path manifest = dir / (m.stage_name + ".json");
    write_json_file(manifest, m.to_json());
    written.push_back(manifest);
    written.push_back(ids);
    for (const auto& warn : m.warnings) s.err << "warning: " << m.stage_name << ": " << warn << "\n";
  }
  record_stage(s, dir, stage_entry("curriculum", n_in, last_included, written));
  s.out << "curriculum: wrote " << chain.size() << " stage manifests to " << dir.string() << "\n";
  return kExitOk;
}

struct MixArgs {
  std::vector<std::string> sources;
  std::uint64_t total_tokens = 0;
  std::string output;
  std::string report;
};

int cmd_mix(Session& s, const MixArgs& a, std::uint64_t seed) {
  if (a.output.empty()) throw InputError("curriculum mix: --output is required");
  std::vector<MixtureSource> sources;
  std::size_t n_in = 0;
  for (const auto& spec : a.sources) {
    const auto eq = spec.find('=');
    const auto colon = spec.rfind(':');
    if (eq == std::string::npos || colon == std::string::npos || colon < eq)
      throw InputError("curriculum mix: source must look like NAME=PATH:WEIGHT, got '" + spec + "'");
    MixtureSource src;
    src.name = spec.substr(0, eq);
    try {
      src.weight = std::stod(spec.substr(colon + 1));
    } catch (const std::exception&) {
      throw InputError("curriculum mix: bad weight in '" + spec + "'");
    }
    src.records = load_documents({spec.substr(eq + 1, colon - eq - 1)});
    n_in += src.records.size();
    sources.push_back(std::move(src));
  }
  const auto res = compose_mixture(sources, a.total_tokens, seed);
  const fs::path out = a.output;
  const fs::path report = a.report.empty() ? sibling(out, ".mixture-report.json") : fs::path(a.report);
  ensure_parent(out);
  write_json_file(report, res.report.to_json());
  write_records(out, res.records);
  for (const auto& w : res.report.warnings) s.err << "warning: " << w << "\n";
  record_stage(s, out, stage_entry("mix", n_in, res.records.size(), {out, report}));
  s.out << "mix: " << res.records.size() << " records, " << res.report.realized_tokens << " tokens\n";
  return kExitOk;
}

// ---------------------------------------------------------------- grpo-sim

struct GrpoArgs {
  int steps = 200;
  std::vector<std::string> hyper;
  std::string output;
  int feature_dim = 32;
};

int cmd_grpo(Session& s, const GrpoArgs& a, std::uint64_t seed) {
  if (a.output.empty()) throw InputError("grpo-sim: --output is required");
  ToyTrainingConfig cfg;
  cfg.steps = a.steps;
  cfg.seed = seed;
  for (const auto& kv : a.hyper) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InputError("grpo-sim: --hyper expects KEY=VALUE, got '" + kv + "'");
    const auto key = kv.substr(0, eq);
    double v = 0;
    try {
      v = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw InputError("grpo-sim: bad value in '" + kv + "'");
    }
    if (key == "kl_coeff") cfg.hyper.kl_coeff = v;
    else if (key == "learning_rate") cfg.hyper.learning_rate = v;
    else if (key == "rollouts_per_query") cfg.hyper.rollouts_per_query = static_cast<int>(v);
    else if (key == "batch_size") cfg.hyper.batch_size = static_cast<int>(v);
    else if (key == "temperature") cfg.hyper.temperature = v;
    else if (key == "clip_eps") cfg.hyper.clip_eps = v;
    else if (key == "entropy_floor") cfg.entropy_floor = v;
    else throw InputError("grpo-sim: unknown hyperparameter '" + key + "'");
  }
  const auto env = ArithmeticEnv::standard(a.feature_dim);
  const auto res = run_toy_training(env, cfg);
  const fs::path out = a.output;
  ensure_parent(out);
  AtomicFileWriter w(out);
  for (const auto& e : res.log) w.write_line(dump_line(e.to_json()));
  w.commit();
  for (const auto& warn : res.warnings) s.err << "warning: " << warn << "\n";
  Json entry = stage_entry("grpo-sim", static_cast<std::size_t>(cfg.steps), res.log.size(), {out});
  if (!res.log.empty()) {
    entry["initial_moving_average"] = res.moving_average(0);
    entry["final_moving_average"] = res.moving_average(res.log.size() - 1);
  }
  record_stage(s, out, std::move(entry));
  if (!res.log.empty())
    s.out << "grpo-sim: " << res.log.size() << " steps, moving-average reward " << std::fixed << std::setprecision(3)
          << res.moving_average(0) << " -> " << res.moving_average(res.log.size() - 1) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- report

int cmd_report(Session& s, const std::string& path) {
  const Json doc = read_json_file(path);
  if (!doc.is_object() || !doc.contains("stages") || !doc["stages"].is_array())
    throw InputError(path + ": not a run summary");
  s.out << std::left << std::setw(16) << "stage" << std::right << std::setw(10) << "in" << std::setw(10) << "out"
        << std::setw(10) << "kept%" << "\n";
  for (const auto& e : doc["stages"]) {
    const auto in = e.value("records_in", std::size_t{0});
    const auto outn = e.value("records_out", std::size_t{0});
    std::ostringstream pct;
    if (in > 0) pct << std::fixed << std::setprecision(1) << 100.0 * static_cast<double>(outn) / static_cast<double>(in);
    else pct << "-";
    s.out << std::left << std::setw(16) << e.value("stage", std::string("?")) << std::right << std::setw(10) << in
          << std::setw(10) << outn << std::setw(10) << pct.str() << "\n";
  }
  return kExitOk;
}

// Finds --config before the real parse so file values become option defaults.
std::optional<std::string> prescan_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    PipelineConfig cfg;
    if (auto path = prescan_config(args)) {
      cfg = PipelineConfig::load(*path);
      cfg.check_paths();
    }
    Session session{cfg, out, err, {}, false};

    CLI::App app{"Math data curation and RL tooling", "mathcur"};
    app.set_version_flag("--version", std::string("mathcur ") + MATHCUR_VERSION);
    app.require_subcommand(1);
    std::string config_path;
    std::size_t workers = cfg.workers;
    std::uint64_t seed = cfg.seed;
    app.add_option("--config", config_path, "INI pipeline config; flags override its values");
    app.add_option("--workers", workers, "Worker threads (0 = all cores)");
    app.add_option("--seed", seed, "Seed for every seeded stage");
    app.add_option("--summary", session.summary, "Run summary file (default: run-summary.json beside the output)");
    app.add_flag("--no-summary", session.no_summary, "Do not write a run summary");

    std::function<int()> action;

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "Validate and merge JSON Lines shards");
    ingest->add_option("--kind", ingest_args.kind, "document, sample, benchmark or auto");
    ingest->add_option("-o,--output", ingest_args.output, "Merged output JSONL");
    ingest->add_option("--report", ingest_args.report, "Ingest report JSON");
    ingest->add_flag("--trust-token-counts", ingest_args.trust, "Accept token counts that disagree with the counter");
    ingest->add_option("inputs", ingest_args.inputs, "Input shards");
    ingest->callback([&] { action = [&] { return cmd_ingest(session, ingest_args); }; });

    DedupArgs dedup_args;
    auto* dedup = app.add_subcommand("dedup", "Exact and MinHash near-duplicate removal");
    dedup->add_option("--kind", dedup_args.kind, "document, sample or auto");
    dedup->add_option("-o,--output", dedup_args.output, "Deduplicated output JSONL");
    dedup->add_option("--report", dedup_args.report, "Cluster report JSON");
    dedup->add_option("--threshold", dedup_args.threshold, "Jaccard threshold for near duplicates");
    dedup->add_option("--shingle-n", dedup_args.shingle_n, "Token shingle length");
    dedup->add_flag("--exact-only", dedup_args.exact_only, "Skip near-duplicate detection");
    dedup->add_option("inputs", dedup_args.inputs, "Input JSONL files");
    dedup->callback([&] { action = [&] { return cmd_dedup(session, dedup_args); }; });

    DecontamArgs decontam_args;
    auto* decontam = app.add_subcommand("decontam", "Remove records sharing an n-gram with a benchmark");
    decontam->add_option("--kind", decontam_args.kind, "document, sample or auto");
    decontam->add_option("--benchmarks", decontam_args.benchmarks, "Benchmark JSONL");
    decontam->add_option("--n", decontam_args.n, "n-gram length");
    decontam->add_flag("--questions-only", decontam_args.questions_only, "Index benchmark questions only");
    decontam->add_option("-o,--output", decontam_args.output, "Clean output JSONL");
    decontam->add_option("--report", decontam_args.report, "Contamination report JSON");
    decontam->add_option("inputs", decontam_args.inputs, "Input JSONL files");
    decontam->callback([&] { action = [&] { return cmd_decontam(session, decontam_args); }; });

    VerifyArgs verify_args;
    auto* verify = app.add_subcommand("verify", "Score responses against reference answers");
    verify->add_option("--gold", verify_args.gold, "JSONL of {id, answer} keyed by sample or query id");
    verify->add_option("-o,--output", verify_args.output, "Verdict JSONL");
    verify->add_option("--report", verify_args.report, "Verdict summary JSON");
    verify->add_option("inputs", verify_args.inputs, "Sample JSONL files");
    verify->callback([&] { action = [&] { return cmd_verify(session, verify_args); }; });

    FilterArgs filter_args;
    auto* filter = app.add_subcommand("filter", "Rule and reward-quantile filtering");
    filter->add_option("--kind", filter_args.kind, "sample, document or auto");
    filter->add_option("--stage", filter_args.stage, "all, rule or quantile");
    filter->add_option("--gold", filter_args.gold, "Reference answers JSONL");
    filter->add_option("--scores", filter_args.scores, "JSONL of {id, reward_score}");
    filter->add_option("--quantile", filter_args.quantile, "Per-bucket keep quantile");
    filter->add_option("--bucket", filter_args.bucket, "Bucket width in tokens");
    filter->add_option("--min-tokens", filter_args.min_tokens, "Minimum response tokens");
    filter->add_option("--max-tokens", filter_args.max_tokens, "Maximum response tokens");
    filter->add_option("--top-fraction", filter_args.top_fraction, "Fraction of documents kept by quality score");
    filter->add_option("-o,--output", filter_args.output, "Kept records JSONL");
    filter->add_option("--report", filter_args.report, "Filter report JSON");
    filter->add_option("inputs", filter_args.inputs, "Input JSONL files");
    filter->callback([&] { action = [&] { return cmd_filter(session, filter_args); }; });

    DifficultyArgs diff_args;
    auto* difficulty = app.add_subcommand("difficulty", "Pass-rate gates over rollout verdicts");
    difficulty->add_option("--verdicts", diff_args.verdicts, "Verdict JSONL from `verify`");
    difficulty->add_option("--gate", diff_args.gate, "instruct_rl, thinking_rl or long_context");
    difficulty->add_option("--samples", diff_args.samples, "Samples to select by query id");
    difficulty->add_option("-o,--output", diff_args.output, "Selected samples (or query stats) JSONL");
    difficulty->add_option("--report", diff_args.report, "Pass-rate report JSON");
    difficulty->callback([&] { action = [&] { return cmd_difficulty(session, diff_args); }; });

    auto* qual = app.add_subcommand("qualgate", "Data qualification rounds and corpus admission");
    qual->require_subcommand(1);
    JudgeArgs judge_args;
    auto* judge = qual->add_subcommand("judge", "Judge one qualification round");
    judge->add_option("--record", judge_args.record, "Qualification record JSON (created if absent)");
    judge->add_option("--batch-id", judge_args.batch_id, "Batch id for a new record");
    judge->add_option("--base", judge_args.base, "Base model metrics JSON");
    judge->add_option("--candidate", judge_args.candidate, "Validation model metrics JSON");
    judge->add_option("--key-metrics", judge_args.key_metrics, "Comma separated benchmark names");
    judge->add_option("-o,--output", judge_args.output, "Updated record (default: --record)");
    judge->callback([&] { action = [&] { return cmd_qual_judge(session, judge_args); }; });
    AdmitArgs admit_args;
    auto* admit = qual->add_subcommand("admit", "Admit an Accepted batch into the corpus manifest");
    admit->add_option("--manifest", admit_args.manifest, "Corpus manifest JSON (created if absent)");
    admit->add_option("--record", admit_args.record, "Accepted qualification record")->required();
    admit->add_option("--tokens", admit_args.tokens, "Batch token count")->required();
    admit->add_option("--shares", admit_args.shares, "Batch category shares JSON");
    admit->add_option("--fixed-shares", admit_args.fixed_shares, "Fixed category shares for a new manifest");
    admit->add_option("--quantum", admit_args.quantum, "Seed-refresh quantum in tokens");
    admit->add_option("-o,--output", admit_args.output, "Updated manifest (default: --manifest)");
    admit->callback([&] { action = [&] { return cmd_qual_admit(session, admit_args); }; });

    CurriculumArgs cur_args;
    auto* cur = app.add_subcommand("curriculum", "Emit the staged RL manifests");
    cur->add_option("--kind", cur_args.kind, "instruct_rl or thinking_rl");
    cur->add_option("--stages", cur_args.stages, "Comma separated context lengths");
    cur->add_option("-o,--output", cur_args.output, "Output directory");
    cur->add_option("datasets", cur_args.datasets, "Sample JSONL datasets");
    cur->callback([&] {
      if (!action) action = [&] { return cmd_curriculum(session, cur_args, seed); };
    });
    MixArgs mix_args;
    auto* mix = cur->add_subcommand("mix", "Compose a weighted mixture of document sources");
    mix->add_option("--source", mix_args.sources, "NAME=PATH:WEIGHT, repeatable")->required();
    mix->add_option("--total-tokens", mix_args.total_tokens, "Token budget")->required();
    mix->add_option("-o,--output", mix_args.output, "Mixture JSONL");
    mix->add_option("--report", mix_args.report, "Composition report JSON");
    mix->callback([&] { action = [&] { return cmd_mix(session, mix_args, seed); }; });

    GrpoArgs grpo_args;
    auto* grpo = app.add_subcommand("grpo-sim", "Toy GRPO run on the arithmetic environment");
    grpo->add_option("--steps", grpo_args.steps, "Training steps");
    grpo->add_option("--hyper", grpo_args.hyper, "KEY=VALUE hyperparameter override, repeatable");
    grpo->add_option("--features", grpo_args.feature_dim, "Hashed feature dimension");
    grpo->add_option("-o,--output", grpo_args.output, "Training log JSONL");
    grpo->callback([&] { action = [&] { return cmd_grpo(session, grpo_args, seed); }; });

    std::string report_path;
    auto* report = app.add_subcommand("report", "Print the stage funnel of a run summary");
    report->add_option("summary", report_path, "run-summary.json")->required();
    report->callback([&] { action = [&] { return cmd_report(session, report_path); }; });

    for (auto* sub : {ingest, dedup, decontam, verify, filter, difficulty, qual, cur, grpo, report}) sub->fallthrough();
    for (auto* sub : {judge, admit, mix}) sub->fallthrough();

    try {
      std::vector<std::string> reversed(args.rbegin(), args.rend());
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kExitOk : kExitInputError;
    }
    set_worker_count(workers);
    return action ? action() : kExitOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const InvariantError& e) {
    err << "invariant violated: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::logic_error& e) {
    err << "invariant violated: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace mathcur::cli

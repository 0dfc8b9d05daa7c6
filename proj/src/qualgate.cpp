#include "mathcur/qualgate.hpp"

#include <cmath>
#include <set>

#include "mathcur/common.hpp"

namespace mathcur {

std::string_view to_string(QualState s) {
  switch (s) {
    case QualState::Pending: return "Pending";
    case QualState::Accepted: return "Accepted";
    case QualState::Retry: return "Retry";
    case QualState::Discarded: return "Discarded";
  }
  return "Pending";
}

std::string_view to_string(RoundVerdict v) { return v == RoundVerdict::accept ? "accept" : "reject"; }

namespace {

QualState parse_state(const std::string& s) {
  if (s == "Pending") return QualState::Pending;
  if (s == "Accepted") return QualState::Accepted;
  if (s == "Retry") return QualState::Retry;
  if (s == "Discarded") return QualState::Discarded;
  throw InputError("unknown qualification state '" + s + "'");
}

MetricMap metrics_from_json(const Json& j) {
  MetricMap out;
  if (!j.is_object()) throw InputError("metrics must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number()) throw InputError("metric '" + it.key() + "' must be a number");
    out[it.key()] = it.value().get<double>();
  }
  return out;
}

Json metrics_to_json(const MetricMap& m) {
  Json j = Json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

}  // namespace

void QualificationRecord::check_consistent() const {
  if (round < 1 || round > kMaxQualificationRounds) throw InvariantError(batch_id + ": round out of range");
  switch (state) {
    case QualState::Pending:
      if (round != 1 || !history.empty()) throw InvariantError(batch_id + ": Pending record must be at round 1");
      break;
    case QualState::Retry:
      if (round < 2 || history.size() != static_cast<std::size_t>(round - 1))
        throw InvariantError(batch_id + ": Retry record history does not match its round");
      for (const auto& h : history)
        if (h.verdict != RoundVerdict::reject) throw InvariantError(batch_id + ": Retry after an accepted round");
      break;
    case QualState::Accepted:
      if (history.empty() || history.back().verdict != RoundVerdict::accept)
        throw InvariantError(batch_id + ": Accepted record must end with an accept");
      break;
    case QualState::Discarded:
      if (history.size() != static_cast<std::size_t>(kMaxQualificationRounds))
        throw InvariantError(batch_id + ": Discarded record must have failed every round");
      break;
  }
}

Json QualificationRecord::to_json() const {
  Json j = Json::object();
  j["batch_id"] = batch_id;
  j["round"] = round;
  j["state"] = to_string(state);
  j["base_metrics"] = metrics_to_json(base_metrics);
  j["candidate_metrics"] = metrics_to_json(candidate_metrics);
  Json h = Json::array();
  for (const auto& e : history) {
    Json x = Json::object();
    x["round"] = e.round;
    x["verdict"] = to_string(e.verdict);
    h.push_back(std::move(x));
  }
  j["history"] = std::move(h);
  return j;
}

QualificationRecord QualificationRecord::from_json(const Json& j) {
  try {
    QualificationRecord r;
    r.batch_id = j.at("batch_id").get<std::string>();
    r.round = j.value("round", 1);
    r.state = parse_state(j.value("state", std::string("Pending")));
    if (j.contains("base_metrics")) r.base_metrics = metrics_from_json(j.at("base_metrics"));
    if (j.contains("candidate_metrics")) r.candidate_metrics = metrics_from_json(j.at("candidate_metrics"));
    if (j.contains("history")) {
      for (const auto& e : j.at("history")) {
        const auto v = e.at("verdict").get<std::string>();
        if (v != "accept" && v != "reject") throw InputError("history verdict must be accept or reject");
        r.history.push_back({e.at("round").get<int>(), v == "accept" ? RoundVerdict::accept : RoundVerdict::reject});
      }
    }
    return r;
  } catch (const Json::exception& e) {
    throw InputError(std::string("qualification record: ") + e.what());
  }
}

QualificationRecord judge_round(const QualificationRecord& record, const std::vector<std::string>& key_metrics) {
  if (record.state == QualState::Accepted || record.state == QualState::Discarded)
    throw InvariantError(record.batch_id + ": cannot judge a record in absorbing state " +
                         std::string(to_string(record.state)));
  record.check_consistent();

  std::vector<std::string> keys = key_metrics;
  if (keys.empty()) {
    for (const auto& [name, value] : record.base_metrics)
      if (record.candidate_metrics.count(name)) keys.push_back(name);
    if (keys.empty()) throw InputError(record.batch_id + ": no benchmark present in both metric maps");
  }
  bool all_hold = true;
  for (const auto& k : keys) {
    auto b = record.base_metrics.find(k);
    auto c = record.candidate_metrics.find(k);
    if (b == record.base_metrics.end()) throw InputError(record.batch_id + ": base metric '" + k + "' missing");
    if (c == record.candidate_metrics.end()) throw InputError(record.batch_id + ": candidate metric '" + k + "' missing");
    if (!(c->second >= b->second)) all_hold = false;
  }

  QualificationRecord next = record;
  next.history.push_back({record.round, all_hold ? RoundVerdict::accept : RoundVerdict::reject});
  if (all_hold) {
    next.state = QualState::Accepted;
  } else if (record.round < kMaxQualificationRounds) {
    next.state = QualState::Retry;
    next.round = record.round + 1;
  } else {
    next.state = QualState::Discarded;
  }
  return next;
}

bool CorpusManifest::contains(std::string_view batch_id) const {
  for (const auto& e : entries)
    if (e.batch_id == batch_id) return true;
  return false;
}

Json CorpusManifest::to_json() const {
  Json j = Json::object();
  j["fixed_shares"] = metrics_to_json(fixed_shares);
  j["refresh_quantum_tokens"] = refresh_quantum_tokens;
  Json arr = Json::array();
  for (const auto& e : entries) {
    Json x = Json::object();
    x["batch_id"] = e.batch_id;
    x["tokens"] = e.tokens;
    x["category_shares"] = metrics_to_json(e.category_shares);
    arr.push_back(std::move(x));
  }
  j["entries"] = std::move(arr);
  j["total_tokens"] = total_tokens;
  j["seed_refreshes"] = seed_refreshes;
  j["seed_refresh_due"] = seed_refresh_due;
  return j;
}

CorpusManifest CorpusManifest::from_json(const Json& j) {
  try {
    CorpusManifest m;
    if (j.contains("fixed_shares")) m.fixed_shares = metrics_from_json(j.at("fixed_shares"));
    m.refresh_quantum_tokens = j.value("refresh_quantum_tokens", std::uint64_t{0});
    if (j.contains("entries")) {
      for (const auto& e : j.at("entries")) {
        ManifestEntry entry;
        entry.batch_id = e.at("batch_id").get<std::string>();
        entry.tokens = e.at("tokens").get<std::uint64_t>();
        if (e.contains("category_shares")) entry.category_shares = metrics_from_json(e.at("category_shares"));
        m.entries.push_back(std::move(entry));
      }
    }
    m.total_tokens = j.value("total_tokens", std::uint64_t{0});
    m.seed_refreshes = j.value("seed_refreshes", std::uint64_t{0});
    m.seed_refresh_due = j.value("seed_refresh_due", false);
    return m;
  } catch (const Json::exception& e) {
    throw InputError(std::string("corpus manifest: ") + e.what());
  }
}

CorpusManifest corpus_admit(const CorpusManifest& manifest, const QualificationRecord& batch, std::uint64_t tokens,
                            const MetricMap& category_shares) {
  if (batch.state != QualState::Accepted)
    throw InputError(batch.batch_id + ": only Accepted batches can be admitted (state " +
                     std::string(to_string(batch.state)) + ")");
  if (manifest.contains(batch.batch_id)) throw InputError(batch.batch_id + ": batch already admitted");

  if (!manifest.fixed_shares.empty()) {
    std::set<std::string> categories;
    for (const auto& [k, v] : manifest.fixed_shares) categories.insert(k);
    for (const auto& [k, v] : category_shares) categories.insert(k);
    for (const auto& c : categories) {
      const double fixed = manifest.fixed_shares.count(c) ? manifest.fixed_shares.at(c) : 0.0;
      const double declared = category_shares.count(c) ? category_shares.at(c) : 0.0;
      if (std::abs(fixed - declared) > kCategoryShareTolerance)
        throw InputError(batch.batch_id + ": category '" + c + "' share " + std::to_string(declared) +
                         " deviates from fixed share " + std::to_string(fixed));
    }
  }

  CorpusManifest next = manifest;
  next.entries.push_back({batch.batch_id, tokens, category_shares});
  const std::uint64_t before = manifest.total_tokens;
  next.total_tokens = before + tokens;
  next.seed_refresh_due = false;
  if (next.refresh_quantum_tokens > 0) {
    const std::uint64_t crossed = next.total_tokens / next.refresh_quantum_tokens - before / next.refresh_quantum_tokens;
    next.seed_refreshes += crossed;
    next.seed_refresh_due = crossed > 0;
  }
  return next;
}

}  // namespace mathcur

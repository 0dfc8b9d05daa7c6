#include "mathcur/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mathcur/common.hpp"
#include "mathcur/mathverify.hpp"

namespace mathcur {

void FilterConfig::validate() const {
  if (min_tokens > max_tokens) throw InputError("min_tokens must not exceed max_tokens");
  if (bucket_width_tokens < 1) throw InputError("bucket width must be >= 1");
  if (!(keep_quantile > 0.0 && keep_quantile < 1.0)) throw InputError("keep quantile must lie in (0, 1)");
  if (!(top_fraction > 0.0 && top_fraction <= 1.0)) throw InputError("top fraction must lie in (0, 1]");
}

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::no_reference: return "no-reference";
    case RejectReason::too_short: return "too-short";
    case RejectReason::too_long: return "too-long";
    case RejectReason::unparseable: return "unparseable";
    case RejectReason::mismatch: return "mismatch";
  }
  return "mismatch";
}

RuleFilterResult rule_filter(const std::vector<Sample>& samples,
                             const std::unordered_map<std::string, std::string>& references,
                             const FilterConfig& cfg) {
  cfg.validate();
  struct Decision {
    std::optional<RejectReason> reason;
    std::string detail;
  };
  std::vector<Decision> decisions(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const Sample& s = samples[i];
    auto& d = decisions[i];
    const std::string* reference = nullptr;
    if (auto it = references.find(s.id); it != references.end()) {
      reference = &it->second;
    } else if (s.gold_answer && !s.gold_answer->empty()) {
      reference = &*s.gold_answer;
    }
    if (!reference || reference->empty()) {
      d.reason = RejectReason::no_reference;
      return;
    }
    if (s.response_token_count < cfg.min_tokens) {
      d.reason = RejectReason::too_short;
      return;
    }
    if (s.response_token_count > cfg.max_tokens) {
      d.reason = RejectReason::too_long;
      return;
    }
    const auto answer = extract_final_answer(s.response);
    if (!answer) {
      d.reason = RejectReason::unparseable;
      d.detail = "no final answer found";
      return;
    }
    const auto outcome = check_equivalence(parse_math(*answer), parse_reference(*reference));
    if (outcome.verdict == Verdict::Unparseable) {
      d.reason = RejectReason::unparseable;
      d.detail = outcome.detail;
    } else if (outcome.verdict == Verdict::Different) {
      d.reason = RejectReason::mismatch;
      d.detail = outcome.detail;
    }
  });

  RuleFilterResult result;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (decisions[i].reason) {
      result.rejected.push_back({samples[i], *decisions[i].reason, std::move(decisions[i].detail)});
    } else {
      result.kept.push_back(samples[i]);
    }
  }
  return result;
}

std::size_t bucket_key(std::size_t token_count, std::size_t width) {
  if (width < 1) throw InputError("bucket width must be >= 1");
  return token_count / width;
}

std::size_t nearest_rank(double q, std::size_t n) {
  if (n == 0) return 0;
  // Guard against q*n landing a hair above an integer (0.9 * 20 and friends).
  const double scaled = q * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(scaled - 1e-9 * std::max(1.0, scaled)));
  return std::clamp<std::size_t>(k, 1, n);
}

Json QuantileFilterResult::report_json() const {
  Json arr = Json::array();
  for (const auto& b : buckets) {
    Json e = Json::object();
    e["bucket"] = b.bucket;
    e["lo_tokens"] = b.lo_tokens;
    e["hi_tokens"] = b.hi_tokens;
    e["threshold"] = b.threshold;
    e["kept"] = b.kept;
    e["total"] = b.total;
    if (b.singleton) e["note"] = "singleton bucket kept";
    arr.push_back(std::move(e));
  }
  std::size_t kept_total = 0;
  std::size_t total = 0;
  for (const auto& b : buckets) {
    kept_total += b.kept;
    total += b.total;
  }
  Json j = Json::object();
  j["kept"] = kept_total;
  j["total"] = total;
  j["buckets"] = std::move(arr);
  return j;
}

QuantileFilterResult reward_quantile_filter(const std::vector<Sample>& samples, const FilterConfig& cfg) {
  cfg.validate();
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i].reward_score) throw InputError("sample '" + samples[i].id + "' has no reward_score");
    groups[bucket_key(samples[i].response_token_count, cfg.bucket_width_tokens)].push_back(i);
  }

  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> ordered(groups.begin(), groups.end());
  std::vector<BucketReport> reports(ordered.size());
  std::vector<char> keep(samples.size(), 0);
  parallel_for(ordered.size(), [&](std::size_t g) {
    const auto& [key, members] = ordered[g];
    std::vector<double> scores;
    scores.reserve(members.size());
    for (auto i : members) scores.push_back(*samples[i].reward_score);
    std::sort(scores.begin(), scores.end());
    const double threshold = scores[nearest_rank(cfg.keep_quantile, scores.size()) - 1];
    auto& r = reports[g];
    r.bucket = key;
    r.lo_tokens = key * cfg.bucket_width_tokens;
    r.hi_tokens = (key + 1) * cfg.bucket_width_tokens;
    r.threshold = threshold;
    r.total = members.size();
    r.singleton = members.size() == 1;
    for (auto i : members) {
      if (*samples[i].reward_score >= threshold) {
        keep[i] = 1;
        ++r.kept;
      }
    }
  });

  QuantileFilterResult result;
  result.buckets = std::move(reports);
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (keep[i]) result.kept.push_back(samples[i]);
  return result;
}

std::vector<Document> select_top_fraction(const std::vector<Document>& docs, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("fraction must lie in (0, 1]");
  for (const auto& d : docs)
    if (!d.quality_score) throw InputError("document '" + d.id + "' has no quality_score");
  const std::size_t n = docs.size();
  const std::size_t take = nearest_rank(fraction, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (*docs[a].quality_score != *docs[b].quality_score) return *docs[a].quality_score > *docs[b].quality_score;
    return docs[a].id < docs[b].id;
  });
  std::vector<char> chosen(n, 0);
  for (std::size_t k = 0; k < take; ++k) chosen[order[k]] = 1;
  std::vector<Document> out;
  out.reserve(take);
  for (std::size_t i = 0; i < n; ++i)
    if (chosen[i]) out.push_back(docs[i]);
  return out;
}

std::vector<std::string> attach_scores(std::vector<Sample>& samples,
                                       const std::unordered_map<std::string, double>& scores) {
  std::vector<std::string> missing;
  for (auto& s : samples) {
    if (auto it = scores.find(s.id); it != scores.end()) {
      s.reward_score = it->second;
    } else {
      missing.push_back(s.id);
    }
  }
  return missing;
}

}  // namespace mathcur

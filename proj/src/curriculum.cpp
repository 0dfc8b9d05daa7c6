#include "mathcur/curriculum.hpp"

#include <cmath>
#include <set>

#include "mathcur/common.hpp"

namespace mathcur {

double MixtureReport::realized_share(std::size_t i) const {
  if (realized_tokens == 0) return 0.0;
  return static_cast<double>(sources.at(i).realized_tokens) / static_cast<double>(realized_tokens);
}

Json MixtureReport::to_json() const {
  Json j = Json::object();
  j["requested_tokens"] = requested_tokens;
  j["realized_tokens"] = realized_tokens;
  Json arr = Json::array();
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& s = sources[i];
    Json e = Json::object();
    e["name"] = s.name;
    e["weight"] = s.weight;
    e["quota_tokens"] = s.quota_tokens;
    e["realized_tokens"] = s.realized_tokens;
    e["realized_share"] = realized_share(i);
    e["records"] = s.records;
    e["shortfall_tokens"] = s.shortfall_tokens;
    e["exhausted"] = s.exhausted;
    arr.push_back(std::move(e));
  }
  j["sources"] = std::move(arr);
  j["warnings"] = warnings;
  return j;
}

namespace {

// Slack for comparing token totals against fractional quotas.
constexpr double kQuotaSlack = 1e-9;

struct SourceState {
  std::vector<std::size_t> order;
  std::vector<char> taken;
  std::size_t cursor_taken = 0;
  std::uint64_t tokens = 0;
  double quota = 0.0;
  double redistributed = 0.0;
  bool exhausted = false;
};

void fill(const MixtureSource& src, SourceState& st) {
  for (auto idx : st.order) {
    if (st.taken[idx]) continue;
    const auto t = src.records[idx].token_count;
    if (static_cast<double>(st.tokens + t) <= st.quota + kQuotaSlack) {
      st.taken[idx] = 1;
      st.tokens += t;
      ++st.cursor_taken;
    }
  }
  st.exhausted = st.cursor_taken == src.records.size() && static_cast<double>(st.tokens) < st.quota - kQuotaSlack;
}

}  // namespace

MixtureResult compose_mixture(const std::vector<MixtureSource>& sources, std::uint64_t total_tokens,
                              std::uint64_t seed) {
  if (sources.empty()) throw InputError("mixture needs at least one source");
  double weight_sum = 0.0;
  std::set<std::string> names;
  for (const auto& s : sources) {
    if (!(s.weight > 0.0) || !std::isfinite(s.weight))
      throw InputError("mixture source '" + s.name + "' needs a positive weight");
    if (!names.insert(s.name).second) throw InputError("duplicate mixture source '" + s.name + "'");
    weight_sum += s.weight;
  }

  MixtureResult result;
  auto& report = result.report;
  report.requested_tokens = total_tokens;

  std::vector<SourceState> states(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    auto& st = states[i];
    st.order.resize(sources[i].records.size());
    for (std::size_t k = 0; k < st.order.size(); ++k) st.order[k] = k;
    Rng rng(hash64(sources[i].name, seed));
    rng.shuffle(st.order);
    st.taken.assign(sources[i].records.size(), 0);
    st.quota = sources[i].weight / weight_sum * static_cast<double>(total_tokens);
  }

  for (;;) {
    for (std::size_t i = 0; i < sources.size(); ++i) fill(sources[i], states[i]);
    double pending = 0.0;
    double open_weight = 0.0;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      auto& st = states[i];
      if (st.exhausted) {
        const double shortfall = st.quota - static_cast<double>(st.tokens);
        pending += shortfall - st.redistributed;
        st.redistributed = shortfall;
      } else {
        open_weight += sources[i].weight;
      }
    }
    if (pending <= kQuotaSlack) break;
    if (open_weight == 0.0) {
      report.warnings.push_back("every source exhausted; token budget not met");
      break;
    }
    for (std::size_t i = 0; i < sources.size(); ++i)
      if (!states[i].exhausted) states[i].quota += pending * sources[i].weight / open_weight;
  }

  std::vector<const Document*> chosen;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& st = states[i];
    SourceComposition c;
    c.name = sources[i].name;
    c.weight = sources[i].weight / weight_sum;
    c.quota_tokens = st.quota;
    c.realized_tokens = st.tokens;
    c.records = st.cursor_taken;
    c.exhausted = st.exhausted;
    c.shortfall_tokens = st.exhausted ? st.quota - static_cast<double>(st.tokens) : 0.0;
    if (st.exhausted)
      report.warnings.push_back("source '" + c.name + "' exhausted with shortfall of " +
                                std::to_string(static_cast<long long>(std::llround(c.shortfall_tokens))) + " tokens");
    report.realized_tokens += st.tokens;
    report.sources.push_back(std::move(c));
    for (auto idx : st.order)
      if (st.taken[idx]) chosen.push_back(&sources[i].records[idx]);
  }

  Rng rng(seed ^ 0x6d69787475726521ULL);
  rng.shuffle(chosen);
  result.records.reserve(chosen.size());
  for (const auto* d : chosen) result.records.push_back(*d);
  return result;
}

SftHyperparams SftHyperparams::for_kind(RlKind k) {
  SftHyperparams h;
  h.learning_rate = k == RlKind::instruct_rl ? 3e-6 : 8e-5;
  return h;
}

Json SftHyperparams::to_json() const {
  Json j = Json::object();
  j["learning_rate"] = learning_rate;
  j["batch_size"] = batch_size;
  j["scheduler"] = scheduler;
  j["optimizer"] = optimizer;
  j["warmup_steps"] = warmup_steps;
  return j;
}

Json pretrain_schedule_metadata() {
  Json j = Json::object();
  j["warmup_steps"] = 2000;
  j["peak_learning_rate"] = 3e-4;
  j["decay_to_learning_rate"] = 3e-5;
  j["decay_scheduler"] = "cosine";
  j["sequence_length"] = 8192;
  j["long_context_sequence_length"] = 32768;
  j["rope_base"] = 500000;
  Json mix = Json::object();
  mix["math_corpus"] = 0.7;
  mix["algebraic_code_general"] = 0.3;
  j["mixture"] = std::move(mix);
  return j;
}

Json StageManifest::to_json() const {
  Json j = Json::object();
  j["stage_name"] = stage_name;
  j["context_len_tokens"] = context_len_tokens;
  j["kind"] = to_string(kind);
  j["init_from"] = init_from ? Json(*init_from) : Json(nullptr);
  j["seed"] = seed;
  j["hyper"] = hyper.to_json();
  Json refs = Json::array();
  for (const auto& r : dataset_refs) {
    Json e = Json::object();
    e["path"] = r.path;
    e["fingerprint"] = r.fingerprint;
    e["included"] = r.included;
    e["excluded"] = r.excluded;
    refs.push_back(std::move(e));
  }
  j["dataset_refs"] = std::move(refs);
  Json meta = Json::object();
  meta["sft"] = SftHyperparams::for_kind(kind).to_json();
  meta["pretrain"] = pretrain_schedule_metadata();
  j["metadata"] = std::move(meta);
  j["warnings"] = warnings;
  return j;
}

std::vector<StageManifest> build_stage_chain(RlKind kind, const std::vector<StageDataset>& datasets,
                                             std::uint64_t seed, const std::vector<std::uint64_t>& stages,
                                             const std::optional<RlHyperparams>& hyper) {
  if (stages.empty()) throw InputError("stage list is empty");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i] != 8192 && stages[i] != 16384 && stages[i] != 32768)
      throw InputError("stage context " + std::to_string(stages[i]) + " is not one of 8192, 16384, 32768");
    if (i > 0 && stages[i] <= stages[i - 1]) throw InputError("stage contexts must be strictly increasing");
  }
  const RlHyperparams h = hyper.value_or(RlHyperparams::for_kind(kind));
  h.validate();

  std::vector<StageManifest> chain;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    StageManifest m;
    m.context_len_tokens = stages[i];
    m.stage_name = std::string(to_string(kind)) + "-" + std::to_string(stages[i] / 1024) + "k";
    m.kind = kind;
    m.hyper = h;
    m.seed = seed;
    if (i > 0) m.init_from = chain.back().stage_name;
    for (const auto& ds : datasets) {
      DatasetRef ref;
      ref.path = ds.path;
      std::string material = std::to_string(stages[i]) + "\n" + ds.path + "\n";
      for (const auto& e : ds.entries) {
        if (e.prompt_tokens > stages[i]) {
          ++ref.excluded;
          continue;
        }
        ++ref.included;
        ref.included_ids.push_back(e.id);
        material += e.id;
        material += '\n';
      }
      ref.fingerprint = hash128(material).hex();
      if (ref.included == 0)
        m.warnings.push_back("dataset '" + ds.path + "' has no samples within " + std::to_string(stages[i]) +
                             " prompt tokens");
      m.dataset_refs.push_back(std::move(ref));
    }
    chain.push_back(std::move(m));
  }
  return chain;
}

}  // namespace mathcur

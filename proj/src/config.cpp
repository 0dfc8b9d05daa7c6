#include "mathcur/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <type_traits>

#include "mathcur/common.hpp"

namespace mathcur {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"paths", {"inputs", "output", "benchmarks", "scores", "verdicts"}},
      {"filter", {"min_tokens", "max_tokens", "bucket_width", "keep_quantile", "top_fraction"}},
      {"decontam", {"n", "include_answers"}},
      {"dedup", {"threshold", "shingle_n"}},
      {"curriculum", {"kind", "seed", "stages"}},
      {"run", {"workers"}},
  };
  return keys;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

std::string join_list(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].find(',') != std::string::npos) throw InputError("config list entry contains a comma: " + v[i]);
    if (i) out += ",";
    out += v[i];
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T get_number(const pt::ptree& tree, const std::string& key, T fallback) {
  auto node = tree.get_optional<std::string>(key);
  if (!node) return fallback;
  try {
    std::size_t used = 0;
    T value;
    if constexpr (std::is_floating_point_v<T>) {
      value = static_cast<T>(std::stod(*node, &used));
    } else {
      if (!node->empty() && node->front() == '-') throw std::invalid_argument("negative");
      value = static_cast<T>(std::stoull(*node, &used));
    }
    if (used != node->size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw InputError("config key '" + key + "' has invalid value '" + *node + "'");
  }
}

bool get_bool(const pt::ptree& tree, const std::string& key, bool fallback) {
  auto node = tree.get_optional<std::string>(key);
  if (!node) return fallback;
  if (*node == "true" || *node == "1") return true;
  if (*node == "false" || *node == "0") return false;
  throw InputError("config key '" + key + "' must be true or false");
}

}  // namespace

PipelineConfig PipelineConfig::parse(const std::string& ini_text) {
  pt::ptree tree;
  try {
    std::istringstream in(ini_text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    auto it = known_keys().find(section);
    if (it == known_keys().end()) throw InputError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw InputError("config: unknown key '" + key + "' in [" + section + "]");
  }

  PipelineConfig c;
  c.inputs = split_list(tree.get<std::string>("paths.inputs", ""));
  c.output = tree.get<std::string>("paths.output", "");
  c.benchmarks = tree.get<std::string>("paths.benchmarks", "");
  c.scores = tree.get<std::string>("paths.scores", "");
  c.verdicts = tree.get<std::string>("paths.verdicts", "");

  c.filter.min_tokens = get_number<std::size_t>(tree, "filter.min_tokens", c.filter.min_tokens);
  c.filter.max_tokens = get_number<std::size_t>(tree, "filter.max_tokens", c.filter.max_tokens);
  c.filter.bucket_width_tokens = get_number<std::size_t>(tree, "filter.bucket_width", c.filter.bucket_width_tokens);
  c.filter.keep_quantile = get_number<double>(tree, "filter.keep_quantile", c.filter.keep_quantile);
  c.filter.top_fraction = get_number<double>(tree, "filter.top_fraction", c.filter.top_fraction);
  c.filter.validate();

  c.decontam_n = get_number<std::size_t>(tree, "decontam.n", c.decontam_n);
  c.decontam_include_answers = get_bool(tree, "decontam.include_answers", c.decontam_include_answers);
  c.dedup_threshold = get_number<double>(tree, "dedup.threshold", c.dedup_threshold);
  c.dedup_shingle_n = get_number<std::size_t>(tree, "dedup.shingle_n", c.dedup_shingle_n);
  if (auto kind = tree.get_optional<std::string>("curriculum.kind")) c.curriculum_kind = parse_rl_kind(*kind);
  c.seed = get_number<std::uint64_t>(tree, "curriculum.seed", c.seed);
  if (auto stages = tree.get_optional<std::string>("curriculum.stages")) {
    c.stages.clear();
    for (const auto& s : split_list(*stages)) {
      pt::ptree tmp;
      tmp.put("v", s);
      c.stages.push_back(get_number<std::uint64_t>(tmp, "v", 0));
    }
  }
  c.workers = get_number<std::size_t>(tree, "run.workers", c.workers);
  if (c.decontam_n < 1) throw InputError("config: decontam.n must be >= 1");
  if (!(c.dedup_threshold > 0.0 && c.dedup_threshold <= 1.0))
    throw InputError("config: dedup.threshold must lie in (0, 1]");
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string PipelineConfig::to_ini() const {
  std::vector<std::string> stage_text;
  for (auto s : stages) stage_text.push_back(std::to_string(s));
  std::ostringstream out;
  out << "[paths]\n"
      << "inputs=" << join_list(inputs) << "\n"
      << "output=" << output << "\n"
      << "benchmarks=" << benchmarks << "\n"
      << "scores=" << scores << "\n"
      << "verdicts=" << verdicts << "\n\n"
      << "[filter]\n"
      << "min_tokens=" << filter.min_tokens << "\n"
      << "max_tokens=" << filter.max_tokens << "\n"
      << "bucket_width=" << filter.bucket_width_tokens << "\n"
      << "keep_quantile=" << format_double(filter.keep_quantile) << "\n"
      << "top_fraction=" << format_double(filter.top_fraction) << "\n\n"
      << "[decontam]\n"
      << "n=" << decontam_n << "\n"
      << "include_answers=" << (decontam_include_answers ? "true" : "false") << "\n\n"
      << "[dedup]\n"
      << "threshold=" << format_double(dedup_threshold) << "\n"
      << "shingle_n=" << dedup_shingle_n << "\n\n"
      << "[curriculum]\n"
      << "kind=" << to_string(curriculum_kind) << "\n"
      << "seed=" << seed << "\n"
      << "stages=" << join_list(stage_text) << "\n\n"
      << "[run]\n"
      << "workers=" << workers << "\n";
  return out.str();
}

void PipelineConfig::check_paths() const {
  auto need = [](const std::string& p, const char* what) {
    if (!p.empty() && !std::filesystem::exists(p)) throw InputError(std::string(what) + " path does not exist: " + p);
  };
  for (const auto& p : inputs) need(p, "input");
  need(benchmarks, "benchmarks");
  need(scores, "scores");
  need(verdicts, "verdicts");
}

bool operator==(const PipelineConfig& a, const PipelineConfig& b) {
  return a.inputs == b.inputs && a.output == b.output && a.benchmarks == b.benchmarks && a.scores == b.scores &&
         a.verdicts == b.verdicts && a.filter.min_tokens == b.filter.min_tokens &&
         a.filter.max_tokens == b.filter.max_tokens && a.filter.bucket_width_tokens == b.filter.bucket_width_tokens &&
         a.filter.keep_quantile == b.filter.keep_quantile && a.filter.top_fraction == b.filter.top_fraction &&
         a.decontam_n == b.decontam_n && a.decontam_include_answers == b.decontam_include_answers &&
         a.dedup_threshold == b.dedup_threshold && a.dedup_shingle_n == b.dedup_shingle_n &&
         a.curriculum_kind == b.curriculum_kind && a.seed == b.seed && a.stages == b.stages &&
         a.workers == b.workers;
}

}  // namespace mathcur

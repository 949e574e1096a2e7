#pragma once

// Seeded experiment runner. A config names an algorithm, an instance and the
// (k, m | rho, eps, delta) parameters; run r uses seed base_seed + r, so
// rows do not depend on the parallelism width or on other runs.

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "kmbandit/analysis.hpp"
#include "kmbandit/bandit.hpp"
#include "kmbandit/confidence.hpp"
#include "kmbandit/errors.hpp"
#include "kmbandit/finite.hpp"
#include "kmbandit/instance_io.hpp"
#include "kmbandit/quantile.hpp"
#include "kmbandit/reservoir.hpp"
#include "kmbandit/rng.hpp"

namespace kmbandit {

enum class Algorithm { lucb_km, f2, p3, kqp1, opt_qp, k_independent_qp };

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::lucb_km: return "lucb_km";
    case Algorithm::f2: return "f2";
    case Algorithm::p3: return "p3";
    case Algorithm::kqp1: return "kqp1";
    case Algorithm::opt_qp: return "opt_qp";
    case Algorithm::k_independent_qp: return "k_independent_qp";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view text) {
  for (auto a : {Algorithm::lucb_km, Algorithm::f2, Algorithm::p3, Algorithm::kqp1,
                 Algorithm::opt_qp, Algorithm::k_independent_qp}) {
    if (to_string(a) == text) return a;
  }
  throw UsageError("unknown algorithm '" + std::string(text) +
                   "' (expected lucb_km|f2|p3|kqp1|opt_qp|k_independent_qp)");
}

// Built-in generators:
//   linear         n                       finite, means 0.999 .. 0.001
//   lower_bound    n, set                  finite, uses the config's m, k, eps
//   finite         means                   finite, explicit Bernoulli means
//   two_level      arms, top_arms, high, low   discrete reservoir, 1/arms each
//   discrete       means, probs            discrete reservoir
//   uniform_means                          continuous, means ~ U[0, 1]
//   piecewise      edges, probs            continuous, piecewise-uniform means
// or `file` pointing at an instance file.
struct InstanceConfig {
  std::string generator;
  std::string file;
  std::size_t n = 0;
  std::vector<std::size_t> set;
  std::vector<double> means;
  std::vector<double> probs;
  std::vector<double> edges;
  std::size_t arms = 100;
  std::size_t top_arms = 20;
  double high = 0.9;
  double low = 0.1;
};

struct ExperimentConfig {
  std::string experiment_id = "experiment";
  Algorithm algorithm = Algorithm::lucb_km;
  InstanceConfig instance;
  std::size_t k = 1;
  std::optional<std::size_t> m;
  std::optional<double> rho;
  double epsilon = 0.05;
  double delta = 0.1;
  BoundKind scheme = BoundKind::kl;
  std::size_t runs = 1;
  std::uint64_t base_seed = 0;
  std::size_t parallelism = 1;  // 0: hardware concurrency
  HStarRule h_star_mode = HStarRule::argmin_lcb;
  double delta_prime = 0.25;
  Algorithm qf_solver = Algorithm::lucb_km;  // opt_qp back end: lucb_km | f2
};

namespace detail {

template <class T>
T config_field(const nlohmann::json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config field '" + where + key + "': " + e.what());
  }
}

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                           const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw UsageError("config field '" + where + key + "': unknown field");
  }
}

}  // namespace detail

inline InstanceConfig instance_config_from_json(const nlohmann::json& j) {
  const std::string w = "instance.";
  if (!j.is_object()) throw UsageError("config field 'instance': must be an object");
  detail::reject_unknown(j, {"generator", "file", "n", "set", "means", "probs", "edges", "arms",
                             "top_arms", "high", "low"},
                         w);
  InstanceConfig c;
  if (j.contains("generator")) c.generator = detail::config_field<std::string>(j, "generator", w);
  if (j.contains("file")) c.file = detail::config_field<std::string>(j, "file", w);
  if (c.generator.empty() == c.file.empty()) {
    throw UsageError("config field 'instance': give exactly one of generator or file");
  }
  if (j.contains("n")) c.n = detail::config_field<std::size_t>(j, "n", w);
  if (j.contains("set")) c.set = detail::config_field<std::vector<std::size_t>>(j, "set", w);
  if (j.contains("means")) c.means = detail::config_field<std::vector<double>>(j, "means", w);
  if (j.contains("probs")) c.probs = detail::config_field<std::vector<double>>(j, "probs", w);
  if (j.contains("edges")) c.edges = detail::config_field<std::vector<double>>(j, "edges", w);
  if (j.contains("arms")) c.arms = detail::config_field<std::size_t>(j, "arms", w);
  if (j.contains("top_arms")) c.top_arms = detail::config_field<std::size_t>(j, "top_arms", w);
  if (j.contains("high")) c.high = detail::config_field<double>(j, "high", w);
  if (j.contains("low")) c.low = detail::config_field<double>(j, "low", w);
  return c;
}

inline nlohmann::json to_json(const InstanceConfig& c) {
  nlohmann::json j;
  if (!c.file.empty()) {
    j["file"] = c.file;
    return j;
  }
  j["generator"] = c.generator;
  if (c.generator == "linear" || c.generator == "lower_bound") j["n"] = c.n;
  if (c.generator == "lower_bound") j["set"] = c.set;
  if (c.generator == "finite" || c.generator == "discrete") j["means"] = c.means;
  if (c.generator == "discrete" || c.generator == "piecewise") j["probs"] = c.probs;
  if (c.generator == "piecewise") j["edges"] = c.edges;
  if (c.generator == "two_level") {
    j["arms"] = c.arms;
    j["top_arms"] = c.top_arms;
    j["high"] = c.high;
    j["low"] = c.low;
  }
  return j;
}

inline void validate(const ExperimentConfig& c) {
  auto field = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw UsageError("config field '" + key + "': " + what);
  };
  field(!c.experiment_id.empty() &&
            c.experiment_id.find_first_of(",\"\r\n") == std::string::npos,
        "experiment_id", "must be nonempty and free of commas, quotes and newlines");
  field(c.runs >= 1, "runs", "must be >= 1");
  field(c.k >= 1, "k", "must be >= 1");
  field(c.epsilon > 0.0 && c.epsilon <= 1.0, "epsilon", "must lie in (0, 1]");
  field(c.delta > 0.0 && c.delta <= 1.0, "delta", "must lie in (0, 1]");
  field(c.delta_prime > 0.0 && c.delta_prime < 0.5, "delta_prime", "must lie in (0, 1/2)");
  field(!c.rho || (*c.rho > 0.0 && *c.rho <= 1.0), "rho", "must lie in (0, 1]");
  field(c.qf_solver == Algorithm::lucb_km || c.qf_solver == Algorithm::f2, "qf_solver",
        "must be lucb_km or f2");
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  detail::reject_unknown(j, {"experiment_id", "algorithm", "instance", "k", "m", "rho", "epsilon",
                             "delta", "scheme", "runs", "base_seed", "parallelism", "h_star_mode",
                             "delta_prime", "qf_solver"},
                         "");
  ExperimentConfig c;
  auto get = [&](const char* key, auto& out) {
    if (j.contains(key)) out = detail::config_field<std::decay_t<decltype(out)>>(j, key, "");
  };
  get("experiment_id", c.experiment_id);
  c.algorithm = parse_algorithm(detail::config_field<std::string>(j, "algorithm", ""));
  if (!j.contains("instance")) throw UsageError("config field 'instance': missing");
  c.instance = instance_config_from_json(j.at("instance"));
  get("k", c.k);
  if (j.contains("m")) c.m = detail::config_field<std::size_t>(j, "m", "");
  if (j.contains("rho")) c.rho = detail::config_field<double>(j, "rho", "");
  get("epsilon", c.epsilon);
  get("delta", c.delta);
  if (j.contains("scheme")) {
    c.scheme = parse_bound_kind(detail::config_field<std::string>(j, "scheme", ""));
  }
  get("runs", c.runs);
  get("base_seed", c.base_seed);
  get("parallelism", c.parallelism);
  if (j.contains("h_star_mode")) {
    c.h_star_mode = parse_h_star_rule(detail::config_field<std::string>(j, "h_star_mode", ""));
  }
  get("delta_prime", c.delta_prime);
  if (j.contains("qf_solver")) {
    c.qf_solver = parse_algorithm(detail::config_field<std::string>(j, "qf_solver", ""));
  }
  validate(c);
  return c;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["experiment_id"] = c.experiment_id;
  j["algorithm"] = std::string(to_string(c.algorithm));
  j["instance"] = to_json(c.instance);
  j["k"] = c.k;
  if (c.m) j["m"] = *c.m;
  if (c.rho) j["rho"] = *c.rho;
  j["epsilon"] = c.epsilon;
  j["delta"] = c.delta;
  j["scheme"] = std::string(to_string(c.scheme));
  j["runs"] = c.runs;
  j["base_seed"] = c.base_seed;
  j["parallelism"] = c.parallelism;
  j["h_star_mode"] = std::string(to_string(c.h_star_mode));
  j["delta_prime"] = c.delta_prime;
  j["qf_solver"] = std::string(to_string(c.qf_solver));
  return j;
}

// A config file holds one config object or an array of them.
inline std::vector<ExperimentConfig> configs_from_json(const nlohmann::json& j) {
  std::vector<ExperimentConfig> out;
  if (j.is_array()) {
    for (const auto& item : j) out.push_back(config_from_json(item));
  } else {
    out.push_back(config_from_json(j));
  }
  if (out.empty()) throw UsageError("config file holds no experiments");
  return out;
}

inline std::vector<ExperimentConfig> load_configs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return configs_from_json(j);
}

inline Instance build_instance(const ExperimentConfig& c) {
  const auto& ic = c.instance;
  if (!ic.file.empty()) return load_instance(ic.file);
  const auto& g = ic.generator;
  if (g == "linear") return make_linear_instance(ic.n);
  if (g == "lower_bound") {
    detail::require(c.m.has_value(), "config field 'm': lower_bound instances need m");
    return make_lower_bound_instance(ic.n, *c.m, c.k, c.epsilon, ic.set);
  }
  if (g == "finite") return make_bernoulli_instance(ic.means);
  if (g == "two_level") {
    detail::require(ic.arms >= 1 && ic.top_arms <= ic.arms,
                    "config field 'instance.top_arms': need top_arms <= arms");
    std::vector<double> means(ic.arms, ic.low);
    std::fill_n(means.begin(), ic.top_arms, ic.high);
    std::vector<double> probs(ic.arms, 1.0 / static_cast<double>(ic.arms));
    double total = 0.0;
    for (double p : probs) total += p;
    probs.back() += 1.0 - total;
    return ArmReservoir::discrete(std::move(means), std::move(probs));
  }
  if (g == "discrete") return ArmReservoir::discrete(ic.means, ic.probs);
  if (g == "uniform_means") return ArmReservoir::uniform_means();
  if (g == "piecewise") return ArmReservoir::continuous(PiecewiseUniformLaw(ic.edges, ic.probs));
  throw UsageError("config field 'instance.generator': unknown generator '" + g + "'");
}

// One row of runs.csv. Unset optionals are written as empty fields.
struct RunRow {
  std::string experiment_id;
  std::string algorithm;
  std::optional<std::uint64_t> n;
  std::optional<std::uint64_t> m;
  std::uint64_t k = 0;
  std::optional<double> rho;
  double epsilon = 0.0;
  double delta = 0.0;
  std::string scheme;
  std::string h_star_mode;
  std::uint64_t seed = 0;
  std::uint64_t run_index = 0;
  std::uint64_t samples = 0;
  std::optional<std::uint64_t> rounds;
  bool mistake = false;
  std::optional<std::array<std::uint64_t, 3>> pulls_by_group;
};

inline const std::vector<std::string>& runs_header() {
  static const std::vector<std::string> h = {
      "experiment_id", "algorithm", "n",           "m",        "k",        "rho",
      "epsilon",       "delta",     "scheme",      "h_star_mode", "seed",  "run_index",
      "samples",       "rounds",    "mistake",     "pulls_b1", "pulls_b2", "pulls_b3"};
  return h;
}

inline const std::vector<std::string>& summary_key_columns() {
  static const std::vector<std::string> h = {"experiment_id", "algorithm", "n",      "m",
                                             "k",             "rho",       "epsilon", "delta",
                                             "scheme",        "h_star_mode"};
  return h;
}

inline std::vector<std::string> summary_header() {
  auto h = summary_key_columns();
  for (const char* c : {"runs", "mean_samples", "stderr_samples", "mistake_rate", "frac_b1",
                        "frac_b2", "frac_b3"}) {
    h.emplace_back(c);
  }
  return h;
}

// Shortest decimal that round-trips.
inline std::string format_shortest(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> to_fields(const RunRow& r) {
  auto u = [](std::optional<std::uint64_t> v) { return v ? std::to_string(*v) : std::string(); };
  std::vector<std::string> f = {r.experiment_id,
                                r.algorithm,
                                u(r.n),
                                u(r.m),
                                std::to_string(r.k),
                                r.rho ? format_shortest(*r.rho) : std::string(),
                                format_shortest(r.epsilon),
                                format_shortest(r.delta),
                                r.scheme,
                                r.h_star_mode,
                                std::to_string(r.seed),
                                std::to_string(r.run_index),
                                std::to_string(r.samples),
                                u(r.rounds),
                                r.mistake ? "1" : "0"};
  for (std::size_t g = 0; g < 3; ++g) {
    f.push_back(r.pulls_by_group ? std::to_string((*r.pulls_by_group)[g]) : std::string());
  }
  return f;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw UsageError("csv has no column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

// Fields never contain commas, quotes or newlines, so no quoting is needed.
inline std::string format_csv(const CsvTable& table) {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += fields[i];
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& row : table.rows) line(row);
  return out;
}

inline CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  bool first = true;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      fields.emplace_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != table.header.size()) {
        throw UsageError("csv row has " + std::to_string(fields.size()) + " fields, header has " +
                         std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(fields));
    }
  }
  if (first) throw UsageError("csv is empty (no header row)");
  return table;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline CsvTable runs_table(const std::vector<RunRow>& rows) {
  CsvTable t;
  t.header = runs_header();
  t.rows.reserve(rows.size());
  for (const auto& r : rows) t.rows.push_back(to_fields(r));
  return t;
}

namespace detail {

inline double parse_csv_number(const std::string& text, std::string_view column) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw UsageError("bad number '" + text + "' in column " + std::string(column));
  }
  return value;
}

struct GroupAccumulator {
  std::vector<std::string> key;
  std::vector<double> samples;
  std::size_t mistakes = 0;
  std::array<double, 3> frac_sum{};
  bool has_groups = true;
};

}  // namespace detail

// Per-group summary of a runs table. Groups appear in first-appearance order.
// stderr uses the sample standard deviation (n - 1); a single run gives 0.
// frac_b* are means of per-run pull fractions, empty when a group lacks them.
inline CsvTable aggregate(const CsvTable& runs) {
  if (runs.rows.empty()) throw UsageError("cannot aggregate an empty runs table");
  std::vector<std::size_t> key_cols;
  for (const auto& c : summary_key_columns()) key_cols.push_back(runs.column(c));
  const std::size_t samples_col = runs.column("samples");
  const std::size_t mistake_col = runs.column("mistake");
  const std::array<std::size_t, 3> pull_cols = {runs.column("pulls_b1"), runs.column("pulls_b2"),
                                                runs.column("pulls_b3")};

  std::vector<detail::GroupAccumulator> groups;
  std::map<std::vector<std::string>, std::size_t> index;
  for (const auto& row : runs.rows) {
    std::vector<std::string> key;
    for (std::size_t c : key_cols) key.push_back(row[c]);
    auto [it, inserted] = index.emplace(key, groups.size());
    if (inserted) groups.push_back({std::move(key), {}, 0, {}, true});
    auto& g = groups[it->second];
    const double samples = detail::parse_csv_number(row[samples_col], "samples");
    g.samples.push_back(samples);
    if (row[mistake_col] == "1") {
      ++g.mistakes;
    } else if (row[mistake_col] != "0") {
      throw UsageError("mistake column must be 0 or 1, got '" + row[mistake_col] + "'");
    }
    if (row[pull_cols[0]].empty() || samples <= 0.0) {
      g.has_groups = false;
    } else {
      for (std::size_t b = 0; b < 3; ++b) {
        g.frac_sum[b] += detail::parse_csv_number(row[pull_cols[b]], "pulls_b") / samples;
      }
    }
  }

  CsvTable out;
  out.header = summary_header();
  for (const auto& g : groups) {
    const double count = static_cast<double>(g.samples.size());
    double mean = 0.0;
    for (double s : g.samples) mean += s;
    mean /= count;
    double stderr_value = 0.0;
    if (g.samples.size() > 1) {
      double ss = 0.0;
      for (double s : g.samples) ss += (s - mean) * (s - mean);
      stderr_value = std::sqrt(ss / (count - 1.0)) / std::sqrt(count);
    }
    auto row = g.key;
    row.push_back(std::to_string(g.samples.size()));
    row.push_back(format_shortest(mean));
    row.push_back(format_shortest(stderr_value));
    row.push_back(format_shortest(static_cast<double>(g.mistakes) / count));
    for (std::size_t b = 0; b < 3; ++b) {
      row.push_back(g.has_groups ? format_shortest(g.frac_sum[b] / count) : std::string());
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

// A config with its instance materialised once; shared read-only by workers.
class PreparedExperiment {
 public:
  explicit PreparedExperiment(ExperimentConfig config)
      : config_(std::move(config)), instance_(build_instance(config_)) {
    validate(config_);
    check_combination();
  }

  const ExperimentConfig& config() const noexcept { return config_; }
  const Instance& instance() const noexcept { return instance_; }

  RunRow run(std::uint64_t run_index) const {
    const auto& c = config_;
    RunRow row;
    row.experiment_id = c.experiment_id;
    row.algorithm = std::string(to_string(c.algorithm));
    row.k = c.k;
    row.epsilon = c.epsilon;
    row.delta = c.delta;
    row.run_index = run_index;
    row.seed = c.base_seed + run_index;
    RngStream rng(row.seed);
    if (const auto* finite = std::get_if<FiniteBandit>(&instance_)) {
      run_finite(*finite, rng, row);
    } else {
      run_reservoir(std::get<ArmReservoir>(instance_), rng, row);
    }
    return row;
  }

 private:
  bool uses_bounds() const {
    return config_.algorithm == Algorithm::lucb_km || config_.algorithm == Algorithm::f2 ||
           config_.algorithm == Algorithm::opt_qp;
  }

  bool uses_h_star() const {
    return config_.algorithm == Algorithm::lucb_km ||
           (config_.algorithm == Algorithm::opt_qp && config_.qf_solver == Algorithm::lucb_km);
  }

  void check_combination() const {
    const auto& c = config_;
    auto field = [](bool ok, const std::string& key, const std::string& what) {
      if (!ok) throw UsageError("config field '" + key + "': " + what);
    };
    const bool finite = std::holds_alternative<FiniteBandit>(instance_);
    const bool single = c.algorithm == Algorithm::f2 || c.algorithm == Algorithm::p3 ||
                        c.algorithm == Algorithm::opt_qp;
    if (single) field(c.k == 1, "k", std::string(to_string(c.algorithm)) + " needs k = 1");
    if (finite) {
      const auto n = std::get<FiniteBandit>(instance_).size();
      field(c.m.has_value(), "m", "finite instances need m");
      field(!c.rho.has_value(), "rho", "finite instances take m, not rho (rho = m / n)");
      field(c.k <= *c.m && *c.m < n, "m", "need k <= m < n");
      field(c.algorithm != Algorithm::k_independent_qp, "algorithm",
            "k_independent_qp needs a continuous reservoir");
    } else {
      field(c.rho.has_value(), "rho", "reservoir instances need rho");
      field(!c.m.has_value(), "m", "reservoir instances take rho, not m");
      field(c.algorithm != Algorithm::lucb_km && c.algorithm != Algorithm::f2, "algorithm",
            std::string(to_string(c.algorithm)) + " needs a finite instance");
      const auto& r = std::get<ArmReservoir>(instance_);
      if (c.algorithm == Algorithm::k_independent_qp) {
        field(!r.is_discrete(), "algorithm", "k_independent_qp needs a continuous reservoir");
      }
    }
  }

  void fill_bound_fields(RunRow& row) const {
    if (uses_bounds()) row.scheme = std::string(to_string(config_.scheme));
    if (uses_h_star()) row.h_star_mode = std::string(to_string(config_.h_star_mode));
  }

  template <class Solver>
  QuantileRun run_opt_qp(const ArmReservoir& r, double rho, RngStream& rng,
                         const Solver& solver) const {
    return opt_qp(r, rho, config_.epsilon, config_.delta, solver, rng,
                  QuantileOptions{config_.delta_prime});
  }

  QuantileRun run_quantile(const ArmReservoir& r, double rho, RngStream& rng) const {
    const auto& c = config_;
    const QuantileOptions options{c.delta_prime};
    switch (c.algorithm) {
      case Algorithm::p3:
        return p3(r, rho, c.epsilon, c.delta, rng, options);
      case Algorithm::kqp1:
        return kqp1({r, rho, c.k, c.epsilon, c.delta}, rng, options);
      case Algorithm::k_independent_qp:
        return k_independent_qp({r, rho, c.k, c.epsilon, c.delta}, rng, options);
      case Algorithm::opt_qp:
        if (c.qf_solver == Algorithm::f2) return run_opt_qp(r, rho, rng, F2QfSolver{c.scheme});
        return run_opt_qp(r, rho, rng, LucbQfSolver{c.scheme, LucbOptions{c.h_star_mode}});
      default:
        throw UsageError("algorithm does not run on reservoirs");
    }
  }

  void run_finite(const FiniteBandit& instance, RngStream& rng, RunRow& row) const {
    const auto& c = config_;
    const std::size_t m = *c.m;
    row.n = instance.size();
    row.m = m;
    fill_bound_fields(row);
    RunRecord record;
    if (c.algorithm == Algorithm::lucb_km) {
      record = lucb_km(instance, c.k, m, c.epsilon, c.delta, c.scheme, rng,
                       LucbOptions{c.h_star_mode});
      row.rounds = record.rounds;
    } else if (c.algorithm == Algorithm::f2) {
      record = f2(instance, m, c.epsilon, c.delta, c.scheme, rng);
      row.rounds = record.rounds;
    } else {
      // Reservoir algorithms see the instance as a uniform reservoir with
      // rho = m / n; the finite oracle judges the result.
      const auto reservoir = ArmReservoir::uniform_over(instance);
      const double rho = static_cast<double>(m) / static_cast<double>(instance.size());
      row.rho = rho;
      if (c.algorithm == Algorithm::kqp1 && c.k >= 2) {
        record = solve_kmn_via_kqp1(instance, c.k, m, c.epsilon, c.delta, rng,
                                    QuantileOptions{c.delta_prime});
      } else if (c.algorithm == Algorithm::kqp1 || c.algorithm == Algorithm::p3) {
        record = solve_qf_via_p3(instance, m, c.epsilon, c.delta, rng,
                                 QuantileOptions{c.delta_prime});
      } else {
        const auto run = run_quantile(reservoir, rho, rng);
        record = detail::to_finite_record(instance, run, c.k, m, row.seed);
      }
    }
    row.samples = record.total_samples;
    row.mistake = !verify_run(record, instance, m, c.epsilon);
    row.pulls_by_group = record.pulls_by_group;
  }

  void run_reservoir(const ArmReservoir& reservoir, RngStream& rng, RunRow& row) const {
    const auto& c = config_;
    if (reservoir.is_discrete()) row.n = reservoir.size();
    row.rho = *c.rho;
    fill_bound_fields(row);
    const auto run = run_quantile(reservoir, *c.rho, rng);
    row.samples = run.samples;
    row.mistake = !verify_arms(run.arms, c.k, top_rho_eps(reservoir, *c.rho, c.epsilon));
  }

  ExperimentConfig config_;
  Instance instance_;
};

// Runs every repetition of the experiment; rows are ordered by run index.
// The first failing run aborts the experiment and its exception propagates.
inline std::vector<RunRow> run_experiment(const ExperimentConfig& config) {
  const PreparedExperiment prepared(config);
  const std::size_t runs = config.runs;
  std::vector<RunRow> rows(runs);
  std::size_t width = config.parallelism;
  if (width == 0) width = std::max(1u, std::thread::hardware_concurrency());
  width = std::min(width, runs);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= runs) return;
      try {
        rows[i] = prepared.run(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  if (width <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(width);
    for (std::size_t w = 0; w < width; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return rows;
}

inline std::vector<RunRow> run_experiments(const std::vector<ExperimentConfig>& configs) {
  std::vector<RunRow> all;
  for (const auto& c : configs) {
    auto rows = run_experiment(c);
    all.insert(all.end(), std::make_move_iterator(rows.begin()),
               std::make_move_iterator(rows.end()));
  }
  return all;
}

struct PresetOptions {
  double scale = 1.0;
  bool full = false;  // fig1 only: keep n = 100 and 200
  std::uint64_t base_seed = 1;
  std::size_t parallelism = 1;
};

// Protocols of the three sample-complexity figures: 100 runs each (times
// scale), eps = 0.05, delta = 0.001, KL bounds.
inline std::vector<ExperimentConfig> preset(std::string_view name,
                                            const PresetOptions& options = {}) {
  detail::require(options.scale > 0.0, "preset scale must be > 0");
  const auto runs = static_cast<std::size_t>(
      std::max(1.0, std::round(100.0 * options.scale)));
  auto base = [&](std::string id, Algorithm a, std::size_t n, std::size_t k, std::size_t m) {
    ExperimentConfig c;
    c.experiment_id = std::move(id);
    c.algorithm = a;
    c.instance.generator = "linear";
    c.instance.n = n;
    c.k = k;
    c.m = m;
    c.epsilon = 0.05;
    c.delta = 0.001;
    c.scheme = BoundKind::kl;
    c.runs = runs;
    c.base_seed = options.base_seed;
    c.parallelism = options.parallelism;
    return c;
  };
  std::vector<ExperimentConfig> out;
  if (name == "fig1") {
    for (std::size_t n : {10, 20, 50, 100, 200}) {
      if (!options.full && n > 50) continue;
      detail::require(n % 10 == 0, "fig1 needs m = n / 10 to be an integer");
      for (auto a : {Algorithm::lucb_km, Algorithm::f2}) out.push_back(base("fig1", a, n, 1, n / 10));
    }
  } else if (name == "fig2") {
    for (std::size_t m = 1; m <= 5; ++m) {
      for (auto a : {Algorithm::lucb_km, Algorithm::f2}) out.push_back(base("fig2", a, 10, 1, m));
    }
  } else if (name == "fig3") {
    for (std::size_t k : {1, 2, 3, 5, 8, 10}) {
      out.push_back(base("fig3", Algorithm::lucb_km, 20, k, 10));
    }
  } else {
    throw UsageError("unknown preset '" + std::string(name) + "' (expected fig1|fig2|fig3)");
  }
  return out;
}

}  // namespace kmbandit

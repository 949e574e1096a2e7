#pragma once

// Flat key=value instance files.
//
//   # comment
//   kind=finite
//   means=[0.9, 0.5, 0.1]
//
//   kind=reservoir
//   law=discrete            means=[...]  probs=[...]
//   law=uniform             (means ~ U[0, 1])
//   law=piecewise           edges=[...]  probs=[...]   (one prob per bin)
//
// One key per line, whitespace around '=' and list items ignored, keys
// unique. Numbers are written with 17 significant digits so files
// round-trip exactly.

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kmbandit/bandit.hpp"
#include "kmbandit/errors.hpp"
#include "kmbandit/reservoir.hpp"

namespace kmbandit {

using Instance = std::variant<FiniteBandit, ArmReservoir>;

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_number(std::string_view text, const std::string& key) {
  const std::string s(trim(text));
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used != 0 && used == s.size(), "bad number '" + s + "' in " + key);
  return value;
}

inline std::vector<double> parse_list(std::string_view text, const std::string& key) {
  text = trim(text);
  require(text.size() >= 2 && text.front() == '[' && text.back() == ']',
          key + " must be a bracketed list");
  text = trim(text.substr(1, text.size() - 2));
  std::vector<double> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    out.push_back(parse_number(text.substr(start, comma - start), key));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string format_list(const std::vector<double>& xs) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += format_double(xs[i]);
  }
  return out + "]";
}

class KeyValues {
 public:
  explicit KeyValues(std::string_view text) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      ++line_no;
      std::string_view line = text.substr(pos, end - pos);
      if (const auto hash = line.find('#'); hash != std::string_view::npos) {
        line = line.substr(0, hash);
      }
      line = trim(line);
      if (!line.empty()) {
        const auto eq = line.find('=');
        require(eq != std::string_view::npos,
                "line " + std::to_string(line_no) + ": expected key=value");
        std::string key(trim(line.substr(0, eq)));
        require(!key.empty(), "line " + std::to_string(line_no) + ": empty key");
        require(!values_.count(key), "duplicate key '" + key + "'");
        values_.emplace(std::move(key), std::string(trim(line.substr(eq + 1))));
      }
      pos = end + 1;
    }
  }

  const std::string& get(const std::string& key) {
    const auto it = values_.find(key);
    require(it != values_.end(), "missing key '" + key + "'");
    used_.emplace(key);
    return it->second;
  }

  void expect_all_used() const {
    for (const auto& [key, value] : values_) {
      require(used_.count(key) != 0, "unexpected key '" + key + "'");
    }
  }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

}  // namespace detail

inline Instance parse_instance(std::string_view text) {
  detail::KeyValues kv(text);
  const std::string kind = kv.get("kind");
  if (kind == "finite") {
    auto means = detail::parse_list(kv.get("means"), "means");
    kv.expect_all_used();
    detail::require(!means.empty(), "finite instance needs at least one arm");
    return make_bernoulli_instance(means);
  }
  detail::require(kind == "reservoir", "kind must be finite or reservoir, got '" + kind + "'");
  const std::string law = kv.get("law");
  Instance out = ArmReservoir::uniform_means();
  if (law == "discrete") {
    auto means = detail::parse_list(kv.get("means"), "means");
    auto probs = detail::parse_list(kv.get("probs"), "probs");
    out = ArmReservoir::discrete(std::move(means), std::move(probs));
  } else if (law == "piecewise") {
    auto edges = detail::parse_list(kv.get("edges"), "edges");
    auto probs = detail::parse_list(kv.get("probs"), "probs");
    out = ArmReservoir::continuous(PiecewiseUniformLaw(std::move(edges), std::move(probs)));
  } else {
    detail::require(law == "uniform",
                    "law must be discrete, uniform or piecewise, got '" + law + "'");
  }
  kv.expect_all_used();
  return out;
}

inline Instance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open instance file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_instance(buf.str());
}

inline std::string format_instance(const FiniteBandit& instance) {
  return "kind=finite\nmeans=" + detail::format_list(instance.means()) + "\n";
}

inline std::string format_instance(const ArmReservoir& reservoir) {
  std::string out = "kind=reservoir\n";
  if (reservoir.is_discrete()) {
    out += "law=discrete\nmeans=" + detail::format_list(reservoir.means()) + "\n";
    out += "probs=" + detail::format_list(reservoir.probs()) + "\n";
    return out;
  }
  const auto& law = reservoir.law();
  if (law.edges() == std::vector<double>{0.0, 1.0}) return out + "law=uniform\n";
  out += "law=piecewise\nedges=" + detail::format_list(law.edges()) + "\n";
  out += "probs=" + detail::format_list(law.weights()) + "\n";
  return out;
}

inline std::string format_instance(const Instance& instance) {
  return std::visit([](const auto& x) { return format_instance(x); }, instance);
}

}  // namespace kmbandit

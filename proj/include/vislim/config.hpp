#pragma once

// Run configuration in a small TOML subset:
//
//   schema = "vislim-config/1"
//   [section]
//   key = 1.5e-3 | 42 | true | "text" | [1e2, 1e3] | { kind = "gamma", a = 1.0 }
//
// Comments start with '#'. Unknown sections or keys are rejected so that a
// typo cannot silently fall back to a default.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vislim/cns.hpp"
#include "vislim/error.hpp"
#include "vislim/initial_data.hpp"
#include "vislim/ins.hpp"
#include "vislim/thermo.hpp"

namespace vislim {

inline constexpr std::string_view kConfigSchema = "vislim-config/1";

struct ConfigValue;
using ConfigTable = std::map<std::string, ConfigValue>;

struct ConfigValue {
  std::variant<double, bool, std::string, std::vector<double>, ConfigTable> value;
  std::string text;  // raw token, used to check integers
  int line = 0;
};

namespace detail {

class ConfigParser {
 public:
  explicit ConfigParser(std::string_view src) : src_(src) {}

  std::map<std::string, ConfigTable> parse() {
    std::map<std::string, ConfigTable> out;
    std::string section;
    out[section];
    while (pos_ < src_.size()) {
      skip_blank();
      if (pos_ >= src_.size()) break;
      const char c = src_[pos_];
      if (c == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      if (c == '#') {
        skip_comment();
        continue;
      }
      if (c == '[') {
        ++pos_;
        section = key();
        skip_blank();
        expect(']');
        if (out.count(section) && !out[section].empty()) fail("duplicate section [" + section + "]");
        out[section];
        end_of_line();
        continue;
      }
      const std::string k = key();
      skip_blank();
      expect('=');
      skip_blank();
      ConfigValue v = value();
      if (out[section].count(k)) fail("duplicate key '" + k + "'");
      out[section][k] = std::move(v);
      end_of_line();
    }
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError("config line " + std::to_string(line_) + ": " + msg);
  }

  void skip_blank() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\r')) ++pos_;
  }

  void skip_comment() {
    while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
  }

  void expect(char c) {
    if (pos_ >= src_.size() || src_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void end_of_line() {
    skip_blank();
    if (pos_ < src_.size() && src_[pos_] == '#') skip_comment();
    if (pos_ < src_.size()) {
      if (src_[pos_] != '\n') fail("unexpected trailing text");
      ++pos_;
      ++line_;
    }
  }

  std::string key() {
    const std::size_t start = pos_;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.') {
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ == start) fail("expected a key");
    return std::string(src_.substr(start, pos_ - start));
  }

  ConfigValue value() {
    ConfigValue v;
    v.line = line_;
    if (pos_ >= src_.size()) fail("missing value");
    const char c = src_[pos_];
    if (c == '"') {
      ++pos_;
      std::string s;
      while (pos_ < src_.size() && src_[pos_] != '"') {
        if (src_[pos_] == '\n') fail("unterminated string");
        if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) ++pos_;
        s += src_[pos_++];
      }
      expect('"');
      v.text = s;
      v.value = std::move(s);
      return v;
    }
    if (c == '[') {
      ++pos_;
      std::vector<double> xs;
      skip_blank();
      while (pos_ < src_.size() && src_[pos_] != ']') {
        xs.push_back(number(v.text));
        skip_blank();
        if (pos_ < src_.size() && src_[pos_] == ',') {
          ++pos_;
          skip_blank();
        }
      }
      expect(']');
      v.value = std::move(xs);
      return v;
    }
    if (c == '{') {
      ++pos_;
      ConfigTable t;
      skip_blank();
      while (pos_ < src_.size() && src_[pos_] != '}') {
        const std::string k = key();
        skip_blank();
        expect('=');
        skip_blank();
        t[k] = value();
        skip_blank();
        if (pos_ < src_.size() && src_[pos_] == ',') {
          ++pos_;
          skip_blank();
        }
      }
      expect('}');
      v.value = std::move(t);
      return v;
    }
    if (src_.substr(pos_, 4) == "true") {
      pos_ += 4;
      v.text = "true";
      v.value = true;
      return v;
    }
    if (src_.substr(pos_, 5) == "false") {
      pos_ += 5;
      v.text = "false";
      v.value = false;
      return v;
    }
    v.value = number(v.text);
    return v;
  }

  double number(std::string& text) {
    const std::size_t start = pos_;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == 'e' || c == 'E' ||
          c == '_') {
        ++pos_;
      } else {
        break;
      }
    }
    std::string tok;
    for (char c : src_.substr(start, pos_ - start)) {
      if (c != '_') tok += c;
    }
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size()) fail("malformed number '" + tok + "'");
    text = tok;
    return x;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace detail

/// Everything needed to reproduce one run (or one sweep template).
struct RunConfig {
  int n = 64;
  std::string solver = "cns";  // "cns" or "ins"
  double t_end = 1.0;
  double dt = 1e-4;
  double cfl_safety = 0.5;
  int time_order = 2;
  double record_interval = 0.0;  // 0: t_end / 200
  double lq_exponent = 2.5;
  double rho_lower = 0.0;  // 0 disables the band checks
  double rho_upper = std::numeric_limits<double>::infinity();
  int max_pressure_iterations = 200;
  double divergence_tolerance = 1e-10;
  double nu = 0.0;
  double law_a = 1.0;
  double law_gamma = 2.0;
  InitialDataSpec initial;
  std::string output_dir = "out";
  bool write_snapshots = true;
  std::vector<double> sweep_nus;

  Grid grid() const { return Grid(n); }
  PressureLaw law() const { return PressureLaw::gamma_law(law_a, law_gamma, initial.rho_bar); }

  CnsParams cns_params() const {
    CnsParams p;
    p.nu = nu;
    p.law = law();
    p.dt = dt;
    p.t_end = t_end;
    p.cfl_safety = cfl_safety;
    p.time_order = time_order;
    return p;
  }

  InsParams ins_params() const {
    InsParams p;
    p.dt = dt;
    p.t_end = t_end;
    p.cfl_safety = cfl_safety;
    p.time_order = time_order;
    p.max_pressure_iterations = max_pressure_iterations;
    p.divergence_tolerance = divergence_tolerance;
    return p;
  }

  CnsRunOptions cns_options() const {
    CnsRunOptions o;
    o.record_interval = record_interval;
    o.lq_exponent = lq_exponent;
    o.rho_lower = rho_lower;
    o.rho_upper = rho_upper;
    return o;
  }

  InsRunOptions ins_options() const {
    InsRunOptions o;
    o.record_interval = record_interval;
    return o;
  }
};

namespace detail {

class ConfigReader {
 public:
  ConfigReader(std::map<std::string, ConfigTable> doc) : doc_(std::move(doc)) {}

  template <class T>
  void read(const std::string& section, const std::string& key, T& out) {
    seen_.insert(section + "." + key);
    auto s = doc_.find(section);
    if (s == doc_.end()) return;
    auto it = s->second.find(key);
    if (it == s->second.end()) return;
    assign(section + "." + key, it->second, out);
  }

  const ConfigValue* raw(const std::string& section, const std::string& key) {
    seen_.insert(section + "." + key);
    auto s = doc_.find(section);
    if (s == doc_.end()) return nullptr;
    auto it = s->second.find(key);
    return it == s->second.end() ? nullptr : &it->second;
  }

  void reject_unknown() const {
    for (const auto& [section, table] : doc_) {
      for (const auto& [key, v] : table) {
        const std::string full = section + "." + key;
        if (!seen_.count(full)) {
          throw FormatError("config line " + std::to_string(v.line) + ": unknown key '" +
                            (section.empty() ? key : full) + "'");
        }
      }
    }
  }

  static void assign(const std::string& name, const ConfigValue& v, double& out) {
    const auto* x = std::get_if<double>(&v.value);
    if (!x) throw FormatError("config: '" + name + "' must be a number");
    out = *x;
  }
  static void assign(const std::string& name, const ConfigValue& v, int& out) {
    double x = 0.0;
    assign(name, v, x);
    if (v.text.find_first_of(".eE") != std::string::npos || x != static_cast<int>(x)) {
      throw FormatError("config: '" + name + "' must be an integer");
    }
    out = static_cast<int>(x);
  }
  static void assign(const std::string& name, const ConfigValue& v, std::uint64_t& out) {
    double x = 0.0;
    assign(name, v, x);
    if (v.text.find_first_of(".eE-") != std::string::npos) {
      throw FormatError("config: '" + name + "' must be a nonnegative integer");
    }
    out = std::stoull(v.text);
  }
  static void assign(const std::string& name, const ConfigValue& v, bool& out) {
    const auto* x = std::get_if<bool>(&v.value);
    if (!x) throw FormatError("config: '" + name + "' must be true or false");
    out = *x;
  }
  static void assign(const std::string& name, const ConfigValue& v, std::string& out) {
    const auto* x = std::get_if<std::string>(&v.value);
    if (!x) throw FormatError("config: '" + name + "' must be a string");
    out = *x;
  }
  static void assign(const std::string& name, const ConfigValue& v, std::vector<double>& out) {
    const auto* x = std::get_if<std::vector<double>>(&v.value);
    if (!x) throw FormatError("config: '" + name + "' must be a list of numbers");
    out = *x;
  }

 private:
  std::map<std::string, ConfigTable> doc_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline RunConfig parse_config(std::string_view text) {
  detail::ConfigReader r(detail::ConfigParser(text).parse());
  RunConfig c;
  std::string schema;
  r.read("", "schema", schema);
  if (schema != kConfigSchema) {
    throw FormatError("config: schema must be \"" + std::string(kConfigSchema) + "\" (got \"" + schema + "\")");
  }
  r.read("grid", "n", c.n);
  r.read("run", "solver", c.solver);
  r.read("run", "t_end", c.t_end);
  r.read("run", "dt", c.dt);
  r.read("run", "cfl_safety", c.cfl_safety);
  r.read("run", "time_order", c.time_order);
  r.read("run", "record_interval", c.record_interval);
  r.read("run", "lq_exponent", c.lq_exponent);
  r.read("run", "rho_lower", c.rho_lower);
  r.read("run", "rho_upper", c.rho_upper);
  r.read("run", "max_pressure_iterations", c.max_pressure_iterations);
  r.read("run", "divergence_tolerance", c.divergence_tolerance);
  r.read("physics", "nu", c.nu);
  if (const ConfigValue* law = r.raw("physics", "law")) {
    const auto* t = std::get_if<ConfigTable>(&law->value);
    if (!t) throw FormatError("config: 'physics.law' must be an inline table");
    std::string kind = "gamma";
    for (const auto& [k, v] : *t) {
      if (k == "kind") {
        detail::ConfigReader::assign("physics.law.kind", v, kind);
      } else if (k == "a") {
        detail::ConfigReader::assign("physics.law.a", v, c.law_a);
      } else if (k == "gamma") {
        detail::ConfigReader::assign("physics.law.gamma", v, c.law_gamma);
      } else if (k == "rho_bar") {
        detail::ConfigReader::assign("physics.law.rho_bar", v, c.initial.rho_bar);
      } else {
        throw FormatError("config: unknown key 'physics.law." + k + "'");
      }
    }
    if (kind != "gamma") throw FormatError("config: unsupported pressure law kind '" + kind + "'");
  }
  r.read("initial", "generator", c.initial.generator);
  r.read("initial", "rho_amplitude", c.initial.rho_amplitude);
  r.read("initial", "velocity_h1", c.initial.velocity_h1);
  r.read("initial", "max_mode", c.initial.max_mode);
  r.read("initial", "seed", c.initial.seed);
  r.read("output", "dir", c.output_dir);
  r.read("output", "snapshots", c.write_snapshots);
  r.read("sweep", "nus", c.sweep_nus);
  r.reject_unknown();

  if (c.solver != "cns" && c.solver != "ins") throw FormatError("config: run.solver must be \"cns\" or \"ins\"");
  Grid{c.n};
  if (!(c.nu >= 0.0)) throw FormatError("config: physics.nu must be nonnegative");
  if (!(c.lq_exponent >= 1.0)) throw FormatError("config: run.lq_exponent must be >= 1");
  step_count(c.t_end, c.dt);
  c.law();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace vislim

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ffwave/energy_grid.hpp"
#include "ffwave/errors.hpp"
#include "ffwave/potential.hpp"

namespace ffwave {

/// A config value: number, word/string, or (possibly nested) list.
struct ConfigValue {
  std::variant<double, std::string, std::vector<ConfigValue>> data;
  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_list() const { return std::holds_alternative<std::vector<ConfigValue>>(data); }
  double number() const { return std::get<double>(data); }
  const std::string& string() const { return std::get<std::string>(data); }
  const std::vector<ConfigValue>& list() const { return std::get<std::vector<ConfigValue>>(data); }
};

struct ConfigEntry {
  ConfigValue value;
  int line = 0;
  std::string raw;
};

/// Flat sections of key = value entries.
using ConfigSections = std::map<std::string, std::map<std::string, ConfigEntry>>;

namespace detail {

class ValueParser {
 public:
  explicit ValueParser(std::string_view text) : s_(text) {}

  ConfigValue parse() {
    ConfigValue v = value();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing text '" + std::string(s_.substr(pos_)) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(msg); }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  ConfigValue value() {
    skip();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '[') return list();
    if (c == '"') return quoted();
    return bare();
  }
  ConfigValue list() {
    ++pos_;
    std::vector<ConfigValue> items;
    skip();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return {items};
    }
    for (;;) {
      items.push_back(value());
      skip();
      if (pos_ >= s_.size()) fail("unterminated list");
      if (s_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        return {items};
      }
      fail(std::string("expected ',' or ']' but found '") + s_[pos_] + "'");
    }
  }
  ConfigValue quoted() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') out += s_[pos_++];
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return {out};
  }
  ConfigValue bare() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '[') ++pos_;
    std::string tok(s_.substr(start, pos_ - start));
    while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.back()))) tok.pop_back();
    if (tok.empty()) fail("empty value");
    char* end = nullptr;
    const double d = std::strtod(tok.c_str(), &end);
    if (end && *end == '\0') return {d};
    return {tok};
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace detail

/// Collects every problem found in one pass so the user sees them together.
class ConfigErrors {
 public:
  void add(int line, const std::string& msg) {
    std::ostringstream os;
    if (line > 0) os << "line " << line << ": ";
    os << msg;
    items_.push_back(os.str());
  }
  bool empty() const { return items_.empty(); }
  void raise_if_any(const std::string& source) const {
    if (items_.empty()) return;
    std::string all = source + ": invalid configuration";
    for (const auto& i : items_) all += "\n  " + i;
    throw ConfigError(all);
  }

 private:
  std::vector<std::string> items_;
};

/// Parses INI-style text: "[section]" headers, "key = value" lines, '#' or
/// ';' comments. A value may continue over several lines while brackets are open.
inline ConfigSections parse_config_text(const std::string& text, const std::string& source = "<config>") {
  ConfigSections out;
  ConfigErrors errors;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  std::string pending_key, pending_value;
  int pending_line = 0, depth = 0;

  auto strip_comment = [](const std::string& l) {
    bool in_str = false;
    for (std::size_t k = 0; k < l.size(); ++k) {
      if (l[k] == '"') in_str = !in_str;
      if (!in_str && (l[k] == '#' || l[k] == ';')) return l.substr(0, k);
    }
    return l;
  };
  auto bracket_delta = [](const std::string& v) {
    int d = 0;
    for (char c : v) d += (c == '[') - (c == ']');
    return d;
  };
  auto commit = [&]() {
    try {
      ConfigValue v = detail::ValueParser(pending_value).parse();
      auto& sec = out[section];
      if (sec.count(pending_key)) errors.add(pending_line, "duplicate key '" + pending_key + "' in [" + section + "]");
      sec[pending_key] = ConfigEntry{v, pending_line, pending_value};
    } catch (const ConfigError& e) {
      errors.add(pending_line, "key '" + pending_key + "': " + e.what());
    }
    pending_key.clear();
    pending_value.clear();
    depth = 0;
  };

  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = detail::trim(strip_comment(line));
    if (depth > 0) {
      pending_value += " " + body;
      depth += bracket_delta(body);
      if (depth <= 0) commit();
      continue;
    }
    if (body.empty()) continue;
    if (body.front() == '[' && body.back() == ']' && body.find('=') == std::string::npos) {
      section = detail::trim(std::string_view(body).substr(1, body.size() - 2));
      if (section.empty()) errors.add(lineno, "empty section name");
      out[section];
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      errors.add(lineno, "expected 'key = value' or '[section]'");
      continue;
    }
    if (section.empty()) {
      errors.add(lineno, "key outside of any section");
      continue;
    }
    pending_key = detail::trim(std::string_view(body).substr(0, eq));
    pending_value = detail::trim(std::string_view(body).substr(eq + 1));
    pending_line = lineno;
    if (pending_key.empty()) {
      errors.add(lineno, "empty key");
      pending_key.clear();
      continue;
    }
    depth = bracket_delta(pending_value);
    if (depth <= 0) commit();
  }
  if (depth > 0) errors.add(pending_line, "unterminated list for key '" + pending_key + "'");
  errors.raise_if_any(source);
  return out;
}

enum class Suite { spectrum, tkernel, smatrix, waveop, embedded, refinement };

inline const std::vector<std::pair<Suite, std::string>>& suite_names() {
  static const std::vector<std::pair<Suite, std::string>> names = {
      {Suite::spectrum, "spectrum"}, {Suite::tkernel, "tkernel"},   {Suite::smatrix, "smatrix"},
      {Suite::waveop, "waveop"},     {Suite::embedded, "embedded"}, {Suite::refinement, "refinement"}};
  return names;
}

inline std::string to_string(Suite s) {
  for (const auto& [k, n] : suite_names())
    if (k == s) return n;
  return "?";
}

/// Default tolerances; every key is also a valid [tolerances] entry.
inline const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> t = {
      {"free_exact", 1e-12},
      {"closed_form", 1e-6},
      {"fredholm_direct", 1e-8},
      {"hermitian_relation", 1e-8},
      {"holder_min", 0.9},
      {"unitarity", 1e-6},
      {"unitarity_improvement", 4.0},
      {"side_consistency", 1e-6},
      {"main_formula", 5e-3},
      {"corollary", 5e-3},
      {"cauchy_conjugation", 1e-3},
      {"tanh_cross", 1e-6},
      {"isometry", 1e-3},
      {"intertwining", 1e-3},
      {"s_identity", 1e-3},
      {"identity_improvement", 3.0},
      {"decomposition_identity", 1e-12},
      {"hs_stability", 0.05},
      {"sigma_ratio", 0.1},
      {"regularized_limit", 1e-3},
      {"embed_certification", 1e-6},
      {"embedded_eigenvalue", 1e-6},
      {"vf_at_eigenvalue", 1e-10},
      {"derivative_identity", 1e-6},
      {"projected_condition", 1e4},
      {"unprojected_condition", 1e8},
      {"eigenfunction_orthogonality", 1e-2},
      {"continuity_exponent", 0.4},
  };
  return t;
}

struct ProfileSpec {
  ProfileShape shape = ProfileShape::sin_bump;
  double power = 2.0;
  Eigen::VectorXcd direction;
};

struct KernelSpec {
  std::string family = "separable";  // free | separable | embedded
  int dim = 1;
  std::vector<ProfileSpec> profiles;
  Eigen::MatrixXcd coefficients;
  double eigenvalue = 0.0;  // embedded: absolute energy
  ProfileSpec eigenfunction;
};

struct ScenarioConfig {
  std::string name = "scenario";
  double a = 0.0, b = 1.0;
  std::vector<int> sizes;
  QuadratureScheme scheme = QuadratureScheme::gauss_legendre;
  double line_half_width = 8.0;
  int line_count = 512;
  int fft_padding = 4;
  KernelSpec kernel;
  std::vector<Suite> checks;
  std::map<std::string, double> tolerances = default_tolerances();
  std::vector<std::string> refinement_metrics = {"main_formula", "intertwining", "s_identity"};
  std::vector<double> regularization = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
  int assess_from = 201;  // discretization-error checks are asserted from this size up
  std::string output_dir = "ffwave-out";
  unsigned seed = 20240601;
  int holder_samples = 200;
  unsigned threads = 0;  // 0: hardware concurrency

  bool wants(Suite s) const { return std::find(checks.begin(), checks.end(), s) != checks.end(); }
  double tol(const std::string& key) const { return tolerances.at(key); }
};

namespace detail {

struct Reader {
  const ConfigSections& sections;
  ConfigErrors& errors;
  std::set<std::pair<std::string, std::string>> used;

  const ConfigEntry* find(const std::string& sec, const std::string& key) {
    auto s = sections.find(sec);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    used.insert({sec, key});
    return &k->second;
  }
  const ConfigEntry* require(const std::string& sec, const std::string& key) {
    const ConfigEntry* e = find(sec, key);
    if (!e) errors.add(0, "missing required key '" + key + "' in [" + sec + "]");
    return e;
  }
  bool number(const ConfigEntry* e, const std::string& key, double& out) {
    if (!e) return false;
    if (!e->value.is_number()) {
      errors.add(e->line, "key '" + key + "' must be a number");
      return false;
    }
    out = e->value.number();
    return true;
  }
  bool integer(const ConfigEntry* e, const std::string& key, int& out) {
    double d = 0;
    if (!number(e, key, d)) return false;
    if (d != std::floor(d)) {
      errors.add(e->line, "key '" + key + "' must be an integer");
      return false;
    }
    out = static_cast<int>(d);
    return true;
  }
  bool word(const ConfigEntry* e, const std::string& key, std::string& out) {
    if (!e) return false;
    if (!e->value.is_string()) {
      errors.add(e->line, "key '" + key + "' must be a word");
      return false;
    }
    out = e->value.string();
    return true;
  }
  template <class F>
  bool list_of(const ConfigEntry* e, const std::string& key, F&& each) {
    if (!e) return false;
    if (!e->value.is_list()) {
      errors.add(e->line, "key '" + key + "' must be a list");
      return false;
    }
    bool ok = true;
    for (const auto& item : e->value.list()) ok = each(item) && ok;
    if (!ok) errors.add(e->line, "key '" + key + "' has malformed entries");
    return ok;
  }
};

inline bool to_complex_vector(const ConfigValue& v, Eigen::VectorXcd& out) {
  if (!v.is_list()) return false;
  out.resize(static_cast<Eigen::Index>(v.list().size()));
  for (std::size_t k = 0; k < v.list().size(); ++k) {
    if (!v.list()[k].is_number()) return false;
    out(static_cast<Eigen::Index>(k)) = v.list()[k].number();
  }
  return true;
}

}  // namespace detail

inline const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> k = {
      {"scenario", {"name", "seed", "threads", "holder_samples"}},
      {"grid", {"a", "b", "sizes", "scheme"}},
      {"line", {"half_width", "count", "padding"}},
      {"kernel", {"family", "dim", "profiles", "powers", "directions", "coefficients", "eigenvalue",
                  "eigenfunction", "eigenfunction_power"}},
      {"checks", {"suites", "refinement_metrics", "regularization", "assess_from"}},
      {"tolerances", {}},
      {"output", {"directory"}},
  };
  return k;
}

/// Validates parsed sections into a ScenarioConfig (strict: unknown sections
/// or keys are errors).
inline ScenarioConfig build_config(const ConfigSections& sections, const std::string& source = "<config>") {
  ConfigErrors errors;
  detail::Reader rd{sections, errors, {}};
  ScenarioConfig cfg;
  const auto& allowed = allowed_keys();
  for (const auto& [sec, keys] : sections) {
    auto it = allowed.find(sec);
    if (it == allowed.end()) {
      int line = keys.empty() ? 0 : keys.begin()->second.line;
      std::string names;
      for (const auto& [n, _] : allowed) names += (names.empty() ? "" : ", ") + n;
      errors.add(line, "unknown section [" + sec + "] (valid sections: " + names + ")");
      continue;
    }
    for (const auto& [key, entry] : keys) {
      const bool ok = sec == "tolerances" ? default_tolerances().count(key) > 0 : it->second.count(key) > 0;
      if (!ok) {
        std::string names;
        if (sec == "tolerances")
          for (const auto& [n, _] : default_tolerances()) names += (names.empty() ? "" : ", ") + n;
        else
          for (const auto& n : it->second) names += (names.empty() ? "" : ", ") + n;
        errors.add(entry.line, "unknown key '" + key + "' in [" + sec + "] (valid keys: " + names + ")");
      }
    }
  }

  // [scenario]
  std::string w;
  if (rd.word(rd.find("scenario", "name"), "name", w)) cfg.name = w;
  int iv = 0;
  if (rd.integer(rd.find("scenario", "seed"), "seed", iv)) cfg.seed = static_cast<unsigned>(iv);
  if (rd.integer(rd.find("scenario", "threads"), "threads", iv)) cfg.threads = static_cast<unsigned>(std::max(0, iv));
  if (rd.integer(rd.find("scenario", "holder_samples"), "holder_samples", iv)) {
    if (iv < 100) errors.add(rd.find("scenario", "holder_samples")->line, "holder_samples must be at least 100");
    cfg.holder_samples = iv;
  }

  // [grid]
  const ConfigEntry* ea = rd.require("grid", "a");
  const ConfigEntry* eb = rd.require("grid", "b");
  bool have_a = rd.number(ea, "a", cfg.a);
  bool have_b = rd.number(eb, "b", cfg.b);
  if (have_a && have_b && !(cfg.b > cfg.a))
    errors.add(eb->line, "interval requires b > a (got a = " + std::to_string(cfg.a) + ", b = " + std::to_string(cfg.b) + ")");
  const ConfigEntry* es = rd.require("grid", "sizes");
  rd.list_of(es, "sizes", [&](const ConfigValue& v) {
    if (!v.is_number() || v.number() != std::floor(v.number())) return false;
    cfg.sizes.push_back(static_cast<int>(v.number()));
    return true;
  });
  if (es) {
    if (cfg.sizes.empty()) errors.add(es->line, "sizes must not be empty");
    for (std::size_t k = 0; k < cfg.sizes.size(); ++k) {
      if (cfg.sizes[k] < 8) errors.add(es->line, "grid sizes must be at least 8");
      if (k > 0 && cfg.sizes[k] <= cfg.sizes[k - 1]) errors.add(es->line, "grid sizes must be strictly increasing");
    }
  }
  if (rd.word(rd.find("grid", "scheme"), "scheme", w)) {
    try {
      cfg.scheme = scheme_from_string(w);
    } catch (const ConfigError& e) {
      errors.add(rd.find("grid", "scheme")->line, e.what());
    }
  }

  // [line]
  if (const ConfigEntry* e = rd.find("line", "half_width"); rd.number(e, "half_width", cfg.line_half_width) && !(cfg.line_half_width > 0))
    errors.add(e->line, "half_width must be positive");
  if (const ConfigEntry* e = rd.find("line", "count"); rd.integer(e, "count", cfg.line_count) && (cfg.line_count <= 0 || cfg.line_count % 2))
    errors.add(e->line, "count must be a positive even integer");
  if (const ConfigEntry* e = rd.find("line", "padding"); rd.integer(e, "padding", cfg.fft_padding) && cfg.fft_padding < 1)
    errors.add(e->line, "padding must be at least 1");

  // [kernel]
  KernelSpec& ks = cfg.kernel;
  const ConfigEntry* ef = rd.require("kernel", "family");
  if (rd.word(ef, "family", ks.family) && ks.family != "free" && ks.family != "separable" && ks.family != "embedded")
    errors.add(ef->line, "unknown kernel family '" + ks.family + "' (valid: free, separable, embedded)");
  if (const ConfigEntry* e = rd.find("kernel", "dim"); rd.integer(e, "dim", ks.dim) && (ks.dim < 1 || ks.dim > 8))
    errors.add(e->line, "dim must be between 1 and 8");
  std::vector<std::string> shapes;
  std::vector<double> powers;
  std::vector<Eigen::VectorXcd> directions;
  const ConfigEntry* ep = rd.find("kernel", "profiles");
  rd.list_of(ep, "profiles", [&](const ConfigValue& v) {
    if (!v.is_string()) return false;
    shapes.push_back(v.string());
    return true;
  });
  const ConfigEntry* epw = rd.find("kernel", "powers");
  rd.list_of(epw, "powers", [&](const ConfigValue& v) {
    if (!v.is_number() || !(v.number() > 0)) return false;
    powers.push_back(v.number());
    return true;
  });
  const ConfigEntry* ed = rd.find("kernel", "directions");
  rd.list_of(ed, "directions", [&](const ConfigValue& v) {
    Eigen::VectorXcd d;
    if (!detail::to_complex_vector(v, d)) return false;
    directions.push_back(d);
    return true;
  });
  const ConfigEntry* ec = rd.find("kernel", "coefficients");
  std::vector<Eigen::VectorXcd> rows;
  rd.list_of(ec, "coefficients", [&](const ConfigValue& v) {
    Eigen::VectorXcd r;
    if (!detail::to_complex_vector(v, r)) return false;
    rows.push_back(r);
    return true;
  });
  if (ks.family == "separable") {
    if (shapes.empty()) shapes.assign(1, "sin-bump");
    const std::size_t r = shapes.size();
    if (powers.empty()) powers.assign(r, 2.0);
    if (directions.empty())
      for (std::size_t k = 0; k < r; ++k) directions.push_back(unit_vector(ks.dim, static_cast<int>(k % ks.dim)));
    if (powers.size() != r) errors.add(epw ? epw->line : 0, "powers must have one entry per profile");
    if (directions.size() != r) errors.add(ed ? ed->line : 0, "directions must have one entry per profile");
    for (const auto& d : directions)
      if (d.size() != ks.dim) errors.add(ed ? ed->line : 0, "each direction must have dim entries");
    if (rows.empty()) {
      ks.coefficients = 0.5 * Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
    } else {
      if (rows.size() != r) errors.add(ec->line, "coefficients must be an r x r nested list (r = number of profiles)");
      ks.coefficients = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
      for (std::size_t i = 0; i < std::min(r, rows.size()); ++i) {
        if (rows[i].size() != static_cast<Eigen::Index>(r)) {
          errors.add(ec->line, "coefficients must be an r x r nested list (r = number of profiles)");
          break;
        }
        ks.coefficients.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
      }
      if ((ks.coefficients - ks.coefficients.adjoint()).cwiseAbs().maxCoeff() > 0.0)
        errors.add(ec->line, "coefficients must be a symmetric matrix");
    }
    if (powers.size() == r && directions.size() == r)
      for (std::size_t k = 0; k < r; ++k) {
        ProfileSpec p;
        try {
          p.shape = profile_shape_from_string(shapes[k]);
        } catch (const ConfigError& e) {
          errors.add(ep ? ep->line : 0, e.what());
        }
        p.power = powers[k];
        p.direction = directions[k];
        ks.profiles.push_back(p);
      }
  } else if (ep || epw || ed || ec) {
    const ConfigEntry* e = ep ? ep : epw ? epw : ed ? ed : ec;
    errors.add(e->line, "profiles, powers, directions and coefficients apply to the separable family only");
  }
  const ConfigEntry* eev = rd.find("kernel", "eigenvalue");
  const ConfigEntry* eef = rd.find("kernel", "eigenfunction");
  const ConfigEntry* eep = rd.find("kernel", "eigenfunction_power");
  if (ks.family == "embedded") {
    ks.eigenvalue = cfg.a + 0.3 * (cfg.b - cfg.a);
    if (rd.number(eev, "eigenvalue", ks.eigenvalue) && !(ks.eigenvalue > cfg.a && ks.eigenvalue < cfg.b))
      errors.add(eev->line, "eigenvalue must lie strictly inside (a, b)");
    ks.eigenfunction.direction = unit_vector(ks.dim, 0);
    if (rd.word(eef, "eigenfunction", w)) {
      try {
        ks.eigenfunction.shape = profile_shape_from_string(w);
        if (ks.eigenfunction.shape == ProfileShape::cusp) errors.add(eef->line, "eigenfunction profile must be smooth");
      } catch (const ConfigError& e) {
        errors.add(eef->line, e.what());
      }
    }
    if (rd.number(eep, "eigenfunction_power", ks.eigenfunction.power) && ks.eigenfunction.power < 2.0)
      errors.add(eep->line, "eigenfunction_power must be at least 2");
  } else if (eev || eef || eep) {
    errors.add((eev ? eev : eef ? eef : eep)->line, "eigenvalue settings apply to the embedded family only");
  }

  // [checks]
  const ConfigEntry* esu = rd.require("checks", "suites");
  rd.list_of(esu, "suites", [&](const ConfigValue& v) {
    if (!v.is_string()) return false;
    for (const auto& [s, n] : suite_names())
      if (n == v.string()) {
        if (!cfg.wants(s)) cfg.checks.push_back(s);
        return true;
      }
    std::string names;
    for (const auto& [s, n] : suite_names()) names += (names.empty() ? "" : ", ") + n;
    errors.add(esu->line, "unknown check '" + v.string() + "' (valid suites: " + names + ")");
    return true;
  });
  if (esu && cfg.checks.empty() && esu->value.is_list() && esu->value.list().empty())
    errors.add(esu->line, "suites must not be empty");
  if (const ConfigEntry* e = rd.find("checks", "refinement_metrics")) {
    cfg.refinement_metrics.clear();
    static const std::set<std::string> valid = {"main_formula", "intertwining", "s_identity", "unitarity", "isometry", "corollary"};
    rd.list_of(e, "refinement_metrics", [&](const ConfigValue& v) {
      if (!v.is_string() || !valid.count(v.string())) return false;
      cfg.refinement_metrics.push_back(v.string());
      return true;
    });
  }
  if (const ConfigEntry* e = rd.find("checks", "regularization")) {
    cfg.regularization.clear();
    rd.list_of(e, "regularization", [&](const ConfigValue& v) {
      if (!v.is_number() || !(v.number() >= 1e-3)) return false;
      cfg.regularization.push_back(v.number());
      return true;
    });
    for (std::size_t k = 1; k < cfg.regularization.size(); ++k)
      if (!(cfg.regularization[k] < cfg.regularization[k - 1])) {
        errors.add(e->line, "regularization must be strictly descending");
        break;
      }
  }

  if (const ConfigEntry* e = rd.find("checks", "assess_from"); rd.integer(e, "assess_from", cfg.assess_from) && cfg.assess_from < 8)
    errors.add(e->line, "assess_from must be at least 8");
  if (esu && cfg.wants(Suite::refinement) && cfg.sizes.size() < 2)
    errors.add(esu->line, "the refinement suite needs at least two grid sizes");

  // [tolerances]
  if (auto it = sections.find("tolerances"); it != sections.end())
    for (const auto& [key, entry] : it->second) {
      if (!default_tolerances().count(key)) continue;
      if (!entry.value.is_number() || !(entry.value.number() > 0))
        errors.add(entry.line, "tolerance '" + key + "' must be a positive number");
      else
        cfg.tolerances[key] = entry.value.number();
    }

  // [output]
  if (rd.word(rd.find("output", "directory"), "directory", w)) cfg.output_dir = w;

  errors.raise_if_any(source);
  return cfg;
}

inline ScenarioConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return build_config(parse_config_text(ss.str(), path), path);
}

/// Builds the kernel described by a config.
struct BuiltKernel {
  KernelPtr kernel;
  std::optional<EmbeddedScenario> embedded;
};

inline BuiltKernel build_kernel(const ScenarioConfig& cfg) {
  const KernelSpec& ks = cfg.kernel;
  BuiltKernel out;
  if (ks.family == "free") {
    out.kernel = build_zero_kernel(cfg.a, cfg.b, ks.dim);
  } else if (ks.family == "separable") {
    std::vector<Profile> profiles;
    for (const auto& p : ks.profiles) profiles.push_back(make_profile(p.shape, cfg.a, cfg.b, p.power, p.direction));
    out.kernel = build_separable_kernel(profiles, ks.coefficients);
  } else {
    const Profile f = normalized(make_profile(ks.eigenfunction.shape, cfg.a, cfg.b, ks.eigenfunction.power,
                                              ks.eigenfunction.direction));
    out.embedded = build_embedded_ev_kernel(ks.eigenvalue, f);
    out.kernel = out.embedded->kernel;
  }
  return out;
}

}  // namespace ffwave

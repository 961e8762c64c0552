#include "htclt/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>

#include "htclt/errors.hpp"

namespace htclt {

namespace {

const std::map<std::string, std::set<std::string>> kSchema = {
    {"run", {"seed", "threads", "out"}},
    {"ensemble", {"family", "alpha", "p", "atoms", "entry_law", "recenter", "diagonal"}},
    {"experiment",
     {"dims", "replicas", "statistic", "orders", "points", "function", "bootstrap",
      "gaussianity_bootstrap", "normalization"}},
    {"solver",
     {"z", "damping", "tol", "max_iterations", "ladder_start", "panels", "order", "t_max_factor",
      "t_min", "grid_points", "density_eta", "density_x_min", "density_x_max",
      "density_points"}},
    {"covariance", {"u_order", "estimate_u_error", "h_rel", "panels", "order", "tol"}},
    {"verify", {"criteria", "long_running"}},
};

double to_double(const std::string& s, const std::string& what) {
  const std::string t = boost::algorithm::trim_copy(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("cannot read '" + s + "' as a number (" + what + ")");
  return v;
}

template <typename Int>
Int to_int(const std::string& s, const std::string& what) {
  const std::string t = boost::algorithm::trim_copy(s);
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("cannot read '" + s + "' as an integer (" + what + ")");
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, text, boost::is_any_of(",;"));
  std::vector<std::string> out;
  for (auto& p : parts) {
    boost::algorithm::trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

}  // namespace

cplx parse_complex(const std::string& text) {
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
  if (s.empty()) throw ConfigError("empty complex number");
  if (s.back() != 'i' && s.back() != 'j') return to_double(s, "complex");
  s.pop_back();
  // split at the last sign that is not a leading sign or an exponent sign
  std::size_t cut = std::string::npos;
  for (std::size_t i = s.size(); i-- > 1;) {
    if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
      cut = i;
      break;
    }
  }
  const std::string re = cut == std::string::npos ? "" : s.substr(0, cut);
  std::string im = cut == std::string::npos ? s : s.substr(cut);
  if (im.empty() || im == "+") im = "1";
  if (im == "-") im = "-1";
  if (im.front() == '+') im.erase(0, 1);
  return {re.empty() ? 0.0 : to_double(re, text), to_double(im, text)};
}

std::vector<cplx> parse_complex_list(const std::string& text) {
  std::vector<cplx> out;
  for (const auto& p : split_list(text)) out.push_back(parse_complex(p));
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& p : split_list(text)) out.push_back(to_int<int>(p, text));
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& p : split_list(text)) out.push_back(to_double(p, text));
  return out;
}

std::vector<Atom> parse_atoms(const std::string& text) {
  std::vector<Atom> out;
  for (const auto& p : split_list(text)) {
    const auto colon = p.find(':');
    if (colon == std::string::npos) throw ConfigError("atom '" + p + "' is not of the form x:w");
    out.push_back({to_double(p.substr(0, colon), p), to_double(p.substr(colon + 1), p)});
  }
  return out;
}

AppConfig AppConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str(), path);
}

AppConfig AppConfig::parse(const std::string& text, const std::string& origin) {
  AppConfig c;
  c.origin_ = origin;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, c.tree_);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  c.check_keys();
  return c;
}

void AppConfig::check_keys() const {
  for (const auto& [section, body] : tree_) {
    const auto it = kSchema.find(section);
    if (it == kSchema.end()) {
      if (body.empty() && !body.data().empty())
        throw ConfigError(origin_ + ": key '" + section + "' must live in a section");
      throw ConfigError(origin_ + ": unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body)
      if (!it->second.count(key))
        throw ConfigError(origin_ + ": unknown key '" + key + "' in [" + section + "]");
  }
}

bool AppConfig::has(const std::string& key) const {
  return static_cast<bool>(tree_.get_optional<std::string>(key));
}

std::string AppConfig::get(const std::string& key, const std::string& fallback) const {
  return tree_.get<std::string>(key, fallback);
}

std::string AppConfig::require(const std::string& key) const {
  const auto v = tree_.get_optional<std::string>(key);
  if (!v) throw ConfigError(origin_ + ": missing required key '" + key + "'");
  return *v;
}

double AppConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? to_double(get(key, ""), key) : fallback;
}

int AppConfig::get_int(const std::string& key, int fallback) const {
  return has(key) ? to_int<int>(get(key, ""), key) : fallback;
}

std::uint64_t AppConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? to_int<std::uint64_t>(get(key, ""), key) : fallback;
}

bool AppConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(get(key, "")));
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError(origin_ + ": '" + key + "' must be true or false");
}

void AppConfig::set(const std::string& key, const std::string& value) { tree_.put(key, value); }

EnsembleSpec AppConfig::ensemble() const {
  EnsembleSpec s;
  s.family = family_from_string(require("ensemble.family"));
  s.alpha = get_double("ensemble.alpha", s.alpha);
  s.p = get_double("ensemble.p", s.p);
  if (has("ensemble.atoms")) s.moment_measure = parse_atoms(get("ensemble.atoms", ""));
  const std::string law = get("ensemble.entry_law", "rademacher");
  if (law == "rademacher")
    s.entry_law = EntryLaw::Rademacher;
  else if (law == "gaussian")
    s.entry_law = EntryLaw::Gaussian;
  else
    throw ConfigError("entry_law must be rademacher or gaussian");
  s.recenter = get_bool("ensemble.recenter", true);
  const std::string diag = get("ensemble.diagonal", "same");
  if (diag == "same")
    s.diagonal = DiagonalPolicy::SameLaw;
  else if (diag == "zero")
    s.diagonal = DiagonalPolicy::Zero;
  else
    throw ConfigError("diagonal must be same or zero");
  s.validate();
  return s;
}

ExperimentConfig AppConfig::experiment() const {
  ExperimentConfig cfg;
  cfg.ensemble = ensemble();
  cfg.dims = parse_int_list(require("experiment.dims"));
  cfg.replicas = get_int("experiment.replicas", 2);
  const std::string stat = get("experiment.statistic", "moment");
  if (stat == "moment")
    cfg.statistic = Statistic::moments(parse_int_list(require("experiment.orders")));
  else if (stat == "resolvent")
    cfg.statistic = Statistic::resolvent(parse_complex_list(require("experiment.points")));
  else if (stat == "function")
    cfg.statistic = Statistic::function(require("experiment.function"));
  else
    throw ConfigError("statistic must be moment, resolvent or function");
  cfg.base_seed = seed();
  cfg.threads = threads();
  cfg.output_dir = get("run.out", "");
  cfg.validate();
  return cfg;
}

SolverOptions AppConfig::solver() const {
  SolverOptions o;
  o.damping = get_double("solver.damping", o.damping);
  o.tol = get_double("solver.tol", o.tol);
  o.max_iterations = get_int("solver.max_iterations", o.max_iterations);
  o.ladder_start = get_double("solver.ladder_start", o.ladder_start);
  o.panels = get_int("solver.panels", o.panels);
  o.order = get_int("solver.order", o.order);
  o.t_max_factor = get_double("solver.t_max_factor", o.t_max_factor);
  o.t_min = get_double("solver.t_min", o.t_min);
  o.grid_points = get_int("solver.grid_points", o.grid_points);
  if (!(o.tol > 0.0)) throw ConfigError("solver.tol must be positive");
  if (o.panels < 1 || o.order < 2) throw ConfigError("solver quadrature must have nodes");
  if (o.grid_points < 2) throw ConfigError("solver.grid_points must be at least 2");
  return o;
}

CovarianceOptions AppConfig::covariance() const {
  CovarianceOptions o;
  o.u_order = get_int("covariance.u_order", o.u_order);
  o.estimate_u_error = get_bool("covariance.estimate_u_error", o.estimate_u_error);
  o.h_rel = get_double("covariance.h_rel", o.h_rel);
  o.solver.panels = get_int("covariance.panels", o.solver.panels);
  o.solver.order = get_int("covariance.order", o.solver.order);
  o.solver.tol = get_double("covariance.tol", o.solver.tol);
  if (o.u_order < 1) throw ConfigError("covariance.u_order must be positive");
  return o;
}

std::string AppConfig::snapshot() const {
  std::vector<std::string> lines;
  for (const auto& [section, body] : tree_)
    for (const auto& [key, value] : body) lines.push_back(section + "." + key + "=" + value.data());
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

}  // namespace htclt

#include "klgauss/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <variant>

namespace klgauss {

namespace {

using C = ExperimentConfig;
using Field = std::variant<std::uint64_t C::*, std::string C::*, double C::*, int C::*, long C::*,
                           std::vector<double> C::*>;

struct Entry {
  const char* section;
  const char* key;
  Field field;
};

const Entry kEntries[] = {
    {"run", "seed", &C::seed},
    {"problem", "kind", &C::problem},
    {"problem", "epsilon", &C::epsilon},
    {"problem", "gamma_obs", &C::gamma_obs},
    {"problem", "delta", &C::delta},
    {"problem", "grid_points", &C::grid_points},
    {"problem", "obs_points", &C::obs_points},
    {"problem", "p_minus", &C::p_minus},
    {"problem", "p_plus", &C::p_plus},
    {"problem", "truth_amplitude", &C::truth_amplitude},
    {"approximation", "kind", &C::param},
    {"approximation", "rank", &C::rank},
    {"approximation", "alpha", &C::alpha},
    {"approximation", "initial_sigma", &C::initial_sigma},
    {"approximation", "initial_potential", &C::initial_potential},
    {"approximation", "right_value", &C::right_value},
    {"optimizer", "iterations", &C::iterations},
    {"optimizer", "samples", &C::samples},
    {"optimizer", "a0", &C::a0},
    {"optimizer", "gamma_exp", &C::gamma_exp},
    {"optimizer", "mean_lo", &C::mean_lo},
    {"optimizer", "mean_hi", &C::mean_hi},
    {"optimizer", "spectrum_lo", &C::spectrum_lo},
    {"optimizer", "spectrum_hi", &C::spectrum_hi},
    {"optimizer", "snapshot_every", &C::snapshot_every},
    {"optimizer", "sampler", &C::sampler},
    {"chain", "beta", &C::beta},
    {"chain", "steps", &C::steps},
    {"chain", "burn_in", &C::burn_in},
    {"chain", "probe", &C::probe},
    {"chain", "max_lag", &C::max_lag},
    {"chain", "record_every", &C::record_every},
    {"chain", "thinning", &C::thinning},
};

const std::array<const char*, 5> kSections{"run", "problem", "approximation", "optimizer", "chain"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ConfigError(where + ": cannot parse '" + text + "'");
  return value;
}

void assign(C& cfg, const Field& field, const std::string& text, const std::string& where) {
  std::visit(
      [&](auto member) {
        using T = std::decay_t<decltype(cfg.*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          if (text.empty()) throw ConfigError(where + ": empty value");
          cfg.*member = text;
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
          std::vector<double> out;
          std::stringstream ss(text);
          std::string item;
          while (std::getline(ss, item, ',')) out.push_back(parse_number<double>(trim(item), where));
          if (out.empty()) throw ConfigError(where + ": empty list");
          cfg.*member = out;
        } else {
          cfg.*member = parse_number<T>(text, where);
        }
      },
      field);
}

std::string render(const C& cfg, const Field& field) {
  return std::visit(
      [&](auto member) -> std::string {
        using T = std::decay_t<decltype(cfg.*member)>;
        const T& v = cfg.*member;
        if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
          std::string out;
          for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
          return out;
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else {
          return std::to_string(v);
        }
      },
      field);
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (std::find_if(kSections.begin(), kSections.end(), [&](const char* s) { return section == s; }) ==
          kSections.end())
        throw ConfigError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    if (section.empty()) throw ConfigError(where + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = std::find_if(std::begin(kEntries), std::end(kEntries),
                                 [&](const Entry& e) { return section == e.section && key == e.key; });
    if (it == std::end(kEntries)) throw ConfigError(where + ": unknown key '" + key + "' in [" + section + "]");
    const std::string full = section + "." + key;
    if (!seen.insert(full).second) throw ConfigError(where + ": duplicate key '" + full + "'");
    assign(cfg, it->field, value, full);
  }
  return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const char* section : kSections) {
    if (!out.empty()) out += "\n";
    out += "[" + std::string(section) + "]\n";
    for (const Entry& e : kEntries)
      if (std::string(e.section) == section) out += std::string(e.key) + " = " + render(cfg, e.field) + "\n";
  }
  return out;
}

void validate(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& field, const std::string& why) { throw ConfigError(field + ": " + why); };
  if (cfg.problem != "scalar" && cfg.problem != "darcy" && cfg.problem != "diffusion")
    fail("problem.kind", "must be scalar, darcy or diffusion");
  const std::map<std::string, std::string> expected{
      {"scalar", "scalar-variance"}, {"darcy", "finite-rank"}, {"diffusion", "constant-potential|variable-potential"}};
  const bool param_ok = (cfg.problem == "scalar" && cfg.param == "scalar-variance") ||
                        (cfg.problem == "darcy" && cfg.param == "finite-rank") ||
                        (cfg.problem == "diffusion" &&
                         (cfg.param == "constant-potential" || cfg.param == "variable-potential"));
  if (!param_ok) fail("approximation.kind", "must be " + expected.at(cfg.problem) + " for " + cfg.problem);
  if (!(cfg.epsilon > 0.0)) fail("problem.epsilon", "must be positive");
  if (!(cfg.gamma_obs > 0.0)) fail("problem.gamma_obs", "must be positive");
  if (!(cfg.delta > 0.0)) fail("problem.delta", "must be positive");
  if (cfg.grid_points < 2) fail("problem.grid_points", "must be >= 2");
  for (double x : cfg.obs_points)
    if (!(x > 0.0 && x < 1.0)) fail("problem.obs_points", "must lie in (0,1)");
  if (cfg.rank < 1) fail("approximation.rank", "must be >= 1");
  if (cfg.problem == "darcy" && 2 * cfg.rank > 2 * ((cfg.grid_points - 1) / 2) - 2)
    fail("approximation.rank", "too large for the grid");
  if (!(cfg.alpha >= 0.0)) fail("approximation.alpha", "must be >= 0");
  if (cfg.param == "variable-potential" && !(cfg.alpha > 0.0)) fail("approximation.alpha", "must be > 0 for b(t)");
  if (!(cfg.initial_sigma > 0.0)) fail("approximation.initial_sigma", "must be positive");
  if (!(cfg.initial_potential > 0.0)) fail("approximation.initial_potential", "must be positive");
  if (cfg.iterations < 1) fail("optimizer.iterations", "must be >= 1");
  if (cfg.samples < 2) fail("optimizer.samples", "must be >= 2");
  if (!(cfg.a0 > 0.0)) fail("optimizer.a0", "must be positive");
  if (!(cfg.gamma_exp > 0.5 && cfg.gamma_exp <= 1.0)) fail("optimizer.gamma_exp", "must lie in (1/2, 1]");
  if (!(cfg.mean_lo < cfg.mean_hi)) fail("optimizer.mean_lo", "must be below mean_hi");
  if (!(cfg.spectrum_lo > 0.0 && cfg.spectrum_lo < cfg.spectrum_hi))
    fail("optimizer.spectrum_lo", "must satisfy 0 < spectrum_lo < spectrum_hi");
  if (cfg.snapshot_every < 1) fail("optimizer.snapshot_every", "must be >= 1");
  if (cfg.sampler != "ou-bridge" && cfg.sampler != "exact") fail("optimizer.sampler", "must be ou-bridge or exact");
  if (!(cfg.beta > 0.0 && cfg.beta <= 1.0)) fail("chain.beta", "must lie in (0, 1]");
  if (cfg.steps < 2) fail("chain.steps", "must be >= 2");
  if (!(cfg.burn_in >= 0.0 && cfg.burn_in < 1.0)) fail("chain.burn_in", "must lie in [0, 1)");
  if (cfg.max_lag < 0) fail("chain.max_lag", "must be >= 0");
  if (cfg.record_every < 1) fail("chain.record_every", "must be >= 1");
  if (cfg.thinning < 1) fail("chain.thinning", "must be >= 1");
}

std::vector<std::string> preset_names() {
  return {"scalar", "darcy-g0.1", "darcy-g0.01", "diffusion-constB", "diffusion-varB"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  if (name == "scalar") return c;
  if (name == "darcy-g0.1" || name == "darcy-g0.01") {
    c.problem = "darcy";
    c.gamma_obs = name == "darcy-g0.1" ? 0.1 : 0.01;
    c.param = "finite-rank";
    c.rank = 2;
    c.mean_lo = -5.0;
    c.mean_hi = 5.0;
    c.spectrum_lo = 1e-4;
    c.spectrum_hi = 1.0;
    c.beta = 0.6;
    return c;
  }
  if (name == "diffusion-constB" || name == "diffusion-varB") {
    c.problem = "diffusion";
    c.epsilon = 0.05;
    c.grid_points = 99;
    c.a0 = 2.0;
    c.mean_lo = 0.0;
    c.mean_hi = 1.5;
    c.spectrum_lo = 1e-3;
    c.spectrum_hi = 10.0;
    c.beta = 0.6;
    if (name == "diffusion-constB") {
      c.param = "constant-potential";
      c.initial_potential = 1.0;
    } else {
      c.param = "variable-potential";
      c.initial_potential = 2.0;
      c.sampler = "exact";
    }
    return c;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

void apply_paper_scale(ExperimentConfig& cfg) {
  cfg.iterations = 100000;
  cfg.steps = 1000000;
}

}  // namespace klgauss

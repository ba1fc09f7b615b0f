#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "fdw/errors.hpp"
#include "fdw/io.hpp"

namespace fdw {

Potential PotentialSpec::build() const {
  if (!samples.empty()) return Potential(samples);
  return Potential::from_cosine(cosine, intervals);
}

ModelParams ExperimentConfig::params() const { return {model.alpha, model.potential.build(), robin()}; }

std::vector<double> ExperimentConfig::time_grid() const {
  const auto n = static_cast<std::size_t>(grid.t_points);
  switch (grid.spacing) {
    case Spacing::log:
      return logspace(grid.t_min, grid.t_end, n);
    case Spacing::linear:
      return linspace(grid.t_min, grid.t_end, n);
    case Spacing::graded:
      break;
  }
  // t_k = t_end (k/n)^2, k = 1..n, for the source problem
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = static_cast<double>(k + 1) / static_cast<double>(n);
    t[k] = grid.t_end * s * s;
  }
  return t;
}

FitOptions ExperimentConfig::fit_options() const {
  FitOptions opt;
  opt.modes = fit.modes;
  opt.alpha_lo = fit.alpha_lo;
  opt.alpha_hi = fit.alpha_hi;
  opt.alpha_step = fit.alpha_step;
  return opt;
}

namespace {

std::vector<double> padded(std::vector<double> c, std::size_t n) {
  c.resize(n, 0.0);
  return c;
}

}  // namespace

InitialData ExperimentConfig::initial_data(const Spectrum& spec) const {
  InitialData d = InitialData::from_modes(spec, padded(data.modes, spec.size()));
  if (model.alpha > 1.0) d.a0 = InitialData::from_modes(spec, padded(data.velocity_modes, spec.size())).a;
  return d;
}

SourceSpec ExperimentConfig::source(const Spectrum& spec) const {
  SourceSpec src;
  src.g = InitialData::from_modes(spec, padded(data.modes, spec.size())).a;
  src.theta_times = linspace(0.0, grid.t_end, 2001);
  for (double t : src.theta_times) {
    double v = 0.0;
    for (auto c = data.theta.rbegin(); c != data.theta.rend(); ++c) v = v * t + *c;
    src.theta_values.push_back(v);
  }
  return src;
}

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

struct Bad {
  std::string message;
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
    throw Bad{"expected a finite number, got '" + std::string(s) + "'"};
  return v;
}

template <class Int>
Int to_integer(std::string_view s) {
  Int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw Bad{"expected an integer, got '" + std::string(s) + "'"};
  return v;
}

std::vector<double> to_list(std::string_view s) {
  std::vector<double> out;
  while (!(s = trim(s)).empty()) {
    const auto end = s.find_first_of(" \t");
    out.push_back(to_double(s.substr(0, end)));
    if (end == std::string_view::npos) break;
    s.remove_prefix(end);
  }
  return out;
}

std::string from_list(const std::vector<double>& v) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : " ") + format_double(x);
  return out;
}

// One entry per key; parsing and rendering share the table so that the two
// stay inverse to each other.
struct Key {
  std::string_view section;
  std::string_view name;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Key real(std::string_view section, std::string_view name, T ExperimentConfig::*block, double T::*field) {
  return {section, name, [=](ExperimentConfig& c, std::string_view v) { c.*block.*field = to_double(v); },
          [=](const ExperimentConfig& c) { return format_double(c.*block.*field); }};
}

template <class T, class Int>
Key integer(std::string_view section, std::string_view name, T ExperimentConfig::*block, Int T::*field) {
  return {section, name, [=](ExperimentConfig& c, std::string_view v) { c.*block.*field = to_integer<Int>(v); },
          [=](const ExperimentConfig& c) { return std::to_string(c.*block.*field); }};
}

template <class T>
Key list(std::string_view section, std::string_view name, T ExperimentConfig::*block,
         std::vector<double> T::*field) {
  return {section, name, [=](ExperimentConfig& c, std::string_view v) { c.*block.*field = to_list(v); },
          [=](const ExperimentConfig& c) { return from_list(c.*block.*field); }};
}

template <class T, class E>
Key choice(std::string_view section, std::string_view name, T ExperimentConfig::*block, E T::*field,
           std::vector<std::pair<std::string_view, E>> options) {
  return {section, name,
          [=](ExperimentConfig& c, std::string_view v) {
            for (const auto& [text, value] : options)
              if (text == v) {
                c.*block.*field = value;
                return;
              }
            std::string allowed;
            for (const auto& o : options) allowed += (allowed.empty() ? "" : ", ") + std::string(o.first);
            throw Bad{"expected one of " + allowed + ", got '" + std::string(v) + "'"};
          },
          [=](const ExperimentConfig& c) {
            for (const auto& [text, value] : options)
              if (value == c.*block.*field) return std::string(text);
            return std::string();
          }};
}

using C = ExperimentConfig;

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back({"run", "scenario", [](C& c, std::string_view v) { c.scenario = std::string(v); },
                 [](const C& c) { return c.scenario; }});
    k.push_back(real("model", "alpha", &C::model, &C::Model::alpha));
    k.push_back(real("model", "h", &C::model, &C::Model::h));
    k.push_back(real("model", "H", &C::model, &C::Model::H));
    k.push_back({"model", "potential_cosine",
                 [](C& c, std::string_view v) { c.model.potential.cosine = to_list(v); },
                 [](const C& c) { return from_list(c.model.potential.cosine); }});
    k.push_back({"model", "potential_samples",
                 [](C& c, std::string_view v) { c.model.potential.samples = to_list(v); },
                 [](const C& c) { return from_list(c.model.potential.samples); }});
    k.push_back({"model", "potential_intervals",
                 [](C& c, std::string_view v) { c.model.potential.intervals = to_integer<int>(v); },
                 [](const C& c) { return std::to_string(c.model.potential.intervals); }});
    k.push_back(choice("data", "kind", &C::data, &C::Data::kind,
                                 {{"initial", DataKind::initial}, {"source", DataKind::source}}));
    k.push_back(list("data", "modes", &C::data, &C::Data::modes));
    k.push_back(list("data", "velocity_modes", &C::data, &C::Data::velocity_modes));
    k.push_back(list("data", "theta", &C::data, &C::Data::theta));
    k.push_back(integer("grid", "x_cells", &C::grid, &C::Grid::x_cells));
    k.push_back(real("grid", "t_min", &C::grid, &C::Grid::t_min));
    k.push_back(real("grid", "t_end", &C::grid, &C::Grid::t_end));
    k.push_back(integer("grid", "t_points", &C::grid, &C::Grid::t_points));
    k.push_back(choice("grid", "spacing", &C::grid, &C::Grid::spacing,
                                {{"log", Spacing::log}, {"linear", Spacing::linear}, {"graded", Spacing::graded}}));
    k.push_back(integer("grid", "series_modes", &C::grid, &C::Grid::series_modes));
    k.push_back(integer("fit", "modes", &C::fit, &C::Fit::modes));
    k.push_back(real("fit", "alpha_lo", &C::fit, &C::Fit::alpha_lo));
    k.push_back(real("fit", "alpha_hi", &C::fit, &C::Fit::alpha_hi));
    k.push_back(real("fit", "alpha_step", &C::fit, &C::Fit::alpha_step));
    k.push_back(integer("fit", "basis", &C::fit, &C::Fit::basis));
    k.push_back(real("noise", "level", &C::noise, &C::Noise::level));
    k.push_back(integer("noise", "seed", &C::noise, &C::Noise::seed));
    k.push_back({"kernel", "q_cosine", [](C& c, std::string_view v) { c.kernel.q.cosine = to_list(v); },
                 [](const C& c) { return from_list(c.kernel.q.cosine); }});
    k.push_back({"kernel", "q_samples", [](C& c, std::string_view v) { c.kernel.q.samples = to_list(v); },
                 [](const C& c) { return from_list(c.kernel.q.samples); }});
    k.push_back({"kernel", "q_intervals", [](C& c, std::string_view v) { c.kernel.q.intervals = to_integer<int>(v); },
                 [](const C& c) { return std::to_string(c.kernel.q.intervals); }});
    k.push_back(real("kernel", "j", &C::kernel, &C::KernelSystem::j));
    k.push_back(integer("kernel", "mesh", &C::kernel, &C::KernelSystem::mesh));
    k.push_back(integer("kernel", "modes", &C::kernel, &C::KernelSystem::modes));
    k.push_back(list("sweep", "values", &C::sweep, &C::Sweep::values));
    return k;
  }();
  return table;
}

const std::set<std::string_view>& scenarios() {
  static const std::set<std::string_view> names{"forward",     "spectrum",     "kernel",
                                                "invert",      "order-sweep",  "robin-sweep",
                                                "noise-sweep", "theorem2-loop", "multi-input-union",
                                                "ml-table"};
  return names;
}

// Range checks; `at` maps a key to the line it was set on (0 if defaulted).
void validate(const ExperimentConfig& c, const std::map<std::string, int>& at, std::vector<std::string>& issues) {
  auto check = [&](bool ok, const std::string& key, const std::string& message) {
    if (ok) return;
    const auto it = at.find(key);
    issues.push_back(it == at.end() ? "default " + key + ": " + message
                                    : "line " + std::to_string(it->second) + ": " + message);
  };
  check(scenarios().contains(c.scenario), "run.scenario", "unknown scenario '" + c.scenario + "'");
  check(c.model.alpha > 0.0 && c.model.alpha < 2.0, "model.alpha", "alpha must lie in (0,2)");
  check(c.model.h > 0.0, "model.h", "h must be positive");
  check(c.model.H > 0.0, "model.H", "H must be positive");
  auto check_potential = [&](const PotentialSpec& p, const std::string& prefix) {
    const std::string cos_key = prefix + (prefix == "model." ? "potential_cosine" : "q_cosine");
    const std::string samples_key = prefix + (prefix == "model." ? "potential_samples" : "q_samples");
    const std::string n_key = prefix + (prefix == "model." ? "potential_intervals" : "q_intervals");
    check(p.samples.empty() || p.samples.size() >= 9, samples_key, "a potential needs at least 9 samples");
    check(p.intervals >= 8, n_key, "potential intervals must be at least 8");
    if (p.intervals < 8 || (!p.samples.empty() && p.samples.size() < 9)) return;
    try {
      p.build();
    } catch (const Error& e) {
      check(false, p.samples.empty() ? cos_key : samples_key, e.what());
    }
  };
  check_potential(c.model.potential, "model.");
  check_potential(c.kernel.q, "kernel.");
  check(!c.data.modes.empty(), "data.modes", "modes must list at least one coefficient");
  check(c.data.velocity_modes.empty() || c.model.alpha > 1.0, "data.velocity_modes",
        "velocity_modes requires alpha > 1");
  check(c.data.kind == DataKind::initial || !c.data.theta.empty(), "data.theta",
        "a source needs theta coefficients");
  check(c.grid.x_cells >= 8, "grid.x_cells", "x_cells must be at least 8");
  check(c.grid.t_end > 0.0, "grid.t_end", "t_end must be positive");
  check(c.grid.t_min > 0.0 && c.grid.t_min < c.grid.t_end, "grid.t_min", "t_min must lie in (0, t_end)");
  check(c.grid.t_points >= 2, "grid.t_points", "t_points must be at least 2");
  check(c.grid.series_modes >= 1, "grid.series_modes", "series_modes must be at least 1");
  check(c.fit.modes >= 1 && c.fit.modes <= 8, "fit.modes", "fit modes must lie in 1..8");
  check(c.fit.alpha_lo > 0.0 && c.fit.alpha_lo < 2.0, "fit.alpha_lo", "alpha_lo must lie in (0,2)");
  check(c.fit.alpha_hi > c.fit.alpha_lo && c.fit.alpha_hi < 2.0, "fit.alpha_hi",
        "alpha_hi must lie in (alpha_lo, 2)");
  check(c.fit.alpha_step > 0.0, "fit.alpha_step", "alpha_step must be positive");
  check(c.fit.basis >= 1, "fit.basis", "basis must be at least 1");
  check(c.noise.level >= 0.0, "noise.level", "noise level must be nonnegative");
  check(c.kernel.j > 0.0, "kernel.j", "j must be positive");
  check(c.kernel.mesh >= 16, "kernel.mesh", "kernel mesh must be at least 16");
  check(c.kernel.modes >= 1, "kernel.modes", "kernel modes must be at least 1");
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::vector<std::string> issues;
  std::map<std::string, int> at;
  std::set<std::string_view> sections;
  for (const auto& k : keys()) sections.insert(k.section);

  std::string section;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";

    if (line.front() == '[') {
      if (line.back() != ']') {
        issues.push_back(where + "unterminated section header");
        continue;
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!sections.contains(section)) issues.push_back(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      issues.push_back(where + "expected 'key = value'");
      continue;
    }
    const std::string name(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (section.empty()) {
      issues.push_back(where + "key '" + name + "' outside any section");
      continue;
    }
    const auto key = std::find_if(keys().begin(), keys().end(),
                                  [&](const Key& k) { return k.section == section && k.name == name; });
    if (key == keys().end()) {
      if (sections.contains(section)) issues.push_back(where + "unknown key '" + name + "' in [" + section + "]");
      continue;
    }
    const std::string full = section + "." + name;
    if (!at.emplace(full, line_no).second) {
      issues.push_back(where + "duplicate key '" + name + "'");
      continue;
    }
    try {
      key->set(c, value);
    } catch (const Bad& e) {
      issues.push_back(where + name + ": " + e.message);
    }
  }
  if (issues.empty()) validate(c, at, issues);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string render_config(const ExperimentConfig& config) {
  std::string out;
  std::string_view section;
  for (const auto& k : keys()) {
    if (k.section != section) {
      if (!section.empty()) out += '\n';
      section = k.section;
      out += "[" + std::string(section) + "]\n";
    }
    out += std::string(k.name) + " = " + k.get(config) + "\n";
  }
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : render_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fdw

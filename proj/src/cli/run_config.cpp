#include "rwk/run_config.hpp"

#include <fmt/format.h>

#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "rwk/error.hpp"
#include "rwk/io.hpp"

namespace rwk {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size() && std::isfinite(out)) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError(fmt::format("{}: '{}' is not a finite number", key, v));
}

long long to_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long out = std::stoll(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError(fmt::format("{}: '{}' is not an integer", key, v));
}

int to_int(const std::string& key, const std::string& v) {
  const long long x = to_integer(key, v);
  if (x < -2147483647LL || x > 2147483647LL) throw ConfigError(fmt::format("{}: {} out of range", key, v));
  return static_cast<int>(x);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt::format("{}", v[i]);
  return out;
}

struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

Field real(const char* section, const char* key, double RunConfig::*member) {
  return {section, key, [member](const RunConfig& c) { return fmt::format("{}", c.*member); },
          [member, key](RunConfig& c, const std::string& v) { c.*member = to_double(key, v); }};
}

Field solver_real(const char* key, double SolverConfig::*member) {
  return {"solver", key, [member](const RunConfig& c) { return fmt::format("{}", c.solver.*member); },
          [member, key](RunConfig& c, const std::string& v) { c.solver.*member = to_double(key, v); }};
}

Field solver_int(const char* key, int SolverConfig::*member) {
  return {"solver", key, [member](const RunConfig& c) { return fmt::format("{}", c.solver.*member); },
          [member, key](RunConfig& c, const std::string& v) { c.solver.*member = to_int(key, v); }};
}

Field integer(const char* section, const char* key, int RunConfig::*member) {
  return {section, key, [member](const RunConfig& c) { return fmt::format("{}", c.*member); },
          [member, key](RunConfig& c, const std::string& v) { c.*member = to_int(key, v); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"dataset", "path", [](const RunConfig& c) { return c.dataset_path.string(); },
       [](RunConfig& c, const std::string& v) { c.dataset_path = v; }},
      {"dataset", "name", [](const RunConfig& c) { return c.dataset_name; },
       [](RunConfig& c, const std::string& v) { c.dataset_name = v; }},
      {"features", "mode", [](const RunConfig& c) { return to_string(c.feature_mode); },
       [](RunConfig& c, const std::string& v) { c.feature_mode = parse_feature_mode(v); }},
      integer("features", "wl_iterations", &RunConfig::wl_iterations),
      {"features", "hops", [](const RunConfig& c) { return fmt::format("{}", c.embedding.hops); },
       [](RunConfig& c, const std::string& v) { c.embedding.hops = to_int("hops", v); }},
      {"embedding", "dim", [](const RunConfig& c) { return fmt::format("{}", c.embedding.dim); },
       [](RunConfig& c, const std::string& v) { c.embedding.dim = to_int("dim", v); }},
      {"embedding", "time", [](const RunConfig& c) { return fmt::format("{}", c.embedding.time); },
       [](RunConfig& c, const std::string& v) { c.embedding.time = to_double("time", v); }},
      {"embedding", "pairwise", [](const RunConfig& c) { return to_string(c.embedding.pairwise); },
       [](RunConfig& c, const std::string& v) { c.embedding.pairwise = parse_pairwise_mode(v); }},
      solver_real("beta1", &SolverConfig::beta1),
      solver_real("beta2", &SolverConfig::beta2),
      solver_real("lambda_mu", &SolverConfig::lambda_mu),
      solver_real("lambda_nu", &SolverConfig::lambda_nu),
      solver_real("rho", &SolverConfig::rho),
      solver_real("lambda_g", &SolverConfig::lambda_g),
      solver_real("sinkhorn_lambda", &SolverConfig::sinkhorn_lambda),
      solver_int("sinkhorn_iters", &SolverConfig::sinkhorn_iters),
      solver_int("max_iters", &SolverConfig::max_iters),
      solver_real("epsilon", &SolverConfig::epsilon),
      solver_real("alpha0", &SolverConfig::alpha0),
      solver_real("log_floor", &SolverConfig::log_floor),
      real("kernel", "eta", &RunConfig::eta),
      {"kernel", "repair", [](const RunConfig& c) { return to_string(c.repair); },
       [](RunConfig& c, const std::string& v) { c.repair = parse_repair_mode(v); }},
      {"kernel", "eta_grid", [](const RunConfig& c) { return join_doubles(c.eta_grid); },
       [](RunConfig& c, const std::string& v) {
         c.eta_grid.clear();
         for (const auto& item : split_list(v)) c.eta_grid.push_back(to_double("eta_grid", item));
       }},
      {"kernel", "repair_grid",
       [](const RunConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.repair_grid.size(); ++i) out += (i ? ", " : "") + to_string(c.repair_grid[i]);
         return out;
       },
       [](RunConfig& c, const std::string& v) {
         c.repair_grid.clear();
         for (const auto& item : split_list(v)) c.repair_grid.push_back(parse_repair_mode(item));
       }},
      {"classify", "c_grid", [](const RunConfig& c) { return join_doubles(c.c_grid); },
       [](RunConfig& c, const std::string& v) {
         c.c_grid.clear();
         for (const auto& item : split_list(v)) c.c_grid.push_back(to_double("c_grid", item));
       }},
      integer("classify", "outer_folds", &RunConfig::outer_folds),
      integer("classify", "inner_folds", &RunConfig::inner_folds),
      {"classify", "seed", [](const RunConfig& c) { return fmt::format("{}", c.seed); },
       [](RunConfig& c, const std::string& v) {
         const long long s = to_integer("seed", v);
         if (s < 0) throw ConfigError("seed must be nonnegative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"run", "out", [](const RunConfig& c) { return c.out_dir.string(); },
       [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
      integer("run", "workers", &RunConfig::workers),
  };
  return table;
}

std::string section_text(const RunConfig& config, const std::vector<std::string>& sections,
                         const std::vector<std::string>& skip_keys) {
  std::string out;
  for (const auto& f : fields()) {
    if (std::find(sections.begin(), sections.end(), f.section) == sections.end()) continue;
    const std::string qualified = std::string(f.section) + "." + f.key;
    if (std::find(skip_keys.begin(), skip_keys.end(), qualified) != skip_keys.end()) continue;
    out += qualified + "=" + f.get(config) + "\n";
  }
  return out;
}

}  // namespace

FeatureMode parse_feature_mode(const std::string& name) {
  if (name == "wl") return FeatureMode::wl;
  if (name == "continuous") return FeatureMode::continuous;
  throw ConfigError(fmt::format("unknown feature mode '{}'", name));
}

std::string to_string(FeatureMode mode) { return mode == FeatureMode::wl ? "wl" : "continuous"; }

RunConfig::RunConfig() {
  for (int e = -5; e <= 5; ++e) eta_grid.push_back(std::ldexp(1.0, e));
  repair_grid = {RepairMode::clip, RepairMode::flip};
  for (int e = -5; e <= 5; ++e) c_grid.push_back(std::pow(10.0, e));
}

bool RunConfig::operator==(const RunConfig&) const = default;

void RunConfig::validate() const {
  solver.validate();
  if (dataset_name.empty()) throw ConfigError("dataset name is empty");
  if (wl_iterations < 0 || wl_iterations > 10) throw ConfigError("wl_iterations must lie in [0, 10]");
  if (embedding.hops < 0 || embedding.hops > 4) throw ConfigError("hops must lie in [0, 4]");
  if (embedding.dim < 1) throw ConfigError("embedding dim must be positive");
  if (!(embedding.time > 0.0)) throw ConfigError("embedding time must be positive");
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  if (eta_grid.empty()) throw ConfigError("eta_grid is empty");
  for (const double e : eta_grid) {
    if (!(e > 0.0)) throw ConfigError("eta_grid entries must be positive");
  }
  if (repair_grid.empty()) throw ConfigError("repair_grid is empty");
  if (c_grid.empty()) throw ConfigError("c_grid is empty");
  for (const double c : c_grid) {
    if (!(c > 0.0)) throw ConfigError("c_grid entries must be positive");
  }
  if (outer_folds < 2 || inner_folds < 2) throw ConfigError("fold counts must be at least 2");
  if (workers < 1) throw ConfigError("workers must be positive");
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::map<std::string, const Field*> lookup;
  for (const auto& f : fields()) lookup[std::string(f.section) + "." + f.key] = &f;

  std::stringstream in(text);
  std::string line;
  std::string section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(fmt::format("line {}: malformed section header", number));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", number));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = lookup.find(section + "." + key);
    if (it == lookup.end()) {
      throw ConfigError(fmt::format("line {}: unknown key '{}' in section [{}]", number, key, section));
    }
    it->second->set(config, value);
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError(fmt::format("config file {} not found", path.string()));
  return parse_config(read_file(path));
}

std::string to_ini(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (section != f.section) {
      section = f.section;
      out += fmt::format("{}[{}]\n", out.empty() ? "" : "\n", section);
    }
    out += fmt::format("{} = {}\n", f.key, f.get(config));
  }
  return out;
}

std::string config_hash(const RunConfig& config) {
  return fnv1a_hex(section_text(config, {"dataset", "features", "embedding", "solver", "kernel"},
                                {"dataset.path", "kernel.eta_grid", "kernel.repair_grid"}));
}

std::string embedding_hash(const RunConfig& config) {
  return fnv1a_hex(section_text(config, {"dataset", "features", "embedding"}, {"dataset.path"}));
}

}  // namespace rwk

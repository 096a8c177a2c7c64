#include "phase_replace/config.hpp"

#include "phase_replace/minimizer.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace phase_replace {

namespace fs = std::filesystem;

const char* to_string(Command c) {
  switch (c) {
    case Command::VerifyLemma: return "verify-lemma";
    case Command::Minimize: return "minimize";
    case Command::CorollarySweep: return "corollary-sweep";
    case Command::PotentialCheck: return "potential-check";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Command parse_command(const std::string& s) {
  if (s == "verify-lemma") return Command::VerifyLemma;
  if (s == "minimize") return Command::Minimize;
  if (s == "corollary-sweep") return Command::CorollarySweep;
  if (s == "potential-check") return Command::PotentialCheck;
  throw ConfigError("command", "unknown command '" + s + "'");
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key, "cannot parse '" + v + "' as a number");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key, "cannot parse '" + v + "' as an integer");
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError(key, "expected a boolean, got '" + v + "'");
}

Pointd to_point(const std::string& key, const std::string& v) {
  const auto l = to_list(key, v);
  if (l.empty()) throw ConfigError(key, "expected a comma-separated point");
  return Eigen::Map<const Pointd>(l.data(), Index(l.size()));
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

struct Raw {
  std::optional<std::string> command;
  std::map<std::string, std::string> values;
};

void read_config_file(const fs::path& path, Raw& raw) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path.string() + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config", path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    raw.values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
}

Raw collect(const std::vector<std::string>& args) {
  Raw raw;
  std::optional<std::string> config_path;
  std::map<std::string, std::string> flags;
  for (size_t k = 0; k < args.size(); ++k) {
    const std::string& arg = args[k];
    if (arg.rfind("--", 0) != 0) {
      if (raw.command) throw ConfigError("command", "unexpected argument '" + arg + "'");
      raw.command = arg;
      continue;
    }
    const auto eq = arg.find('=');
    std::string key = arg.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
    if (key == "config") {
      if (eq != std::string::npos) {
        config_path = arg.substr(eq + 1);
      } else {
        if (k + 1 >= args.size()) throw ConfigError("config", "missing file name");
        config_path = args[++k];
      }
      continue;
    }
    if (eq == std::string::npos) throw ConfigError(key, "flags must be written --key=value");
    flags[key] = arg.substr(eq + 1);
  }
  if (config_path) read_config_file(*config_path, raw);
  for (auto& [k, v] : flags) raw.values[k] = v;
  if (auto it = raw.values.find("command"); it != raw.values.end()) {
    if (!raw.command) raw.command = it->second;
    raw.values.erase(it);
  }
  return raw;
}

}  // namespace

Grid2d RunConfig::make_grid() const {
  if (grid_kind == "strip") return Grid2d::strip(R, mu, h);
  return Grid2d::rectangle(nx, ny, hx, hy, x0, y0);
}

BoundarySpecd RunConfig::make_boundary() const {
  if (grid_kind != "strip") return BoundarySpecd::all_neumann();
  Pointd left = a;
  left(0) = 0;
  if (left_value) left = *left_value;
  return BoundarySpecd::strip(a, pin_left ? std::optional<Pointd>(left) : std::nullopt);
}

std::optional<fs::path> peek_output_dir(const std::vector<std::string>& args) {
  try {
    const Raw raw = collect(args);
    if (auto it = raw.values.find("out"); it != raw.values.end()) return fs::path(it->second);
  } catch (...) {
  }
  return std::nullopt;
}

RunConfig parse_config(const std::vector<std::string>& args) {
  const Raw raw = collect(args);
  RunConfig cfg;
  if (!raw.command) throw ConfigError("command", "missing command");
  cfg.command = parse_command(*raw.command);
  cfg.inputs = raw.values;

  std::optional<std::string> a_text, r0_text;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"potential", [&](auto&, auto& v) { cfg.potential_name = v; }},
      {"potential_params", [&](auto& k, auto& v) { cfg.potential_params = to_list(k, v); }},
      {"grid", [&](auto& k, auto& v) {
         require(v == "strip" || v == "rectangle", k, "expected strip or rectangle");
         cfg.grid_kind = v;
       }},
      {"R", [&](auto& k, auto& v) { cfg.R = to_double(k, v); }},
      {"mu", [&](auto& k, auto& v) { cfg.mu = to_double(k, v); }},
      {"h", [&](auto& k, auto& v) { cfg.h = to_double(k, v); }},
      {"nx", [&](auto& k, auto& v) { cfg.nx = to_int(k, v); }},
      {"ny", [&](auto& k, auto& v) { cfg.ny = to_int(k, v); }},
      {"hx", [&](auto& k, auto& v) { cfg.hx = to_double(k, v); }},
      {"hy", [&](auto& k, auto& v) { cfg.hy = to_double(k, v); }},
      {"x0", [&](auto& k, auto& v) { cfg.x0 = to_double(k, v); }},
      {"y0", [&](auto& k, auto& v) { cfg.y0 = to_double(k, v); }},
      {"a", [&](auto&, auto& v) { a_text = v; }},
      {"r", [&](auto& k, auto& v) { cfg.r = to_double(k, v); }},
      {"r0", [&](auto&, auto& v) { r0_text = v; }},
      {"dt", [&](auto& k, auto& v) { cfg.dt = to_double(k, v); }},
      {"max_steps", [&](auto& k, auto& v) { cfg.max_steps = to_int(k, v); }},
      {"tol", [&](auto& k, auto& v) { cfg.tol = to_double(k, v); }},
      {"record_every", [&](auto& k, auto& v) { cfg.record_every = to_int(k, v); }},
      {"L_W", [&](auto& k, auto& v) { cfg.curvature_bound = to_double(k, v); }},
      {"accel_period", [&](auto& k, auto& v) { cfg.accel_period = to_int(k, v); }},
      {"accel_r", [&](auto& k, auto& v) { cfg.accel_r = to_double(k, v); }},
      {"seed", [&](auto& k, auto& v) { cfg.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"seeds", [&](auto& k, auto& v) { cfg.seeds = to_int(k, v); }},
      {"noise", [&](auto& k, auto& v) { cfg.noise = to_double(k, v); }},
      {"pin_left", [&](auto& k, auto& v) { cfg.pin_left = to_bool(k, v); }},
      {"left_value", [&](auto& k, auto& v) { cfg.left_value = to_point(k, v); }},
      {"R_list", [&](auto& k, auto& v) { cfg.R_list = to_list(k, v); }},
      {"n_dirs", [&](auto& k, auto& v) { cfg.n_dirs = to_int(k, v); }},
      {"n_lambda", [&](auto& k, auto& v) { cfg.n_lambda = to_int(k, v); }},
      {"w0_grid", [&](auto& k, auto& v) { cfg.w0_grid = to_int(k, v); }},
      {"w0_box", [&](auto& k, auto& v) { cfg.w0_box = to_double(k, v); }},
      {"half_plane", [&](auto& k, auto& v) { cfg.half_plane = to_bool(k, v); }},
      {"mode", [&](auto& k, auto& v) {
         require(v == "alpha" || v == "clamp", k, "expected alpha or clamp");
         cfg.mode = v == "alpha" ? SurgeryMode::Alpha : SurgeryMode::Clamp;
       }},
      {"field", [&](auto&, auto& v) { cfg.field_file = fs::path(v); }},
      {"region", [&](auto& k, auto& v) {
         const auto l = to_list(k, v);
         require(l.size() == 4, k, "expected x1_min,x1_max,x2_min,x2_max");
         cfg.region = std::array<double, 4>{l[0], l[1], l[2], l[3]};
       }},
      {"out", [&](auto&, auto& v) { cfg.out = fs::path(v); }},
  };
  for (const auto& [key, value] : raw.values) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(key, "unknown key");
    it->second(key, value);
  }

  try {
    cfg.potential = make_potential(cfg.potential_name, cfg.potential_params);
  } catch (const DomainError& e) {
    throw ConfigError("potential", e.what());
  }
  if (r0_text) {
    cfg.potential.r0 = to_double("r0", *r0_text);
    require(cfg.potential.r0 > 0, "r0", "must be positive");
  }
  if (cfg.curvature_bound) require(*cfg.curvature_bound >= 0, "L_W", "must be nonnegative");
  cfg.a = a_text ? to_point("a", *a_text) : cfg.potential.minimum;
  require(cfg.a.size() == cfg.potential.dim, "a", "dimension does not match potential '" + cfg.potential_name + "'");

  require(cfg.r > 0, "r", "must be positive");
  require(2 * cfg.r < cfg.potential.r0, "r",
          "2r < r0 violated (r = " + std::to_string(cfg.r) + ", r0 = " + std::to_string(cfg.potential.r0) + ")");
  if (cfg.accel_r) {
    require(*cfg.accel_r > 0 && 2 * *cfg.accel_r < cfg.potential.r0, "accel_r", "2 accel_r < r0 violated");
  }
  require(cfg.R > 0, "R", "must be positive");
  require(cfg.mu > 0, "mu", "must be positive");
  require(cfg.h > 0, "h", "must be positive");
  require(cfg.nx >= 3 && cfg.ny >= 3, "nx", "grid needs at least 3x3 nodes");
  require(cfg.hx > 0 && cfg.hy > 0, "hx", "spacings must be positive");
  require(cfg.max_steps >= 0, "max_steps", "must be nonnegative");
  require(cfg.tol > 0, "tol", "must be positive");
  require(cfg.record_every >= 1, "record_every", "must be >= 1");
  require(cfg.accel_period >= 0, "accel_period", "must be nonnegative");
  require(cfg.seeds >= 1, "seeds", "must be >= 1");
  require(cfg.noise >= 0, "noise", "must be nonnegative");
  require(!cfg.R_list.empty(), "R_list", "must not be empty");
  for (double R : cfg.R_list) require(R > 0, "R_list", "entries must be positive");
  require(cfg.n_dirs >= 8, "n_dirs", "must be >= 8");
  require(cfg.n_lambda >= 16, "n_lambda", "must be >= 16");
  require(cfg.w0_grid >= 2, "w0_grid", "must be >= 2");
  require(cfg.w0_box > cfg.r / 4, "w0_box", "box must contain the r/4 ball");
  if (cfg.left_value) require(cfg.left_value->size() == cfg.potential.dim, "left_value", "wrong dimension");
  if (cfg.region) require((*cfg.region)[0] < (*cfg.region)[1] && (*cfg.region)[2] < (*cfg.region)[3], "region",
                          "empty box");

  if (cfg.command == Command::Minimize || cfg.command == Command::CorollarySweep) {
    const double lw = cfg.curvature_bound.value_or(cfg.potential.curvature_bound);
    std::vector<Grid2d> grids;
    try {
      if (cfg.command == Command::CorollarySweep) {
        for (double R : cfg.R_list) grids.push_back(Grid2d::strip(R, cfg.mu, cfg.h));
      } else {
        grids.push_back(cfg.make_grid());
      }
    } catch (const DomainError& e) {
      throw ConfigError("grid", e.what());
    }
    for (const auto& g : grids) {
      const double bound = stable_time_step(g, lw);
      require(cfg.dt <= bound, "dt",
              "exceeds the explicit stability bound " + std::to_string(bound) + " for this grid and L_W");
    }
    require(cfg.dt >= 0, "dt", "must be nonnegative (0 selects 0.9 of the stability bound)");
  }

  if (cfg.field_file) require(fs::is_regular_file(*cfg.field_file), "field", "file not found");
  const fs::path parent = fs::absolute(cfg.out).parent_path();
  require(fs::is_directory(parent), "out", "parent directory '" + parent.string() + "' does not exist");
  require(!fs::exists(cfg.out) || fs::is_directory(cfg.out), "out", "exists and is not a directory");
  return cfg;
}

void write_error_manifest(const fs::path& dir, const std::string& cause) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) return;
  std::ofstream out(dir / "manifest.txt");
  out << "status=config_error\n" << "cause=" << cause << '\n';
}

}  // namespace phase_replace

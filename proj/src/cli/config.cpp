#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ava/cli.hpp"
#include "ava/error.hpp"

namespace ava::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kSweepPrefix = "sweep.";

// Keys handled here rather than by set_attack_parameter.
constexpr std::string_view kRunKeys[] = {
    "run.mode",  "run.manifest", "run.oracle",        "run.model_name", "run.out",
    "run.seed",  "run.jobs",     "attack.early_stop", "eval.filter",    "eval.input",
    "transfer.models",
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> items;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = text.find(',', start);
    const std::string_view item = trim(text.substr(start, comma - start));
    if (!item.empty()) items.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

double parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError("'" + std::string(key) + "' expects a number, got '" + std::string(text) +
                      "'");
  }
  return value;
}

template <typename Int>
Int parse_integer(std::string_view key, std::string_view text) {
  text = trim(text);
  Int value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError("'" + std::string(key) + "' expects an integer, got '" + std::string(text) +
                      "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("'" + std::string(key) + "' expects true or false, got '" + std::string(text) +
                    "'");
}

fs::path resolve(const fs::path& base, std::string_view text) {
  fs::path p{std::string(trim(text))};
  if (p.empty()) return p;
  return p.is_relative() ? (base / p).lexically_normal() : p;
}

// Relative weights paths in builtin specs resolve like any other path.
std::string resolve_oracle_spec(std::string_view spec, const fs::path& base) {
  spec = trim(spec);
  constexpr std::string_view builtin = "builtin:";
  if (spec.substr(0, builtin.size()) == builtin) {
    return std::string(builtin) + resolve(base, spec.substr(builtin.size())).string();
  }
  if (spec.substr(0, 7) == "remote:") return std::string(spec);
  throw ConfigError("oracle spec must start with 'builtin:' or 'remote:', got '" +
                    std::string(spec) + "'");
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys(std::begin(kRunKeys), std::end(kRunKeys));
  for (std::string_view k : attack_parameter_keys()) keys.emplace_back(k);
  return keys;
}

std::string env_name(std::string_view key) {
  std::string name = "AVA_";
  for (char c : key) {
    name += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return name;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value,
                   const fs::path& base_dir) {
  value = trim(value);
  if (key == "run.mode") {
    try {
      cfg.attack.mode = parse_attack_mode(value);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "run.manifest") {
    cfg.manifest = resolve(base_dir, value);
  } else if (key == "run.oracle") {
    cfg.oracle = resolve_oracle_spec(value, base_dir);
  } else if (key == "run.model_name") {
    cfg.model_name = std::string(value);
  } else if (key == "run.out") {
    cfg.out = resolve(base_dir, value);
  } else if (key == "run.seed") {
    cfg.seed = parse_integer<std::uint64_t>(key, value);
  } else if (key == "run.jobs") {
    cfg.jobs = parse_integer<int>(key, value);
    if (cfg.jobs < 1) throw ConfigError("run.jobs must be >= 1");
  } else if (key == "attack.early_stop") {
    cfg.attack.early_stop = parse_bool(key, value);
  } else if (key == "eval.filter") {
    cfg.filter = parse_sample_filter(value);
  } else if (key == "eval.input") {
    cfg.eval_input = resolve(base_dir, value);
  } else if (key == "transfer.models") {
    cfg.transfer_models.clear();
    for (const std::string& spec : split_list(value)) {
      cfg.transfer_models.push_back(resolve_oracle_spec(spec, base_dir));
    }
  } else if (key.substr(0, kSweepPrefix.size()) == kSweepPrefix) {
    const std::string param(key.substr(kSweepPrefix.size()));
    SweepAxis axis{param, {}};
    for (const std::string& item : split_list(value)) axis.values.push_back(parse_number(key, item));
    AttackConfig probe = cfg.attack;
    if (!axis.values.empty()) set_attack_parameter(probe, param, axis.values.front());
    const auto it = std::find_if(cfg.sweep.begin(), cfg.sweep.end(),
                                 [&](const SweepAxis& a) { return a.key == param; });
    if (it != cfg.sweep.end()) {
      *it = std::move(axis);
    } else {
      cfg.sweep.push_back(std::move(axis));
    }
  } else {
    set_attack_parameter(cfg.attack, key, parse_number(key, value));
  }
}

RunConfig parse_config(std::string_view text, const fs::path& base_dir, std::string_view origin) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto where = [&] { return std::string(origin) + ":" + std::to_string(line_no) + ": "; };
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where() + "expected 'key = value'");
    const std::string_view key = trim(view.substr(0, eq));
    if (key.find('.') == std::string_view::npos) {
      throw ConfigError(where() + "key '" + std::string(key) + "' must be section.name");
    }
    try {
      apply_setting(cfg, key, view.substr(eq + 1), base_dir);
    } catch (const ConfigError& e) {
      throw ConfigError(where() + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  fs::path base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(text.str(), base, path.string());
}

void apply_env_overrides(RunConfig& cfg, const EnvLookup& lookup) {
  const fs::path cwd = fs::current_path();
  std::vector<std::string> keys = config_keys();
  for (std::string_view k : attack_parameter_keys()) keys.push_back("sweep." + std::string(k));
  for (const std::string& key : keys) {
    const std::string name = env_name(key);
    if (const char* value = lookup(name.c_str())) {
      try {
        apply_setting(cfg, key, value, cwd);
      } catch (const ConfigError& e) {
        throw ConfigError(name + ": " + e.what());
      }
    }
  }
}

void validate(const RunConfig& cfg) {
  try {
    cfg.attack.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (cfg.jobs < 1) throw ConfigError("run.jobs must be >= 1");
}

}  // namespace ava::cli

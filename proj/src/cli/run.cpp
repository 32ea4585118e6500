#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "ava/cli.hpp"
#include "ava/error.hpp"
#include "ava/reference_classifier.hpp"
#include "ava/wire.hpp"

namespace ava::cli {

namespace fs = std::filesystem;

namespace {

// Flags shared by the config-driven subcommands. Unset flags leave the
// config and environment values alone.
struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out;
  std::vector<std::string> settings;
};

void add_common(CLI::App& cmd, CommonFlags& flags) {
  cmd.add_option("-c,--config", flags.config, "Config file (section.key = value lines)");
  cmd.add_option("--seed", flags.seed, "Sample-order seed");
  cmd.add_option("-j,--jobs", flags.jobs, "Worker threads (reentrant oracles only)");
  cmd.add_option("-o,--out", flags.out, "Output directory");
  cmd.add_option("--set", flags.settings, "Extra key=value setting, applied last")
      ->take_all();
}

RunConfig resolve_config(const CommonFlags& flags, const EnvLookup& lookup) {
  RunConfig cfg = flags.config.empty() ? RunConfig{} : load_config(flags.config);
  apply_env_overrides(cfg, lookup);
  const fs::path cwd = fs::current_path();
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.jobs) {
    if (*flags.jobs < 1) throw ConfigError("--jobs must be >= 1");
    cfg.jobs = *flags.jobs;
  }
  if (!flags.out.empty()) cfg.out = flags.out;
  for (const std::string& s : flags.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1), cwd);
  }
  validate(cfg);
  return cfg;
}

int serve_command(const std::string& weights, const std::string& listen, bool use_stdio, bool once,
                  std::ostream& out, std::ostream& err) {
  ReferenceOracle oracle(ReferenceClassifier::load(weights));
  if (use_stdio) {
    wire::FdChannel channel(0, 1);
    wire::serve(channel, oracle);
    return kOk;
  }
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw ConfigError("--listen expects host:port");
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("--listen expects host:port, got '" + listen + "'");
  }
  const auto [fd, bound] = wire::tcp_listen(listen.substr(0, colon), port);
  out << "listening on " << listen.substr(0, colon) << ":" << bound << std::endl;
  do {
    const std::unique_ptr<wire::LineChannel> channel = wire::tcp_accept(fd);
    try {
      wire::serve(*channel, oracle);
    } catch (const Error& e) {
      err << "ava: connection ended: " << e.what() << "\n";
    }
  } while (!once);
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const EnvLookup& lookup) {
  CLI::App app{"Adversarial vignetting attacks on image classifiers", "ava"};
  app.require_subcommand(1);

  std::string render_in, render_out;
  PhysicalParams render_params;
  CLI::App* render = app.add_subcommand("render", "Apply a vignette to one image");
  render->add_option("-i,--input", render_in, "Input PNG")->required();
  render->add_option("-o,--out", render_out, "Output PNG; the field goes to <stem>.field.txt")
      ->required();
  render->add_option("--f-inv", render_params.f_inv, "Inverse focal length");
  render->add_option("--alpha", render_params.alpha, "Radial falloff");
  render->add_option("--tau", render_params.tau, "Tilt angle (radians)");
  render->add_option("--chi", render_params.chi, "Tilt azimuth (radians)");

  CommonFlags attack_flags, sweep_flags, eval_flags, transfer_flags;
  CLI::App* attack = app.add_subcommand("attack", "Attack every manifest sample");
  add_common(*attack, attack_flags);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Success rate over a hyperparameter grid");
  add_common(*sweep_cmd, sweep_flags);
  CLI::App* eval = app.add_subcommand("eval", "Recount and correct a previous attack run");
  add_common(*eval, eval_flags);
  std::string eval_input;
  eval->add_option("-i,--input", eval_input, "Directory written by 'attack'");
  CLI::App* transfer = app.add_subcommand("transfer", "Transfer matrix across models");
  add_common(*transfer, transfer_flags);

  std::string weights, listen;
  bool use_stdio = false, once = false;
  CLI::App* serve = app.add_subcommand("serve", "Serve a reference classifier over the wire protocol");
  serve->add_option("-w,--weights", weights, "Classifier weights JSON")->required();
  auto* listen_opt = serve->add_option("--listen", listen, "host:port (port 0 picks one)");
  auto* stdio_opt = serve->add_flag("--stdio", use_stdio, "Speak the protocol on stdin/stdout");
  listen_opt->excludes(stdio_opt);
  serve->add_flag("--once", once, "Exit after the first connection closes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (render->parsed()) {
      cmd_render(render_in, render_params, render_out);
      return kOk;
    }
    if (attack->parsed()) return cmd_attack(resolve_config(attack_flags, lookup), out);
    if (sweep_cmd->parsed()) return cmd_sweep(resolve_config(sweep_flags, lookup), out);
    if (eval->parsed()) {
      RunConfig cfg = resolve_config(eval_flags, lookup);
      if (!eval_input.empty()) cfg.eval_input = eval_input;
      return cmd_eval(cfg, out);
    }
    if (transfer->parsed()) return cmd_transfer(resolve_config(transfer_flags, lookup), out);
    if (serve->parsed()) {
      if (!use_stdio && listen.empty()) throw ConfigError("serve needs --listen or --stdio");
      return serve_command(weights, listen, use_stdio, once, out, err);
    }
  } catch (const OracleError& e) {
    err << "ava: oracle error: " << e.what() << "\n";
    return kOracleError;
  } catch (const ConfigError& e) {
    err << "ava: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidArgument& e) {
    err << "ava: invalid argument: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    err << "ava: " << e.what() << "\n";
    return kConfigError;
  } catch (const ParseError& e) {
    err << "ava: parse error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "ava: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace ava::cli

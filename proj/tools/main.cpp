// attrictrl command-line tool. Every subcommand reads one JSON config (plus
// --set overrides), runs one pipeline stage under the configured workdir and
// writes a resolved-config snapshot beside its outputs.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "attrictrl/error.hpp"
#include "attrictrl/io.hpp"
#include "attrictrl/pipeline.hpp"

namespace {

using attrictrl::ExitCode;

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string workdir;
};

attrictrl::PipelineConfig load_config(const Options& opt) {
  nlohmann::json j = nlohmann::json::object();
  if (!opt.config_path.empty()) {
    try {
      j = nlohmann::json::parse(attrictrl::read_text(opt.config_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw attrictrl::ConfigError(opt.config_path + ": " + e.what());
    }
  }
  for (const std::string& o : opt.overrides) attrictrl::apply_override(j, o);
  if (!opt.workdir.empty()) j["workdir"] = opt.workdir;
  return attrictrl::pipeline_config_from_json(j);
}

int run(const std::string& command, const Options& opt, bool print_defaults) {
  if (print_defaults) {
    std::cout << attrictrl::default_config_json().dump(2) << "\n";
    return 0;
  }
  const attrictrl::PipelineConfig cfg = load_config(opt);
  if (command == "synth") {
    attrictrl::run_synth(cfg);
    std::cout << "synth: wrote " << cfg.corpus.count << " images to " << (cfg.workdir / "corpus").string() << "\n";
  } else if (command == "score") {
    attrictrl::run_score(cfg);
    std::cout << "score: wrote " << (cfg.workdir / "corpus" / "scored.jsonl").string() << "\n";
  } else if (command == "map") {
    attrictrl::run_map(cfg);
    std::cout << "map: wrote mapping tables and training manifest to " << (cfg.workdir / "tables").string() << "\n";
  } else if (command == "train") {
    attrictrl::run_train(cfg, [&](long step, double loss) {
      if (cfg.log_every > 0 && step % cfg.log_every == 0) std::fprintf(stderr, "step %ld loss %.6f\n", step, loss);
    });
    std::cout << "train: wrote " << (cfg.workdir / "model" / "checkpoint.bin").string() << "\n";
  } else if (command == "generate") {
    attrictrl::run_generate(cfg);
    std::cout << "generate: wrote " << cfg.generate.count << " images to " << (cfg.workdir / "generated").string()
              << "\n";
  } else if (command == "sweep") {
    for (const auto& r : attrictrl::run_sweep_stage(cfg)) {
      std::printf("sweep %s: avg_diff %.6f spearman %.6f pairs %zu\n", std::string(attrictrl::to_string(r.attribute)).c_str(),
                  r.avg_diff, r.spearman, r.pairs.size());
    }
  } else if (command == "safety-eval") {
    const auto r = attrictrl::run_safety_stage(cfg);
    std::printf("safety-eval: n_o %ld n_s %ld rr %.6f\n", r.n_o, r.n_s, *r.rr);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attrictrl: attribute-conditioned toy diffusion pipeline"};
  app.require_subcommand(1);
  Options opt;
  bool print_defaults = false;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "generate the synthetic corpus"},
      {"score", "score every corpus image (manifest -> raw scores)"},
      {"map", "bin, balance and rank-normalize into mapping tables"},
      {"train", "train the denoiser and value encoders"},
      {"generate", "sample images from a checkpoint"},
      {"sweep", "controllability sweep with CSV/JSON/SVG reports"},
      {"safety-eval", "paired intensity 0/1 runs and removal rate"},
      {"config", "print the default configuration"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    if (name == "config") {
      sub->callback([&] { print_defaults = true; });
      continue;
    }
    sub->add_option("-c,--config", opt.config_path, "JSON configuration file");
    sub->add_option("-s,--set", opt.overrides, "override, e.g. --set train.steps=500 (repeatable)");
    sub->add_option("-w,--workdir", opt.workdir, "output root (overrides the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kContract);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, opt, print_defaults);
  } catch (const attrictrl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kIo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kContract);
  }
}

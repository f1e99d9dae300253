// precocity command-line driver. Every subcommand reads the same config file;
// `run` executes all stages the configured method needs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "precocity/error.hpp"
#include "precocity/pipeline.hpp"
#include "precocity/table_io.hpp"

namespace {

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::string output_dir;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

precocity::PipelineConfig load_config(const Options& o, bool synth_default) {
  std::vector<std::string> overrides = o.overrides;
  if (!o.output_dir.empty()) overrides.push_back("output_dir=\"" + o.output_dir + "\"");
  if (o.threads) overrides.push_back("threads=" + std::to_string(*o.threads));
  if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
  if (o.config.empty()) {
    if (!synth_default) throw precocity::ConfigError("--config is required for this subcommand");
    const std::string text = precocity::PipelineConfig::apply_overrides(R"({"synth": {}})", overrides);
    return precocity::PipelineConfig::from_json(text, std::filesystem::current_path());
  }
  return precocity::PipelineConfig::load(o.config, overrides);
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("-c,--config", o.config, "Pipeline config (JSON)");
  cmd->add_option("--set", o.overrides, "Override a config key, e.g. --set window.past_years=10")
      ->take_all()
      ->allow_extra_args(false);
  cmd->add_option("-o,--output-dir", o.output_dir, "Output directory (overrides output_dir)");
  cmd->add_option("-j,--threads", o.threads, "Cap on worker threads (0 = all cores)");
  cmd->add_option("--seed", o.seed, "Base random seed");
  cmd->add_flag("-q,--quiet", o.quiet, "Suppress progress messages");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Novelty, transience and precocity of documents in a dated corpus"};
  app.set_version_flag("--version", std::string(precocity::library_version()));
  app.require_subcommand(1);

  Options opts;
  const std::vector<std::pair<std::string, std::string>> stage_cmds = {
      {"synth", "Generate a synthetic corpus with planted innovators"},
      {"ingest", "Validate and normalize the corpus"},
      {"chunk", "Split documents into embedding- and topic-granularity chunks"},
      {"topics-train", "Train the topic model on a year-balanced subsample"},
      {"topics-infer", "Infer topic distributions for every chunk"},
      {"perplexity", "Compute or ingest past/future perplexities"},
      {"score", "Score chunks and aggregate documents"},
      {"regress", "Regress social variables on precocity"},
      {"report", "Summarize scores, regressions and ground-truth evaluation"},
  };
  std::vector<CLI::App*> cmds;
  for (const auto& [name, help] : stage_cmds) {
    cmds.push_back(app.add_subcommand(name, help));
    add_common(cmds.back(), opts);
  }
  CLI::App* run = app.add_subcommand("run", "Run every stage the configured method needs");
  add_common(run, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    auto config = load_config(opts, name == "synth");
    precocity::Pipeline pipeline(std::move(config), opts.quiet ? nullptr : &std::cerr);
    if (name == "run") {
      pipeline.run();
    } else {
      pipeline.run_stage(name);
    }
    if (name == "report" || name == "run") {
      const auto report = pipeline.artifact("report.txt");
      if (std::filesystem::exists(report)) std::cout << precocity::read_file(report);
    }
    return 0;
  } catch (const precocity::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const precocity::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const precocity::ComputeError& e) {
    std::cerr << "compute error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

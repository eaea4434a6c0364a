#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ppgage/error.hpp"
#include "ppgage/log.hpp"
#include "ppgage/pipeline/config.hpp"
#include "ppgage/pipeline/stages.hpp"

namespace {

using namespace ppgage;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string loss;
  std::string threshold;
  std::optional<std::size_t> epochs;
  bool resume = false;
};

pipeline::ExperimentConfig resolve(const Overrides& o) {
  pipeline::ExperimentConfig c = o.config_path.empty() ? pipeline::ExperimentConfig{} : pipeline::load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.out_dir = o.out;
  if (!o.loss.empty()) c.train.loss = nn::parse_loss_kind(o.loss);
  if (!o.threshold.empty()) c.analysis.threshold = pipeline::parse_threshold_mode(o.threshold);
  if (o.epochs) c.train.epochs = *o.epochs;
  c.validate();
  return c;
}

int fail(ErrorCode code, const std::string& message) {
  std::cerr << fmt::format("error[{}]: {}\n", error_code_name(code), message);
  return static_cast<int>(code);
}

}  // namespace

int main(int argc, char** argv) {
  log::init_from_env();

  CLI::App app{"Age regression from synthetic PPG waveforms with distribution-aware training, plus the survival analysis of the age gap."};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--loss", o.loss, "Training loss")->check(CLI::IsMember({"dist", "mae"}));
    sub->add_option("--threshold", o.threshold, "Gap stratum threshold")->check(CLI::IsMember({"9", "15", "sd"}));
    sub->add_option("--epochs", o.epochs, "Total training epochs")->check(CLI::PositiveNumber);
  };

  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {
      {"generate", "Sample the synthetic cohort and its split"},
      {"train", "Train the regressor, writing a checkpoint and per-epoch metrics"},
      {"evaluate", "Predict every record and score each partition"},
      {"analyze", "Cox, Kaplan-Meier, log-rank, spline, serial and logistic tables"},
      {"saliency", "Mean saliency maps at the probe ages"},
      {"report", "Summarize all artifacts into summary.txt"},
      {"run", "All stages in order"},
      {"config", "Print the resolved configuration as JSON"},
  };
  std::string chosen;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    if (std::string_view(c.name) == "train") sub->add_flag("--resume", o.resume, "Continue from the saved checkpoint");
    sub->callback([&chosen, name = std::string(c.name)] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(ErrorCode::invalid_input, e.what());
  }

  try {
    const pipeline::ExperimentConfig config = resolve(o);
    if (chosen == "config") {
      std::cout << pipeline::to_json(config).dump(2) << "\n";
    } else if (chosen == "generate") {
      pipeline::run_generate(config);
    } else if (chosen == "train") {
      pipeline::run_train(config, o.resume);
    } else if (chosen == "evaluate") {
      pipeline::run_evaluate(config);
    } else if (chosen == "analyze") {
      pipeline::run_analyze(config);
    } else if (chosen == "saliency") {
      pipeline::run_saliency(config);
    } else if (chosen == "report") {
      const auto missing = pipeline::run_report(config);
      if (!missing.empty())
        return fail(ErrorCode::missing_artifact, fmt::format("{} missing artifact(s), first: {}", missing.size(), missing.front()));
    } else if (chosen == "run") {
      pipeline::run_all(config);
    }
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(ErrorCode::io, e.what());
  } catch (const std::exception& e) {
    return fail(ErrorCode::invalid_input, e.what());
  }
  return 0;
}

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "eegwl/errors.hpp"
#include "eegwl/pipeline.hpp"

namespace {

struct CliArgs {
  std::string config;
  std::string out;
  std::string manifest;
  std::string mode;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int iterations = 0;
};

eegwl::RunConfig resolve_config(const CliArgs& args) {
  eegwl::RunConfig cfg;
  if (!args.config.empty())
    cfg = eegwl::RunConfig::from_json_file(args.config);
  if (!args.out.empty()) cfg.out_dir = args.out;
  if (!args.manifest.empty()) cfg.manifest = args.manifest;
  if (args.seed_set) cfg.seed = args.seed;
  if (args.iterations > 0) cfg.cv.iterations = args.iterations;
  if (!args.mode.empty()) {
    if (args.mode == "cross") {
      cfg.cv.mode = eegwl::CvMode::cross_task;
    } else if (args.mode.rfind("within:", 0) == 0) {
      cfg.cv.mode = eegwl::CvMode::within_task;
      cfg.cv.task = args.mode.substr(7);
    } else {
      throw eegwl::ValidationError("--mode must be within:<task> or cross");
    }
  }
  return cfg;
}

void add_common(CLI::App* cmd, CliArgs& args) {
  cmd->add_option("--config", args.config, "JSON run configuration");
  cmd->add_option("--out", args.out, "output directory");
  cmd->add_option("--seed", args.seed, "master seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consumer-EEG workload pipeline toolkit"};
  app.require_subcommand(1);
  CliArgs args;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  CLI::App* preprocess =
      app.add_subcommand("preprocess", "filter, clean, and gate recordings");
  CLI::App* features =
      app.add_subcommand("features", "extract band-power features");
  CLI::App* cv = app.add_subcommand("cv", "run Monte Carlo cross-validation");
  CLI::App* staircase =
      app.add_subcommand("staircase", "simulate adaptive puzzle sessions");
  CLI::App* report = app.add_subcommand("report", "emit tables and plots");

  for (CLI::App* cmd : {synth, preprocess, features, cv, staircase, report})
    add_common(cmd, args);
  preprocess->add_option("--manifest", args.manifest, "dataset manifest JSON");
  cv->add_option("--mode", args.mode, "within:<task> or cross");
  cv->add_option("--iterations", args.iterations, "CV iterations");

  CLI11_PARSE(app, argc, argv);

  try {
    const eegwl::RunConfig cfg = resolve_config(args);
    if (synth->parsed()) {
      const auto out = eegwl::cmd_synth(cfg);
      std::cout << "wrote " << out.manifest_path << '\n';
    } else if (preprocess->parsed()) {
      eegwl::cmd_preprocess(cfg);
      std::cout << "preprocess complete under " << cfg.out_dir << "/preproc\n";
    } else if (features->parsed()) {
      std::cout << "wrote " << eegwl::cmd_features(cfg) << '\n';
    } else if (cv->parsed()) {
      const auto res = eegwl::cmd_cv(cfg);
      std::cout << "mean macro F1 " << res.mean_macro_f1() << " over "
                << res.iterations_ok << " iterations\n";
    } else if (staircase->parsed()) {
      eegwl::cmd_staircase(cfg);
      std::cout << "staircase runs under " << cfg.out_dir << "/staircase\n";
    } else if (report->parsed()) {
      eegwl::cmd_report(cfg);
      std::cout << "report under " << cfg.out_dir << "/report\n";
    }
  } catch (const eegwl::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const eegwl::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const eegwl::DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "emgsens/errors.hpp"
#include "emgsens/pipeline.hpp"
#include "emgsens/util.hpp"
#include "emgsens/version.hpp"

using namespace emgsens;

int main(int argc, char** argv) {
  CLI::App app{std::string(kToolName) +
               " - sEMG feature extraction and demographic sensitivity audit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string data_path;
  std::string spec_path;
  std::uint64_t seed = 0;
  int jobs = 0;
  bool force = false;

  app.add_option("--config", config_path, "pipeline config (JSON)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--data", data_path, "dataset manifest.json");
  app.add_option("--seed", seed, "global RNG seed");
  app.add_option("--jobs", jobs, "worker threads (0 = all cores)");
  app.add_flag("--force", force, "rerun stages even when cached");

  CLI::App* sub_run = app.add_subcommand("run", "execute the full pipeline");
  CLI::App* sub_synth =
      app.add_subcommand("synth", "materialize the synthetic dataset");
  sub_synth->add_option("--spec", spec_path, "synthetic population spec (JSON)");
  app.add_subcommand("ingest", "load and validate the dataset");
  app.add_subcommand("impute", "apply the exclusion rule and impute demographics");
  app.add_subcommand("extract", "compute the feature matrix");
  app.add_subcommand("fit", "fit one mixed model per feature");
  app.add_subcommand("audit", "FDR correction, dual threshold, rankings");
  app.add_subcommand("pls", "sparse PLS, Q2 cross-validation, CIM layout");
  app.add_subcommand("report", "emit the four figures as SVG + CSV");

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ConfigError::exit_code;
  }

  try {
    PipelineConfig cfg;
    bool have_config = false;
    if (!config_path.empty()) {
      cfg = PipelineConfig::from_json_text(read_text_file(config_path));
      have_config = true;
    }
    if (!spec_path.empty() && sub_synth->parsed()) {
      cfg.synthetic = true;
      cfg.dataset_path.clear();
      cfg.synth = synth_spec_from_json_text(read_text_file(spec_path));
      have_config = true;
    }
    if (!data_path.empty()) {
      cfg.dataset_path = data_path;
      cfg.synthetic = false;
      have_config = true;
    }
    if (!have_config) {
      throw ConfigError("need --config, --data, or synth --spec");
    }
    if (app.count("--seed")) cfg.seed = seed;
    if (app.count("--jobs")) cfg.jobs = jobs;
    if (app.count("--out")) cfg.out_dir = out_dir;
    cfg.validate();

    Pipeline pipeline(cfg);
    if (sub_run->parsed()) {
      pipeline.run_all(std::cout, force);
    } else {
      for (const auto& name : Pipeline::stage_names()) {
        if (app.get_subcommand(name)->parsed()) {
          pipeline.run_stage(name, std::cout, force);
          break;
        }
      }
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return ConfigError::exit_code;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return DataError::exit_code;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return NumericError::exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

// Command-line front end: world generation, classifier training,
// certification sweeps, method comparison, theorem validation, reporting.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "diffsmooth/errors.hpp"
#include "diffsmooth/harness.hpp"

namespace ds = diffsmooth;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value pairs
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "config file (key = value)");
  cmd->add_option("--set", opts.overrides,
                  "override a config key, e.g. --set sigma=0.25");
  cmd->add_option("--seed", opts.seed, "base seed")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
}

ds::ExperimentConfig resolve_config(const CommonOpts& opts) {
  ds::ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = ds::load_config(opts.config_path);
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ds::ConfigError("--set expects key=value, got: " + kv);
    }
    ds::apply_config_line(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opts.seed_set) cfg.cert.seed.base_seed = opts.seed;
  return cfg;
}

constexpr std::uint64_t kTagTrainPoints = 62;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-purified randomized smoothing on an analytic "
               "Gaussian-mixture testbed"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string world_out = "world.txt";
  std::string model_out = "model.txt";
  std::string records_in;

  auto* gen = app.add_subcommand("gen-world", "write the default world file");
  add_common(gen, opts);
  gen->add_option("--out", world_out, "output world file");

  auto* train = app.add_subcommand(
      "train", "train the Gaussian-augmented classifier and save it");
  add_common(train, opts);
  train->add_option("--out", model_out, "output model file");

  auto* certify = app.add_subcommand(
      "certify", "certification sweep; writes record and report files");
  add_common(certify, opts);

  auto* compare = app.add_subcommand(
      "compare", "plain smoothing vs purification variants on shared seeds");
  add_common(compare, opts);

  auto* theorems = app.add_subcommand(
      "validate-theorems", "Monte-Carlo validation of the proximity and "
                           "one-shot denoising bounds");
  add_common(theorems, opts);

  auto* report = app.add_subcommand(
      "report", "recompute the certified-accuracy report from a record file");
  add_common(report, opts);
  report->add_option("--records", records_in, "record file to summarize")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    ds::ExperimentConfig cfg = resolve_config(opts);
    if (gen->parsed()) {
      ds::MixtureWorld::make_default().save(world_out);
      std::cout << "wrote " << world_out << "\n";
    } else if (train->parsed()) {
      if (cfg.world_path.empty() ||
          !std::filesystem::exists(cfg.world_path)) {
        throw ds::ConfigError("config key 'world': file not found: " +
                              cfg.world_path);
      }
      const auto world = ds::MixtureWorld::load(cfg.world_path);
      cfg.train.seed = cfg.cert.seed;
      const auto train_set = world.sample(
          ds::substream(cfg.cert.seed, kTagTrainPoints, 0), cfg.train_count);
      const auto model = ds::train_augmented_classifier(train_set, cfg.train);
      model.save(model_out);
      std::cout << "wrote " << model_out << "\n";
    } else if (certify->parsed()) {
      const auto rows = ds::run_certification_experiment(cfg);
      std::cout << "wrote " << cfg.out_records << " and " << cfg.out_report
                << " (" << rows.size() << " report rows)\n";
    } else if (compare->parsed()) {
      const auto rows = ds::compare_methods(cfg);
      std::cout << "wrote " << cfg.out_report << " (" << rows.size()
                << " report rows)\n";
    } else if (theorems->parsed()) {
      const bool pass = ds::run_theorem_suite(cfg);
      std::cout << (pass ? "theorem suite: pass\n" : "theorem suite: FAIL\n");
      if (!pass) return 4;
    } else if (report->parsed()) {
      const auto rows = ds::read_records(records_in);
      std::vector<ds::ReportRow> out;
      const double acr = ds::average_certified_radius(rows);
      for (double r : cfg.radius_grid) {
        ds::ReportRow row;
        row.sigma = cfg.cert.sigma;
        row.sigma_local = cfg.cert.sigma_local;
        row.m = cfg.cert.m;
        row.radius = r;
        row.certified_accuracy = ds::certified_accuracy_at(rows, r);
        row.acr = acr;
        row.method = "report";
        out.push_back(row);
      }
      ds::write_report_csv(cfg.out_report, out);
      std::cout << "wrote " << cfg.out_report << "\n";
    }
  } catch (const ds::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

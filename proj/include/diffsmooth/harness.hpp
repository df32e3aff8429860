#pragma once

#include <string>
#include <vector>

#include "diffsmooth/cert.hpp"
#include "diffsmooth/classify.hpp"
#include "diffsmooth/theory.hpp"

namespace diffsmooth {

struct ExperimentConfig {
  std::string world_path;

  // Schedule.
  int T = 1000;
  double beta1 = 1e-4;
  double betaT = 0.02;

  // Classifier.
  std::string classifier = "bayes_smoothed";  // or "trained"
  std::string model_path;                     // trained-model file
  TrainConfig train;
  int train_count = 4000;  // training-set size for `train`

  // Certification.
  DiffSmoothConfig cert;
  std::vector<double> sigma_list;
  std::vector<double> sigma_local_list;
  std::vector<int> m_list;
  int eval_count = 200;
  std::vector<double> radius_grid = {0.0,  0.25, 0.5,  0.75, 1.0,
                                     1.25, 1.5,  1.75, 2.0,  2.25};
  int workers = 1;
  bool record_timing = false;  // when false the time column is 0.000

  // Theorem suite.
  std::vector<double> eta_list = {0.05};
  double t1_alpha_bar = 0.9;  // picks t* with alpha_bar(t*) at this level
  double t1_delta = 0.3;
  int t1_trials = 10000;
  int sde_steps = 1000;
  double t2_lambda = 0.1;
  int t2_trials = 1000;

  // Outputs.
  std::string out_records = "records.tsv";
  std::string out_report = "report.csv";
  std::string out_dir = ".";

  void validate() const;
};

// Flat key=value file; '#' starts a comment; blank lines ignored. Unknown
// keys and unparsable values raise ConfigError naming the key.
ExperimentConfig load_config(const std::string& path);
void apply_config_line(ExperimentConfig& cfg, const std::string& key,
                       const std::string& value);

struct RecordRow {
  std::int64_t idx = 0;
  int label = 0;
  int predict = kAbstain;
  double radius = 0.0;
  bool correct = false;
  double time = 0.0;
};

// Tab-separated with header `idx label predict radius correct time`;
// ABSTAIN rows carry predict -1 and radius 0.0.
std::vector<RecordRow> read_records(const std::string& path);

// Report math over one configuration's rows.
double certified_accuracy_at(const std::vector<RecordRow>& rows, double r);
double average_certified_radius(const std::vector<RecordRow>& rows);

// Resolves the configured classifier (analytic Bayes or a trained model
// loaded from model_path).
SoftClassifierHandle make_classifier(const ExperimentConfig& cfg,
                                     const MixtureWorld& world);

// Certifies eval_count held-out points per (sigma, sigma_local, m)
// combination. Appends only missing indices when the record file already
// holds a prefix (resume safety); rows are flushed as they complete. Worker
// count never changes the bytes written. Returns the report rows written.
struct ReportRow {
  double sigma = 0.0;
  double sigma_local = 0.0;
  int m = 1;
  double radius = 0.0;
  double certified_accuracy = 0.0;
  double acr = 0.0;
  std::string method;
};
std::vector<ReportRow> run_certification_experiment(
    const ExperimentConfig& cfg);

// Plain randomized smoothing, the purify-only degenerate (m = 1, sigma' = 0),
// the full pipeline, and local smoothing without purification, all on the
// same points and seeds; one CSV with per-method curves and ACR.
std::vector<ReportRow> compare_methods(const ExperimentConfig& cfg);

// Theorem validators over the configured grids; writes one report file per
// run into out_dir. Returns true when every run passes its acceptance
// threshold (violation rate within 4 standard errors of eta, positive mean
// slack, exact lambda = 0 agreement).
bool run_theorem_suite(const ExperimentConfig& cfg);

void write_report_csv(const std::string& path,
                      const std::vector<ReportRow>& rows);

}  // namespace diffsmooth

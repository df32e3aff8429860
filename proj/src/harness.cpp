#include "diffsmooth/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "diffsmooth/errors.hpp"

namespace diffsmooth {

namespace {

constexpr std::uint64_t kTagEvalPoints = 61;
constexpr std::uint64_t kTagTrainPoints = 62;
constexpr std::uint64_t kTagCert = 63;
constexpr std::uint64_t kTagTheorem1 = 71;
constexpr std::uint64_t kTagTheorem2 = 72;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: " + v);
  }
  if (pos != v.size()) {
    throw ConfigError("config key '" + key + "': trailing junk in " + v);
  }
  return x;
}

int parse_int(const std::string& key, const std::string& v) {
  const double x = parse_double(key, v);
  const int i = static_cast<int>(x);
  if (x != i) throw ConfigError("config key '" + key + "': not an integer");
  return i;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false");
}

std::vector<double> parse_double_list(const std::string& key,
                                      const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (double x : parse_double_list(key, v)) {
    const int i = static_cast<int>(x);
    if (x != i) throw ConfigError("config key '" + key + "': not integers");
    out.push_back(i);
  }
  return out;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (eval_count < 1) throw ConfigError("config key 'eval_count': must be >= 1");
  if (workers < 1) throw ConfigError("config key 'workers': must be >= 1");
  if (classifier != "bayes_smoothed" && classifier != "trained") {
    throw ConfigError("config key 'classifier': must be bayes_smoothed or "
                      "trained, got " + classifier);
  }
  if (radius_grid.empty()) {
    throw ConfigError("config key 'radius_grid': must be non-empty");
  }
  if (T < 1) throw ConfigError("config key 'T': must be >= 1");
  cert.validate();
}

void apply_config_line(ExperimentConfig& cfg, const std::string& key,
                       const std::string& value) {
  if (key == "world") cfg.world_path = value;
  else if (key == "T") cfg.T = parse_int(key, value);
  else if (key == "beta1") cfg.beta1 = parse_double(key, value);
  else if (key == "betaT") cfg.betaT = parse_double(key, value);
  else if (key == "classifier") cfg.classifier = value;
  else if (key == "model") cfg.model_path = value;
  else if (key == "train_sigma") cfg.train.sigma_train = parse_double(key, value);
  else if (key == "train_epochs") cfg.train.epochs = parse_int(key, value);
  else if (key == "train_lr") cfg.train.learning_rate = parse_double(key, value);
  else if (key == "train_hidden") cfg.train.hidden_width = parse_int(key, value);
  else if (key == "train_batch") cfg.train.batch_size = parse_int(key, value);
  else if (key == "train_count") cfg.train_count = parse_int(key, value);
  else if (key == "sigma") cfg.cert.sigma = parse_double(key, value);
  else if (key == "sigma_local") cfg.cert.sigma_local = parse_double(key, value);
  else if (key == "sigma_local_shift")
    cfg.cert.sigma_local_shift = parse_double(key, value);
  else if (key == "m") cfg.cert.m = parse_int(key, value);
  else if (key == "convention") {
    if (value == "raw") cfg.cert.convention = DataConvention::raw;
    else if (value == "unit_interval")
      cfg.cert.convention = DataConvention::unit_interval;
    else throw ConfigError("config key 'convention': raw or unit_interval");
  } else if (key == "alpha") cfg.cert.conf.alpha = parse_double(key, value);
  else if (key == "n0") cfg.cert.conf.n0 = parse_int(key, value);
  else if (key == "n") cfg.cert.conf.n = parse_int(key, value);
  else if (key == "seed")
    cfg.cert.seed.base_seed = static_cast<std::uint64_t>(
        std::stoull(value));
  else if (key == "sigma_list") cfg.sigma_list = parse_double_list(key, value);
  else if (key == "sigma_local_list")
    cfg.sigma_local_list = parse_double_list(key, value);
  else if (key == "m_list") cfg.m_list = parse_int_list(key, value);
  else if (key == "eval_count") cfg.eval_count = parse_int(key, value);
  else if (key == "radius_grid") cfg.radius_grid = parse_double_list(key, value);
  else if (key == "workers") cfg.workers = parse_int(key, value);
  else if (key == "record_timing") cfg.record_timing = parse_bool(key, value);
  else if (key == "eta_list") cfg.eta_list = parse_double_list(key, value);
  else if (key == "t1_alpha_bar") cfg.t1_alpha_bar = parse_double(key, value);
  else if (key == "t1_delta") cfg.t1_delta = parse_double(key, value);
  else if (key == "t1_trials") cfg.t1_trials = parse_int(key, value);
  else if (key == "sde_steps") cfg.sde_steps = parse_int(key, value);
  else if (key == "t2_lambda") cfg.t2_lambda = parse_double(key, value);
  else if (key == "t2_trials") cfg.t2_trials = parse_int(key, value);
  else if (key == "out_records") cfg.out_records = value;
  else if (key == "out_report") cfg.out_report = value;
  else if (key == "out_dir") cfg.out_dir = value;
  else throw ConfigError("config: unknown key '" + key + "'");
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    apply_config_line(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::vector<RecordRow> read_records(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open record file: " + path);
  std::string line;
  if (!std::getline(f, line)) return {};
  std::vector<RecordRow> rows;
  while (std::getline(f, line)) {
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    RecordRow r;
    int correct = 0;
    ss >> r.idx >> r.label >> r.predict >> r.radius >> correct >> r.time;
    if (!ss) throw ConfigError("record file: bad row in " + path);
    r.correct = correct != 0;
    rows.push_back(r);
  }
  return rows;
}

double certified_accuracy_at(const std::vector<RecordRow>& rows, double r) {
  if (rows.empty()) return 0.0;
  std::int64_t hits = 0;
  for (const auto& row : rows) {
    if (row.correct && row.predict != kAbstain && row.radius >= r) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

double average_certified_radius(const std::vector<RecordRow>& rows) {
  if (rows.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& row : rows) {
    if (row.correct && row.predict != kAbstain) acc += row.radius;
  }
  return acc / static_cast<double>(rows.size());
}

SoftClassifierHandle make_classifier(const ExperimentConfig& cfg,
                                     const MixtureWorld& world) {
  if (cfg.classifier == "bayes_smoothed") {
    return bayes_smoothed_classifier(world, cfg.train.sigma_train);
  }
  if (cfg.model_path.empty()) {
    throw ConfigError("config key 'model': required for classifier=trained");
  }
  auto model =
      std::make_shared<const MlpClassifier>(MlpClassifier::load(cfg.model_path));
  return wrap_classifier(model, "trained", cfg.train.sigma_train);
}

namespace {

MixtureWorld load_world(const ExperimentConfig& cfg) {
  if (cfg.world_path.empty()) {
    throw ConfigError("config key 'world': required");
  }
  if (!std::filesystem::exists(cfg.world_path)) {
    throw ConfigError("config key 'world': file not found: " + cfg.world_path);
  }
  return MixtureWorld::load(cfg.world_path);
}

void write_record_row(std::ofstream& out, std::int64_t idx,
                      const CertificationRecord& rec, bool record_timing) {
  out << idx << "\t" << rec.true_label << "\t" << rec.predicted << "\t";
  if (rec.predicted == kAbstain) out << "0.0";
  else out << fmt(rec.radius);
  out << "\t" << (rec.correct ? 1 : 0) << "\t";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", record_timing ? rec.wall_time : 0.0);
  out << buf << "\n";
  out.flush();
}

// Runs fn(i) for i in [begin, end) on `workers` threads; results land in
// out[i - begin]. Partition-invariant: each result is a pure function of i.
void parallel_for(std::int64_t begin, std::int64_t end, int workers,
                  std::vector<CertificationRecord>& out,
                  const std::function<CertificationRecord(std::int64_t)>& fn) {
  out.resize(end - begin);
  if (workers <= 1) {
    for (std::int64_t i = begin; i < end; ++i) out[i - begin] = fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::int64_t i = begin + w; i < end; i += workers) {
        out[i - begin] = fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

struct Combo {
  double sigma;
  double sigma_local;
  int m;
};

std::vector<Combo> combos_of(const ExperimentConfig& cfg) {
  const std::vector<double> sigmas =
      cfg.sigma_list.empty() ? std::vector<double>{cfg.cert.sigma}
                             : cfg.sigma_list;
  const std::vector<double> locals =
      cfg.sigma_local_list.empty() ? std::vector<double>{cfg.cert.sigma_local}
                                   : cfg.sigma_local_list;
  const std::vector<int> ms =
      cfg.m_list.empty() ? std::vector<int>{cfg.cert.m} : cfg.m_list;
  std::vector<Combo> combos;
  for (double s : sigmas)
    for (double sl : locals)
      for (int m : ms) combos.push_back({s, sl, m});
  return combos;
}

std::vector<ReportRow> report_for(const ExperimentConfig& cfg,
                                  const std::vector<RecordRow>& rows,
                                  double sigma, double sigma_local, int m,
                                  const std::string& method) {
  std::vector<ReportRow> out;
  const double acr = average_certified_radius(rows);
  for (double r : cfg.radius_grid) {
    ReportRow row;
    row.sigma = sigma;
    row.sigma_local = sigma_local;
    row.m = m;
    row.radius = r;
    row.certified_accuracy = certified_accuracy_at(rows, r);
    row.acr = acr;
    row.method = method;
    out.push_back(row);
  }
  return out;
}

// Appends to an existing prefix of rows, or starts a fresh file.
std::int64_t open_for_resume(const std::string& path, std::ofstream& out) {
  std::int64_t done = 0;
  if (std::filesystem::exists(path)) {
    const auto existing = read_records(path);
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(existing.size());
         ++i) {
      if (existing[i].idx != i) {
        throw ConfigError("record file is not a resumable prefix: " + path);
      }
    }
    done = static_cast<std::int64_t>(existing.size());
    out.open(path, std::ios::app);
  } else {
    out.open(path);
    out << "idx\tlabel\tpredict\tradius\tcorrect\ttime\n";
    out.flush();
  }
  if (!out) throw ConfigError("cannot write record file: " + path);
  return done;
}

}  // namespace

std::vector<ReportRow> run_certification_experiment(
    const ExperimentConfig& cfg) {
  cfg.validate();
  const MixtureWorld world = load_world(cfg);
  const DiffusionSchedule schedule =
      linear_schedule(cfg.T, cfg.beta1, cfg.betaT);
  const SoftClassifierHandle F = make_classifier(cfg, world);
  const NoisePredictor predictor = exact_noise_predictor(world, schedule);
  const std::vector<Combo> combos = combos_of(cfg);
  const std::int64_t per = cfg.eval_count;
  const std::int64_t total = per * static_cast<std::int64_t>(combos.size());
  const SeedSpec eval_seed = substream(cfg.cert.seed, kTagEvalPoints, 0);

  std::ofstream out;
  const std::int64_t done = open_for_resume(cfg.out_records, out);
  if (done > total) {
    throw ConfigError("record file longer than the configured run: " +
                      cfg.out_records);
  }

  // Base classifiers resolved once per combo.
  std::vector<DiffSmoothConfig> combo_cfg(combos.size(), cfg.cert);
  std::vector<BaseClassifier> combo_base(combos.size());
  for (std::size_t c = 0; c < combos.size(); ++c) {
    combo_cfg[c].sigma = combos[c].sigma;
    combo_cfg[c].sigma_local = combos[c].sigma_local;
    combo_cfg[c].m = combos[c].m;
    combo_base[c] = make_purify_classifier(combo_cfg[c], F, predictor,
                                           schedule);
  }

  auto certify_idx = [&](std::int64_t idx) {
    const std::size_t c = static_cast<std::size_t>(idx / per);
    const std::int64_t i = idx % per;
    const LabeledSample p =
        world.sample_one(eval_seed, static_cast<std::uint64_t>(i));
    DiffSmoothConfig point_cfg = combo_cfg[c];
    point_cfg.seed = substream(cfg.cert.seed, kTagCert,
                               static_cast<std::uint64_t>(idx));
    auto rec = certify_with_base(p.x, p.label, point_cfg, combo_base[c],
                                 F.num_labels);
    rec.index = idx;
    return rec;
  };

  const std::int64_t chunk = std::max(1, cfg.workers) * 8LL;
  std::vector<CertificationRecord> buf;
  std::vector<RecordRow> all = done > 0 ? read_records(cfg.out_records)
                                        : std::vector<RecordRow>{};
  for (std::int64_t begin = done; begin < total; begin += chunk) {
    const std::int64_t end = std::min(total, begin + chunk);
    parallel_for(begin, end, cfg.workers, buf, certify_idx);
    for (std::int64_t i = begin; i < end; ++i) {
      write_record_row(out, i, buf[i - begin], cfg.record_timing);
    }
  }
  out.close();

  all = read_records(cfg.out_records);
  std::vector<ReportRow> report;
  for (std::size_t c = 0; c < combos.size(); ++c) {
    const std::vector<RecordRow> rows(all.begin() + c * per,
                                      all.begin() + (c + 1) * per);
    const auto part = report_for(cfg, rows, combos[c].sigma,
                                 combos[c].sigma_local, combos[c].m,
                                 "diffsmooth");
    report.insert(report.end(), part.begin(), part.end());
  }
  if (!cfg.out_report.empty()) write_report_csv(cfg.out_report, report);
  return report;
}

std::vector<ReportRow> compare_methods(const ExperimentConfig& cfg) {
  cfg.validate();
  const MixtureWorld world = load_world(cfg);
  const DiffusionSchedule schedule =
      linear_schedule(cfg.T, cfg.beta1, cfg.betaT);
  const SoftClassifierHandle F = make_classifier(cfg, world);
  const NoisePredictor predictor = exact_noise_predictor(world, schedule);
  const SeedSpec eval_seed = substream(cfg.cert.seed, kTagEvalPoints, 0);

  struct Method {
    std::string name;
    DiffSmoothConfig cfg;
    BaseClassifier base;
  };
  std::vector<Method> methods;
  {
    DiffSmoothConfig plain = cfg.cert;
    plain.sigma_local = 0.0;
    plain.sigma_local_shift = 0.0;
    plain.m = 1;
    methods.push_back({"plain_rs", plain, make_plain_classifier(F)});
    DiffSmoothConfig dds = plain;
    methods.push_back(
        {"dds", dds, make_purify_classifier(dds, F, predictor, schedule)});
    methods.push_back({"diffsmooth", cfg.cert,
                       make_purify_classifier(cfg.cert, F, predictor,
                                              schedule)});
    methods.push_back({"local_only", cfg.cert,
                       make_local_only_classifier(cfg.cert, F)});
  }

  std::vector<ReportRow> report;
  std::vector<CertificationRecord> buf;
  for (const auto& method : methods) {
    auto certify_idx = [&](std::int64_t i) {
      const LabeledSample p =
          world.sample_one(eval_seed, static_cast<std::uint64_t>(i));
      DiffSmoothConfig point_cfg = method.cfg;
      point_cfg.seed = substream(cfg.cert.seed, kTagCert,
                                 static_cast<std::uint64_t>(i));
      auto rec = certify_with_base(p.x, p.label, point_cfg, method.base,
                                   F.num_labels);
      rec.index = i;
      return rec;
    };
    parallel_for(0, cfg.eval_count, cfg.workers, buf, certify_idx);
    std::vector<RecordRow> rows(cfg.eval_count);
    if (!cfg.out_records.empty()) {
      const std::string path = cfg.out_records + "." + method.name;
      std::ofstream out(path);
      if (!out) throw ConfigError("cannot write record file: " + path);
      out << "idx\tlabel\tpredict\tradius\tcorrect\ttime\n";
      for (std::int64_t i = 0; i < cfg.eval_count; ++i) {
        write_record_row(out, i, buf[i], cfg.record_timing);
      }
    }
    for (std::int64_t i = 0; i < cfg.eval_count; ++i) {
      rows[i] = {i, buf[i].true_label, buf[i].predicted,
                 buf[i].predicted == kAbstain ? 0.0 : buf[i].radius,
                 buf[i].correct, 0.0};
    }
    const auto part = report_for(cfg, rows, method.cfg.sigma,
                                 method.cfg.sigma_local, method.cfg.m,
                                 method.name);
    report.insert(report.end(), part.begin(), part.end());
  }
  if (!cfg.out_report.empty()) write_report_csv(cfg.out_report, report);
  return report;
}

bool run_theorem_suite(const ExperimentConfig& cfg) {
  const MixtureWorld world = load_world(cfg);
  const DiffusionSchedule schedule =
      linear_schedule(cfg.T, cfg.beta1, cfg.betaT);
  const SdeCoefficients sde = continuous_from_discrete(schedule);
  const double t_star = time_for_alpha_bar(sde, cfg.t1_alpha_bar);
  std::filesystem::create_directories(cfg.out_dir);

  bool pass = true;
  for (std::size_t k = 0; k < cfg.eta_list.size(); ++k) {
    const double eta = cfg.eta_list[k];
    Theorem1Config t1;
    t1.eta = eta;
    t1.t_star = t_star;
    t1.delta_norm = cfg.t1_delta;
    t1.trials = cfg.t1_trials;
    t1.sde_steps = cfg.sde_steps;
    t1.seed = substream(cfg.cert.seed, kTagTheorem1, k);
    const TheoremReport rep = validate_theorem1(world, sde, t1);
    const double slack =
        4.0 * std::sqrt(eta * (1.0 - eta) / cfg.t1_trials);
    const bool ok =
        rep.empirical_violation_rate <= eta + slack && rep.mean_slack > 0.0;
    pass = pass && ok;
    std::ostringstream name;
    name << cfg.out_dir << "/theorem1_eta" << eta << ".txt";
    write_report(rep, name.str(), false);
  }

  const NoisePredictor exact = exact_noise_predictor(world, schedule);
  const TheoremReport exact_rep =
      validate_theorem2(world, schedule, exact, 0.0, cfg.t2_trials,
                        substream(cfg.cert.seed, kTagTheorem2, 0));
  pass = pass && exact_rep.empirical_violation_rate == 0.0;
  write_report(exact_rep, cfg.out_dir + "/theorem2_exact.txt", false);

  if (cfg.t2_lambda > 0.0) {
    const NoisePredictor noisy = perturbed_noise_predictor(
        world, schedule, cfg.t2_lambda,
        substream(cfg.cert.seed, kTagTheorem2, 1));
    const TheoremReport noisy_rep =
        validate_theorem2(world, schedule, noisy, cfg.t2_lambda, cfg.t2_trials,
                          substream(cfg.cert.seed, kTagTheorem2, 2));
    pass = pass && noisy_rep.empirical_violation_rate <= 0.01;
    write_report(noisy_rep, cfg.out_dir + "/theorem2_perturbed.txt", false);
  }
  return pass;
}

void write_report_csv(const std::string& path,
                      const std::vector<ReportRow>& rows) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write report file: " + path);
  f << "sigma,sigma_local,m,radius,certified_accuracy,acr,method\n";
  for (const auto& r : rows) {
    f << fmt(r.sigma) << "," << fmt(r.sigma_local) << "," << r.m << ","
      << fmt(r.radius) << "," << fmt(r.certified_accuracy) << ","
      << fmt(r.acr) << "," << r.method << "\n";
  }
}

}  // namespace diffsmooth

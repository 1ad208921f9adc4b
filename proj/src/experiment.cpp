#include "mtd/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mtd/errors.hpp"
#include "mtd/io.hpp"
#include "mtd/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mtd {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError(path + ": cannot open for writing");
  out << text;
  if (!out) throw LoadError(path + ": write failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json train_config_to_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate},
              {"momentum", c.momentum},
              {"weight_decay", c.weight_decay},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"alpha", c.weights.alpha},
              {"beta", c.weights.beta},
              {"gamma", c.weights.gamma},
              {"mask_rate", c.mask_rate},
              {"eta", c.eta},
              {"seed", c.seed},
              {"eval_every", c.eval_every},
              {"inclusive_fragment", c.inclusive_fragment},
              {"contrastive_batch_sum", c.contrastive_batch_sum}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.weights.alpha = j.value("alpha", c.weights.alpha);
  c.weights.beta = j.value("beta", c.weights.beta);
  c.weights.gamma = j.value("gamma", c.weights.gamma);
  c.mask_rate = j.value("mask_rate", c.mask_rate);
  c.eta = j.value("eta", c.eta);
  c.seed = j.value("seed", c.seed);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.inclusive_fragment = j.value("inclusive_fragment", c.inclusive_fragment);
  c.contrastive_batch_sum = j.value("contrastive_batch_sum", c.contrastive_batch_sum);
  return c;
}

json metrics_to_json(const MetricsReport& r) {
  return json{{"ap", r.average_precision},
              {"one_minus_hl", r.one_minus_hamming},
              {"one_minus_rl", r.one_minus_ranking},
              {"auc", r.auc},
              {"one_minus_oe", r.one_minus_one_error},
              {"one_minus_cov", r.one_minus_coverage},
              {"ap_skipped_samples", r.ap_skipped_samples},
              {"rl_skipped_samples", r.rl_skipped_samples},
              {"oe_skipped_samples", r.oe_skipped_samples},
              {"cov_skipped_samples", r.cov_skipped_samples},
              {"auc_skipped_labels", r.auc_skipped_labels}};
}

}  // namespace

std::string ExperimentConfig::to_json() const {
  json j;
  j["dataset_dir"] = dataset_dir;
  if (synthetic) {
    j["synthetic"] = json{{"n", synthetic->n},
                          {"m", synthetic->m},
                          {"c", synthetic->c},
                          {"view_dims", synthetic->view_dims},
                          {"latent_dim", synthetic->latent_dim},
                          {"noise", synthetic->noise},
                          {"seed", synthetic->seed}};
  }
  j["incompleteness"] = json{{"view_missing_rate", incompleteness.view_missing_rate},
                             {"label_missing_rate", incompleteness.label_missing_rate},
                             {"seed", incompleteness.seed}};
  j["split"] = json{{"train_ratio", split.train_ratio}, {"seed", split.seed}};
  j["train"] = train_config_to_json(train);
  j["embed_dim"] = embed_dim;
  j["hidden_widths"] = hidden_widths;
  j["classifier_input"] = classifier_input;
  j["repeat"] = repeat;
  j["base_seed"] = base_seed;
  j["output_dir"] = output_dir;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig c;
  c.dataset_dir = j.value("dataset_dir", c.dataset_dir);
  if (j.contains("synthetic")) {
    const json& s = j["synthetic"];
    SyntheticSpec spec;
    spec.n = s.value("n", spec.n);
    spec.m = s.value("m", spec.m);
    spec.c = s.value("c", spec.c);
    spec.view_dims = s.value("view_dims", spec.view_dims);
    spec.latent_dim = s.value("latent_dim", spec.latent_dim);
    spec.noise = s.value("noise", spec.noise);
    spec.seed = s.value("seed", spec.seed);
    c.synthetic = spec;
  }
  if (j.contains("incompleteness")) {
    const json& s = j["incompleteness"];
    c.incompleteness.view_missing_rate =
        s.value("view_missing_rate", c.incompleteness.view_missing_rate);
    c.incompleteness.label_missing_rate =
        s.value("label_missing_rate", c.incompleteness.label_missing_rate);
    c.incompleteness.seed = s.value("seed", c.incompleteness.seed);
  }
  if (j.contains("split")) {
    c.split.train_ratio = j["split"].value("train_ratio", c.split.train_ratio);
    c.split.seed = j["split"].value("seed", c.split.seed);
  }
  if (j.contains("train")) c.train = train_config_from_json(j["train"]);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden_widths = j.value("hidden_widths", c.hidden_widths);
  c.classifier_input = j.value("classifier_input", c.classifier_input);
  c.repeat = j.value("repeat", c.repeat);
  c.base_seed = j.value("base_seed", c.base_seed);
  c.output_dir = j.value("output_dir", c.output_dir);
  return c;
}

ModelConfig ExperimentConfig::model_config(const std::vector<std::size_t>& view_dims,
                                           std::size_t num_labels) const {
  ModelConfig mc;
  mc.view_dims = view_dims;
  mc.embed_dim = embed_dim;
  mc.num_labels = num_labels;
  mc.hidden_widths = hidden_widths;
  if (classifier_input == "gated") {
    mc.classifier_input = ClassifierInput::Gated;
  } else if (classifier_input == "concat") {
    mc.classifier_input = ClassifierInput::Concat;
  } else {
    throw ContractError("classifier_input must be 'gated' or 'concat', got '" +
                        classifier_input + "'");
  }
  return mc;
}

std::vector<std::string> prepare_datasets(const ExperimentConfig& config) {
  std::vector<std::string> dirs;
  for (std::size_t r = 0; r < config.repeat; ++r) {
    const std::uint64_t seed = Rng::mix_seed(config.base_seed, r);
    MultiViewDataset complete;
    if (!config.dataset_dir.empty()) {
      complete = load_dataset(config.dataset_dir);
    } else if (config.synthetic) {
      SyntheticSpec spec = *config.synthetic;
      spec.seed = Rng::mix_seed(seed, 1);
      complete = generate_synthetic(spec);
    } else {
      throw ContractError("prepare: need a dataset directory or a synthetic spec");
    }

    IncompletenessSpec inc = config.incompleteness;
    inc.seed = Rng::mix_seed(seed, 2);
    MultiViewDataset weak =
        (inc.view_missing_rate > 0.0 || inc.label_missing_rate > 0.0)
            ? simulate_incompleteness(complete, inc)
            : complete;
    if (!weak.complete_labels) weak.complete_labels = complete.labels;

    SplitSpec split_spec = config.split;
    split_spec.seed = Rng::mix_seed(seed, 3);
    const std::size_t n = weak.num_samples();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(split_spec.seed);
    rng.shuffle(order);
    const std::size_t train_n =
        static_cast<std::size_t>(std::floor(split_spec.train_ratio * static_cast<double>(n) + 1e-9));
    if (train_n == 0 || train_n == n) throw ContractError("prepare: split leaves one side empty");
    std::vector<std::size_t> train_rows(order.begin(), order.begin() + train_n);
    std::vector<std::size_t> test_rows(order.begin() + train_n, order.end());

    const std::string dir =
        (fs::path(config.output_dir) / ("dataset_" + std::to_string(r))).string();
    fs::create_directories(dir);
    save_dataset(dir, weak);

    json manifest;
    manifest["view_missing_rate"] = inc.view_missing_rate;
    manifest["label_missing_rate"] = inc.label_missing_rate;
    manifest["train_ratio"] = split_spec.train_ratio;
    manifest["seed"] = seed;
    manifest["train_indices"] = train_rows;
    manifest["test_indices"] = test_rows;
    write_text_file((fs::path(dir) / "split.json").string(), manifest.dump(2));
    dirs.push_back(dir);
  }
  return dirs;
}

PreparedData load_prepared(const std::string& dir) {
  MultiViewDataset data = load_dataset(dir);
  const fs::path manifest_path = fs::path(dir) / "split.json";
  if (!fs::exists(manifest_path)) {
    throw LoadError(dir + ": split.json manifest missing; run prepare first");
  }
  json manifest = json::parse(read_text_file(manifest_path.string()));
  const std::vector<std::size_t> train_rows = manifest.at("train_indices");
  const std::vector<std::size_t> test_rows = manifest.at("test_indices");
  auto [train, test] = split_by_indices(data, train_rows, test_rows);
  return {std::move(train), std::move(test)};
}

std::string losses_to_csv(const std::vector<LossBreakdown>& losses) {
  std::ostringstream out;
  out << "epoch,l_mc,l_gc,l_ccc,l_re,l_total\n";
  for (std::size_t e = 0; e < losses.size(); ++e) {
    const LossBreakdown& l = losses[e];
    out << (e + 1) << ',' << format_double(l.classification) << ','
        << format_double(l.graph) << ',' << format_double(l.contrastive) << ','
        << format_double(l.reconstruction) << ',' << format_double(l.total) << '\n';
  }
  return out.str();
}

std::string run_record_to_json(const RunRecord& record, const ExperimentConfig& config,
                               const std::string& checkpoint_path) {
  json j;
  j["config"] = json::parse(config.to_json());
  j["config"]["train"] = train_config_to_json(record.config);
  json losses = json::array();
  for (std::size_t e = 0; e < record.per_epoch_losses.size(); ++e) {
    const LossBreakdown& l = record.per_epoch_losses[e];
    json entry{{"l_mc", l.classification},
               {"l_gc", l.graph},
               {"l_ccc", l.contrastive},
               {"l_re", l.reconstruction},
               {"l_total", l.total}};
    if (e < record.epoch_seconds.size()) entry["seconds"] = record.epoch_seconds[e];
    losses.push_back(std::move(entry));
  }
  j["per_epoch_losses"] = losses;
  json evals = json::array();
  for (const EvaluationPoint& e : record.evaluations) {
    json entry = metrics_to_json(e.report);
    entry["epoch"] = e.epoch;
    evals.push_back(entry);
  }
  j["evaluations"] = evals;
  j["checkpoint_path"] = checkpoint_path;
  j["seed"] = record.seed;
  j["wall_clock_s"] = record.wall_clock_s;
  return j.dump(2);
}

TrainArtifacts run_training(const std::string& prepared_dir, const ExperimentConfig& config,
                            const std::string& out_dir) {
  PreparedData data = load_prepared(prepared_dir);
  ModelConfig mc = config.model_config(data.train.view_dims(), data.train.num_labels());
  MtdModel model = init_model(mc, Rng::mix_seed(config.train.seed, 0x6d6f64656cULL));
  RunRecord record = train(data.train, model, config.train, &data.test);

  fs::create_directories(out_dir);
  TrainArtifacts artifacts;
  artifacts.checkpoint_path = (fs::path(out_dir) / "checkpoint.mtdc").string();
  save_model(artifacts.checkpoint_path, model);
  record.checkpoint_path = artifacts.checkpoint_path;

  artifacts.losses_csv_path = (fs::path(out_dir) / "losses.csv").string();
  write_text_file(artifacts.losses_csv_path, losses_to_csv(record.per_epoch_losses));

  std::ostringstream metrics_csv;
  metrics_csv << "epoch," << MetricsReport::csv_header() << '\n';
  for (const EvaluationPoint& e : record.evaluations) {
    metrics_csv << e.epoch << ',' << e.report.csv_row() << '\n';
  }
  artifacts.metrics_csv_path = (fs::path(out_dir) / "metrics.csv").string();
  write_text_file(artifacts.metrics_csv_path, metrics_csv.str());

  artifacts.run_json_path = (fs::path(out_dir) / "run.json").string();
  write_text_file(artifacts.run_json_path,
                  run_record_to_json(record, config, artifacts.checkpoint_path));
  artifacts.record = std::move(record);
  return artifacts;
}

namespace {

struct MetricColumns {
  std::vector<double> ap, hl, rl, auc_v, oe, cov;
  void add(const MetricsReport& r) {
    ap.push_back(r.average_precision);
    hl.push_back(r.one_minus_hamming);
    rl.push_back(r.one_minus_ranking);
    auc_v.push_back(r.auc);
    oe.push_back(r.one_minus_one_error);
    cov.push_back(r.one_minus_coverage);
  }
};

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return {mean, std::sqrt(var)};
}

}  // namespace

std::string run_ablation_experiment(const std::string& prepared_dir,
                                    const ExperimentConfig& config,
                                    const std::vector<std::string>& variants, std::size_t seeds,
                                    const std::string& out_dir) {
  if (seeds == 0) throw ContractError("ablate: need at least one seed");
  PreparedData data = load_prepared(prepared_dir);
  ModelConfig mc = config.model_config(data.train.view_dims(), data.train.num_labels());

  fs::create_directories(out_dir);
  std::ostringstream per_run;
  per_run << "variant,seed," << MetricsReport::csv_header() << '\n';
  std::vector<MetricColumns> columns(variants.size());
  for (std::size_t s = 0; s < seeds; ++s) {
    TrainConfig tc = config.train;
    tc.seed = config.train.seed + s;
    const auto runs = run_ablation(data.train, data.test, mc, tc, variants);
    for (std::size_t k = 0; k < runs.size(); ++k) {
      columns[k].add(runs[k].report);
      per_run << runs[k].variant << ',' << tc.seed << ',' << runs[k].report.csv_row() << '\n';
    }
  }

  std::ostringstream summary;
  summary << "variant,ap_mean,ap_std,one_minus_hl_mean,one_minus_hl_std,one_minus_rl_mean,"
             "one_minus_rl_std,auc_mean,auc_std,one_minus_oe_mean,one_minus_oe_std,"
             "one_minus_cov_mean,one_minus_cov_std\n";
  for (std::size_t k = 0; k < variants.size(); ++k) {
    const auto [ap_m, ap_s] = mean_std(columns[k].ap);
    const auto [hl_m, hl_s] = mean_std(columns[k].hl);
    const auto [rl_m, rl_s] = mean_std(columns[k].rl);
    const auto [auc_m, auc_s] = mean_std(columns[k].auc_v);
    const auto [oe_m, oe_s] = mean_std(columns[k].oe);
    const auto [cov_m, cov_s] = mean_std(columns[k].cov);
    summary << variants[k] << ',' << format_double(ap_m) << ',' << format_double(ap_s) << ','
            << format_double(hl_m) << ',' << format_double(hl_s) << ',' << format_double(rl_m)
            << ',' << format_double(rl_s) << ',' << format_double(auc_m) << ','
            << format_double(auc_s) << ',' << format_double(oe_m) << ',' << format_double(oe_s)
            << ',' << format_double(cov_m) << ',' << format_double(cov_s) << '\n';
  }
  write_text_file((fs::path(out_dir) / "ablation_runs.csv").string(), per_run.str());
  const std::string summary_path = (fs::path(out_dir) / "ablation_summary.csv").string();
  write_text_file(summary_path, summary.str());
  return summary_path;
}

std::string run_sweep(const std::string& prepared_dir, const ExperimentConfig& config,
                      const SweepGrids& grids, std::size_t seeds, const std::string& out_dir) {
  if (seeds == 0) throw ContractError("sweep: need at least one seed");
  PreparedData data = load_prepared(prepared_dir);
  ModelConfig mc = config.model_config(data.train.view_dims(), data.train.num_labels());

  auto grid_or_default = [](const std::vector<double>& grid, double fallback) {
    return grid.empty() ? std::vector<double>{fallback} : grid;
  };
  const auto alphas = grid_or_default(grids.alpha, config.train.weights.alpha);
  const auto betas = grid_or_default(grids.beta, config.train.weights.beta);
  const auto gammas = grid_or_default(grids.gamma, config.train.weights.gamma);
  const auto sigmas = grid_or_default(grids.sigma, config.train.mask_rate);

  std::ostringstream out;
  out << "alpha,beta,gamma,sigma,seed," << MetricsReport::csv_header() << '\n';
  for (double a : alphas) {
    for (double b : betas) {
      for (double g : gammas) {
        for (double s : sigmas) {
          for (std::size_t k = 0; k < seeds; ++k) {
            TrainConfig tc = config.train;
            tc.weights.alpha = a;
            tc.weights.beta = b;
            tc.weights.gamma = g;
            tc.mask_rate = s;
            tc.seed = config.train.seed + k;
            MtdModel model = init_model(mc, Rng::mix_seed(tc.seed, 0x6d6f64656cULL));
            train(data.train, model, tc, nullptr);
            const MetricsReport report = evaluate(model, data.test);
            out << format_double(a) << ',' << format_double(b) << ',' << format_double(g) << ','
                << format_double(s) << ',' << tc.seed << ',' << report.csv_row() << '\n';
          }
        }
      }
    }
  }
  fs::create_directories(out_dir);
  const std::string path = (fs::path(out_dir) / "sweep.csv").string();
  write_text_file(path, out.str());
  return path;
}

MetricsReport evaluate_checkpoint(const std::string& checkpoint_path,
                                  const std::string& prepared_dir) {
  MtdModel model = load_model(checkpoint_path);
  PreparedData data = load_prepared(prepared_dir);
  return evaluate(model, data.test);
}

}  // namespace mtd

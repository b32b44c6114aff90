#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "deltagrad/deltagrad.hpp"

namespace deltagrad::cli {
namespace {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Option groups shared by several commands

struct DataOptions {
  std::string path;
  std::string format = "libsvm";
  std::string label_column = "label";
  // synthetic
  Index n = 1000;
  Index p = 10;
  double noise = 0.05;
  double margin = 4.0;
  std::uint64_t data_seed = 0;
  std::string task = "classification";
  std::string data_out;

  void attach(CLI::App& app) {
    app.add_option("--data", path, "Training data file");
    app.add_option("--format", format, "libsvm, csv or synthetic")
        ->check(CLI::IsMember({"libsvm", "csv", "synthetic"}));
    app.add_option("--label-column", label_column, "CSV label column name");
    app.add_option("--n", n, "Synthetic sample count");
    app.add_option("--p", p, "Synthetic feature count");
    app.add_option("--noise", noise, "Synthetic label-flip rate (classification) or noise std-dev (regression)");
    app.add_option("--margin", margin, "Norm of the planted synthetic weight vector");
    app.add_option("--data-seed", data_seed, "Synthetic generator seed");
    app.add_option("--task", task, "Synthetic task")->check(CLI::IsMember({"classification", "regression"}));
    app.add_option("--data-out", data_out, "Write the loaded data set as libsvm");
  }

  Dataset load(LabelMode mode, Index min_features = 0) const {
    Dataset d = [&] {
      if (format == "synthetic") {
        SyntheticSpec s;
        s.n = n;
        s.p = p;
        s.noise = noise;
        s.margin = margin;
        s.seed = data_seed;
        s.task = task == "regression" ? SyntheticSpec::Task::regression : SyntheticSpec::Task::classification;
        return generate_synthetic(s);
      }
      if (path.empty()) throw InvalidArgument("--data is required unless --format synthetic");
      if (format == "csv") return parse_csv(path, label_column, mode);
      return parse_libsvm(path, mode, min_features);
    }();
    if (min_features != 0 && d.p() != min_features) {
      throw DimensionMismatch("data set has " + std::to_string(d.p()) + " features, expected " +
                              std::to_string(min_features));
    }
    if (!data_out.empty()) write_libsvm(data_out, d);
    return d;
  }
};

LabelMode label_mode(LossKind k) { return k == LossKind::logistic ? LabelMode::binary : LabelMode::real; }

struct TrainOptions {
  std::string loss = "logistic";
  double l2 = 0.01;
  std::string lr = "0.1";
  Index iters = 100;
  Index batch = 0;
  std::uint64_t seed = 0;

  void attach(CLI::App& app) {
    app.add_option("--loss", loss, "logistic or ridge")->check(CLI::IsMember({"logistic", "ridge"}));
    app.add_option("--l2", l2, "L2 regularization coefficient");
    app.add_option("--lr", lr, "Learning-rate schedule, e.g. 0.2:10,0.1");
    app.add_option("--iters", iters, "Iterations T");
    app.add_option("--batch", batch, "Minibatch size (0 or n: full-batch GD)");
    app.add_option("--seed", seed, "Minibatch schedule seed");
  }

  TrainConfig config() const {
    TrainConfig c;
    c.loss.kind = loss == "ridge" ? LossKind::ridge : LossKind::logistic;
    c.loss.l2 = l2;
    c.lr = LearningRateSchedule::parse(lr);
    c.iterations = iters;
    c.batch_size = batch;
    c.seed = seed;
    return c;
  }
};

struct EngineOptions {
  Index period = 5;
  Index burn_in = 10;
  Index history = 2;
  std::string mode = "gd";
  double smoothness = 1.0;

  void attach(CLI::App& app) {
    app.add_option("--T0", period, "Explicit-gradient period");
    app.add_option("--j0", burn_in, "Burn-in iterations");
    app.add_option("--m", history, "Curvature history size");
    app.add_option("--mode", mode, "gd, sgd or general")->check(CLI::IsMember({"gd", "sgd", "general"}));
    app.add_option("--smoothness-threshold", smoothness, "General engine: local smoothness threshold");
  }

  DeltaGradConfig config() const {
    DeltaGradConfig c;
    c.period = period;
    c.burn_in = burn_in;
    c.history = history;
    c.mode = parse_engine_mode(mode);
    c.smoothness_threshold = smoothness;
    c.validate();
    return c;
  }
};

// ---------------------------------------------------------------------------
// Helpers

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json train_config_json(const TrainConfig& c, Index n) {
  return {{"loss", std::string(to_string(c.loss.kind))},
          {"l2", c.loss.l2},
          {"lr", c.lr.to_string()},
          {"iters", c.iterations},
          {"batch", c.effective_batch(n)},
          {"seed", c.seed}};
}

json engine_config_json(const DeltaGradConfig& c) {
  return {{"T0", c.period},
          {"j0", c.burn_in},
          {"m", c.history},
          {"mode", std::string(to_string(c.mode))},
          {"smoothness_threshold", c.smoothness_threshold}};
}

json distances_json(const Distances& d) {
  json j = {{"uw_w", d.retrained_vs_original}, {"uw_iw", d.retrained_vs_incremental}, {"w_iw", d.original_vs_incremental}};
  const double ratio = d.ratio();
  j["ratio"] = std::isfinite(ratio) ? json(ratio) : json(nullptr);
  return j;
}

json trace_json(const UpdateOutcome& o, Index expected) {
  return {{"explicit", o.count(IterationMode::explicit_step)},
          {"approximated", o.count(IterationMode::approximated)},
          {"skipped_empty_batch", o.count(IterationMode::skipped_empty_batch)},
          {"fallback", o.count(IterationMode::fallback)},
          {"full_gradient_evaluations", o.full_gradient_evaluations},
          {"expected_full_gradient_evaluations", expected},
          {"stored_pairs", o.stored_pairs},
          {"rejected_pairs", o.rejected_pairs},
          {"convexity_guard_hits", o.convexity_guard_hits},
          {"smoothness_guard_hits", o.smoothness_guard_hits},
          {"trace", o.trace_string()}};
}

double ratio_or_zero(double a, double b) { return b > 0.0 ? a / b : 0.0; }

/// Accuracy for logistic models, mean squared error for ridge.
json evaluate(LossKind kind, const Dataset& test, const Vector& w) {
  if (kind == LossKind::logistic) return accuracy(test, w);
  const Vector r = test.features() * w - test.labels();
  return r.squaredNorm() / static_cast<double>(test.n());
}

IndexList parse_id_list(const std::string& text, const std::string& source) {
  IndexList ids;
  std::string token;
  std::istringstream in(text);
  std::size_t line = 1;
  auto flush = [&] {
    if (token.empty()) return;
    Index v = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
      throw ParseError("bad sample id '" + token + "' in " + source, line);
    }
    ids.push_back(v);
    token.clear();
  };
  char ch = 0;
  while (in.get(ch)) {
    if (ch == ',' || ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
      flush();
      if (ch == '\n') ++line;
    } else {
      token.push_back(ch);
    }
  }
  flush();
  return ids;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const json& report, const std::string& report_path, std::ostream& out) {
  const std::string text = report.dump(2);
  out << text << '\n';
  if (!report_path.empty()) {
    std::ofstream f(report_path, std::ios::trunc);
    if (!f) throw IoError("cannot open '" + report_path + "' for writing");
    f << text << '\n';
  }
}

/// Deterministic choice of r distinct rows: a prefix of a seeded permutation,
/// so larger r always contains the smaller selections.
IndexList seeded_prefix(Index n, Index r, std::uint64_t seed) {
  IndexList perm(n);
  for (Index i = 0; i < n; ++i) perm[i] = i;
  const CounterRng rng(seed, 0xbe7c);
  for (Index i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i, i + 1)]);
  perm.resize(r);
  return perm;
}

// ---------------------------------------------------------------------------
// Commands

struct TrainCommand {
  DataOptions data;
  TrainOptions train;
  std::string cache_out;
  std::string report;

  json run() const {
    const TrainConfig cfg = train.config();
    const Dataset d = data.load(label_mode(cfg.loss.kind));
    const TrainingHistory h = deltagrad::train(d, cfg);
    if (!cache_out.empty()) save_cache(h, cache_out);
    json r;
    r["command"] = "train";
    r["config"] = train_config_json(cfg, d.n());
    r["data"] = {{"n", d.n()}, {"p", d.p()}, {"fingerprint", to_hex(h.fingerprint)}};
    r["cache"] = cache_out.empty() ? json(nullptr) : json(cache_out);
    r["final_loss"] = loss(cfg.loss, d, h.final_params());
    r["final_gradient_norm"] = h.iterations() ? full_gradient(cfg.loss, d, h.final_params()).norm() : 0.0;
    r["warnings"] = h.warnings;
    return r;
  }
};

struct UpdateCommand {
  bool adding = false;
  DataOptions data;
  EngineOptions engine;
  std::string cache;
  std::optional<std::string> delete_ids;
  std::string delete_file;
  std::string add_file;
  std::string requests;
  bool online = false;
  bool with_baseline = false;
  std::string test_data;
  std::string test_format = "libsvm";
  std::string out_model;
  std::string report;

  json run() const {
    if (cache.empty()) throw InvalidArgument("--cache is required");
    const TrainingHistory stored = load_cache(cache);
    const LossKind kind = stored.config.loss.kind;
    const Dataset d = data.load(label_mode(kind), stored.p);
    const TrainingHistory history = load_cache(cache, d);
    DeltaGradConfig cfg = engine.config();
    cfg.record_trajectory = false;

    json r;
    r["command"] = adding ? "relearn" : "unlearn";
    r["config"] = {{"train", train_config_json(history.config, history.n)}, {"engine", engine_config_json(cfg)}};

    std::optional<Dataset> test;
    if (!test_data.empty()) {
      DataOptions t;
      t.path = test_data;
      t.format = test_format;
      t.label_column = data.label_column;
      test = t.load(label_mode(kind), d.p());
    }
    const char* metric = kind == LossKind::logistic ? "accuracy" : "mse";

    if (online) return run_online(d, history, cfg, test, metric, std::move(r));

    ChangeSet change;
    if (adding) {
      if (add_file.empty()) throw InvalidArgument("relearn needs --add-file");
      change = ChangeSet::addition(parse_libsvm(add_file, label_mode(kind), d.p()));
      if (change.added->p() != d.p()) throw DimensionMismatch("added rows have the wrong feature count");
    } else {
      IndexList ids;
      if (delete_ids) ids = parse_id_list(*delete_ids, "--delete-ids");
      if (!delete_file.empty()) {
        const IndexList more = parse_id_list(read_text(delete_file), delete_file);
        ids.insert(ids.end(), more.begin(), more.end());
      }
      if (!delete_ids && delete_file.empty()) throw InvalidArgument("unlearn needs --delete-ids or --delete-file");
      change = ChangeSet::deletion(std::move(ids));
    }
    r["change"] = {{"direction", adding ? "add" : "delete"}, {"r", change.size()}, {"n", d.n()}};

    const UpdateOutcome outcome = update(d, history, change, cfg);
    const Vector& w = history.final_params();
    if (!out_model.empty()) save_model(outcome.params, out_model);

    json timings = {{"deltagrad_s", outcome.seconds}, {"baseline_s", nullptr}, {"speedup", nullptr}};
    json dist = nullptr;
    json acc = {{"metric", metric}, {"original", nullptr}, {"baseline", nullptr}, {"deltagrad", nullptr}};
    std::optional<Vector> wu;
    if (with_baseline) {
      const auto t0 = detail::Clock::now();
      wu = baseline_retrain(d, history, change);
      const double base_s = detail::seconds_since(t0);
      timings["baseline_s"] = base_s;
      timings["speedup"] = ratio_or_zero(base_s, outcome.seconds);
      dist = distances_json(Distances::between(w, *wu, outcome.params));
    }
    if (test) {
      acc["original"] = evaluate(kind, *test, w);
      acc["deltagrad"] = evaluate(kind, *test, outcome.params);
      if (wu) acc["baseline"] = evaluate(kind, *test, *wu);
    }
    r["distances"] = dist;
    r["accuracies"] = test ? acc : json(nullptr);
    r["timings"] = timings;
    r["mode_trace"] = trace_json(outcome, expected_explicit_iterations(history.iterations(), cfg.burn_in, cfg.period));
    r["model"] = out_model.empty() ? json(nullptr) : json(out_model);
    r["params"] = vector_json(outcome.params);
    r["warnings"] = outcome.warnings;
    return r;
  }

  json run_online(const Dataset& d, const TrainingHistory& history, const DeltaGradConfig& cfg,
                  const std::optional<Dataset>& test, const char* metric, json r) const {
    std::vector<OnlineRequest> reqs;
    if (!requests.empty()) reqs = parse_requests(requests, d.p(), label_mode(history.config.loss.kind));
    if (delete_ids) {
      for (Index i : parse_id_list(*delete_ids, "--delete-ids")) reqs.push_back(OnlineRequest::deletion(i));
    }
    if (!delete_file.empty()) {
      for (Index i : parse_id_list(read_text(delete_file), delete_file)) reqs.push_back(OnlineRequest::deletion(i));
    }
    if (!add_file.empty()) {
      const Dataset rows = parse_libsvm(add_file, label_mode(history.config.loss.kind), d.p());
      for (Index i = 0; i < rows.n(); ++i) reqs.push_back(OnlineRequest::addition(rows.select(IndexList{i})));
    }
    const OnlineOutcome o = unlearn_online(d, history, reqs, cfg);
    const Vector& w = history.final_params();
    if (!out_model.empty()) save_model(o.params, out_model);

    json steps = json::array();
    for (const auto& s : o.steps) {
      steps.push_back({{"op", s.direction == Direction::remove ? "del" : "add"},
                       {"index", s.index},
                       {"shift", s.shift},
                       {"from_original", s.from_original},
                       {"full_gradient_evaluations", s.full_gradient_evaluations},
                       {"fallbacks", s.fallbacks}});
    }
    r["change"] = {{"direction", "stream"}, {"requests", reqs.size()}, {"n", d.n()}, {"live", o.live.size()}};
    json timings = {{"deltagrad_s", o.seconds}, {"baseline_s", nullptr}, {"speedup", nullptr}};
    json dist = nullptr;
    std::optional<Vector> wu;
    if (with_baseline) {
      const auto t0 = detail::Clock::now();
      wu = with_model(history.config.loss, [&](const auto& m) { return baseline_retrain_online(m, o, history); });
      const double base_s = detail::seconds_since(t0);
      timings["baseline_s"] = base_s;
      timings["speedup"] = ratio_or_zero(base_s, o.seconds);
      dist = distances_json(Distances::between(w, *wu, o.params));
    }
    json acc = nullptr;
    if (test) {
      const LossKind kind = history.config.loss.kind;
      acc = {{"metric", metric},
             {"original", evaluate(kind, *test, w)},
             {"baseline", wu ? evaluate(kind, *test, *wu) : json(nullptr)},
             {"deltagrad", evaluate(kind, *test, o.params)}};
    }
    r["distances"] = dist;
    r["accuracies"] = acc;
    r["timings"] = timings;
    r["requests"] = steps;
    r["model"] = out_model.empty() ? json(nullptr) : json(out_model);
    r["params"] = vector_json(o.params);
    return r;
  }
};

struct NoiseCommand {
  DataOptions data;
  std::string model;
  std::string cache;
  double epsilon = 1.0;
  Index deleted = 1;
  double c1 = 0.2;
  Index history = 2;
  std::uint64_t seed = 0;
  std::string out_model;
  std::string report;

  json run() const {
    if (model.empty() || cache.empty()) throw InvalidArgument("noise needs --model and --cache");
    if (!(epsilon > 0.0)) throw InvalidArgument("--epsilon must be positive");
    const TrainingHistory stored = load_cache(cache);
    const Dataset d = data.load(label_mode(stored.config.loss.kind), stored.p);
    const TrainingHistory h = load_cache(cache, d);
    const Vector w = load_model(model);
    if (static_cast<Index>(w.size()) != d.p()) throw DimensionMismatch("model length differs from feature count");

    EstimateOptions opt;
    opt.c1 = c1;
    opt.history = history;
    opt.seed = seed;
    const ConstantEstimates k = estimate_constants(d, h, opt);
    double eta = INFINITY;
    for (const auto& s : h.config.lr.segments()) eta = std::min(eta, s.rate);
    const PrivacyParams pp = PrivacyParams::from(k, epsilon, d.p(), eta, d.n(), deleted);
    const double delta = delta_bound(pp);
    if (!(delta > 0.0)) throw PrivacyError("delta is zero; nothing was deleted (use --deleted r with r >= 1)");
    const double scale = delta / epsilon;
    const Vector noised = laplace_noise(w, scale, seed);
    if (!noised.allFinite()) throw PrivacyError("noise scale overflowed; the bound is too loose for this problem");
    if (!out_model.empty()) save_model(noised, out_model);

    json r;
    r["command"] = "noise";
    r["config"] = {{"epsilon", epsilon}, {"deleted", deleted}, {"c1", c1}, {"m", history}, {"seed", seed}, {"eta", eta}};
    r["constants"] = {{"mu", k.mu}, {"L", k.L}, {"c0", k.c0}, {"c2", k.c2}, {"c1", k.c1}, {"m", k.m},
                      {"K1", k.K1}, {"K2", k.K2}, {"e", k.e}, {"M1", k.M1}, {"A", k.A}};
    r["delta"] = delta;
    r["scale"] = scale;
    r["model"] = out_model.empty() ? json(nullptr) : json(out_model);
    r["params"] = vector_json(noised);
    return r;
  }
};

struct BenchCommand {
  DataOptions data;
  TrainOptions train;
  EngineOptions engine;
  std::string cache;
  std::string rates = "0.001,0.005,0.01";
  std::string periods = "5";
  std::uint64_t selection_seed = 0;
  std::string csv;
  std::string report;

  static std::vector<double> parse_doubles(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      double v = 0;
      const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
      if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
        throw InvalidArgument(std::string("bad value '") + item + "' in " + flag);
      }
      out.push_back(v);
    }
    if (out.empty()) throw InvalidArgument(std::string(flag) + " is empty");
    return out;
  }

  json run() const {
    TrainingHistory h;
    Dataset d = [&] {
      if (!cache.empty()) {
        const TrainingHistory stored = load_cache(cache);
        Dataset loaded = data.load(label_mode(stored.config.loss.kind), stored.p);
        h = load_cache(cache, loaded);
        return loaded;
      }
      const TrainConfig cfg = train.config();
      Dataset loaded = data.load(label_mode(cfg.loss.kind));
      h = deltagrad::train(loaded, cfg);
      return loaded;
    }();

    const auto rate_list = parse_doubles(rates, "--rates");
    std::vector<Index> period_list;
    for (double v : parse_doubles(periods, "--periods")) {
      if (!(v >= 1.0) || v != std::floor(v)) throw InvalidArgument("--periods must be positive integers");
      period_list.push_back(static_cast<Index>(v));
    }
    for (double rate : rate_list) {
      if (!(rate >= 0.0) || !(rate < 1.0)) throw InvalidArgument("--rates must lie in [0, 1)");
    }

    json rows = json::array();
    std::ostringstream table;
    table << std::setprecision(17);
    table << "rate,r,T0,baseline_s,deltagrad_s,speedup,baseline_evals,deltagrad_evals,expected_evals,uw_w,uw_iw,w_iw\n";
    for (double rate : rate_list) {
      const auto r = static_cast<Index>(std::llround(rate * static_cast<double>(d.n())));
      const ChangeSet change = ChangeSet::deletion(seeded_prefix(d.n(), r, selection_seed));
      for (Index period : period_list) {
        DeltaGradConfig cfg = engine.config();
        cfg.period = period;
        const BenchmarkReport rep = record_benchmark(d, h, change, cfg);
        const auto& dd = rep.distances;
        rows.push_back({{"rate", rate},
                        {"r", r},
                        {"T0", period},
                        {"baseline_s", rep.baseline_seconds},
                        {"deltagrad_s", rep.deltagrad_seconds},
                        {"speedup", rep.speedup()},
                        {"baseline_evals", rep.baseline_gradient_evaluations},
                        {"deltagrad_evals", rep.deltagrad_gradient_evaluations},
                        {"expected_evals", rep.expected_deltagrad_evaluations},
                        {"uw_w", dd.retrained_vs_original},
                        {"uw_iw", dd.retrained_vs_incremental},
                        {"w_iw", dd.original_vs_incremental}});
        table << rate << ',' << r << ',' << period << ',' << rep.baseline_seconds << ',' << rep.deltagrad_seconds
              << ',' << rep.speedup() << ',' << rep.baseline_gradient_evaluations << ','
              << rep.deltagrad_gradient_evaluations << ',' << rep.expected_deltagrad_evaluations << ','
              << dd.retrained_vs_original << ',' << dd.retrained_vs_incremental << ','
              << dd.original_vs_incremental << '\n';
      }
    }
    if (!csv.empty()) {
      std::ofstream f(csv, std::ios::trunc);
      if (!f) throw IoError("cannot open '" + csv + "' for writing");
      f << table.str();
    }

    json r;
    r["command"] = "bench";
    r["config"] = {{"train", train_config_json(h.config, h.n)}, {"engine", engine_config_json(engine.config())}};
    r["data"] = {{"n", d.n()}, {"p", d.p()}};
    r["rows"] = rows;
    return r;
  }
};

json error_report(const std::string& command, int code, const std::string& kind, const std::string& message) {
  return {{"command", command}, {"error", {{"kind", kind}, {"message", message}}}, {"exit_status", code}};
}

std::string kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::parse: return "parse";
    case ErrorKind::cache_format: return "cache_format";
    case ErrorKind::fingerprint_mismatch: return "fingerprint_mismatch";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::privacy: return "privacy";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Train models with a cached optimization path and update them after data deletion or addition."};
  app.name("deltagrad");
  app.require_subcommand(1);

  TrainCommand train_cmd;
  auto* train_app = app.add_subcommand("train", "Train a model and write the history cache");
  train_cmd.data.attach(*train_app);
  train_cmd.train.attach(*train_app);
  train_app->add_option("--cache-out", train_cmd.cache_out, "History cache to write");
  train_app->add_option("--report", train_cmd.report, "Also write the JSON report here");

  UpdateCommand unlearn_cmd;
  UpdateCommand relearn_cmd;
  relearn_cmd.adding = true;
  auto attach_update = [](CLI::App& sub, UpdateCommand& c) {
    c.data.attach(sub);
    c.engine.attach(sub);
    sub.add_option("--cache", c.cache, "History cache from `train`")->required();
    sub.add_option("--delete-ids", c.delete_ids, "Comma-separated row ids to delete");
    sub.add_option("--delete-file", c.delete_file, "File of row ids to delete");
    sub.add_option("--add-file", c.add_file, "libsvm rows to add");
    sub.add_option("--requests", c.requests, "Online request stream: `del <id>` / `add <libsvm-row>` lines");
    sub.add_flag("--online", c.online, "Process the change as a sequential request stream");
    sub.add_flag("--with-baseline", c.with_baseline, "Also retrain from scratch and report distances");
    sub.add_option("--test-data", c.test_data, "Held-out data for accuracies");
    sub.add_option("--test-format", c.test_format, "libsvm or csv")->check(CLI::IsMember({"libsvm", "csv"}));
    sub.add_option("--out", c.out_model, "Write the updated model");
    sub.add_option("--report", c.report, "Also write the JSON report here");
  };
  auto* unlearn_app = app.add_subcommand("unlearn", "Remove samples from a trained model");
  attach_update(*unlearn_app, unlearn_cmd);
  auto* relearn_app = app.add_subcommand("relearn", "Add samples to a trained model");
  attach_update(*relearn_app, relearn_cmd);

  NoiseCommand noise_cmd;
  auto* noise_app = app.add_subcommand("noise", "Add calibrated Laplace noise to a model");
  noise_cmd.data.attach(*noise_app);
  noise_app->add_option("--model", noise_cmd.model, "Model file to noise")->required();
  noise_app->add_option("--cache", noise_cmd.cache, "History cache the model came from")->required();
  noise_app->add_option("--epsilon", noise_cmd.epsilon, "Privacy parameter")->required();
  noise_app->add_option("--deleted", noise_cmd.deleted, "Number of deleted samples r");
  noise_app->add_option("--c1", noise_cmd.c1, "Strong-independence constant");
  noise_app->add_option("--m", noise_cmd.history, "Curvature history size");
  noise_app->add_option("--seed", noise_cmd.seed, "Noise seed");
  noise_app->add_option("--out", noise_cmd.out_model, "Write the noised model");
  noise_app->add_option("--report", noise_cmd.report, "Also write the JSON report here");

  BenchCommand bench_cmd;
  auto* bench_app = app.add_subcommand("bench", "Time retraining against the incremental update");
  bench_cmd.data.attach(*bench_app);
  bench_cmd.train.attach(*bench_app);
  bench_cmd.engine.attach(*bench_app);
  bench_app->add_option("--cache", bench_cmd.cache, "Use this history instead of training");
  bench_app->add_option("--rates", bench_cmd.rates, "Comma-separated delete rates");
  bench_app->add_option("--periods", bench_cmd.periods, "Comma-separated T0 values");
  bench_app->add_option("--selection-seed", bench_cmd.selection_seed, "Seed choosing the deleted rows");
  bench_app->add_option("--csv", bench_cmd.csv, "Write the table as CSV");
  bench_app->add_option("--report", bench_cmd.report, "Also write the JSON report here");

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("deltagrad");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  std::string command = args.empty() ? "" : args.front();
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = static_cast<int>(ErrorKind::invalid_argument);
    err << "deltagrad: " << e.what() << '\n';
    out << error_report(command, code, "invalid_argument", e.what()).dump(2) << '\n';
    return code;
  }

  try {
    json report;
    std::string report_path;
    if (train_app->parsed()) {
      report = train_cmd.run();
      report_path = train_cmd.report;
    } else if (unlearn_app->parsed()) {
      report = unlearn_cmd.run();
      report_path = unlearn_cmd.report;
    } else if (relearn_app->parsed()) {
      report = relearn_cmd.run();
      report_path = relearn_cmd.report;
    } else if (noise_app->parsed()) {
      report = noise_cmd.run();
      report_path = noise_cmd.report;
    } else {
      report = bench_cmd.run();
      report_path = bench_cmd.report;
    }
    report["exit_status"] = 0;
    emit(report, report_path, out);
    return 0;
  } catch (const Error& e) {
    const int code = static_cast<int>(e.kind());
    err << "deltagrad " << command << ": " << e.what() << '\n';
    out << error_report(command, code, kind_name(e.kind()), e.what()).dump(2) << '\n';
    return code;
  } catch (const std::exception& e) {
    const int code = static_cast<int>(ErrorKind::io);
    err << "deltagrad " << command << ": " << e.what() << '\n';
    out << error_report(command, code, "io", e.what()).dump(2) << '\n';
    return code;
  }
}

}  // namespace deltagrad::cli

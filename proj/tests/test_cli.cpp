#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "deltagrad/deltagrad.hpp"
#include "test_support.hpp"

using namespace deltagrad;
using json = nlohmann::ordered_json;

namespace {

struct Run {
  int code = -1;
  json report;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.err = err.str();
  r.report = json::parse(out.str());  // throws if the report is not valid JSON
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> synthetic(Index n, Index p) {
  return {"--format", "synthetic", "--n", std::to_string(n), "--p", std::to_string(p)};
}

std::vector<std::string> operator+(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::string train_cache(const std::filesystem::path& dir, const std::vector<std::string>& extra = {}) {
  const std::string cache = (dir / "h.dgc").string();
  const auto r = invoke(std::vector<std::string>{"train", "--cache-out", cache} + synthetic(1000, 10) + extra);
  EXPECT_EQ(r.code, 0) << r.err;
  return cache;
}

void expect_triangle(const json& d) {
  const double a = d["uw_w"], b = d["uw_iw"], c = d["w_iw"];
  EXPECT_LE(a, b + c + 1e-9);
  EXPECT_LE(b, a + c + 1e-9);
  EXPECT_LE(c, a + b + 1e-9);
}

}  // namespace

TEST(CliTrain, WritesLoadableCache) {
  const auto dir = dgtest::scratch_dir("cli_train");
  const auto cache = train_cache(dir);
  const auto h = load_cache(cache);
  EXPECT_EQ(h.n, 1000u);
  EXPECT_EQ(h.p, 10u);
  EXPECT_EQ(h.iterations(), 100u);

  const auto r = invoke(std::vector<std::string>{"train"} + synthetic(1000, 10));
  EXPECT_EQ(r.report["command"], "train");
  EXPECT_EQ(r.report["exit_status"], 0);
  EXPECT_TRUE(r.report["final_loss"].is_number());
  EXPECT_TRUE(r.report["final_gradient_norm"].is_number());
}

TEST(CliTrain, ZeroIterations) {
  const auto dir = dgtest::scratch_dir("cli_train0");
  const auto cache = train_cache(dir, {"--iters", "0"});
  const auto h = load_cache(cache);
  EXPECT_EQ(h.iterations(), 0u);
  ASSERT_EQ(h.params.size(), 1u);
  EXPECT_EQ(h.params[0], Vector::Zero(10));
}

TEST(CliTrain, RerunIsByteIdentical) {
  const auto a = dgtest::scratch_dir("cli_det_a");
  const auto b = dgtest::scratch_dir("cli_det_b");
  const std::vector<std::string> flags = {"--batch", "128", "--seed", "9", "--lr", "0.2:40,0.1"};
  const auto ca = train_cache(a, flags);
  const auto cb = train_cache(b, flags);
  const auto bytes = slurp(ca);
  EXPECT_FALSE(bytes.empty());
  EXPECT_EQ(bytes, slurp(cb));
}

TEST(CliTrain, DataFileFormats) {
  const auto dir = dgtest::scratch_dir("cli_files");
  const Dataset d = dgtest::logistic_problem(200, 4, 3);
  write_libsvm((dir / "d.svm").string(), d);
  {
    std::ofstream f(dir / "d.csv");
    write_csv(f, d, "label");
  }
  const auto a = invoke({"train", "--data", (dir / "d.svm").string(), "--cache-out", (dir / "a.dgc").string()});
  const auto b = invoke({"train", "--data", (dir / "d.csv").string(), "--format", "csv", "--cache-out",
                         (dir / "b.dgc").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(a.report["data"]["fingerprint"], b.report["data"]["fingerprint"]);
  EXPECT_EQ(slurp(dir / "a.dgc"), slurp(dir / "b.dgc"));
}

TEST(CliUnlearn, EmptyDeletionHasZeroDistances) {
  const auto dir = dgtest::scratch_dir("cli_empty");
  const auto cache = train_cache(dir);
  const auto r = invoke(std::vector<std::string>{"unlearn", "--cache", cache, "--delete-ids", "", "--with-baseline"} +
                        synthetic(1000, 10));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report["distances"]["uw_iw"], 0.0);
  EXPECT_EQ(r.report["distances"]["uw_w"], 0.0);
  EXPECT_EQ(r.report["distances"]["w_iw"], 0.0);
  EXPECT_EQ(r.report["change"]["r"], 0);
}

TEST(CliUnlearn, SyntheticBenchmarkRatio) {
  const auto dir = dgtest::scratch_dir("cli_bench_ratio");
  const std::string cache = (dir / "h.dgc").string();
  const auto data = synthetic(5000, 20);
  ASSERT_EQ(invoke(std::vector<std::string>{"train", "--l2", "0.01", "--lr", "0.1", "--iters", "300", "--cache-out",
                                            cache} + data)
                .code,
            0);
  std::string ids;
  for (Index i : dgtest::random_subset(5000, 50, 4)) ids += std::to_string(i) + ",";
  const auto model = (dir / "w.dgw").string();
  const auto r = invoke(std::vector<std::string>{"unlearn", "--cache", cache, "--delete-ids", ids, "--with-baseline",
                                                 "--T0", "5", "--j0", "10", "--m", "2", "--out", model} +
                        data);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto& d = r.report["distances"];
  EXPECT_LE(d["uw_iw"].get<double>(), 0.2 * d["uw_w"].get<double>());
  expect_triangle(d);
  EXPECT_EQ(r.report["mode_trace"]["full_gradient_evaluations"], r.report["mode_trace"]["expected_full_gradient_evaluations"]);

  // distances are recomputable from the emitted files
  const Vector wi = load_model(model);
  const Vector w = load_cache(cache).final_params();
  EXPECT_NEAR((w - wi).norm(), d["w_iw"].get<double>(), 1e-12);
  ASSERT_EQ(r.report["params"].size(), 20u);
  for (Index i = 0; i < 20; ++i) EXPECT_EQ(r.report["params"][i].get<double>(), wi[static_cast<Eigen::Index>(i)]);
}

TEST(CliUnlearn, TestAccuracies) {
  const auto dir = dgtest::scratch_dir("cli_acc");
  SyntheticSpec s;
  s.n = 1300;
  s.p = 10;
  const auto [train_rows, test_rows] = split_rows(generate_synthetic(s), 1000);
  const std::string train_path = (dir / "train.svm").string();
  write_libsvm(train_path, train_rows);
  write_libsvm((dir / "test.svm").string(), test_rows);
  const std::string cache = (dir / "h.dgc").string();
  ASSERT_EQ(invoke({"train", "--data", train_path, "--cache-out", cache}).code, 0);
  const auto r = invoke({"unlearn", "--cache", cache, "--data", train_path, "--delete-ids", "1,2,3", "--with-baseline",
                         "--test-data", (dir / "test.svm").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto& a = r.report["accuracies"];
  EXPECT_EQ(a["metric"], "accuracy");
  EXPECT_NEAR(a["baseline"].get<double>(), a["deltagrad"].get<double>(), 0.005);
  EXPECT_GT(a["original"].get<double>(), 0.7);
}

TEST(CliUnlearn, OnlineEntriesPerRequest) {
  const auto dir = dgtest::scratch_dir("cli_online");
  const auto cache = train_cache(dir);
  {
    std::ofstream f(dir / "req.txt");
    for (Index i : dgtest::random_subset(1000, 100, 8)) f << "del " << i << "\n";
  }
  const auto r = invoke(std::vector<std::string>{"unlearn", "--cache", cache, "--online", "--requests",
                                                 (dir / "req.txt").string(), "--with-baseline"} +
                        synthetic(1000, 10));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report["requests"].size(), 100u);
  EXPECT_EQ(r.report["change"]["live"], 900);
  expect_triangle(r.report["distances"]);
}

TEST(CliRelearn, AddRowsMatchesLibrary) {
  const auto dir = dgtest::scratch_dir("cli_relearn");
  const auto cache = train_cache(dir);
  SyntheticSpec s;
  s.n = 5;
  s.p = 10;
  s.seed = 41;
  const Dataset extra = generate_synthetic(s);
  write_libsvm((dir / "add.svm").string(), extra);
  const auto r = invoke(std::vector<std::string>{"relearn", "--cache", cache, "--add-file", (dir / "add.svm").string(),
                                                 "--with-baseline"} +
                        synthetic(1000, 10));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report["change"]["direction"], "add");
  EXPECT_LE(r.report["distances"]["uw_iw"].get<double>(), 0.2 * r.report["distances"]["uw_w"].get<double>());
}

TEST(CliNoise, VanishingScaleAndDeterminism) {
  // small features against a strong regularizer keep the estimated constants moderate
  const auto dir = dgtest::scratch_dir("cli_noise");
  Dataset raw = dgtest::logistic_problem(5000, 5, 12);
  raw = Dataset(RowMatrix(raw.features() * 0.05), raw.labels());
  const std::string data_path = (dir / "d.svm").string();
  write_libsvm(data_path, raw);
  const std::vector<std::string> data = {"--data", data_path};
  const std::string cache = (dir / "h.dgc").string();
  ASSERT_EQ(invoke(std::vector<std::string>{"train", "--l2", "1", "--lr", "0.2", "--iters", "60", "--cache-out", cache} +
                   data)
                .code,
            0);
  const std::string model = (dir / "w.dgw").string();
  ASSERT_EQ(invoke(std::vector<std::string>{"unlearn", "--cache", cache, "--delete-ids", "3,4", "--out", model} + data).code,
            0);
  const Vector w = load_model(model);

  const auto noise = [&](const std::string& eps, const std::string& seed, const std::string& out) {
    return invoke(std::vector<std::string>{"noise", "--model", model, "--cache", cache, "--epsilon", eps, "--seed", seed,
                                           "--deleted", "2", "--out", out} +
                  data);
  };
  const auto big = noise("1e12", "1", (dir / "big.dgw").string());
  ASSERT_EQ(big.code, 0) << big.err;
  EXPECT_LE((load_model((dir / "big.dgw").string()) - w).cwiseAbs().maxCoeff(), 1e-6);

  const auto a = noise("1", "5", (dir / "a.dgw").string());
  const auto b = noise("1", "5", (dir / "b.dgw").string());
  const auto c = noise("1", "6", (dir / "c.dgw").string());
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(slurp(dir / "a.dgw"), slurp(dir / "b.dgw"));
  EXPECT_NE(slurp(dir / "a.dgw"), slurp(dir / "c.dgw"));

  // the formula evaluated by hand from the reported constants
  const auto& k = a.report["constants"];
  const double mu = k["mu"], c0 = k["c0"], m1 = k["M1"], big_a = k["A"];
  const double n = 5000, r = 2, p = 5, eta = 0.2;
  const double gap = mu / 2 - r * mu / (n - r) - c0 * m1 * r / (2 * n);
  const double expected = 2 * std::sqrt(p) * big_a * m1 * m1 * r * r / (eta * gap * gap * (n - r) * (n - 2 * r));
  const double delta = a.report["delta"];
  EXPECT_NEAR(delta, expected, 1e-12 * expected);
  EXPECT_DOUBLE_EQ(a.report["scale"].get<double>(), delta / 1.0);
}

TEST(CliNoise, PrivacyErrorExitCode) {
  const auto dir = dgtest::scratch_dir("cli_noise_err");
  const auto cache = train_cache(dir, {"--l2", "0.01"});
  const std::string model = (dir / "w.dgw").string();
  save_model(load_cache(cache).final_params(), model);
  const auto r = invoke(std::vector<std::string>{"noise", "--model", model, "--cache", cache, "--epsilon", "1",
                                                 "--deleted", "600"} +
                        synthetic(1000, 10));
  EXPECT_EQ(r.code, 9);
  EXPECT_EQ(r.report["error"]["kind"], "privacy");
  EXPECT_EQ(r.report["exit_status"], 9);
}

TEST(CliBench, RowsCountsAndMonotoneDistance) {
  const auto dir = dgtest::scratch_dir("cli_bench");
  const auto r = invoke(std::vector<std::string>{"bench", "--rates", "0.002,0.005,0.01", "--periods", "5", "--iters", "120",
                                                 "--csv", (dir / "t.csv").string()} +
                        synthetic(2000, 10));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto& rows = r.report["rows"];
  ASSERT_EQ(rows.size(), 3u);
  double previous = 0.0;
  for (const auto& row : rows) {
    EXPECT_EQ(row["deltagrad_evals"], expected_explicit_iterations(120, 10, 5));
    EXPECT_EQ(row["deltagrad_evals"], 10 + (120 - 10 + 4) / 5);
    EXPECT_EQ(row["baseline_evals"], 120);
    EXPECT_GE(row["uw_w"].get<double>(), previous);
    previous = row["uw_w"];
  }
  const std::string table = slurp(dir / "t.csv");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
}

TEST(CliBench, PeriodSweep) {
  const auto r = invoke(std::vector<std::string>{"bench", "--rates", "0.01", "--periods", "1,2,10", "--iters", "60"} +
                        synthetic(500, 5));
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_EQ(r.report["rows"].size(), 3u);
  EXPECT_EQ(r.report["rows"][0]["uw_iw"], 0.0);
  for (const auto& row : r.report["rows"]) {
    EXPECT_EQ(row["deltagrad_evals"], expected_explicit_iterations(60, 10, row["T0"].get<Index>()));
  }
}

TEST(CliErrors, DistinctExitCodes) {
  const auto dir = dgtest::scratch_dir("cli_err");
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"train", "--loss", "hinge"}).code, 2);
  EXPECT_EQ(invoke({"train", "--iters", "abc"}).code, 2);
  EXPECT_EQ(invoke({"train"}).code, 2);  // no data source
  EXPECT_EQ(invoke({"train", "--data", (dir / "missing.svm").string()}).code, 10);

  {
    std::ofstream f(dir / "bad.svm");
    f << "1 1:0.5\n1 oops\n";
  }
  const auto parse = invoke({"train", "--data", (dir / "bad.svm").string()});
  EXPECT_EQ(parse.code, 4);
  EXPECT_EQ(parse.report["error"]["kind"], "parse");

  {
    std::ofstream f(dir / "junk.dgc");
    f << "not a cache";
  }
  EXPECT_EQ(invoke(std::vector<std::string>{"unlearn", "--cache", (dir / "junk.dgc").string(), "--delete-ids", "1"} +
                   synthetic(1000, 10))
                .code,
            5);

  const auto cache = train_cache(dir);
  auto other = synthetic(1000, 10);
  other.insert(other.end(), {"--data-seed", "3"});
  EXPECT_EQ(invoke(std::vector<std::string>{"unlearn", "--cache", cache, "--delete-ids", "1"} + other).code, 6);
  EXPECT_EQ(invoke(std::vector<std::string>{"unlearn", "--cache", cache, "--delete-ids", "1"} + synthetic(1000, 11)).code,
            3);
  EXPECT_EQ(invoke(std::vector<std::string>{"unlearn", "--cache", cache, "--delete-ids", "5000"} + synthetic(1000, 10)).code,
            2);
  EXPECT_EQ(invoke(std::vector<std::string>{"unlearn", "--cache", cache, "--delete-ids", "1,1"} + synthetic(1000, 10)).code,
            2);
  EXPECT_EQ(invoke(std::vector<std::string>{"train", "--loss", "ridge", "--task", "regression", "--lr", "50", "--iters", "400"} + synthetic(200, 5)).code, 7);
}

TEST(CliErrors, HelpExitsZero) {
  std::ostringstream out, err;
  EXPECT_EQ(cli::run({"--help"}, out, err), 0);
  EXPECT_NE(out.str().find("unlearn"), std::string::npos);
}

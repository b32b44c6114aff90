#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "deltagrad/dataio.hpp"
#include "test_support.hpp"

using namespace deltagrad;
using namespace dgtest;

namespace {

TrainingHistory small_history(const Dataset& d, Index batch = 0) {
  TrainConfig c;
  c.lr = LearningRateSchedule::parse("0.2:3,0.1");
  c.iterations = 12;
  c.batch_size = batch;
  c.seed = 77;
  c.loss = {LossKind::logistic, 0.01};
  return train(d, c);
}

template <class Fn>
void expect_parse_error_at(Fn&& fn, std::size_t line) {
  try {
    fn();
    ADD_FAILURE() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
  }
}

}  // namespace

// --- libsvm ------------------------------------------------------------------

TEST(ParseLibsvm, SingleLine) {
  std::istringstream in("+1 1:0.5 3:2.0\n");
  const Dataset d = parse_libsvm(in);
  ASSERT_EQ(d.n(), 1u);
  ASSERT_EQ(d.p(), 3u);
  EXPECT_EQ(d.features()(0, 0), 0.5);
  EXPECT_EQ(d.features()(0, 1), 0.0);
  EXPECT_EQ(d.features()(0, 2), 2.0);
  EXPECT_EQ(d.label(0), 1.0);
}

TEST(ParseLibsvm, ZeroOneLabelsAndComments) {
  std::istringstream in("# header\n0 2:1\n\n1 1:3 # trailing\n-1 1:1\n");
  const Dataset d = parse_libsvm(in);
  ASSERT_EQ(d.n(), 3u);
  EXPECT_EQ(d.label(0), -1.0);
  EXPECT_EQ(d.label(1), 1.0);
  EXPECT_EQ(d.label(2), -1.0);
  EXPECT_EQ(d.p(), 2u);
}

TEST(ParseLibsvm, Errors) {
  expect_parse_error_at([] { std::istringstream in(""); (void)parse_libsvm(in); }, 0);
  try {
    std::istringstream in("");
    (void)parse_libsvm(in);
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("no samples"), std::string::npos);
  }
  expect_parse_error_at([] { std::istringstream in("+1 1:1\n+1 3:1 2:1\n"); (void)parse_libsvm(in); }, 2);
  expect_parse_error_at([] { std::istringstream in("+1 1:1\n-1 2:1\nx 1:1\n"); (void)parse_libsvm(in); }, 3);
  expect_parse_error_at([] { std::istringstream in("+1 1:abc\n"); (void)parse_libsvm(in); }, 1);
  expect_parse_error_at([] { std::istringstream in("+1 0:1\n"); (void)parse_libsvm(in); }, 1);
  expect_parse_error_at([] { std::istringstream in("+1 2\n"); (void)parse_libsvm(in); }, 1);
  expect_parse_error_at([] { std::istringstream in("+1 1:1 1:2\n"); (void)parse_libsvm(in); }, 1);
  expect_parse_error_at([] { std::istringstream in("2 1:1\n"); (void)parse_libsvm(in); }, 1);
  EXPECT_THROW(parse_libsvm(std::string("/nonexistent/file.svm")), IoError);
}

TEST(ParseLibsvm, RoundTrip) {
  const Dataset d = logistic_problem(40, 6, 3);
  std::stringstream buf;
  write_libsvm(buf, d);
  EXPECT_EQ(parse_libsvm(buf, LabelMode::binary, d.p()), d);

  const auto path = (scratch_dir("libsvm") / "rt.svm").string();
  write_libsvm(path, d);
  EXPECT_EQ(parse_libsvm(path, LabelMode::binary, d.p()), d);
}

TEST(ParseLibsvm, SparseRowsKeepCompressedForm) {
  std::istringstream in("+1 2:1 5:3\n-1 1:4\n");
  const SparseRows rows = read_libsvm_sparse(in);
  EXPECT_EQ(rows.cols, (std::vector<Index>{1, 4, 0}));
  EXPECT_EQ(rows.row_ptr, (std::vector<std::size_t>{0, 2, 3}));
  EXPECT_EQ(rows.densify(8).p(), 8u);
}

// --- csv -----------------------------------------------------------------

TEST(ParseCsv, Small) {
  std::istringstream in("x,y\n1.5,2\n-3,4\n");
  const Dataset d = parse_csv(in, "y");
  ASSERT_EQ(d.n(), 2u);
  ASSERT_EQ(d.p(), 1u);
  EXPECT_EQ(d.features()(1, 0), -3.0);
  EXPECT_EQ(d.label(1), 4.0);
}

TEST(ParseCsv, Errors) {
  {
    std::istringstream in("a,b\n1,2\n");
    EXPECT_THROW(parse_csv(in, "label"), ParseError);
  }
  {
    std::istringstream in("a,b\n1,2\n3,oops\n");
    try {
      (void)parse_csv(in, "b");
      FAIL();
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), 3u);
      EXPECT_NE(std::string(e.what()).find("column 2"), std::string::npos);
    }
  }
  expect_parse_error_at([] { std::istringstream in("a,b\n1,2,3\n"); (void)parse_csv(in, "b"); }, 2);
  expect_parse_error_at([] { std::istringstream in("a,b\n1\n"); (void)parse_csv(in, "b"); }, 2);
  expect_parse_error_at([] { std::istringstream in("a,b\n"); (void)parse_csv(in, "b"); }, 1);
}

TEST(ParseCsv, RoundTrip) {
  const Dataset d = ridge_problem(30, 4, 5);
  std::stringstream buf;
  write_csv(buf, d, "target");
  EXPECT_EQ(parse_csv(buf, "target"), d);
}

// --- synthetic ---------------------------------------------------------------

TEST(Synthetic, Deterministic) {
  SyntheticSpec s;
  s.n = 100;
  s.p = 5;
  s.seed = 9;
  EXPECT_EQ(generate_synthetic(s), generate_synthetic(s));
  SyntheticSpec t = s;
  t.seed = 10;
  EXPECT_FALSE(generate_synthetic(s) == generate_synthetic(t));
}

TEST(Synthetic, RejectsEmpty) {
  SyntheticSpec s;
  s.n = 0;
  EXPECT_THROW(generate_synthetic(s), InvalidArgument);
}

TEST(Synthetic, SeparableProblemIsLearned) {
  SyntheticSpec s;
  s.n = 1000;
  s.p = 10;
  s.noise = 0.0;
  s.margin = 200.0;
  s.seed = 4;
  const Dataset d = generate_synthetic(s);
  TrainConfig c;
  c.lr = LearningRateSchedule(1.0);
  c.iterations = 300;
  c.loss = {LossKind::logistic, 1e-4};
  const auto h = train(d, c);
  EXPECT_GE(accuracy(d, h.final_params()), 0.99);
}

// --- cache ---------------------------------------------------------------------

TEST(Cache, RoundTripBitIdentical) {
  const Dataset d = logistic_problem(60, 4, 6);
  for (Index batch : {0u, 16u}) {
    const auto h = small_history(d, batch);
    const std::string bytes = encode_cache(h);
    const auto back = decode_cache(bytes);
    EXPECT_TRUE(back.same_trajectory(h));
    EXPECT_EQ(back.config.lr, h.config.lr);
    EXPECT_EQ(back.config.seed, h.config.seed);
    EXPECT_EQ(back.batch_size(), h.batch_size());
    EXPECT_EQ(back.fingerprint, h.fingerprint);
    EXPECT_EQ(back.schedule(), h.schedule());
    EXPECT_EQ(encode_cache(back), bytes);

    const auto path = (scratch_dir("cache") / "h.dgc").string();
    save_cache(h, path);
    EXPECT_TRUE(load_cache(path, d).same_trajectory(h));
  }
}

TEST(Cache, ZeroIterations) {
  const Dataset d = logistic_problem(10, 2, 1);
  TrainConfig c;
  c.loss = {LossKind::ridge, 0.0};
  const auto h = train(d, c);
  EXPECT_EQ(decode_cache(encode_cache(h)).params.size(), 1u);
}

TEST(Cache, DistinctFormatErrors) {
  const Dataset d = logistic_problem(30, 3, 7);
  const std::string bytes = encode_cache(small_history(d));
  auto reason_of = [](std::string b) {
    try {
      (void)decode_cache(std::move(b));
    } catch (const CacheFormatError& e) {
      return e.reason();
    }
    return CacheFormatError::Reason::inconsistent_header;
  };

  EXPECT_EQ(reason_of(bytes.substr(0, bytes.size() - 8)), CacheFormatError::Reason::truncated_body);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(reason_of(bad), CacheFormatError::Reason::bad_magic);
  bad = bytes;
  bad[4] = 2;
  EXPECT_EQ(reason_of(bad), CacheFormatError::Reason::bad_version);
  EXPECT_EQ(reason_of(bytes + "xx"), CacheFormatError::Reason::inconsistent_header);

  try {
    (void)decode_cache(bytes.substr(0, bytes.size() - 8));
    FAIL();
  } catch (const CacheFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated body"), std::string::npos);
  }
}

TEST(Cache, TruncatedFileOnDisk) {
  const Dataset d = logistic_problem(30, 3, 8);
  const std::string bytes = encode_cache(small_history(d));
  const auto path = (scratch_dir("cache") / "short.dgc").string();
  {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 8));
  }
  EXPECT_THROW(load_cache(path), CacheFormatError);
  EXPECT_THROW(load_cache((scratch_dir("cache") / "missing.dgc").string()), IoError);
}

TEST(Cache, FingerprintMismatchOnMutatedData) {
  const Dataset d = logistic_problem(30, 3, 9);
  const auto h = small_history(d);
  const auto path = (scratch_dir("cache") / "fp.dgc").string();
  save_cache(h, path);
  RowMatrix x = d.features();
  x(4, 1) += 1e-9;
  const Dataset mutated(x, d.labels());
  try {
    (void)load_cache(path, mutated);
    FAIL();
  } catch (const FingerprintMismatch& e) {
    EXPECT_NE(std::string(e.what()).find("fingerprint mismatch"), std::string::npos);
  }
}

TEST(Fingerprint, RowOrderSensitive) {
  const Dataset d = logistic_problem(20, 3, 10);
  IndexList perm(20);
  for (Index i = 0; i < 20; ++i) perm[i] = i;
  std::swap(perm[3], perm[11]);
  EXPECT_NE(fingerprint(d), fingerprint(d.select(perm)));
  EXPECT_EQ(fingerprint(d), fingerprint(logistic_problem(20, 3, 10)));
  EXPECT_EQ(to_hex(fingerprint(d)).size(), 64u);
}

// --- model files and request streams ----------------------------------------------

TEST(ModelFile, RoundTripAndMagic) {
  const Vector w = random_vector(CounterRng(3), 9);
  const auto path = (scratch_dir("model") / "w.dgw").string();
  save_model(w, path);
  EXPECT_EQ(load_model(path), w);

  const Dataset d = logistic_problem(10, 2, 1);
  const auto cache_path = (scratch_dir("model") / "not_a_model.dgc").string();
  save_cache(small_history(d), cache_path);
  EXPECT_THROW(load_model(cache_path), CacheFormatError);
}

TEST(Requests, ParseDeleteAndAdd) {
  std::istringstream in("del 3\n# note\nadd +1 2:0.5\ndel 7\n");
  const auto reqs = parse_requests(in, 4);
  ASSERT_EQ(reqs.size(), 3u);
  EXPECT_EQ(reqs[0].direction, Direction::remove);
  EXPECT_EQ(reqs[0].index, 3u);
  ASSERT_TRUE(reqs[1].row.has_value());
  EXPECT_EQ(reqs[1].row->p(), 4u);
  EXPECT_EQ(reqs[1].row->features()(0, 1), 0.5);
  EXPECT_EQ(reqs[2].index, 7u);
}

TEST(Requests, Errors) {
  expect_parse_error_at([] { std::istringstream in("del 1\nremove 2\n"); (void)parse_requests(in, 3); }, 2);
  expect_parse_error_at([] { std::istringstream in("del x\n"); (void)parse_requests(in, 3); }, 1);
  expect_parse_error_at([] { std::istringstream in("add +1 5:1\n"); (void)parse_requests(in, 3); }, 1);
  expect_parse_error_at([] { std::istringstream in("add\n"); (void)parse_requests(in, 3); }, 1);
}

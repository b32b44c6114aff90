#ifndef DELTAGRAD_DATAIO_HPP
#define DELTAGRAD_DATAIO_HPP

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "deltagrad/engine.hpp"
#include "deltagrad/error.hpp"
#include "deltagrad/fingerprint.hpp"
#include "deltagrad/models.hpp"
#include "deltagrad/random.hpp"
#include "deltagrad/trainer.hpp"

namespace deltagrad {

// ---------------------------------------------------------------------------
// Text formats

enum class LabelMode {
  /// Labels must be -1/+1 or 0/1; 0 becomes -1.
  binary,
  /// Labels kept as read.
  real,
};

/// Compressed-row form produced by the libsvm reader before densification.
struct SparseRows {
  std::vector<std::size_t> row_ptr{0};
  std::vector<Index> cols;
  std::vector<double> vals;
  std::vector<double> labels;
  Index max_col = 0;  // one past the largest column seen

  Dataset densify(Index min_features = 0) const {
    const Index p = std::max(max_col, min_features);
    const Index n = labels.size();
    RowMatrix x = RowMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (Index i = 0; i < n; ++i) {
      for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols[k])) = vals[k];
      }
    }
    Vector y = Eigen::Map<const Vector>(labels.data(), static_cast<Eigen::Index>(n));
    return Dataset(std::move(x), std::move(y));
  }
};

namespace detail {

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool parse_index(std::string_view s, Index& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

inline double coerce_label(double y, LabelMode mode, std::size_t line) {
  if (mode == LabelMode::real) return y;
  if (y == 1.0) return 1.0;
  if (y == -1.0 || y == 0.0) return -1.0;
  throw ParseError("label " + std::to_string(y) + " is not binary (expected -1/+1 or 0/1)", line);
}

inline std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

/// One `label idx:val ...` line into `rows`.
inline void parse_libsvm_line(std::string_view line, std::size_t lineno, LabelMode mode, SparseRows& rows) {
  const auto tokens = split_ws(line);
  double y = 0;
  if (!parse_double(tokens.front(), y)) throw ParseError("malformed label '" + std::string(tokens.front()) + "'", lineno);
  Index prev = 0;
  for (std::size_t k = 1; k < tokens.size(); ++k) {
    const auto tok = tokens[k];
    const auto colon = tok.find(':');
    if (colon == std::string_view::npos) throw ParseError("malformed feature '" + std::string(tok) + "'", lineno);
    Index idx = 0;
    double val = 0;
    if (!parse_index(tok.substr(0, colon), idx) || idx == 0) {
      throw ParseError("bad feature index in '" + std::string(tok) + "'", lineno);
    }
    if (!parse_double(tok.substr(colon + 1), val)) {
      throw ParseError("bad feature value in '" + std::string(tok) + "'", lineno);
    }
    if (idx <= prev) throw ParseError("feature indices must increase within a line", lineno);
    prev = idx;
    rows.cols.push_back(idx - 1);
    rows.vals.push_back(val);
    rows.max_col = std::max(rows.max_col, idx);
  }
  rows.labels.push_back(coerce_label(y, mode, lineno));
  rows.row_ptr.push_back(rows.cols.size());
}

}  // namespace detail

/// Reads `label idx:val ...` lines with 1-based increasing indices. Blank
/// lines and `#` comments are skipped. The feature count is the largest
/// index seen, or `min_features` if that is larger.
inline SparseRows read_libsvm_sparse(std::istream& in, LabelMode mode = LabelMode::binary) {
  SparseRows rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = detail::trim(body);
    if (body.empty()) continue;
    detail::parse_libsvm_line(body, lineno, mode, rows);
  }
  if (rows.labels.empty()) throw ParseError("no samples", lineno);
  if (rows.max_col == 0) throw ParseError("no features", lineno);
  return rows;
}

inline Dataset parse_libsvm(std::istream& in, LabelMode mode = LabelMode::binary, Index min_features = 0) {
  return read_libsvm_sparse(in, mode).densify(min_features);
}

inline Dataset parse_libsvm(const std::string& path, LabelMode mode = LabelMode::binary, Index min_features = 0) {
  auto in = detail::open_in(path);
  return parse_libsvm(in, mode, min_features);
}

/// One libsvm row (a single line without newline) as a dataset with `p` features.
inline Dataset parse_libsvm_row(std::string_view line, Index p, LabelMode mode, std::size_t lineno = 1) {
  SparseRows rows;
  detail::parse_libsvm_line(detail::trim(line), lineno, mode, rows);
  if (rows.max_col > p) throw ParseError("row has more features than the training set", lineno);
  return rows.densify(p);
}

inline void write_libsvm(std::ostream& out, const Dataset& data) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index i = 0; i < data.n(); ++i) {
    const double y = data.label(i);
    if (y == 1.0) {
      out << "+1";
    } else {
      out << y;
    }
    const auto row = data.row(i);
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      if (row[j] != 0.0) out << ' ' << (j + 1) << ':' << row[j];
    }
    out << '\n';
  }
}

inline void write_libsvm(const std::string& path, const Dataset& data) {
  auto out = detail::open_out(path);
  write_libsvm(out, data);
  if (!out) throw IoError("failed writing '" + path + "'");
}

/// Dense CSV with a header row; `label_column` names the label, every other
/// column is a feature in file order.
inline Dataset parse_csv(std::istream& in, const std::string& label_column, LabelMode mode = LabelMode::real) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header row", 1);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.emplace_back(detail::trim(cell));
  }
  std::size_t label_at = header.size();
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == label_column) label_at = k;
  }
  if (label_at == header.size()) throw ParseError("label column '" + label_column + "' not in header", 1);
  if (header.size() < 2) throw ParseError("need at least one feature column", 1);

  std::vector<double> values;
  std::vector<double> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::size_t col = 0;
    std::size_t pos = 0;
    const std::string_view sv = line;
    while (true) {
      const auto comma = sv.find(',', pos);
      const auto cell = detail::trim(sv.substr(pos, comma == std::string_view::npos ? sv.size() - pos : comma - pos));
      if (col >= header.size()) throw ParseError("too many columns", lineno);
      double v = 0;
      if (!detail::parse_double(cell, v)) {
        throw ParseError("non-numeric cell '" + std::string(cell) + "' in column " + std::to_string(col + 1), lineno);
      }
      if (col == label_at) {
        labels.push_back(detail::coerce_label(v, mode, lineno));
      } else {
        values.push_back(v);
      }
      ++col;
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (col != header.size()) throw ParseError("expected " + std::to_string(header.size()) + " columns", lineno);
  }
  if (labels.empty()) throw ParseError("no samples", lineno);
  const auto n = static_cast<Eigen::Index>(labels.size());
  const auto p = static_cast<Eigen::Index>(header.size() - 1);
  RowMatrix x = Eigen::Map<const RowMatrix>(values.data(), n, p);
  Vector y = Eigen::Map<const Vector>(labels.data(), n);
  return Dataset(std::move(x), std::move(y));
}

inline Dataset parse_csv(const std::string& path, const std::string& label_column, LabelMode mode = LabelMode::real) {
  auto in = detail::open_in(path);
  return parse_csv(in, label_column, mode);
}

inline void write_csv(std::ostream& out, const Dataset& data, const std::string& label_column = "label") {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index j = 0; j < data.p(); ++j) out << 'x' << j << ',';
  out << label_column << '\n';
  for (Index i = 0; i < data.n(); ++i) {
    const auto row = data.row(i);
    for (Eigen::Index j = 0; j < row.size(); ++j) out << row[j] << ',';
    out << data.label(i) << '\n';
  }
}

inline void write_csv(const std::string& path, const Dataset& data, const std::string& label_column = "label") {
  auto out = detail::open_out(path);
  write_csv(out, data, label_column);
  if (!out) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Synthetic problems

struct SyntheticSpec {
  enum class Task { classification, regression };

  Index n = 1000;
  Index p = 10;
  /// Classification: probability of flipping a label. Regression: std-dev of
  /// additive Gaussian noise.
  double noise = 0.0;
  std::uint64_t seed = 0;
  /// Norm of the planted weight vector; larger means cleaner labels.
  double margin = 4.0;
  Task task = Task::classification;
};

/// Standard-normal features, a planted direction u with |u| = margin.
/// Classification draws y = +1 with probability sigmoid(x'u) and then
/// flips it with probability `noise`; regression uses y = x'u + noise * N(0,1).
inline Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n == 0) throw InvalidArgument("synthetic data needs n >= 1");
  if (spec.p == 0) throw InvalidArgument("synthetic data needs p >= 1");
  if (spec.noise < 0.0 || (spec.task == SyntheticSpec::Task::classification && spec.noise > 1.0)) {
    throw InvalidArgument("noise out of range");
  }
  const CounterRng rng(spec.seed);
  const CounterRng weight_rng = rng.substream(1);
  const CounterRng feature_rng = rng.substream(2);
  const CounterRng label_rng = rng.substream(3);

  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto p = static_cast<Eigen::Index>(spec.p);
  Vector u(p);
  for (Eigen::Index j = 0; j < p; ++j) u[j] = weight_rng.normal(static_cast<std::uint64_t>(j));
  u *= spec.margin / u.norm();

  RowMatrix x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      x(i, j) = feature_rng.normal(static_cast<std::uint64_t>(i * p + j));
    }
  }
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = x.row(i).dot(u);
    const auto k = static_cast<std::uint64_t>(i);
    if (spec.task == SyntheticSpec::Task::regression) {
      y[i] = z + spec.noise * label_rng.normal(k);
    } else {
      const double prob = 1.0 / (1.0 + std::exp(-z));
      double label = label_rng.uniform(3 * k) < prob ? 1.0 : -1.0;
      if (label_rng.uniform(3 * k + 1) < spec.noise) label = -label;
      y[i] = label;
    }
  }
  return Dataset(std::move(x), std::move(y));
}

/// First `head` rows and the rest.
inline std::pair<Dataset, Dataset> split_rows(const Dataset& data, Index head) {
  if (head == 0 || head >= data.n()) throw InvalidArgument("split point must leave both parts non-empty");
  const IndexList a = detail::iota_list(head);
  IndexList b;
  for (Index i = head; i < data.n(); ++i) b.push_back(i);
  return {data.select(a), data.select(b)};
}

// ---------------------------------------------------------------------------
// Binary cache and model files (little-endian)

inline constexpr std::array<char, 4> cache_magic{'D', 'G', 'C', '1'};
inline constexpr std::array<char, 4> model_magic{'D', 'G', 'W', '1'};
inline constexpr std::uint8_t format_version = 1;

namespace detail {

class ByteWriter {
public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const char*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void vec(const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  const std::string& bytes() const noexcept { return buf_; }

private:
  std::string buf_;
};

class ByteReader {
public:
  explicit ByteReader(std::string bytes) : buf_(std::move(bytes)) {}

  void need(std::size_t n, const char* what) const {
    if (buf_.size() - pos_ < n) {
      throw CacheFormatError(CacheFormatError::Reason::truncated_body, std::string("truncated body while reading ") + what);
    }
  }
  std::string raw(std::size_t n, const char* what) {
    need(n, what);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + static_cast<std::size_t>(k)])) << (8 * k);
    pos_ += 8;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  Vector vec(std::uint64_t expected_len, const char* what) {
    const std::uint64_t len = u64(what);
    if (len != expected_len) {
      throw CacheFormatError(CacheFormatError::Reason::inconsistent_header,
                             std::string(what) + " has length " + std::to_string(len) + ", header says " +
                                 std::to_string(expected_len));
    }
    need(len * 8, what);
    Vector v(static_cast<Eigen::Index>(len));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f64(what);
    return v;
  }
  bool done() const noexcept { return pos_ == buf_.size(); }

private:
  std::string buf_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::string& path) {
  auto in = open_in(path, true);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::string& bytes) {
  auto out = open_out(path, true);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline void check_magic(ByteReader& r, const std::array<char, 4>& magic) {
  std::string m;
  try {
    m = r.raw(4, "magic");
  } catch (const CacheFormatError&) {
    throw CacheFormatError(CacheFormatError::Reason::bad_magic, "bad magic: file too short");
  }
  if (std::memcmp(m.data(), magic.data(), 4) != 0) {
    throw CacheFormatError(CacheFormatError::Reason::bad_magic,
                           "bad magic: expected " + std::string(magic.data(), 4));
  }
  const auto version = r.u8("version");
  if (version != format_version) {
    throw CacheFormatError(CacheFormatError::Reason::bad_version,
                           "unsupported version " + std::to_string(version));
  }
}

}  // namespace detail

inline std::string encode_cache(const TrainingHistory& h) {
  detail::ByteWriter w;
  w.raw(cache_magic.data(), 4);
  w.u8(format_version);
  w.u64(h.n);
  w.u64(h.p);
  w.u64(h.iterations());
  w.u64(h.batch_size());
  w.u64(h.config.seed);
  w.u8(h.config.loss.kind == LossKind::logistic ? 0 : 1);
  w.f64(h.config.loss.l2);
  const auto& segs = h.config.lr.segments();
  w.u64(segs.size());
  for (const auto& s : segs) {
    w.u64(s.until);
    w.f64(s.rate);
  }
  w.raw(h.fingerprint.data(), h.fingerprint.size());
  for (const auto& v : h.params) w.vec(v);
  for (const auto& g : h.gradients) w.vec(g);
  return w.bytes();
}

inline TrainingHistory decode_cache(std::string bytes) {
  detail::ByteReader r(std::move(bytes));
  detail::check_magic(r, cache_magic);
  TrainingHistory h;
  h.n = r.u64("n");
  h.p = r.u64("p");
  const auto iterations = r.u64("T");
  h.config.iterations = iterations;
  h.config.batch_size = r.u64("batch size");
  h.config.seed = r.u64("seed");
  const auto kind = r.u8("loss kind");
  if (kind > 1) throw CacheFormatError(CacheFormatError::Reason::inconsistent_header, "unknown loss kind");
  h.config.loss.kind = kind == 0 ? LossKind::logistic : LossKind::ridge;
  h.config.loss.l2 = r.f64("l2");
  const auto nseg = r.u64("schedule length");
  if (nseg == 0 || nseg > (1u << 20)) {
    throw CacheFormatError(CacheFormatError::Reason::inconsistent_header, "bad schedule length");
  }
  std::vector<LearningRateSchedule::Segment> segs;
  for (std::uint64_t k = 0; k < nseg; ++k) {
    const auto until = r.u64("schedule");
    const auto rate = r.f64("schedule");
    segs.push_back({until, rate});
  }
  try {
    h.config.lr = LearningRateSchedule(std::move(segs));
  } catch (const InvalidArgument& e) {
    throw CacheFormatError(CacheFormatError::Reason::inconsistent_header, e.what());
  }
  if (h.n == 0 || h.p == 0 || h.config.batch_size == 0 || h.config.batch_size > h.n) {
    throw CacheFormatError(CacheFormatError::Reason::inconsistent_header, "inconsistent header dimensions");
  }
  const std::string fp = r.raw(32, "fingerprint");
  std::memcpy(h.fingerprint.data(), fp.data(), 32);
  h.params.reserve(iterations + 1);
  for (std::uint64_t t = 0; t <= iterations; ++t) h.params.push_back(r.vec(h.p, "parameter record"));
  h.gradients.reserve(iterations);
  for (std::uint64_t t = 0; t < iterations; ++t) h.gradients.push_back(r.vec(h.p, "gradient record"));
  if (!r.done()) throw CacheFormatError(CacheFormatError::Reason::inconsistent_header, "trailing bytes after body");
  return h;
}

inline void save_cache(const TrainingHistory& h, const std::string& path) {
  detail::write_file(path, encode_cache(h));
}

inline TrainingHistory load_cache(const std::string& path) { return decode_cache(detail::read_file(path)); }

/// Loads and checks the history against the dataset it claims to describe.
inline TrainingHistory load_cache(const std::string& path, const Dataset& data) {
  TrainingHistory h = load_cache(path);
  if (h.n != data.n() || h.p != data.p() || h.fingerprint != fingerprint(data)) throw FingerprintMismatch();
  return h;
}

inline void save_model(const Vector& w, const std::string& path) {
  detail::ByteWriter out;
  out.raw(model_magic.data(), 4);
  out.u8(format_version);
  out.vec(w);
  detail::write_file(path, out.bytes());
}

inline Vector load_model(const std::string& path) {
  detail::ByteReader r(detail::read_file(path));
  detail::check_magic(r, model_magic);
  const std::uint64_t len = r.u64("model length");
  r.need(len * 8, "model record");
  Vector w(static_cast<Eigen::Index>(len));
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = r.f64("model record");
  if (!r.done()) throw CacheFormatError(CacheFormatError::Reason::inconsistent_header, "trailing bytes after model");
  return w;
}

// ---------------------------------------------------------------------------
// Online request streams: one request per line, `del <id>` or `add <libsvm-row>`.

inline std::vector<OnlineRequest> parse_requests(std::istream& in, Index p, LabelMode mode = LabelMode::binary) {
  std::vector<OnlineRequest> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto space = body.find_first_of(" \t");
    const auto verb = body.substr(0, space);
    const auto rest = space == std::string_view::npos ? std::string_view{} : detail::trim(body.substr(space));
    if (verb == "del") {
      Index id = 0;
      if (!detail::parse_index(rest, id)) throw ParseError("bad row id '" + std::string(rest) + "'", lineno);
      out.push_back(OnlineRequest::deletion(id));
    } else if (verb == "add") {
      if (rest.empty()) throw ParseError("add request without a row", lineno);
      out.push_back(OnlineRequest::addition(parse_libsvm_row(rest, p, mode, lineno)));
    } else {
      throw ParseError("unknown request '" + std::string(verb) + "'", lineno);
    }
  }
  return out;
}

inline std::vector<OnlineRequest> parse_requests(const std::string& path, Index p, LabelMode mode = LabelMode::binary) {
  auto in = detail::open_in(path);
  return parse_requests(in, p, mode);
}

}  // namespace deltagrad

#endif  // DELTAGRAD_DATAIO_HPP

#include "lvm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "lvm/errors.hpp"

namespace lvm {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<long> line_numbers;
};

RawTable read_table(const std::string& text) {
  RawTable t;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParseError(line_no, static_cast<long>(std::min(cells.size(), t.header.size())) + 1,
                       "expected " + std::to_string(t.header.size()) + " cells, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(line_no);
  }
  if (!have_header) throw ParseError(1, 1, "missing header line");
  return t;
}

double parse_cell(const std::string& cell, long row, long column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last) throw ParseError(row, column, "'" + cell + "' is not a number");
  if (!std::isfinite(v)) throw ParseError(row, column, "non-finite value '" + cell + "'");
  return v;
}

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw ParseError(0, 0, std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Dataset parse_csv(const std::string& text, const std::string& source) {
  const RawTable t = read_table(text);
  Dataset d;
  d.column_names = t.header;
  d.source_path = source;
  d.hash = fnv1a(text);
  d.rows.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = 0; c < t.header.size(); ++c)
      d.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_cell(t.rows[r][c], t.line_numbers[r], static_cast<long>(c) + 1);
  return d;
}

SequenceDataset parse_csv_sequences(const std::string& text, const std::string& sequence_column,
                                    const std::string& source) {
  const RawTable t = read_table(text);
  std::size_t seq_col = t.header.size();
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (t.header[c] == sequence_column) seq_col = c;
  if (seq_col == t.header.size()) throw ParseError(1, 0, "no column named '" + sequence_column + "'");

  SequenceDataset s;
  s.source_path = source;
  s.hash = fnv1a(text);
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (c != seq_col) s.column_names.push_back(t.header[c]);
  const auto d = static_cast<Eigen::Index>(s.column_names.size());

  std::map<std::string, std::size_t> index;
  std::vector<std::vector<Vec>> groups;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& id = t.rows[r][seq_col];
    auto [it, inserted] = index.emplace(id, groups.size());
    if (inserted) {
      s.ids.push_back(id);
      groups.emplace_back();
    }
    Vec row(d);
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < t.header.size(); ++c)
      if (c != seq_col) row(j++) = parse_cell(t.rows[r][c], t.line_numbers[r], static_cast<long>(c) + 1);
    groups[it->second].push_back(std::move(row));
  }
  for (const auto& g : groups) {
    Mat m(static_cast<Eigen::Index>(g.size()), d);
    for (std::size_t i = 0; i < g.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = g[i].transpose();
    s.sequences.push_back(std::move(m));
  }
  return s;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

Dataset load_dataset(const std::string& path) { return parse_csv(read_text(path), path); }

SequenceDataset load_sequences(const std::string& path, const std::string& sequence_column) {
  return parse_csv_sequences(read_text(path), sequence_column, path);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string to_csv(const Mat& rows, const std::vector<std::string>& column_names) {
  if (static_cast<Eigen::Index>(column_names.size()) != rows.cols())
    throw DimensionError("need one column name per column");
  std::string out;
  for (std::size_t c = 0; c < column_names.size(); ++c) out += (c ? "," : "") + column_names[c];
  out += '\n';
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) out += (c ? "," : "") + format_double(rows(r, c));
    out += '\n';
  }
  return out;
}

std::string serialize_model(const ModelFile& model) {
  Json j;
  j["schema_version"] = model.schema_version;
  j["kind"] = model.kind;
  j["params"] = model.params;
  j["fit"] = {{"seed", model.fit.seed},
              {"iterations", model.fit.iterations},
              {"final_free_energy", model.fit.final_free_energy}};
  return j.dump(1) + "\n";
}

ModelFile parse_model(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    // Translate the byte offset into a line and column.
    long line = 1, col = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(line, col, "malformed model file");
  }
  return guarded("model file", [&] {
    ModelFile m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kSchemaVersion)
      throw VersionError("unsupported schema_version " + std::to_string(m.schema_version));
    m.kind = j.at("kind").get<std::string>();
    m.params = j.at("params");
    if (j.contains("fit")) {
      const Json& f = j.at("fit");
      m.fit.seed = f.value("seed", std::uint64_t{0});
      m.fit.iterations = f.value("iterations", 0);
      m.fit.final_free_energy = f.value("final_free_energy", 0.0);
    }
    return m;
  });
}

void save_model(const ModelFile& model, const std::string& path) { write_text(path, serialize_model(model)); }

ModelFile load_model(const std::string& path) { return parse_model(read_text(path)); }

void expect_kind(const ModelFile& model, const std::string& kind) {
  if (model.kind != kind) throw KindMismatchError("model file holds a '" + model.kind + "' model, expected '" + kind + "'");
}

Json to_json(const Vec& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_json(Vec(m.row(r).transpose())));
  return rows;
}

Vec vec_from_json(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Mat mat_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError(0, 0, "matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Mat(0, 0);
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vec row = vec_from_json(j.at(r));
    if (row.size() != cols) throw ParseError(0, 0, "matrix rows have different lengths");
    m.row(r) = row.transpose();
  }
  return m;
}

Json to_json(const GmmParams& p) {
  Json means = Json::array(), covs = Json::array();
  for (const auto& m : p.means) means.push_back(to_json(m));
  for (const auto& c : p.covs) covs.push_back(to_json(c));
  return {{"weights", to_json(p.weights.probs())}, {"means", means}, {"covs", covs}};
}

GmmParams gmm_from_json(const Json& j) {
  return guarded("gmm params", [&] {
    GmmParams p;
    p.weights = DiscreteDistribution(vec_from_json(j.at("weights")));
    for (const auto& m : j.at("means")) p.means.push_back(vec_from_json(m));
    for (const auto& c : j.at("covs")) p.covs.push_back(mat_from_json(c));
    p.validate();
    return p;
  });
}

Json to_json(const FaParams& p) {
  return {{"loading", to_json(p.loading)}, {"offset", to_json(p.offset)}, {"diag_noise", to_json(p.diag_noise)}};
}

FaParams fa_from_json(const Json& j) {
  return guarded("fa params", [&] {
    FaParams p;
    p.loading = mat_from_json(j.at("loading"));
    p.offset = vec_from_json(j.at("offset"));
    p.diag_noise = vec_from_json(j.at("diag_noise"));
    if (p.loading.size() == 0) p.loading = Mat::Zero(p.offset.size(), 0);
    p.validate();
    return p;
  });
}

Json to_json(const SparseCodingParams& p) {
  return {{"dict", to_json(p.dict)},
          {"lambda", p.lambda},
          {"alpha", to_json(p.alpha)},
          {"beta", p.beta},
          {"source", p.source == SourceEnergy::laplace ? "laplace" : "quadratic"}};
}

SparseCodingParams sc_from_json(const Json& j) {
  return guarded("sc params", [&] {
    SparseCodingParams p;
    p.dict = mat_from_json(j.at("dict"));
    p.lambda = j.at("lambda").get<double>();
    p.alpha = vec_from_json(j.at("alpha"));
    p.beta = j.value("beta", 100.0);
    const std::string source = j.value("source", std::string("laplace"));
    if (source != "laplace" && source != "quadratic") throw ParseError(0, 0, "unknown source energy '" + source + "'");
    p.source = source == "laplace" ? SourceEnergy::laplace : SourceEnergy::quadratic;
    p.validate();
    return p;
  });
}

Json to_json(const HmmParams& p) {
  Json means = Json::array(), covs = Json::array();
  for (const auto& m : p.means) means.push_back(to_json(m));
  for (const auto& c : p.covs) covs.push_back(to_json(c));
  return {{"init", to_json(p.init.probs())},
          {"trans", to_json(p.trans)},
          {"columns_are_source_state", true},
          {"means", means},
          {"covs", covs}};
}

HmmParams hmm_from_json(const Json& j) {
  return guarded("hmm params", [&] {
    HmmParams p;
    p.init = DiscreteDistribution(vec_from_json(j.at("init")));
    p.trans = mat_from_json(j.at("trans"));
    if (!j.value("columns_are_source_state", true)) p.trans.transposeInPlace();
    for (const auto& m : j.at("means")) p.means.push_back(vec_from_json(m));
    for (const auto& c : j.at("covs")) p.covs.push_back(mat_from_json(c));
    p.validate();
    return p;
  });
}

Json to_json(const SsmParams& p) {
  return {{"A", to_json(p.trans.weights())},  {"B", to_json(p.control_gain)},    {"a", to_json(p.trans.offset())},
          {"Q", to_json(p.trans.noise_cov())}, {"C", to_json(p.emission.weights())}, {"c", to_json(p.emission.offset())},
          {"R", to_json(p.emission.noise_cov())}, {"mu1", to_json(p.init.mean())}, {"V1", to_json(p.init.cov())}};
}

SsmParams ssm_from_json(const Json& j) {
  return guarded("ssm params", [&] {
    SsmParams p;
    const Mat a = mat_from_json(j.at("A"));
    Mat b = mat_from_json(j.at("B"));
    if (b.size() == 0) b = Mat::Zero(a.rows(), 0);
    p.trans = AffineGaussianChannel(a, vec_from_json(j.at("a")), mat_from_json(j.at("Q")));
    p.control_gain = b;
    p.emission = AffineGaussianChannel(mat_from_json(j.at("C")), vec_from_json(j.at("c")), mat_from_json(j.at("R")));
    p.init = GaussianBelief(vec_from_json(j.at("mu1")), mat_from_json(j.at("V1")));
    p.validate();
    return p;
  });
}

Json to_json(const RbmParams& p) {
  return {{"weights", to_json(p.weights)},
          {"visible_bias", to_json(p.visible_bias)},
          {"hidden_bias", to_json(p.hidden_bias)}};
}

RbmParams rbm_from_json(const Json& j) {
  return guarded("rbm params", [&] {
    RbmParams p{mat_from_json(j.at("weights")), vec_from_json(j.at("visible_bias")), vec_from_json(j.at("hidden_bias"))};
    p.validate();
    return p;
  });
}

Json to_json(const GlimModel& p) {
  return {{"family", p.family.to_string()}, {"scale", p.family.scale},    {"weights", to_json(p.weights)},
          {"intercept", p.intercept},       {"features", p.features},     {"target", p.target}};
}

GlimModel glim_from_json(const Json& j) {
  return guarded("glim params", [&] {
    GlimModel m;
    m.family = GlimFamily::parse(j.at("family").get<std::string>());
    m.family.scale = j.value("scale", 1.0);
    m.weights = vec_from_json(j.at("weights"));
    m.intercept = j.value("intercept", 0.0);
    m.features = j.value("features", std::vector<std::string>{});
    m.target = j.value("target", std::string{});
    if (!m.features.empty() && static_cast<Eigen::Index>(m.features.size()) != m.weights.size())
      throw ParseError(0, 0, "glim params: one weight per feature expected");
    return m;
  });
}

Json to_json(const IcaModel& p) {
  return {{"unmixing", to_json(p.unmixing)},
          {"nonlinearity", p.nonlinearity == IcaNonlinearity::logistic_cdf ? "logistic-cdf" : "gaussian-cdf"}};
}

IcaModel ica_from_json(const Json& j) {
  return guarded("ica params", [&] {
    IcaModel m;
    m.unmixing = mat_from_json(j.at("unmixing"));
    const std::string nl = j.value("nonlinearity", std::string("logistic-cdf"));
    if (nl != "logistic-cdf" && nl != "gaussian-cdf") throw ParseError(0, 0, "unknown nonlinearity '" + nl + "'");
    m.nonlinearity = nl == "logistic-cdf" ? IcaNonlinearity::logistic_cdf : IcaNonlinearity::gaussian_cdf;
    if (m.unmixing.rows() != m.unmixing.cols()) throw DimensionError("unmixing matrix must be square");
    return m;
  });
}

}  // namespace lvm

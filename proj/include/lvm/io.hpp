#pragma once

// CSV datasets and the JSON model file.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lvm/discriminative.hpp"
#include "lvm/factor_analysis.hpp"
#include "lvm/gmm.hpp"
#include "lvm/hmm.hpp"
#include "lvm/kalman.hpp"
#include "lvm/rbm.hpp"
#include "lvm/sparse_coding.hpp"
#include "lvm/types.hpp"

namespace lvm {

using Json = nlohmann::json;

struct Dataset {
  Mat rows;
  std::vector<std::string> column_names;
  std::string source_path;
  /// FNV-1a of the file bytes.
  std::uint64_t hash = 0;

  Eigen::Index size() const { return rows.rows(); }
  Eigen::Index dim() const { return rows.cols(); }
};

struct SequenceDataset {
  std::vector<std::string> ids;
  std::vector<Mat> sequences;
  std::vector<std::string> column_names;
  std::string source_path;
  std::uint64_t hash = 0;
};

std::uint64_t fnv1a(const std::string& bytes);

/// Header line required; every cell must parse as a double. Row numbers in
/// ParseError are 1-based file lines.
Dataset parse_csv(const std::string& text, const std::string& source = "<memory>");
/// Rows grouped by `sequence_column` in order of first appearance; the
/// column itself may hold arbitrary labels.
SequenceDataset parse_csv_sequences(const std::string& text, const std::string& sequence_column,
                                    const std::string& source = "<memory>");
Dataset load_dataset(const std::string& path);
SequenceDataset load_sequences(const std::string& path, const std::string& sequence_column);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);
std::string to_csv(const Mat& rows, const std::vector<std::string>& column_names);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

constexpr int kSchemaVersion = 1;

struct FitMetadata {
  std::uint64_t seed = 0;
  int iterations = 0;
  double final_free_energy = 0.0;
};

struct ModelFile {
  int schema_version = kSchemaVersion;
  std::string kind;
  Json params;
  FitMetadata fit;
};

std::string serialize_model(const ModelFile& model);
/// Throws ParseError on malformed JSON and VersionError on an unknown schema.
ModelFile parse_model(const std::string& text);
void save_model(const ModelFile& model, const std::string& path);
ModelFile load_model(const std::string& path);
/// Throws KindMismatchError unless model.kind == kind.
void expect_kind(const ModelFile& model, const std::string& kind);

/// Generalized linear model as stored by the command-line tool.
struct GlimModel {
  GlimFamily family;
  Vec weights;
  double intercept = 0.0;
  std::vector<std::string> features;
  std::string target;
};

Json to_json(const Vec& v);
Json to_json(const Mat& m);
Vec vec_from_json(const Json& j);
Mat mat_from_json(const Json& j);

Json to_json(const GmmParams& p);
Json to_json(const FaParams& p);
Json to_json(const SparseCodingParams& p);
Json to_json(const HmmParams& p);
Json to_json(const SsmParams& p);
Json to_json(const RbmParams& p);
Json to_json(const GlimModel& p);
Json to_json(const IcaModel& p);

GmmParams gmm_from_json(const Json& j);
FaParams fa_from_json(const Json& j);
SparseCodingParams sc_from_json(const Json& j);
HmmParams hmm_from_json(const Json& j);
SsmParams ssm_from_json(const Json& j);
RbmParams rbm_from_json(const Json& j);
GlimModel glim_from_json(const Json& j);
IcaModel ica_from_json(const Json& j);

}  // namespace lvm

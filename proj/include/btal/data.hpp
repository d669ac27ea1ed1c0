#pragma once

#include "btal/hypothesis.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace btal {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rectangular numeric rows with one raw label each.
struct RawDataset {
  std::string name;
  SampleMatrix<double> features;
  std::vector<double> labels;

  Eigen::Index dim() const { return features.cols(); }
  std::size_t size() const { return labels.size(); }
};

enum class FileFormat { Delimited, Sparse };

struct LoadSchema {
  FileFormat format{FileFormat::Delimited};
  char delimiter{','};  // ' ' splits on any run of whitespace
  int label_column{-1};  // negative counts from the end
  bool header{false};
  int sparse_dim{0};  // sparse format only; 0 infers from the largest index seen
};

/// Delimiter-separated numeric rows. Ragged rows, non-numeric fields and missing files raise DataError naming
/// the file and line.
RawDataset load_delimited(const std::filesystem::path& path, const LoadSchema& schema);

/// "label index:value ..." rows with 1-based indices.
RawDataset load_sparse(const std::filesystem::path& path, const LoadSchema& schema);

RawDataset load_dataset(const std::filesystem::path& path, const LoadSchema& schema);

struct MajorityVsRest {};
struct ExplicitPair {
  double positive;
  double negative;
};
using BinarizeRule = std::variant<MajorityVsRest, ExplicitPair>;

/// Maps labels onto {+1, -1}. Majority-vs-rest makes the most frequent class positive (smallest label wins a
/// tie); explicit-pair drops rows of all other classes.
RawDataset binarize_labels(const RawDataset& raw, const BinarizeRule& rule);

/// Fraction of rows carrying the less frequent of the two labels.
double minority_fraction(const std::vector<int>& labels);
double minority_fraction(const std::vector<double>& labels);

struct PcaModel {
  VectorX<double> mean;
  Eigen::MatrixXd components;  // dim x k, orthonormal columns
  VectorX<double> variances;   // non-increasing
};

PcaModel fit_pca(const SampleMatrix<double>& train, Eigen::Index k = 10);
SampleMatrix<double> apply_pca(const PcaModel& model, const SampleMatrix<double>& features);

struct MinMaxRanges {
  VectorX<double> lo;
  VectorX<double> hi;
};

MinMaxRanges fit_minmax(const SampleMatrix<double>& train);
/// Maps each column onto [0, 1] using the fitted ranges; values outside are clipped, constant columns become 0.
SampleMatrix<double> minmax_normalize(const SampleMatrix<double>& features, const MinMaxRanges& ranges);

struct DatasetMeta {
  std::string name;
  Eigen::Index dim_after{0};
  double minority_fraction{0.0};
};

struct ProcessedDataset {
  SampleMatrix<double> train;
  std::vector<int> train_labels;
  SampleMatrix<double> test;
  std::vector<int> test_labels;
  std::shared_ptr<const SampleMatrix<double>> subset;  // unlabeled rows of train for disagreement estimates
  std::vector<std::size_t> subset_rows;               // their row indices in `train`
  DatasetMeta meta;
  std::optional<PcaModel> pca;
  MinMaxRanges ranges;
};

struct PipelineOptions {
  double train_fraction{0.7};
  double subset_fraction{0.1};
  Eigen::Index pca_threshold{10};  // PCA applies when the raw dimension exceeds this
  Eigen::Index pca_components{10};
};

/// Seeded shuffle, train/test split, train-only PCA and min-max fitting, then the disagreement subset.
/// Labels of `binary` must already be +-1.
ProcessedDataset split(const RawDataset& binary, const PipelineOptions& opts, std::uint64_t seed);

/// Versioned text cache of a processed dataset (hex floats, bit-exact round trip).
void write_cache(const ProcessedDataset& data, const std::filesystem::path& path);
ProcessedDataset read_cache(const std::filesystem::path& path);

// ---------------------------------------------------------------------------------------------------------------
// Dataset registry

/// Shape of a synthetic stand-in: row count, raw dimension, minority share and class count.
struct SyntheticProfile {
  std::string name;
  std::size_t rows{2000};
  Eigen::Index dim{2};
  double minority{0.3};
  int classes{2};
  double label_noise{0.05};
};

/// Gaussian class clusters on a shared low-rank correlated background, rescaled to arbitrary raw units.
/// Deterministic in (profile, seed).
RawDataset make_synthetic(const SyntheticProfile& profile, std::uint64_t seed);

struct ManifestEntry {
  std::string name;
  std::filesystem::path path;  // relative paths resolve against the data root
  LoadSchema schema;
  BinarizeRule rule{MajorityVsRest{}};
  std::optional<SyntheticProfile> fallback;  // used when the file is absent
};

struct DatasetManifest {
  std::map<std::string, ManifestEntry> entries;

  static DatasetManifest load(const std::filesystem::path& path);
  /// Built-in entries: the six UCI benchmark sets with synthetic fallbacks, plus the bundled real sets.
  static DatasetManifest builtin();
};

enum class DatasetSource { File, Synthetic };

struct ResolvedDataset {
  RawDataset binary;  // labels already binarized to +-1
  DatasetSource source{DatasetSource::File};
  std::filesystem::path path;
};

/// Environment variable naming the dataset root directory.
inline constexpr const char* kDataRootEnv = "BTAL_DATA_ROOT";

std::filesystem::path default_data_root();

/// Loads and binarizes a manifest entry, falling back to its synthetic profile when the file is missing.
ResolvedDataset resolve_dataset(const DatasetManifest& manifest, const std::string& name,
                                const std::filesystem::path& data_root);

}  // namespace btal

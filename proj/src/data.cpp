#include "btal/data.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#ifndef BTAL_SOURCE_DATA_DIR
#define BTAL_SOURCE_DATA_DIR "data"
#endif

namespace btal {

namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

std::vector<std::string_view> split_fields(std::string_view line, char delimiter) {
  std::vector<std::string_view> out;
  if (delimiter == ' ') {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i == line.size()) break;
      const std::size_t start = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      out.push_back(line.substr(start, i - start));
    }
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Non-numeric labels become category codes in lexicographic order of their names.
std::vector<double> encode_labels(const std::vector<std::string>& raw) {
  std::vector<double> out(raw.size());
  bool numeric = true;
  for (std::size_t i = 0; i < raw.size() && numeric; ++i) {
    if (auto v = parse_number(raw[i])) out[i] = *v;
    else numeric = false;
  }
  if (numeric) return out;
  std::set<std::string> names(raw.begin(), raw.end());
  std::map<std::string, double> code;
  double next = 0.0;
  for (const auto& n : names) code[n] = next++;
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = code[raw[i]];
  return out;
}

bool skip_line(std::string_view line) {
  line = trim(line);
  return line.empty() || line.front() == '#';
}

}  // namespace

RawDataset load_delimited(const std::filesystem::path& path, const LoadSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path.string());

  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::size_t width = 0;
  std::string line;
  std::size_t lineno = 0;
  bool header_pending = schema.header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (skip_line(line)) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto fields = split_fields(line, schema.delimiter);
    if (width == 0) {
      width = fields.size();
      if (width < 2) throw DataError(where(path, lineno) + "need at least one feature and a label");
    } else if (fields.size() != width) {
      throw DataError(where(path, lineno) + "ragged row: expected " + std::to_string(width) + " fields, found " +
                      std::to_string(fields.size()));
    }
    const int n = static_cast<int>(width);
    const int label_col = schema.label_column < 0 ? n + schema.label_column : schema.label_column;
    if (label_col < 0 || label_col >= n) throw DataError(where(path, lineno) + "label column out of range");

    std::vector<double> row;
    row.reserve(width - 1);
    for (int j = 0; j < n; ++j) {
      if (j == label_col) continue;
      const auto v = parse_number(fields[static_cast<std::size_t>(j)]);
      if (!v) {
        throw DataError(where(path, lineno) + "non-numeric feature in column " + std::to_string(j + 1) + ": '" +
                        std::string(trim(fields[static_cast<std::size_t>(j)])) + "'");
      }
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
    labels.emplace_back(trim(fields[static_cast<std::size_t>(label_col)]));
  }
  if (rows.empty()) throw DataError("dataset file " + path.string() + " has no data rows");

  RawDataset out;
  out.name = path.stem().string();
  out.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  out.labels = encode_labels(labels);
  return out;
}

RawDataset load_sparse(const std::filesystem::path& path, const LoadSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path.string());

  std::vector<std::vector<std::pair<int, double>>> rows;
  std::vector<std::string> labels;
  int max_index = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (skip_line(line)) continue;
    const auto fields = split_fields(line, ' ');
    labels.emplace_back(trim(fields.front()));
    std::vector<std::pair<int, double>> row;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      const auto colon = fields[k].find(':');
      const auto idx = colon == std::string_view::npos ? std::nullopt : parse_number(fields[k].substr(0, colon));
      const auto val = colon == std::string_view::npos ? std::nullopt : parse_number(fields[k].substr(colon + 1));
      if (!idx || !val || *idx < 1 || *idx != std::floor(*idx)) {
        throw DataError(where(path, lineno) + "malformed index:value pair '" + std::string(fields[k]) + "'");
      }
      row.emplace_back(static_cast<int>(*idx), *val);
      max_index = std::max(max_index, static_cast<int>(*idx));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("dataset file " + path.string() + " has no data rows");
  const int dim = schema.sparse_dim > 0 ? schema.sparse_dim : max_index;
  if (max_index > dim) throw DataError(path.string() + ": feature index exceeds declared dimension");

  RawDataset out;
  out.name = path.stem().string();
  out.features = SampleMatrix<double>::Zero(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& [j, v] : rows[i]) out.features(static_cast<Eigen::Index>(i), j - 1) = v;
  out.labels = encode_labels(labels);
  return out;
}

RawDataset load_dataset(const std::filesystem::path& path, const LoadSchema& schema) {
  return schema.format == FileFormat::Sparse ? load_sparse(path, schema) : load_delimited(path, schema);
}

RawDataset binarize_labels(const RawDataset& raw, const BinarizeRule& rule) {
  RawDataset out;
  out.name = raw.name;
  std::vector<Eigen::Index> keep;
  std::vector<double> mapped;

  if (std::holds_alternative<MajorityVsRest>(rule)) {
    std::map<double, std::size_t> counts;
    for (double l : raw.labels) ++counts[l];
    double majority = counts.begin()->first;
    for (const auto& [label, count] : counts)
      if (count > counts[majority]) majority = label;
    for (std::size_t i = 0; i < raw.labels.size(); ++i) {
      keep.push_back(static_cast<Eigen::Index>(i));
      mapped.push_back(raw.labels[i] == majority ? 1.0 : -1.0);
    }
  } else {
    const auto pair = std::get<ExplicitPair>(rule);
    for (std::size_t i = 0; i < raw.labels.size(); ++i) {
      if (raw.labels[i] == pair.positive || raw.labels[i] == pair.negative) {
        keep.push_back(static_cast<Eigen::Index>(i));
        mapped.push_back(raw.labels[i] == pair.positive ? 1.0 : -1.0);
      }
    }
  }
  const bool has_pos = std::find(mapped.begin(), mapped.end(), 1.0) != mapped.end();
  const bool has_neg = std::find(mapped.begin(), mapped.end(), -1.0) != mapped.end();
  if (!has_pos || !has_neg) throw DataError("binarize_labels: '" + raw.name + "' collapses to a single class");

  out.features.resize(static_cast<Eigen::Index>(keep.size()), raw.features.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) out.features.row(static_cast<Eigen::Index>(i)) = raw.features.row(keep[i]);
  out.labels = std::move(mapped);
  return out;
}

double minority_fraction(const std::vector<double>& labels) {
  if (labels.empty()) return 0.0;
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1.0));
  const double n = static_cast<double>(labels.size());
  return std::min(pos, n - pos) / n;
}

double minority_fraction(const std::vector<int>& labels) {
  return minority_fraction(std::vector<double>(labels.begin(), labels.end()));
}

PcaModel fit_pca(const SampleMatrix<double>& train, Eigen::Index k) {
  if (k < 1 || k > train.cols()) {
    throw std::invalid_argument("fit_pca: k=" + std::to_string(k) + " must be in [1, " + std::to_string(train.cols()) +
                                "]");
  }
  if (train.rows() < 2) throw std::invalid_argument("fit_pca: need at least two rows");
  PcaModel model;
  model.mean = train.colwise().mean().transpose();
  const Eigen::MatrixXd centered = train.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(train.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw std::runtime_error("fit_pca: eigendecomposition failed");
  const Eigen::Index d = train.cols();
  model.components.resize(d, k);
  model.variances.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    // Eigenvalues come back ascending.
    VectorX<double> v = eig.eigenvectors().col(d - 1 - j);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    model.components.col(j) = v;
    model.variances[j] = std::max(eig.eigenvalues()[d - 1 - j], 0.0);
  }
  return model;
}

SampleMatrix<double> apply_pca(const PcaModel& model, const SampleMatrix<double>& features) {
  if (features.cols() != model.mean.size()) throw std::invalid_argument("apply_pca: dimension mismatch");
  return (features.rowwise() - model.mean.transpose()) * model.components;
}

MinMaxRanges fit_minmax(const SampleMatrix<double>& train) {
  if (train.rows() == 0) throw std::invalid_argument("fit_minmax: empty training set");
  return {train.colwise().minCoeff().transpose(), train.colwise().maxCoeff().transpose()};
}

SampleMatrix<double> minmax_normalize(const SampleMatrix<double>& features, const MinMaxRanges& ranges) {
  if (features.cols() != ranges.lo.size()) throw std::invalid_argument("minmax_normalize: dimension mismatch");
  SampleMatrix<double> out(features.rows(), features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double span = ranges.hi[j] - ranges.lo[j];
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      out(i, j) = span > 0.0 ? std::clamp((features(i, j) - ranges.lo[j]) / span, 0.0, 1.0) : 0.0;
    }
  }
  return out;
}

ProcessedDataset split(const RawDataset& binary, const PipelineOptions& opts, std::uint64_t seed) {
  if (!(opts.train_fraction > 0.0 && opts.train_fraction < 1.0)) {
    throw std::invalid_argument("split: train fraction must be in (0,1)");
  }
  for (double l : binary.labels)
    if (l != 1.0 && l != -1.0) throw std::invalid_argument("split: labels must be binarized to +-1");
  const std::size_t n = binary.size();
  const auto n_train = static_cast<std::size_t>(std::llround(opts.train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) throw std::invalid_argument("split: both splits must be non-empty");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);

  auto take = [&](std::size_t from, std::size_t to, SampleMatrix<double>& x, std::vector<int>& y) {
    x.resize(static_cast<Eigen::Index>(to - from), binary.dim());
    y.resize(to - from);
    for (std::size_t i = from; i < to; ++i) {
      x.row(static_cast<Eigen::Index>(i - from)) = binary.features.row(static_cast<Eigen::Index>(perm[i]));
      y[i - from] = binary.labels[perm[i]] > 0 ? 1 : -1;
    }
  };

  ProcessedDataset out;
  SampleMatrix<double> train_raw;
  SampleMatrix<double> test_raw;
  take(0, n_train, train_raw, out.train_labels);
  take(n_train, n, test_raw, out.test_labels);

  if (binary.dim() > opts.pca_threshold) {
    out.pca = fit_pca(train_raw, std::min(opts.pca_components, binary.dim()));
    train_raw = apply_pca(*out.pca, train_raw);
    test_raw = apply_pca(*out.pca, test_raw);
  }
  out.ranges = fit_minmax(train_raw);
  out.train = minmax_normalize(train_raw, out.ranges);
  out.test = minmax_normalize(test_raw, out.ranges);

  const auto n_subset = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(opts.subset_fraction * static_cast<double>(n_train))));
  std::vector<std::size_t> rows(n_train);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::shuffle(rows.begin(), rows.end(), rng);
  rows.resize(std::min(n_subset, n_train));
  std::sort(rows.begin(), rows.end());
  auto subset = std::make_shared<SampleMatrix<double>>(static_cast<Eigen::Index>(rows.size()), out.train.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    subset->row(static_cast<Eigen::Index>(i)) = out.train.row(static_cast<Eigen::Index>(rows[i]));
  out.subset = std::move(subset);
  out.subset_rows = std::move(rows);

  out.meta.name = binary.name;
  out.meta.dim_after = out.train.cols();
  out.meta.minority_fraction = minority_fraction(binary.labels);
  return out;
}

namespace {

constexpr const char* kCacheHeader = "# btal-processed-dataset v1";

void write_block(std::ostream& os, const char* tag, const SampleMatrix<double>& x, const std::vector<int>& y) {
  os << tag << ' ' << x.rows() << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    os << y[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      std::snprintf(buf, sizeof buf, " %a", x(i, j));
      os << buf;
    }
    os << '\n';
  }
}

void read_block(std::istream& is, const char* tag, Eigen::Index dim, SampleMatrix<double>& x, std::vector<int>& y) {
  std::string got;
  Eigen::Index rows = 0;
  if (!(is >> got >> rows) || got != tag) throw DataError(std::string("cache: expected block '") + tag + "'");
  x.resize(rows, dim);
  y.resize(static_cast<std::size_t>(rows));
  std::string tok;
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!(is >> y[static_cast<std::size_t>(i)])) throw DataError("cache: truncated label");
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (!(is >> tok)) throw DataError("cache: truncated row");
      x(i, j) = std::strtod(tok.c_str(), nullptr);
    }
  }
}

}  // namespace

void write_cache(const ProcessedDataset& data, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write cache file " + path.string());
  os << kCacheHeader << '\n';
  os << "name " << data.meta.name << '\n';
  os << "dim " << data.meta.dim_after << '\n';
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", data.meta.minority_fraction);
  os << "minority " << buf << '\n';
  write_block(os, "train", data.train, data.train_labels);
  write_block(os, "test", data.test, data.test_labels);
  os << "subset " << data.subset_rows.size() << '\n';
  for (std::size_t r : data.subset_rows) os << r << '\n';
  if (!os) throw DataError("failed writing cache file " + path.string());
}

ProcessedDataset read_cache(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open cache file " + path.string());
  std::string header;
  std::getline(is, header);
  if (header != kCacheHeader) throw DataError("cache: unsupported header '" + header + "'");
  ProcessedDataset out;
  std::string key;
  std::string minority;
  is >> key >> out.meta.name >> key >> out.meta.dim_after >> key >> minority;
  if (!is) throw DataError("cache: malformed metadata");
  out.meta.minority_fraction = std::strtod(minority.c_str(), nullptr);
  read_block(is, "train", out.meta.dim_after, out.train, out.train_labels);
  read_block(is, "test", out.meta.dim_after, out.test, out.test_labels);
  std::size_t n = 0;
  if (!(is >> key >> n) || key != "subset") throw DataError("cache: expected subset block");
  out.subset_rows.resize(n);
  auto subset = std::make_shared<SampleMatrix<double>>(static_cast<Eigen::Index>(n), out.meta.dim_after);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(is >> out.subset_rows[i]) || out.subset_rows[i] >= out.train_labels.size()) {
      throw DataError("cache: bad subset row");
    }
    subset->row(static_cast<Eigen::Index>(i)) = out.train.row(static_cast<Eigen::Index>(out.subset_rows[i]));
  }
  out.subset = std::move(subset);
  out.ranges = fit_minmax(out.train);
  return out;
}

// ---------------------------------------------------------------------------------------------------------------

RawDataset make_synthetic(const SyntheticProfile& profile, std::uint64_t seed) {
  if (profile.rows < 4 || profile.dim < 1 || profile.classes < 2) {
    throw std::invalid_argument("make_synthetic: profile too small");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const Eigen::Index dim = profile.dim;
  const Eigen::Index rank = std::min<Eigen::Index>(dim, 4);
  Eigen::MatrixXd mixing(dim, rank);
  for (Eigen::Index i = 0; i < mixing.size(); ++i) mixing.data()[i] = normal(rng);
  std::vector<VectorX<double>> centers(static_cast<std::size_t>(profile.classes), VectorX<double>(rank));
  for (auto& c : centers)
    for (Eigen::Index i = 0; i < rank; ++i) c[i] = 1.5 * normal(rng);
  VectorX<double> scale(dim);
  VectorX<double> offset(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    scale[j] = 0.5 + 49.5 * unit(rng);
    offset[j] = -10.0 + 20.0 * unit(rng);
  }

  // Class 0 is the majority; the minority share is spread over the remaining classes with weights 1, 1/2, ...
  std::vector<double> prior(static_cast<std::size_t>(profile.classes));
  prior[0] = 1.0 - profile.minority;
  double harmonic = 0.0;
  for (int c = 1; c < profile.classes; ++c) harmonic += 1.0 / c;
  for (int c = 1; c < profile.classes; ++c) prior[static_cast<std::size_t>(c)] = profile.minority / (c * harmonic);
  std::discrete_distribution<int> pick(prior.begin(), prior.end());

  RawDataset out;
  out.name = profile.name;
  out.features.resize(static_cast<Eigen::Index>(profile.rows), dim);
  out.labels.resize(profile.rows);
  VectorX<double> z(rank);
  for (std::size_t i = 0; i < profile.rows; ++i) {
    const int c = pick(rng);
    for (Eigen::Index k = 0; k < rank; ++k) z[k] = centers[static_cast<std::size_t>(c)][k] + normal(rng);
    VectorX<double> x = mixing * z;
    for (Eigen::Index j = 0; j < dim; ++j) x[j] = offset[j] + scale[j] * (x[j] + 0.5 * normal(rng));
    out.features.row(static_cast<Eigen::Index>(i)) = x.transpose();
    int label = c;
    if (unit(rng) < profile.label_noise) {
      label = static_cast<int>((c + 1 + static_cast<int>(unit(rng) * (profile.classes - 1))) % profile.classes);
    }
    out.labels[i] = static_cast<double>(label + 1);
  }
  return out;
}

namespace {

std::uint64_t name_seed(const std::string& name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : name) h = (h ^ ch) * 1099511628211ULL;
  return h;
}

LoadSchema schema_from_json(const nlohmann::json& j) {
  LoadSchema s;
  const std::string fmt = j.value("format", "delimited");
  if (fmt == "sparse") s.format = FileFormat::Sparse;
  else if (fmt != "delimited") throw DataError("manifest: unknown format '" + fmt + "'");
  const std::string delim = j.value("delimiter", ",");
  if (delim == "whitespace" || delim == " ") s.delimiter = ' ';
  else if (delim == "\\t" || delim == "\t" || delim == "tab") s.delimiter = '\t';
  else if (delim.size() == 1) s.delimiter = delim[0];
  else throw DataError("manifest: bad delimiter '" + delim + "'");
  s.label_column = j.value("label_column", -1);
  s.header = j.value("header", false);
  s.sparse_dim = j.value("dim", 0);
  return s;
}

BinarizeRule rule_from_json(const nlohmann::json& j) {
  if (!j.contains("binarize") || j["binarize"] == "majority") return MajorityVsRest{};
  const auto& b = j["binarize"];
  if (b.is_object() && b.contains("positive") && b.contains("negative")) {
    return ExplicitPair{b["positive"].get<double>(), b["negative"].get<double>()};
  }
  throw DataError("manifest: binarize must be \"majority\" or {\"positive\": a, \"negative\": b}");
}

}  // namespace

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest " + path.string() + ": " + e.what());
  }
  DatasetManifest m;
  for (const auto& j : doc.at("datasets")) {
    ManifestEntry e;
    e.name = j.at("name").get<std::string>();
    e.path = j.at("path").get<std::string>();
    e.schema = schema_from_json(j);
    e.rule = rule_from_json(j);
    if (j.contains("synthetic")) {
      const auto& p = j["synthetic"];
      e.fallback = SyntheticProfile{e.name, p.at("rows").get<std::size_t>(), p.at("dim").get<Eigen::Index>(),
                                    p.at("minority").get<double>(), p.value("classes", 2),
                                    p.value("label_noise", 0.05)};
    }
    m.entries[e.name] = std::move(e);
  }
  return m;
}

DatasetManifest DatasetManifest::builtin() {
  DatasetManifest m;
  auto add = [&](std::string name, std::string path, char delim, int label_col, bool header, BinarizeRule rule,
                 std::optional<SyntheticProfile> fallback) {
    ManifestEntry e;
    e.name = name;
    e.path = std::move(path);
    e.schema.delimiter = delim;
    e.schema.label_column = label_col;
    e.schema.header = header;
    e.rule = rule;
    e.fallback = std::move(fallback);
    m.entries[name] = std::move(e);
  };
  // UCI benchmark files are not redistributed; place them under <root>/uci to use them. Synthetic stand-ins keep
  // the raw dimension, minority share and class structure (row counts capped at 20000 for desk-scale runs).
  add("skin", "uci/Skin_NonSkin.txt", ' ', -1, false, MajorityVsRest{},
      SyntheticProfile{"skin", 20000, 3, 0.208, 2, 0.05});
  add("magic04", "uci/magic04.data", ',', -1, false, MajorityVsRest{},
      SyntheticProfile{"magic04", 19020, 10, 0.352, 2, 0.05});
  add("shuttle", "uci/shuttle.trn", ' ', -1, false, MajorityVsRest{},
      SyntheticProfile{"shuttle", 20000, 9, 0.216, 7, 0.05});
  add("covtype", "uci/covtype.data", ',', -1, false, MajorityVsRest{},
      SyntheticProfile{"covtype", 20000, 54, 0.488, 7, 0.05});
  add("nomao", "uci/nomao.csv", ',', -1, false, MajorityVsRest{},
      SyntheticProfile{"nomao", 20000, 118, 0.286, 2, 0.05});
  add("jm1", "uci/jm1.csv", ',', -1, true, MajorityVsRest{}, SyntheticProfile{"jm1", 10885, 21, 0.193, 2, 0.05});
  // Small real sets shipped in data/.
  add("wdbc", "wdbc.csv", ',', -1, true, MajorityVsRest{}, std::nullopt);
  add("digits35", "digits35.csv", ',', -1, true, ExplicitPair{3.0, 5.0}, std::nullopt);
  add("wine", "wine.csv", ',', -1, true, MajorityVsRest{}, std::nullopt);
  return m;
}

std::filesystem::path default_data_root() {
  if (const char* env = std::getenv(kDataRootEnv); env && *env) return env;
  return BTAL_SOURCE_DATA_DIR;
}

ResolvedDataset resolve_dataset(const DatasetManifest& manifest, const std::string& name,
                                const std::filesystem::path& data_root) {
  const auto it = manifest.entries.find(name);
  if (it == manifest.entries.end()) throw DataError("unknown dataset '" + name + "'");
  const ManifestEntry& e = it->second;
  const std::filesystem::path path = e.path.is_absolute() ? e.path : data_root / e.path;

  ResolvedDataset out;
  if (std::filesystem::exists(path)) {
    RawDataset raw = load_dataset(path, e.schema);
    raw.name = name;
    out.binary = binarize_labels(raw, e.rule);
    out.source = DatasetSource::File;
    out.path = path;
  } else if (e.fallback) {
    RawDataset raw = make_synthetic(*e.fallback, name_seed(name));
    out.binary = binarize_labels(raw, MajorityVsRest{});
    out.source = DatasetSource::Synthetic;
  } else {
    throw DataError("dataset '" + name + "' not found at " + path.string());
  }
  out.binary.name = name;
  return out;
}

}  // namespace btal

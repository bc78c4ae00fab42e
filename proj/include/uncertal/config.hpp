#pragma once

// Run configuration: a flat "key = value" text format with one
// "[dataset NAME]" section per dataset. The same format, extended with a
// "[manifest]" section, is used for the run manifest so that a manifest can be
// fed back in as a config.
//
//   strategies = random, eer, ueer
//   trials = 20
//   budget = 100            # or "auto" (min(100, |U|)) or "full"
//   lambda = 100
//   seed = 1
//   significance = 0.05
//
//   [dataset breast]
//   path = ../data/breast.libsvm   # relative to the config file
//   format = libsvm
//
//   [dataset blobs]
//   synthetic = true
//   per_class = 100
//   mean_positive = 2, 0
//   mean_negative = -2, 0
//   covariance = 1, 0, 0, 1
//   seed = 7

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "uncertal/dataset.hpp"
#include "uncertal/errors.hpp"
#include "uncertal/experiment.hpp"
#include "uncertal/rng.hpp"

namespace uncertal {

/// Shortest text that parses back to the same double; independent of the C locale.
inline std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline std::string format_checksum(std::uint64_t h) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out = "fnv1a64:";
  for (int shift = 60; shift >= 0; shift -= 4) out += kHex[(h >> shift) & 0xF];
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct DatasetSource {
  enum class Kind { file, synthetic };
  std::string name;
  Kind kind = Kind::file;
  std::filesystem::path path;
  FileFormat format = FileFormat::libsvm;
  SyntheticSpec synthetic;
  std::optional<std::string> checksum;  // verified against the loaded data when present

  friend bool operator==(const DatasetSource& a, const DatasetSource& b) {
    return a.name == b.name && a.kind == b.kind && a.path == b.path && a.format == b.format &&
           a.synthetic.per_class == b.synthetic.per_class &&
           a.synthetic.mean_positive == b.synthetic.mean_positive &&
           a.synthetic.mean_negative == b.synthetic.mean_negative &&
           a.synthetic.covariance == b.synthetic.covariance && a.synthetic.seed == b.synthetic.seed &&
           a.checksum == b.checksum;
  }
};

struct RunConfig {
  ExperimentConfig experiment;
  std::vector<DatasetSource> datasets;
};

/// Metadata written next to the resolved config in a manifest.
struct ManifestInfo {
  std::string tool_version;
  std::string started_utc;
  double wall_seconds = 0.0;
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& origin, std::size_t line,
                                     const std::string& what) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
}

inline std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  for (const auto part : split_fields(value, ','))
    if (!part.empty()) out.emplace_back(part);
  return out;
}

inline double parse_real_value(std::string_view v, const std::string& origin, std::size_t line) {
  const auto d = parse_double(v);
  if (!d || !std::isfinite(*d)) config_fail(origin, line, "expected a number, got '" + std::string(v) + "'");
  return *d;
}

inline std::uint64_t parse_uint_value(std::string_view v, const std::string& origin, std::size_t line) {
  v = trim(v);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    config_fail(origin, line, "expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

inline bool parse_bool_value(std::string_view v, const std::string& origin, std::size_t line) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  config_fail(origin, line, "expected true or false, got '" + std::string(v) + "'");
}

inline Vector parse_vector_value(std::string_view v, const std::string& origin, std::size_t line) {
  const auto parts = split_list(v);
  Vector out(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = parse_real_value(parts[i], origin, line);
  return out;
}

inline Budget parse_budget(std::string_view v, const std::string& origin, std::size_t line) {
  v = trim(v);
  if (v == "auto") return {};
  if (v == "full") return Budget::full();
  const auto n = parse_uint_value(v, origin, line);
  if (n < 1) config_fail(origin, line, "budget must be >= 1");
  return Budget::fixed(n);
}

inline std::string budget_text(const Budget& b) {
  switch (b.kind) {
    case Budget::Kind::automatic: return "auto";
    case Budget::Kind::full: return "full";
    case Budget::Kind::fixed: return std::to_string(b.queries);
  }
  return "auto";
}

inline std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

inline std::string vector_text(const Vector& v) {
  std::vector<std::string> parts;
  for (Eigen::Index i = 0; i < v.size(); ++i) parts.push_back(format_real(v(i)));
  return join(parts, ", ");
}

}  // namespace detail

/// Parses config text. Relative dataset paths are resolved against `base_dir`.
/// Unknown keys, unknown sections and duplicate keys are errors.
inline RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                              const std::string& origin = "<config>",
                              ManifestInfo* manifest = nullptr) {
  using detail::config_fail;
  RunConfig cfg;
  enum class Section { top, dataset, manifest } section = Section::top;
  std::vector<std::string> seen_keys;
  std::optional<bool> is_synthetic;
  std::size_t line_no = 0;

  const auto finish_dataset = [&](std::size_t line) {
    if (section != Section::dataset) return;
    auto& ds = cfg.datasets.back();
    if (!is_synthetic.value_or(false) && ds.path.empty())
      config_fail(origin, line, "dataset '" + ds.name + "' needs either path or synthetic = true");
    if (is_synthetic.value_or(false) && !ds.path.empty())
      config_fail(origin, line, "dataset '" + ds.name + "' cannot be both a file and synthetic");
    ds.kind = is_synthetic.value_or(false) ? DatasetSource::Kind::synthetic : DatasetSource::Kind::file;
    ds.synthetic.name = ds.name;
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') config_fail(origin, line_no, "malformed section header");
      finish_dataset(line_no);
      const auto inner = detail::trim(line.substr(1, line.size() - 2));
      seen_keys.clear();
      is_synthetic.reset();
      if (inner == "manifest") {
        section = Section::manifest;
      } else if (inner.starts_with("dataset ") || inner.starts_with("dataset\t")) {
        const auto name = detail::trim(inner.substr(7));
        if (name.empty()) config_fail(origin, line_no, "dataset section needs a name");
        for (const auto& d : cfg.datasets)
          if (d.name == name) config_fail(origin, line_no, "duplicate dataset '" + std::string(name) + "'");
        cfg.datasets.push_back({});
        cfg.datasets.back().name = std::string(name);
        section = Section::dataset;
      } else {
        config_fail(origin, line_no, "unknown section [" + std::string(inner) + "]");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) config_fail(origin, line_no, "expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (std::find(seen_keys.begin(), seen_keys.end(), key) != seen_keys.end())
      config_fail(origin, line_no, "duplicate key '" + key + "'");
    seen_keys.push_back(key);

    auto& ex = cfg.experiment;
    if (section == Section::top) {
      if (key == "strategies") {
        ex.strategies = detail::split_list(value);
      } else if (key == "trials") {
        const auto n = detail::parse_uint_value(value, origin, line_no);
        if (n < 1 || n > 1000000) config_fail(origin, line_no, "trials must be in [1, 1000000]");
        ex.trials = static_cast<int>(n);
      } else if (key == "budget") {
        ex.budget = detail::parse_budget(value, origin, line_no);
      } else if (key == "lambda") {
        ex.lambda = detail::parse_real_value(value, origin, line_no);
      } else if (key == "seed") {
        ex.base_seed = detail::parse_uint_value(value, origin, line_no);
      } else if (key == "significance") {
        ex.significance = detail::parse_real_value(value, origin, line_no);
      } else {
        config_fail(origin, line_no, "unknown key '" + key + "'");
      }
    } else if (section == Section::manifest) {
      if (key == "tool_version") {
        if (manifest) manifest->tool_version = std::string(value);
      } else if (key == "started_utc") {
        if (manifest) manifest->started_utc = std::string(value);
      } else if (key == "wall_seconds") {
        const double w = detail::parse_real_value(value, origin, line_no);
        if (manifest) manifest->wall_seconds = w;
      } else {
        config_fail(origin, line_no, "unknown manifest key '" + key + "'");
      }
    } else {
      auto& ds = cfg.datasets.back();
      if (key == "path") {
        std::filesystem::path p{std::string(value)};
        ds.path = p.is_absolute() ? p : (base_dir / p).lexically_normal();
      } else if (key == "format") {
        try {
          ds.format = parse_format(value);
        } catch (const InputError& e) {
          config_fail(origin, line_no, e.what());
        }
      } else if (key == "checksum") {
        ds.checksum = std::string(value);
      } else if (key == "synthetic") {
        is_synthetic = detail::parse_bool_value(value, origin, line_no);
      } else if (key == "per_class") {
        ds.synthetic.per_class = detail::parse_uint_value(value, origin, line_no);
      } else if (key == "mean_positive") {
        ds.synthetic.mean_positive = detail::parse_vector_value(value, origin, line_no);
      } else if (key == "mean_negative") {
        ds.synthetic.mean_negative = detail::parse_vector_value(value, origin, line_no);
      } else if (key == "covariance") {
        const Vector c = detail::parse_vector_value(value, origin, line_no);
        const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(c.size()))));
        if (d * d != c.size() || d == 0)
          config_fail(origin, line_no, "covariance must list d*d entries (row-major)");
        ds.synthetic.covariance = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                               Eigen::RowMajor>>(c.data(), d, d);
      } else if (key == "seed") {
        ds.synthetic.seed = detail::parse_uint_value(value, origin, line_no);
      } else {
        config_fail(origin, line_no, "unknown dataset key '" + key + "'");
      }
    }
  }
  finish_dataset(line_no);
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path, ManifestInfo* manifest = nullptr) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return parse_config(text, base, path.string(), manifest);
}

/// Serializes a resolved config (absolute paths) plus optional manifest metadata.
inline std::string write_config(const RunConfig& cfg, const ManifestInfo* manifest = nullptr) {
  const auto& ex = cfg.experiment;
  std::ostringstream out;
  if (manifest) out << "# uncertal run manifest; usable as --config\n";
  out << "strategies = " << detail::join(ex.strategies, ", ") << '\n';
  out << "trials = " << ex.trials << '\n';
  out << "budget = " << detail::budget_text(ex.budget) << '\n';
  out << "lambda = " << format_real(ex.lambda) << '\n';
  out << "seed = " << ex.base_seed << '\n';
  out << "significance = " << format_real(ex.significance) << '\n';
  for (const auto& ds : cfg.datasets) {
    out << "\n[dataset " << ds.name << "]\n";
    if (ds.kind == DatasetSource::Kind::file) {
      out << "path = " << ds.path.generic_string() << '\n';
      out << "format = " << (ds.format == FileFormat::libsvm ? "libsvm" : "csv") << '\n';
    } else {
      out << "synthetic = true\n";
      out << "per_class = " << ds.synthetic.per_class << '\n';
      out << "mean_positive = " << detail::vector_text(ds.synthetic.mean_positive) << '\n';
      out << "mean_negative = " << detail::vector_text(ds.synthetic.mean_negative) << '\n';
      const Matrix& c = ds.synthetic.covariance;
      Vector flat(c.size());
      for (Eigen::Index r = 0; r < c.rows(); ++r)
        for (Eigen::Index k = 0; k < c.cols(); ++k) flat(r * c.cols() + k) = c(r, k);
      out << "covariance = " << detail::vector_text(flat) << '\n';
      out << "seed = " << ds.synthetic.seed << '\n';
    }
    if (ds.checksum) out << "checksum = " << *ds.checksum << '\n';
  }
  if (manifest) {
    out << "\n[manifest]\n";
    out << "tool_version = " << manifest->tool_version << '\n';
    out << "started_utc = " << manifest->started_utc << '\n';
    out << "wall_seconds = " << format_real(manifest->wall_seconds) << '\n';
  }
  return out.str();
}

/// Loads or generates a dataset and returns it with its checksum (FNV-1a of
/// the file bytes, or of the libsvm serialization for generated data).
/// A checksum given in the source must match.
inline std::pair<Dataset, std::string> materialize(const DatasetSource& src) {
  Dataset ds;
  std::string checksum;
  if (src.kind == DatasetSource::Kind::file) {
    const std::string bytes = read_file(src.path);
    checksum = format_checksum(fnv1a64(bytes));
    std::istringstream in(bytes);
    ds = parse(in, src.format, src.name, src.path.string());
  } else {
    ds = make_synthetic(src.synthetic);
    ds.name = src.name;
    std::ostringstream text;
    write_libsvm(text, ds);
    checksum = format_checksum(fnv1a64(text.str()));
  }
  if (src.checksum && *src.checksum != checksum)
    throw ValidationError("dataset '" + src.name + "': checksum mismatch (expected " + *src.checksum +
                          ", got " + checksum + ")");
  return {std::move(ds), std::move(checksum)};
}

}  // namespace uncertal

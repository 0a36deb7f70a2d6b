#ifndef MINFLOW_DATA_HPP_
#define MINFLOW_DATA_HPP_

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "minflow/error.hpp"
#include "minflow/runtime.hpp"
#include "minflow/tensor.hpp"

namespace minflow {

/// n x 2 features and n binary labels.
struct Dataset {
  Tensor X = Tensor::zeros(Shape{0, 2});
  Tensor Z = Tensor::zeros(Shape{0});

  std::size_t size() const { return Z.size(); }

  bool has_both_classes() const {
    bool pos = false, neg = false;
    for (double z : Z.values()) (z == 1.0 ? pos : neg) = true;
    return pos && neg;
  }

  static Dataset from_rows(const std::vector<std::array<double, 2>>& features, std::vector<double> labels) {
    std::vector<double> flat;
    flat.reserve(features.size() * 2);
    for (const auto& f : features) flat.insert(flat.end(), f.begin(), f.end());
    return {Tensor::matrix(features.size(), 2, std::move(flat)), Tensor::vector(std::move(labels))};
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(Errc::IoError, 0, "cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  if (in.bad()) throw DataError(Errc::IoError, 0, "read failure on " + path.string());
  return lines;
}

// Shared row loop: skips blank lines and one leading header whose first field is not numeric.
template <typename RowFn>
Dataset parse_rows(const std::vector<std::string>& lines, std::size_t columns, RowFn&& row_fn) {
  std::vector<std::array<double, 2>> features;
  std::vector<double> labels;
  bool first = true;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (trim(lines[i]).empty()) continue;
    const auto fields = split_fields(lines[i]);
    double probe;
    if (first && !fields.empty() && !parse_double(fields[0], probe)) {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() != columns) {
      throw DataError(Errc::ParseError, line_no,
                      "expected " + std::to_string(columns) + " fields, got " + std::to_string(fields.size()));
    }
    std::array<double, 2> f{};
    for (std::size_t k = 0; k < 2; ++k) {
      if (!parse_double(fields[k], f[k]) || !std::isfinite(f[k]))
        throw DataError(Errc::ParseError, line_no, "bad number '" + std::string(fields[k]) + "'");
    }
    features.push_back(f);
    labels.push_back(row_fn(fields, line_no));
  }
  if (features.empty()) throw DataError(Errc::ParseError, 0, "no data rows");
  return Dataset::from_rows(features, std::move(labels));
}

}  // namespace detail

/// Reads `f1,f2,label` rows. Labels must be 0 or 1, written as integers or floats.
inline Dataset load_csv(const std::filesystem::path& path) {
  return detail::parse_rows(detail::read_lines(path), 3, [](const auto& fields, std::size_t line_no) {
    double label;
    if (!detail::parse_double(fields[2], label))
      throw DataError(Errc::ParseError, line_no, "bad label '" + std::string(fields[2]) + "'");
    if (label != 0.0 && label != 1.0)
      throw DataError(Errc::BadLabel, line_no, "label " + std::string(fields[2]) + " is not 0 or 1");
    return label;
  });
}

/// Reads a 5-column iris CSV (sepal length, sepal width, petal length, petal width, species) and
/// keeps the sepal features. Label is 1 for setosa and 0 for every other species.
inline Dataset load_iris_setosa_vs_rest(const std::filesystem::path& path) {
  return detail::parse_rows(detail::read_lines(path), 5, [](const auto& fields, std::size_t) {
    const std::string_view species = fields[4];
    return (species == "setosa" || species == "Iris-setosa") ? 1.0 : 0.0;
  });
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes the `x1,x2,label` format read by load_csv; values round-trip exactly.
inline std::string to_csv(const Dataset& d) {
  std::string out = "x1,x2,label\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    out += format_double(d.X.at(i, 0)) + "," + format_double(d.X.at(i, 1)) + "," + (d.Z[i] == 1.0 ? "1" : "0") + "\n";
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw Error(Errc::IoError, "write failure on " + path.string());
}

inline void save_csv(const Dataset& d, const std::filesystem::path& path) { write_text(path, to_csv(d)); }

/// Generated dataset together with the hyperplane it was built around.
struct SyntheticData {
  Dataset dataset;
  std::array<double, 2> normal{};  // unit vector pointing towards class 1
  std::array<double, 2> origin{};  // a point on the hyperplane
  double margin = 0.0;

  double signed_distance(double x1, double x2) const {
    return normal[0] * (x1 - origin[0]) + normal[1] * (x2 - origin[1]);
  }
};

/// Two Gaussian blobs (stddev margin/4) centred at origin +/- margin * normal, alternating labels
/// 1, 0, 1, ... Any point closer than margin/4 to the hyperplane, or on the wrong side, is redrawn.
inline SyntheticData gen_synthetic(std::size_t n, std::uint64_t seed, double margin) {
  if (n < 2 || n % 2 != 0) throw Error(Errc::InvalidArgument, "n must be even and >= 2, got " + std::to_string(n));
  if (!(margin > 0.0) || !std::isfinite(margin))
    throw Error(Errc::InvalidArgument, "margin must be positive");
  NormalSampler rng(seed);
  SyntheticData out;
  out.margin = margin;
  const double angle = 2.0 * std::numbers::pi * rng.uniform();
  out.normal = {std::cos(angle), std::sin(angle)};
  out.origin = {rng.uniform() - 0.5, rng.uniform() - 0.5};

  const double spread = margin / 4.0;
  std::vector<std::array<double, 2>> features;
  std::vector<double> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const double label = i % 2 == 0 ? 1.0 : 0.0;
    const double side = label == 1.0 ? 1.0 : -1.0;
    const double cx = out.origin[0] + side * margin * out.normal[0];
    const double cy = out.origin[1] + side * margin * out.normal[1];
    std::array<double, 2> p{};
    do {
      p = {cx + spread * rng.standard(), cy + spread * rng.standard()};
    } while (side * out.signed_distance(p[0], p[1]) < margin / 4.0);
    features.push_back(p);
    labels.push_back(label);
  }
  out.dataset = Dataset::from_rows(features, std::move(labels));
  return out;
}

/// Fraction of predictions on the right side of 0.5; a prediction of exactly 0.5 counts as class 1.
inline double accuracy(const Tensor& Y, const Tensor& Z) {
  if (Y.rank() != 1 || Z.rank() != 1 || Y.size() != Z.size())
    throw Error(Errc::ShapeMismatch, "accuracy needs equal-length vectors, got " + Y.shape().to_string() + " and " +
                                         Z.shape().to_string());
  if (Y.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < Y.size(); ++i) correct += (Y[i] >= 0.5) == (Z[i] == 1.0);
  return static_cast<double>(correct) / static_cast<double>(Y.size());
}

}  // namespace minflow

#endif  // MINFLOW_DATA_HPP_

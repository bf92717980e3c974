// Copyright 2026 The gssd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gssd/sample_set.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "gssd/error.hpp"

namespace gssd {

void validate_sample_set(const SampleSet& xs) {
  if (xs.size() < 1 || xs.dim() < 1) {
    throw InvalidArgument("sample set must have at least one row and column");
  }
  if (!xs.points.allFinite()) {
    throw InvalidArgument("sample set contains non-finite entries");
  }
}

SampleSet gen_gaussian(const RngStream& stream, Eigen::Index n,
                       const Eigen::VectorXd& mean,
                       const Eigen::VectorXd& scale, std::uint64_t noise_key) {
  const Eigen::Index d = mean.size();
  if (n < 1) throw InvalidArgument("gen_gaussian: n must be >= 1");
  if (d < 1) throw InvalidArgument("gen_gaussian: dimension must be >= 1");
  if (scale.size() != d) {
    throw InvalidArgument("gen_gaussian: mean and scale lengths differ");
  }
  if ((scale.array() <= 0.0).any()) {
    throw InvalidArgument("gen_gaussian: scale entries must be positive");
  }
  SampleSet xs;
  xs.noise_key = noise_key;
  xs.points.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const RngStream row = stream.child(static_cast<std::uint64_t>(i));
    for (Eigen::Index j = 0; j < d; ++j) {
      xs.points(i, j) =
          mean[j] + scale[j] * row.normal(static_cast<std::uint64_t>(j));
    }
  }
  return xs;
}

SampleSet gen_gaussian_isotropic(const RngStream& stream, Eigen::Index n,
                                 Eigen::Index d, double mean_value,
                                 double scale_value, std::uint64_t noise_key) {
  return gen_gaussian(stream, n, Eigen::VectorXd::Constant(d, mean_value),
                      Eigen::VectorXd::Constant(d, scale_value), noise_key);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

bool parse_cell(std::string_view cell, double& out) {
  cell = trim(cell);
  if (cell.empty()) return false;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::vector<std::string_view> split_commas(std::string_view line,
                                           std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

SampleSet load_csv(const std::filesystem::path& path,
                   std::uint64_t noise_key) {
  std::ifstream in(path);
  if (!in) {
    throw Error(fmt::format("cannot open '{}'", path.string()));
  }
  std::vector<double> values;
  Eigen::Index cols = -1;
  Eigen::Index rows = 0;
  std::string line;
  std::vector<std::string_view> cells;
  long lineno = 0;
  bool first_data_line = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.size() >= 3 && line[0] == '\xEF' &&
        line[1] == '\xBB' && line[2] == '\xBF') {
      line.erase(0, 3);  // UTF-8 BOM
    }
    if (trim(line).empty()) continue;
    split_commas(line, cells);
    if (first_data_line) {
      // Header auto-detection: skip the first row iff any cell is non-numeric.
      double probe;
      bool all_numeric = true;
      for (const auto& c : cells) {
        if (!parse_cell(c, probe)) {
          all_numeric = false;
          break;
        }
      }
      if (!all_numeric) {
        cols = static_cast<Eigen::Index>(cells.size());
        first_data_line = false;
        continue;
      }
      first_data_line = false;
    }
    if (cols < 0) cols = static_cast<Eigen::Index>(cells.size());
    if (static_cast<Eigen::Index>(cells.size()) != cols) {
      throw Error(fmt::format(
          "'{}': row {} has {} columns, expected {}", path.string(), lineno,
          cells.size(), cols));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      double v;
      if (!parse_cell(cells[j], v)) {
        throw Error(fmt::format("'{}': non-numeric cell at row {}, column {}",
                                path.string(), lineno, j + 1));
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) {
    throw Error(fmt::format("'{}': empty dataset", path.string()));
  }
  SampleSet xs;
  xs.noise_key = noise_key;
  xs.points.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      xs.points(i, j) = values[static_cast<std::size_t>(i * cols + j)];
    }
  }
  validate_sample_set(xs);
  return xs;
}

}  // namespace gssd

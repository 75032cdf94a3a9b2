#include "r2ccp/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "r2ccp/errors.hpp"
#include "r2ccp/rng.hpp"

namespace r2ccp {

namespace {

constexpr std::uint64_t kSplitSalt = 0x73706c6974ULL;  // "split"

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

bool AffineScaler::identity() const {
  for (double s : shift)
    if (s != 0.0) return false;
  for (double s : scale)
    if (s != 1.0) return false;
  return true;
}

void SplitSpec::validate() const {
  require(train_frac > 0.0 && cal_frac > 0.0 && test_frac > 0.0,
          "split fractions must be positive");
  double sum = train_frac + cal_frac + test_frac;
  require(std::abs(sum - 1.0) <= 1e-9, "split fractions must sum to 1");
}

Dataset gen_heteroscedastic(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("gen_heteroscedastic: n must be >= 1");
  Rng rng(Rng::mix(seed, 0x68657473ULL));
  Dataset ds;
  ds.dim = 1;
  ds.features.reserve(n);
  ds.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = rng.uniform(-2.0, 2.0);
    double y = rng.gaussian() * std::sqrt(std::abs(x));
    ds.features.push_back(x);
    ds.labels.push_back(y);
  }
  return ds;
}

Dataset gen_bimodal(std::size_t n, std::uint64_t seed) {
  if (n < 2 || n % 2 != 0) throw ConfigError("gen_bimodal: n must be even and >= 2");
  Rng rng(Rng::mix(seed, 0x62696d6fULL));
  constexpr int d = 4;
  constexpr double jitter = 0.1;  // per-coordinate std of the pair offset
  constexpr double noise = 0.1;   // label noise std around the +-1 modes
  Dataset ds;
  ds.dim = d;
  ds.features.reserve(n * d);
  ds.labels.reserve(n);
  for (std::size_t pair = 0; pair < n / 2; ++pair) {
    double center[d];
    for (double& c : center) c = rng.uniform(-1.0, 1.0);
    for (int member = 0; member < 2; ++member) {
      for (double c : center) ds.features.push_back(c + jitter * rng.gaussian());
      double mode = member == 0 ? 1.0 : -1.0;
      ds.labels.push_back(mode + noise * rng.gaussian());
    }
  }
  return ds;
}

Dataset gen_lei_fork(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("gen_lei_fork: n must be >= 1");
  Rng rng(Rng::mix(seed, 0x6c656966ULL));
  Dataset ds;
  ds.dim = 1;
  ds.features.reserve(n);
  ds.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = rng.uniform(-1.5, 1.5);
    double f = (x - 1.0) * (x - 1.0) * (x + 1.0);
    double g = x >= -0.5 ? 4.0 * std::sqrt(x + 0.5) : 0.0;
    double sd = std::sqrt(0.25 + std::abs(x));
    double mean = rng.uniform() < 0.5 ? f - g : f + g;
    ds.features.push_back(x);
    ds.labels.push_back(mean + sd * rng.gaussian());
  }
  return ds;
}

Dataset gen_lognormal(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("gen_lognormal: n must be >= 1");
  Rng rng(Rng::mix(seed, 0x6c6f676eULL));
  constexpr int d = 4;
  Dataset ds;
  ds.dim = d;
  ds.features.reserve(n * d);
  ds.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) ds.features.push_back(rng.gaussian());
    ds.labels.push_back(std::exp(rng.gaussian()));
  }
  return ds;
}

bool is_known_generator(const std::string& name) {
  return name == "heteroscedastic" || name == "bimodal" || name == "lei_fork" ||
         name == "lognormal";
}

Dataset make_dataset(const std::string& generator, std::size_t n, std::uint64_t seed) {
  if (generator == "heteroscedastic") return gen_heteroscedastic(n, seed);
  if (generator == "bimodal") return gen_bimodal(n, seed);
  if (generator == "lei_fork") return gen_lei_fork(n, seed);
  if (generator == "lognormal") return gen_lognormal(n, seed);
  throw ConfigError("unknown generator '" + generator + "'");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_cell(const std::string& raw, std::size_t line_no, std::size_t col_no) {
  std::string cell = trim(raw);
  auto fail = [&](const char* why) {
    std::ostringstream os;
    os << "csv: " << why << " at line " << line_no << ", column " << col_no << " ('" << cell
       << "')";
    throw IoError(os.str());
  };
  if (cell.empty()) fail("missing cell");
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) fail("non-numeric cell");
  if (!std::isfinite(value)) fail("non-finite cell");
  return value;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw IoError("csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("csv: empty file '" + path + "'");
  std::vector<std::string> header = split_line(line);
  std::size_t label_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == label_column) {
      label_idx = i;
      break;
    }
  }
  if (label_idx == header.size())
    throw IoError("csv: label column '" + label_column + "' not found in '" + path + "'");
  if (header.size() < 2) throw IoError("csv: need at least one feature column besides the label");

  Dataset ds;
  ds.dim = static_cast<int>(header.size() - 1);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      std::ostringstream os;
      os << "csv: expected " << header.size() << " cells but found " << cells.size()
         << " at line " << line_no;
      throw IoError(os.str());
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = parse_cell(cells[c], line_no, c + 1);
      if (c == label_idx)
        ds.labels.push_back(v);
      else
        ds.features.push_back(v);
    }
  }
  if (ds.labels.empty()) throw IoError("csv: no data rows in '" + path + "'");
  return ds;
}

Dataset load_csv_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("csv: empty file '" + path + "'");
  std::size_t n_cols = split_line(line).size();
  Dataset ds;
  ds.dim = static_cast<int>(n_cols);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != n_cols) {
      std::ostringstream os;
      os << "csv: expected " << n_cols << " cells but found " << cells.size() << " at line "
         << line_no;
      throw IoError(os.str());
    }
    for (std::size_t c = 0; c < cells.size(); ++c)
      ds.features.push_back(parse_cell(cells[c], line_no, c + 1));
    ds.labels.push_back(0.0);  // placeholder; rows are feature-only
  }
  if (ds.labels.empty()) throw IoError("csv: no data rows in '" + path + "'");
  return ds;
}

void write_csv(const Dataset& ds, const std::string& path, const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw IoError("csv: cannot write '" + path + "'");
  for (int j = 0; j < ds.dim; ++j) out << "f" << j << ",";
  out << label_column << "\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (std::size_t i = 0; i < ds.n(); ++i) {
    auto row = ds.row(i);
    for (double v : row) {
      put(v);
      out << ",";
    }
    put(ds.labels[i]);
    out << "\n";
  }
  if (!out) throw IoError("csv: write failed for '" + path + "'");
}

ScalerSet fit_scalers(const Dataset& train) {
  if (train.n() < 2) throw ConfigError("standardize: need at least 2 rows");
  std::size_t n = train.n();
  int d = train.dim;
  ScalerSet s;
  s.features.shift.assign(d, 0.0);
  s.features.scale.assign(d, 1.0);
  for (int j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += train.features[i * d + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double c = train.features[i * d + j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(n);
    s.features.shift[j] = mean;
    if (var > 0.0) {
      s.features.scale[j] = std::sqrt(var);
    } else {
      std::cerr << "warning: feature column " << j << " is constant; leaving scale 1\n";
      s.features.scale[j] = 1.0;
    }
  }
  double lmean = 0.0;
  for (double y : train.labels) lmean += y;
  lmean /= static_cast<double>(n);
  double lvar = 0.0;
  for (double y : train.labels) {
    double c = y - lmean;
    lvar += c * c;
  }
  lvar /= static_cast<double>(n);
  s.label.shift = lmean;
  if (lvar > 0.0) {
    s.label.scale = std::sqrt(lvar);
  } else {
    std::cerr << "warning: label column is constant; leaving scale 1\n";
    s.label.scale = 1.0;
  }
  return s;
}

Dataset apply_scalers(const Dataset& ds, const ScalerSet& s) {
  if (static_cast<int>(s.features.shift.size()) != ds.dim)
    throw ConfigError("standardize: scaler dimension mismatch");
  Dataset out;
  out.dim = ds.dim;
  out.features.resize(ds.features.size());
  out.labels.resize(ds.labels.size());
  int d = ds.dim;
  for (std::size_t i = 0; i < ds.n(); ++i)
    for (int j = 0; j < d; ++j)
      out.features[i * d + j] =
          (ds.features[i * d + j] - s.features.shift[j]) / s.features.scale[j];
  for (std::size_t i = 0; i < ds.n(); ++i) out.labels[i] = s.label.apply(ds.labels[i]);
  out.feature_scaler = s.features;
  out.label_scaler = s.label;
  return out;
}

Splits split(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  std::size_t n = ds.n();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(Rng::mix(spec.seed, kSplitSalt));
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.bounded(i));
    std::swap(perm[i - 1], perm[j]);
  }
  auto n_train = static_cast<std::size_t>(std::floor(spec.train_frac * static_cast<double>(n)));
  auto n_cal = static_cast<std::size_t>(std::floor(spec.cal_frac * static_cast<double>(n)));
  require(n_train >= 1 && n_cal >= 1 && n_train + n_cal < n,
          "split: every split must be nonempty");

  auto take = [&](std::size_t begin, std::size_t end) {
    Dataset part;
    part.dim = ds.dim;
    part.feature_scaler = ds.feature_scaler;
    part.label_scaler = ds.label_scaler;
    part.features.reserve((end - begin) * ds.dim);
    part.labels.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      auto row = ds.row(perm[i]);
      part.features.insert(part.features.end(), row.begin(), row.end());
      part.labels.push_back(ds.labels[perm[i]]);
    }
    return part;
  };
  Splits out;
  out.train = take(0, n_train);
  out.cal = take(n_train, n_train + n_cal);
  out.test = take(n_train + n_cal, n);
  return out;
}

}  // namespace r2ccp

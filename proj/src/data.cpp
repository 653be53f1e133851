#include "sparsenet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "sparsenet/errors.hpp"
#include "sparsenet/random.hpp"

namespace sparsenet {

void Dataset::validate() const {
  if (labels.empty()) throw DataError("dataset '" + name + "' is empty");
  if (n_features == 0) throw DataError("dataset '" + name + "' has no features");
  if (features.size() != labels.size() * n_features) throw DataError("feature matrix shape mismatch");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) throw DataError("label out of range");
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value in '" + name + "'");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.name = name;
  out.n_features = n_features;
  out.n_classes = n_classes;
  out.class_names = class_names;
  out.features.reserve(indices.size() * n_features);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto r = row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

}  // namespace

Dataset parse_csv(std::string_view text, const LabelColumn& label, std::string name) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  Dataset data;
  data.name = std::move(name);

  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (!trim(line).empty()) return true;
    }
    return false;
  };

  std::string_view line;
  if (!next_line(line)) throw DataError(data.name + ": missing header row");
  const auto header = split_fields(line);
  std::size_t label_index = 0;
  if (const auto* by_name = std::get_if<std::string>(&label)) {
    const auto it = std::ranges::find(header, std::string_view(*by_name));
    if (it == header.end()) throw DataError(data.name + ": label column '" + *by_name + "' not found in header");
    label_index = static_cast<std::size_t>(it - header.begin());
  } else {
    label_index = std::get<std::size_t>(label);
    if (label_index >= header.size()) throw DataError(data.name + ": label column index out of range");
  }
  if (header.size() < 2) throw DataError(data.name + ": need at least one feature column");
  data.n_features = header.size() - 1;

  std::unordered_map<std::string, int> class_ids;
  while (next_line(line)) {
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError(data.name + ": line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto field = fields[c];
      if (field.empty()) {
        throw DataError(data.name + ": missing value at line " + std::to_string(line_no) + ", column '" +
                        std::string(header[c]) + "'");
      }
      if (c == label_index) {
        const auto [it, added] = class_ids.try_emplace(std::string(field), static_cast<int>(class_ids.size()));
        if (added) data.class_names.emplace_back(field);
        data.labels.push_back(it->second);
        continue;
      }
      double value = 0.0;
      const char* first = field.data();
      if (*first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, field.data() + field.size(), value);
      if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value)) {
        throw DataError(data.name + ": non-numeric or NaN value '" + std::string(field) + "' at line " +
                        std::to_string(line_no) + ", column '" + std::string(header[c]) + "'");
      }
      data.features.push_back(value);
    }
  }
  data.n_classes = data.class_names.size();
  if (data.labels.empty()) throw DataError(data.name + ": no data rows");
  data.validate();
  return data;
}

Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), label, path.stem().string());
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t f = 0; f < data.n_features; ++f) out << 'f' << f << ',';
  out << "label\n";
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.row(i)) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      out.write(buf, ptr - buf);
      out << ',';
    }
    const auto y = static_cast<std::size_t>(data.labels[i]);
    if (y < data.class_names.size()) {
      out << data.class_names[y];
    } else {
      out << y;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

Split split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
  data.validate();
  const std::size_t n = data.size();
  // Test size is rounded up; a small guard absorbs binary representation
  // error in fractions like 2/3.
  const auto n_test = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * (1.0 - train_fraction) - 1e-9));
  const std::size_t n_train = n - std::min(n_test, n);

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> by_class(data.n_classes);
  for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

  Split out;
  out.stratified = std::ranges::all_of(by_class, [](const auto& c) { return c.empty() || c.size() >= 2; });
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  if (!out.stratified) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    rng.shuffle(std::span(all));
    train_idx.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_idx.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
  } else {
    // Largest-remainder allocation of n_train across classes.
    std::vector<std::size_t> quota(data.n_classes);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t allocated = 0;
    for (std::size_t c = 0; c < data.n_classes; ++c) {
      const double exact = static_cast<double>(by_class[c].size()) * static_cast<double>(n_train) / n;
      quota[c] = static_cast<std::size_t>(std::floor(exact + 1e-9));
      allocated += quota[c];
      remainders.emplace_back(exact - static_cast<double>(quota[c]), c);
    }
    std::ranges::stable_sort(remainders, [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; allocated < n_train && r < remainders.size(); ++r) {
      const std::size_t c = remainders[r].second;
      if (quota[c] < by_class[c].size()) {
        ++quota[c];
        ++allocated;
      }
    }
    for (std::size_t c = 0; c < data.n_classes; ++c) {
      auto& members = by_class[c];
      rng.shuffle(std::span(members));
      train_idx.insert(train_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(quota[c]));
      test_idx.insert(test_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(quota[c]), members.end());
    }
    rng.shuffle(std::span(train_idx));
    rng.shuffle(std::span(test_idx));
  }
  out.train = data.subset(train_idx);
  out.test = data.subset(test_idx);
  return out;
}

Standardizer Standardizer::fit(const Dataset& train) {
  train.validate();
  Standardizer s;
  const std::size_t d = train.n_features;
  const auto n = static_cast<double>(train.size());
  s.mean_.assign(d, 0.0);
  s.scale_.assign(d, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto r = train.row(i);
    for (std::size_t f = 0; f < d; ++f) s.mean_[f] += r[f];
  }
  for (auto& m : s.mean_) m /= n;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto r = train.row(i);
    for (std::size_t f = 0; f < d; ++f) {
      const double dev = r[f] - s.mean_[f];
      s.scale_[f] += dev * dev;
    }
  }
  for (std::size_t f = 0; f < d; ++f) {
    const double sd = std::sqrt(s.scale_[f] / n);
    // Degenerate guard: constant columns are only centred.
    s.scale_[f] = sd > 1e-12 * std::max(1.0, std::abs(s.mean_[f])) ? sd : 1.0;
  }
  return s;
}

Dataset Standardizer::transform(const Dataset& data) const {
  if (data.n_features != mean_.size()) throw DataError("standardizer feature count mismatch");
  Dataset out = data;
  const std::size_t d = data.n_features;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double* r = out.features.data() + i * d;
    for (std::size_t f = 0; f < d; ++f) r[f] = (r[f] - mean_[f]) / scale_[f];
  }
  return out;
}

Batch gather(const Dataset& data, std::span<const std::size_t> indices) {
  Batch batch(data.n_features, indices.size());
  for (std::size_t s = 0; s < indices.size(); ++s) {
    const auto r = data.row(indices[s]);
    for (std::size_t f = 0; f < data.n_features; ++f) batch(f, s) = r[f];
  }
  return batch;
}

}  // namespace sparsenet

#include "psica/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace psica {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_number(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "NA" || cell == "NaN"; }

}  // namespace

FeatureKind FeatureKind::categorical(std::vector<std::string> levels) {
  if (levels.empty()) throw DataError("categorical feature needs at least one level");
  std::set<std::string> seen;
  for (const auto& l : levels)
    if (!seen.insert(l).second) throw DataError("duplicate categorical level '" + l + "'");
  return {FeatureType::categorical, std::move(levels)};
}

std::string to_string(const FeatureKind& kind) {
  switch (kind.type) {
    case FeatureType::numeric:
      return "numeric";
    case FeatureType::ordinal:
      return "ordinal";
    case FeatureType::categorical: {
      std::string out = "categorical";
      for (std::size_t i = 0; i < kind.levels.size(); ++i) out += (i == 0 ? ":" : "|") + kind.levels[i];
      return out;
    }
  }
  return "numeric";
}

FeatureKind parse_feature_kind(const std::string& text) {
  std::string t = trim(text);
  if (t == "numeric") return FeatureKind::numeric();
  if (t == "ordinal" || t == "ordinal-numeric") return FeatureKind::ordinal();
  if (t == "categorical") return {FeatureType::categorical, {}};
  if (t.rfind("categorical:", 0) == 0) {
    std::vector<std::string> levels;
    std::stringstream ss(t.substr(12));
    std::string level;
    while (std::getline(ss, level, '|')) levels.push_back(trim(level));
    return FeatureKind::categorical(std::move(levels));
  }
  throw DataError("unknown feature kind '" + t + "'");
}

std::vector<std::size_t> TreatmentSet::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < max_treatments; ++k)
    if (contains(k)) out.push_back(k);
  return out;
}

std::string format_set(TreatmentSet s, const std::vector<std::string>& names) {
  std::string out;
  for (auto k : s.indices()) {
    if (!out.empty()) out += '|';
    out += k < names.size() ? names[k] : std::to_string(k);
  }
  return out;
}

TreatmentSet parse_set(const std::string& text, const std::vector<std::string>& names) {
  TreatmentSet s;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, '|')) {
    item = trim(item);
    if (item.empty()) continue;
    auto it = std::find(names.begin(), names.end(), item);
    if (it == names.end()) throw DataError("unknown treatment '" + item + "'");
    s.insert(static_cast<std::size_t>(it - names.begin()));
  }
  return s;
}

Dataset::Dataset(std::vector<FeatureSpec> schema, std::vector<std::vector<double>> columns,
                 std::vector<double> effects, std::vector<std::size_t> treatments,
                 std::vector<std::string> treatment_set, ColumnNames names)
    : schema_(std::move(schema)),
      columns_(std::move(columns)),
      effects_(std::move(effects)),
      treatments_(std::move(treatments)),
      treatment_set_(std::move(treatment_set)),
      names_(std::move(names)) {
  const std::size_t n = effects_.size();
  if (n == 0) throw DataError("dataset has no rows");
  if (treatment_set_.size() < 2) throw DataError("at least two treatments are required");
  if (treatment_set_.size() > TreatmentSet::max_treatments) throw DataError("too many treatments");
  if (std::set<std::string>(treatment_set_.begin(), treatment_set_.end()).size() != treatment_set_.size())
    throw DataError("duplicate treatment identifiers");
  if (columns_.size() != schema_.size()) throw DataError("schema and column count differ");
  if (treatments_.size() != n) throw DataError("treatment column length differs from effect column");
  for (std::size_t f = 0; f < columns_.size(); ++f) {
    if (columns_[f].size() != n) throw DataError("feature '" + schema_[f].name + "' has wrong length");
    for (std::size_t i = 0; i < n; ++i) {
      double v = columns_[f][i];
      if (!std::isfinite(v)) throw DataError("missing value at row " + std::to_string(i + 1));
      if (schema_[f].kind.is_categorical()) {
        if (v < 0 || v >= static_cast<double>(schema_[f].kind.levels.size()) || v != std::floor(v))
          throw DataError("invalid level code in feature '" + schema_[f].name + "'");
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(effects_[i])) throw DataError("missing value at row " + std::to_string(i + 1));
    if (treatments_[i] >= treatment_set_.size())
      throw DataError("treatment index out of range at row " + std::to_string(i + 1));
  }
}

std::vector<double> Dataset::row(std::size_t i) const {
  std::vector<double> out(columns_.size());
  for (std::size_t f = 0; f < columns_.size(); ++f) out[f] = columns_[f][i];
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<std::vector<double>> cols(columns_.size());
  for (std::size_t f = 0; f < columns_.size(); ++f) {
    cols[f].reserve(rows.size());
    for (auto r : rows) cols[f].push_back(columns_[f].at(r));
  }
  std::vector<double> y;
  std::vector<std::size_t> t;
  y.reserve(rows.size());
  t.reserve(rows.size());
  for (auto r : rows) {
    y.push_back(effects_.at(r));
    t.push_back(treatments_.at(r));
  }
  return Dataset(schema_, std::move(cols), std::move(y), std::move(t), treatment_set_, names_);
}

Dataset Dataset::with_effects(std::vector<double> effects) const {
  return Dataset(schema_, columns_, std::move(effects), treatments_, treatment_set_, names_);
}

double Dataset::encode(std::size_t f, const std::string& cell) const {
  const auto& spec = schema_.at(f);
  if (spec.kind.is_categorical()) {
    const auto& lv = spec.kind.levels;
    auto it = std::find(lv.begin(), lv.end(), cell);
    if (it == lv.end()) throw DataError("unseen level '" + cell + "' for feature '" + spec.name + "'");
    return static_cast<double>(it - lv.begin());
  }
  auto v = parse_number(cell);
  if (!v) throw DataError("cannot parse '" + cell + "' as a number for feature '" + spec.name + "'");
  return *v;
}

std::string Dataset::decode(std::size_t f, double value) const {
  const auto& spec = schema_.at(f);
  if (spec.kind.is_categorical()) return spec.kind.levels.at(static_cast<std::size_t>(value));
  return format_double(value);
}

void validate_row(const std::vector<FeatureSpec>& schema, std::span<const double> x) {
  if (x.size() != schema.size())
    throw DataError("feature row has " + std::to_string(x.size()) + " values, schema expects " +
                    std::to_string(schema.size()));
  for (std::size_t f = 0; f < schema.size(); ++f) {
    if (!std::isfinite(x[f])) throw DataError("missing value in feature '" + schema[f].name + "'");
    if (schema[f].kind.is_categorical() &&
        (x[f] < 0 || x[f] >= static_cast<double>(schema[f].kind.levels.size()) || x[f] != std::floor(x[f])))
      throw DataError("unseen level for feature '" + schema[f].name + "'");
  }
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw DataError("write failed for '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot write '" + path.string() + "': " + ec.message());
  }
}

RawTable parse_csv(const std::string& text) {
  RawTable table;
  std::stringstream ss(text);
  std::string line;
  bool header = true;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header && trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      char c = line[i];
      if (c == '"') {
        if (quoted && i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = !quoted;
        }
      } else if (c == ',' && !quoted) {
        cells.push_back(trim(cell));
        cell.clear();
      } else {
        cell += c;
      }
    }
    cells.push_back(trim(cell));
    if (header) {
      table.header = std::move(cells);
      header = false;
    } else {
      if (cells.size() == 1 && cells[0].empty()) continue;
      if (cells.size() != table.header.size())
        throw DataError("row " + std::to_string(table.rows.size() + 1) + " has " + std::to_string(cells.size()) +
                        " cells, header has " + std::to_string(table.header.size()));
      table.rows.push_back(std::move(cells));
    }
  }
  if (table.header.empty()) throw DataError("table has no header row");
  return table;
}

std::size_t RawTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

Dataset parse_table(const std::string& text, const IngestionSchema& schema) {
  RawTable raw = parse_csv(text);
  const std::size_t n = raw.rows.size();
  if (n == 0) throw DataError("table has no data rows");
  const std::size_t tcol = raw.column(schema.treatment_col);
  const std::size_t ycol = raw.column(schema.effect_col);

  std::vector<FeatureSpec> specs = schema.features;
  if (specs.empty()) {
    for (std::size_t c = 0; c < raw.header.size(); ++c) {
      if (c == tcol || c == ycol) continue;
      bool numeric = std::all_of(raw.rows.begin(), raw.rows.end(),
                                 [&](const auto& r) { return is_missing(r[c]) || parse_number(r[c]); });
      specs.push_back({raw.header[c], numeric ? FeatureKind::numeric() : FeatureKind{FeatureType::categorical, {}}});
    }
  }

  std::vector<std::vector<double>> cols(specs.size(), std::vector<double>(n));
  for (std::size_t f = 0; f < specs.size(); ++f) {
    const std::size_t c = raw.column(specs[f].name);
    auto& kind = specs[f].kind;
    const bool declared = !kind.levels.empty();
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& cell = raw.rows[i][c];
      if (is_missing(cell)) throw DataError("missing value at row " + std::to_string(i + 1));
      if (kind.is_categorical()) {
        auto it = std::find(kind.levels.begin(), kind.levels.end(), cell);
        if (it == kind.levels.end()) {
          if (declared)
            throw DataError("unknown level '" + cell + "' in column '" + specs[f].name + "' at row " +
                            std::to_string(i + 1));
          kind.levels.push_back(cell);
          it = kind.levels.end() - 1;
        }
        cols[f][i] = static_cast<double>(it - kind.levels.begin());
      } else {
        auto v = parse_number(cell);
        if (!v)
          throw DataError("non-numeric value '" + cell + "' in column '" + specs[f].name + "' at row " +
                          std::to_string(i + 1));
        cols[f][i] = *v;
      }
    }
  }

  std::vector<double> effects(n);
  std::vector<std::size_t> treatments(n);
  std::vector<std::string> tset = schema.treatments;
  const bool tdeclared = !tset.empty();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ycell = raw.rows[i][ycol];
    if (is_missing(ycell)) throw DataError("missing value at row " + std::to_string(i + 1));
    auto y = parse_number(ycell);
    if (!y) throw DataError("non-numeric effect '" + ycell + "' at row " + std::to_string(i + 1));
    effects[i] = *y;
    const auto& tcell = raw.rows[i][tcol];
    if (is_missing(tcell)) throw DataError("missing value at row " + std::to_string(i + 1));
    auto it = std::find(tset.begin(), tset.end(), tcell);
    if (it == tset.end()) {
      if (tdeclared) throw DataError("unknown treatment '" + tcell + "' at row " + std::to_string(i + 1));
      tset.push_back(tcell);
      it = tset.end() - 1;
    }
    treatments[i] = static_cast<std::size_t>(it - tset.begin());
  }
  if (!tdeclared && tset.size() < 2)
    throw DataError("treatment column '" + schema.treatment_col + "' has fewer than 2 distinct values");

  return Dataset(std::move(specs), std::move(cols), std::move(effects), std::move(treatments), std::move(tset),
                 ColumnNames{schema.treatment_col, schema.effect_col});
}

Dataset load_table(const std::filesystem::path& path, const IngestionSchema& schema) {
  return parse_table(read_file(path), schema);
}

std::string format_table(const Dataset& d) {
  std::string out;
  for (const auto& s : d.schema()) out += s.name + ",";
  out += d.column_names().treatment + "," + d.column_names().effect + "\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t f = 0; f < d.num_features(); ++f) out += d.decode(f, d.feature(i, f)) + ",";
    out += d.treatment_set()[d.treatments()[i]] + "," + format_double(d.effects()[i]) + "\n";
  }
  return out;
}

void write_table(const Dataset& d, const std::filesystem::path& path) { write_file_atomic(path, format_table(d)); }

IngestionSchema schema_of(const Dataset& d) {
  return IngestionSchema{d.column_names().treatment, d.column_names().effect, d.schema(), d.treatment_set()};
}

IngestionSchema read_schema_file(const std::filesystem::path& path) {
  IngestionSchema schema;
  std::stringstream ss(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("schema line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "treatment_col") {
      schema.treatment_col = value;
    } else if (key == "effect_col") {
      schema.effect_col = value;
    } else if (key == "treatments") {
      schema.treatments.clear();
      std::stringstream vs(value);
      std::string t;
      while (std::getline(vs, t, '|')) schema.treatments.push_back(trim(t));
    } else if (key.rfind("feature.", 0) == 0) {
      schema.features.push_back({key.substr(8), parse_feature_kind(value)});
    } else {
      throw DataError("schema line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  return schema;
}

void write_schema_file(const Dataset& d, const std::filesystem::path& path) {
  std::string out = "treatment_col=" + d.column_names().treatment + "\n";
  out += "effect_col=" + d.column_names().effect + "\n";
  out += "treatments=";
  for (std::size_t k = 0; k < d.num_treatments(); ++k) out += (k ? "|" : "") + d.treatment_set()[k];
  out += "\n";
  for (const auto& s : d.schema()) out += "feature." + s.name + "=" + to_string(s.kind) + "\n";
  write_file_atomic(path, out);
}

std::vector<std::vector<std::size_t>> treatment_rows(const Dataset& d) {
  std::vector<std::vector<std::size_t>> parts(d.num_treatments());
  for (std::size_t i = 0; i < d.size(); ++i) parts[d.treatments()[i]].push_back(i);
  for (std::size_t k = 0; k < parts.size(); ++k)
    if (parts[k].empty()) throw DataError("treatment " + d.treatment_set()[k] + " has no observations");
  return parts;
}

std::vector<Dataset> partition_by_treatment(const Dataset& d) {
  std::vector<Dataset> out;
  for (const auto& rows : treatment_rows(d)) out.push_back(d.subset(rows));
  return out;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, RandomStream& rng) {
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = rng.index(n);
  return idx;
}

Dataset bootstrap_resample(const Dataset& d, RandomStream& rng) {
  auto idx = bootstrap_indices(d.size(), rng);
  return d.subset(idx);
}

}  // namespace psica

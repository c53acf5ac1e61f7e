#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "psica/random.hpp"

namespace psica {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FeatureType { numeric, ordinal, categorical };

struct FeatureKind {
  FeatureType type = FeatureType::numeric;
  // Level identifiers for categorical features; the stored cell value is the
  // index into this list.
  std::vector<std::string> levels;

  static FeatureKind numeric() { return {FeatureType::numeric, {}}; }
  static FeatureKind ordinal() { return {FeatureType::ordinal, {}}; }
  static FeatureKind categorical(std::vector<std::string> levels);

  bool is_categorical() const { return type == FeatureType::categorical; }
  bool operator==(const FeatureKind&) const = default;
};

std::string to_string(const FeatureKind& kind);
// Accepts "numeric", "ordinal", "categorical" or "categorical:L1|L2|...".
FeatureKind parse_feature_kind(const std::string& text);

struct FeatureSpec {
  std::string name;
  FeatureKind kind;
  bool operator==(const FeatureSpec&) const = default;
};

/// Subset of the treatment set, stored as a bitmask over treatment indices.
class TreatmentSet {
 public:
  static constexpr std::size_t max_treatments = 64;

  TreatmentSet() = default;
  explicit TreatmentSet(std::uint64_t bits) : bits_(bits) {}
  static TreatmentSet all(std::size_t m) {
    return TreatmentSet(m >= 64 ? ~0ULL : ((1ULL << m) - 1));
  }
  static TreatmentSet of(std::initializer_list<std::size_t> ks) {
    TreatmentSet s;
    for (auto k : ks) s.insert(k);
    return s;
  }

  void insert(std::size_t k) { bits_ |= (1ULL << k); }
  void erase(std::size_t k) { bits_ &= ~(1ULL << k); }
  bool contains(std::size_t k) const { return (bits_ >> k) & 1ULL; }
  std::size_t size() const { return static_cast<std::size_t>(__builtin_popcountll(bits_)); }
  bool empty() const { return bits_ == 0; }
  bool subset_of(TreatmentSet other) const { return (bits_ & ~other.bits_) == 0; }
  TreatmentSet complement(std::size_t m) const { return TreatmentSet(all(m).bits_ & ~bits_); }
  std::uint64_t bits() const { return bits_; }
  std::vector<std::size_t> indices() const;

  bool operator==(const TreatmentSet&) const = default;

 private:
  std::uint64_t bits_ = 0;
};

// Renders a subset as "A|B" using treatment names.
std::string format_set(TreatmentSet s, const std::vector<std::string>& names);
TreatmentSet parse_set(const std::string& text, const std::vector<std::string>& names);

struct ColumnNames {
  std::string treatment = "treatment";
  std::string effect = "effect";
  bool operator==(const ColumnNames&) const = default;
};

/// Trial data: typed feature columns, a real-valued effect and a treatment
/// index per row. Immutable after construction.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<FeatureSpec> schema, std::vector<std::vector<double>> columns,
          std::vector<double> effects, std::vector<std::size_t> treatments,
          std::vector<std::string> treatment_set, ColumnNames names = {});

  std::size_t size() const { return effects_.size(); }
  std::size_t num_features() const { return schema_.size(); }
  std::size_t num_treatments() const { return treatment_set_.size(); }

  double feature(std::size_t row, std::size_t f) const { return columns_[f][row]; }
  std::span<const double> column(std::size_t f) const { return columns_[f]; }
  std::vector<double> row(std::size_t i) const;
  std::span<const double> effects() const { return effects_; }
  std::span<const std::size_t> treatments() const { return treatments_; }
  const std::vector<std::string>& treatment_set() const { return treatment_set_; }
  const std::vector<FeatureSpec>& schema() const { return schema_; }
  const ColumnNames& column_names() const { return names_; }

  // Rows in the given order (repeats allowed).
  Dataset subset(std::span<const std::size_t> rows) const;
  // Same rows with effects replaced.
  Dataset with_effects(std::vector<double> effects) const;

  // Encodes a text cell of feature f; throws DataError on an unseen level.
  double encode(std::size_t f, const std::string& cell) const;
  std::string decode(std::size_t f, double value) const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<FeatureSpec> schema_;
  std::vector<std::vector<double>> columns_;
  std::vector<double> effects_;
  std::vector<std::size_t> treatments_;
  std::vector<std::string> treatment_set_;
  ColumnNames names_;
};

/// Checks that a feature row matches the schema (length, finite values,
/// categorical codes in range).
void validate_row(const std::vector<FeatureSpec>& schema, std::span<const double> x);

struct IngestionSchema {
  std::string treatment_col = "treatment";
  std::string effect_col = "effect";
  // Ordered feature declarations. When empty, every other column becomes a
  // feature: numeric if all cells parse as numbers, categorical otherwise.
  std::vector<FeatureSpec> features;
  // Declared treatment set; inferred in first-appearance order when empty.
  std::vector<std::string> treatments;
};

/// Reads a flat key=value file (keys: treatment_col, effect_col, treatments,
/// feature.<name>=<kind>). '#' starts a comment.
IngestionSchema read_schema_file(const std::filesystem::path& path);
void write_schema_file(const Dataset& d, const std::filesystem::path& path);
IngestionSchema schema_of(const Dataset& d);

/// Comma-delimited table with a header row.
Dataset load_table(const std::filesystem::path& path, const IngestionSchema& schema);
Dataset parse_table(const std::string& text, const IngestionSchema& schema);
void write_table(const Dataset& d, const std::filesystem::path& path);
std::string format_table(const Dataset& d);

// Raw CSV access shared by the loaders.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(const std::string& name) const;
};
RawTable parse_csv(const std::string& text);
std::string read_file(const std::filesystem::path& path);
// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string format_double(double v);

/// One dataset per treatment, in treatment-set order, each keeping the
/// original relative row order. Throws if some treatment has no rows.
std::vector<Dataset> partition_by_treatment(const Dataset& d);
// Row indices of each part, aligned with partition_by_treatment.
std::vector<std::vector<std::size_t>> treatment_rows(const Dataset& d);

/// |n| draws with replacement from {0..n-1}.
std::vector<std::size_t> bootstrap_indices(std::size_t n, RandomStream& rng);
Dataset bootstrap_resample(const Dataset& d, RandomStream& rng);

}  // namespace psica

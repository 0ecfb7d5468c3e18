#pragma once

// Interaction logs, preprocessing and the indexed user-item corpus.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace temporec {

using Timestamp = std::int64_t;
using ItemIndex = std::uint32_t;
using UserIndex = std::uint32_t;

struct Interaction {
  std::string user;
  std::string item;
  Timestamp timestamp = 0;
  std::optional<double> rating;

  bool operator==(const Interaction&) const = default;
};

struct RatingScale {
  double min = 1.0;
  double max = 5.0;

  bool contains(double r) const { return r >= min && r <= max; }
  bool operator==(const RatingScale&) const = default;
};

// Records are kept sorted by (user, timestamp, item).
struct InteractionLog {
  std::vector<Interaction> records;
  std::optional<RatingScale> scale;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  void sort();
  bool operator==(const InteractionLog&) const = default;
};

// Column names of the input CSV. An empty rating column means the data has
// no ratings; an empty timestamp column means the data carries no time
// information and every timestamp is read as 0.
struct CsvSchema {
  std::string user_column = "user_id";
  std::string item_column = "item_id";
  std::string rating_column = "rating";
  std::string timestamp_column = "timestamp";
  std::optional<RatingScale> scale;
};

enum class ParseMode { strict, lenient };

struct ParseResult {
  InteractionLog log;
  std::size_t rows_loaded = 0;
  std::size_t rows_skipped = 0;
  bool has_timestamps = true;
  // First few skip reasons in lenient mode, with line numbers.
  std::vector<std::string> diagnostics;
};

ParseResult parse_interactions(std::istream& in, const CsvSchema& schema = {},
                               ParseMode mode = ParseMode::strict);
ParseResult parse_interactions(const std::filesystem::path& path,
                               const CsvSchema& schema = {},
                               ParseMode mode = ParseMode::strict);

// Canonical form: header `user_id,item_id,rating,timestamp`, an empty
// rating field when the record has none, shortest round-trip decimals.
void write_interactions(std::ostream& out, const InteractionLog& log);
void write_interactions(const std::filesystem::path& path,
                        const InteractionLog& log);

struct TimeWindow {
  Timestamp start = 0;
  Timestamp end = 0;  // inclusive
};

struct PreprocessOptions {
  // Keep interactions with rating >= threshold. Unset: every interaction is
  // positive feedback.
  std::optional<double> binarize_threshold;
  std::size_t min_user_degree = 5;
  std::size_t min_item_degree = 5;
  std::optional<TimeWindow> window;
};

// Binarization, window restriction, duplicate collapse (earliest timestamp
// wins) and user/item degree filtering iterated to a fixed point.
// Throws EmptyCorpusError when nothing survives.
InteractionLog preprocess(const InteractionLog& log,
                          const PreprocessOptions& opts);

struct ItemCatalog {
  std::vector<std::string> ids;  // index -> opaque id
  std::unordered_map<std::string, ItemIndex> index_of;
  std::vector<Timestamp> first_seen;
  Timestamp t_min = 0;
  Timestamp t_max = 0;

  std::size_t size() const { return ids.size(); }
};

struct UserDirectory {
  std::vector<std::string> ids;
  std::unordered_map<std::string, UserIndex> index_of;

  std::size_t size() const { return ids.size(); }
};

// Binary matrix in compressed sparse row layout.
class SparseUserItemMatrix {
 public:
  SparseUserItemMatrix() = default;
  SparseUserItemMatrix(std::size_t rows, std::size_t cols,
                       std::vector<std::size_t> row_ptr,
                       std::vector<ItemIndex> col_idx);

  // Builds from per-row column lists; each list is sorted and deduplicated.
  static SparseUserItemMatrix from_rows(
      std::size_t cols, std::vector<std::vector<ItemIndex>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return col_idx_.size(); }
  std::span<const ItemIndex> row(std::size_t r) const {
    return {col_idx_.data() + row_ptr_[r], col_idx_.data() + row_ptr_[r + 1]};
  }
  bool contains(std::size_t r, ItemIndex c) const;
  std::vector<std::size_t> column_counts() const;
  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<ItemIndex>& col_idx() const { return col_idx_; }

  bool operator==(const SparseUserItemMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<ItemIndex> col_idx_;
};

struct TimedItem {
  ItemIndex item = 0;
  Timestamp timestamp = 0;

  bool operator==(const TimedItem&) const = default;
};

// Everything downstream stages need from a preprocessed log. Indices are
// assigned in ascending id order, so per-user histories sorted by
// (timestamp, item index) follow the log's (timestamp, item id) order.
struct Corpus {
  UserDirectory users;
  ItemCatalog catalog;
  SparseUserItemMatrix matrix;
  std::vector<std::vector<TimedItem>> histories;  // per user

  std::size_t num_users() const { return users.size(); }
  std::size_t num_items() const { return catalog.size(); }
  std::size_t num_interactions() const { return matrix.nnz(); }
};

// Expects a preprocessed log (no duplicate pairs). Throws EmptyCorpusError on
// an empty log.
Corpus build_corpus(const InteractionLog& log);

// Rebuilds the canonical log (ratings dropped) from an indexed corpus.
InteractionLog corpus_to_log(const Corpus& corpus);

// Snapshot directory: interactions.csv (canonical log), catalog.csv and
// matrix.csr, each catalog/matrix file starting with a format tag line.
inline constexpr const char* kCatalogFormatTag = "# temporec-catalog v1";
inline constexpr const char* kMatrixFormatTag = "# temporec-csr v1";

void write_snapshot(const Corpus& corpus, const std::filesystem::path& dir);
Corpus read_snapshot(const std::filesystem::path& dir);

void write_catalog(std::ostream& out, const ItemCatalog& catalog);
ItemCatalog read_catalog(std::istream& in);
void write_matrix(std::ostream& out, const SparseUserItemMatrix& matrix);
SparseUserItemMatrix read_matrix(std::istream& in);

}  // namespace temporec

#include "temporec/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string_view>

#include "temporec/error.hpp"

namespace temporec {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
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

template <typename T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = first + text.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::optional<std::size_t> find_column(const std::vector<std::string_view>& header,
                                       const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

bool record_less(const Interaction& a, const Interaction& b) {
  if (a.user != b.user) return a.user < b.user;
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.item < b.item;
}

}  // namespace

void InteractionLog::sort() {
  std::stable_sort(records.begin(), records.end(), record_less);
}

ParseResult parse_interactions(std::istream& in, const CsvSchema& schema,
                               ParseMode mode) {
  ParseResult result;
  result.log.scale = schema.scale;
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(1, "missing header row");
  }
  const auto header = split_fields(line);
  const auto user_col = find_column(header, schema.user_column);
  const auto item_col = find_column(header, schema.item_column);
  if (!user_col || !item_col) {
    throw ParseError(1, "header lacks user column '" + schema.user_column +
                            "' or item column '" + schema.item_column + "'");
  }
  std::optional<std::size_t> time_col;
  if (!schema.timestamp_column.empty()) {
    time_col = find_column(header, schema.timestamp_column);
    if (!time_col) {
      throw ParseError(1, "header lacks timestamp column '" +
                              schema.timestamp_column + "'");
    }
  }
  result.has_timestamps = time_col.has_value();
  std::optional<std::size_t> rating_col;
  if (!schema.rating_column.empty()) {
    rating_col = find_column(header, schema.rating_column);
    if (!rating_col) {
      throw ParseError(1, "header lacks rating column '" +
                              schema.rating_column + "'");
    }
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    std::string problem;
    Interaction rec;
    if (fields.size() != header.size()) {
      problem = "expected " + std::to_string(header.size()) + " fields, got " +
                std::to_string(fields.size());
    } else if (fields[*user_col].empty() || fields[*item_col].empty()) {
      problem = "empty user or item id";
    } else {
      rec.user = std::string(fields[*user_col]);
      rec.item = std::string(fields[*item_col]);
      if (time_col && (!parse_number(fields[*time_col], rec.timestamp) ||
                       rec.timestamp < 0)) {
        problem = "timestamp is not a nonnegative integer: '" +
                  std::string(fields[*time_col]) + "'";
      }
      if (problem.empty() && rating_col && !fields[*rating_col].empty()) {
        double r = 0.0;
        if (!parse_number(fields[*rating_col], r) || !std::isfinite(r)) {
          problem = "rating is not a number: '" +
                    std::string(fields[*rating_col]) + "'";
        } else if (schema.scale && !schema.scale->contains(r)) {
          problem = "rating outside declared scale";
        } else {
          rec.rating = r;
        }
      }
    }
    if (!problem.empty()) {
      if (mode == ParseMode::strict) throw ParseError(line_no, problem);
      ++result.rows_skipped;
      if (result.diagnostics.size() < 20) {
        result.diagnostics.push_back("line " + std::to_string(line_no) + ": " +
                                     problem);
      }
      continue;
    }
    result.log.records.push_back(std::move(rec));
    ++result.rows_loaded;
  }
  result.log.sort();
  return result;
}

ParseResult parse_interactions(const std::filesystem::path& path,
                               const CsvSchema& schema, ParseMode mode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_interactions(in, schema, mode);
}

void write_interactions(std::ostream& out, const InteractionLog& log) {
  out << "user_id,item_id,rating,timestamp\n";
  for (const auto& r : log.records) {
    out << r.user << ',' << r.item << ',';
    if (r.rating) out << format_double(*r.rating);
    out << ',' << r.timestamp << '\n';
  }
}

void write_interactions(const std::filesystem::path& path,
                        const InteractionLog& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_interactions(out, log);
}

InteractionLog preprocess(const InteractionLog& log,
                          const PreprocessOptions& opts) {
  InteractionLog out;
  out.scale = log.scale;
  out.records.reserve(log.records.size());
  for (const auto& r : log.records) {
    if (opts.binarize_threshold) {
      if (!r.rating) {
        throw ContractError(
            "binarization threshold set but an interaction has no rating");
      }
      if (*r.rating < *opts.binarize_threshold) continue;
    }
    if (opts.window &&
        (r.timestamp < opts.window->start || r.timestamp > opts.window->end)) {
      continue;
    }
    out.records.push_back(r);
  }
  out.sort();

  // Earliest occurrence of each (user, item) pair survives.
  {
    std::vector<Interaction> unique;
    unique.reserve(out.records.size());
    std::set<std::string_view> seen;
    std::string_view current_user;
    for (auto& r : out.records) {
      if (unique.empty() || r.user != current_user) {
        seen.clear();
      }
      current_user = r.user;
      if (seen.insert(r.item).second) unique.push_back(r);
    }
    out.records = std::move(unique);
  }

  // Alternate user and item degree filtering until neither removes anything.
  bool changed = true;
  while (changed && !out.records.empty()) {
    changed = false;
    std::map<std::string, std::size_t> user_deg;
    for (const auto& r : out.records) ++user_deg[r.user];
    const auto before_users = out.records.size();
    std::erase_if(out.records, [&](const Interaction& r) {
      return user_deg[r.user] < opts.min_user_degree;
    });
    changed |= out.records.size() != before_users;

    std::map<std::string, std::size_t> item_deg;
    for (const auto& r : out.records) ++item_deg[r.item];
    const auto before_items = out.records.size();
    std::erase_if(out.records, [&](const Interaction& r) {
      return item_deg[r.item] < opts.min_item_degree;
    });
    changed |= out.records.size() != before_items;
  }

  if (out.records.empty()) {
    throw EmptyCorpusError("preprocessing removed every interaction");
  }
  return out;
}

SparseUserItemMatrix::SparseUserItemMatrix(std::size_t rows, std::size_t cols,
                                           std::vector<std::size_t> row_ptr,
                                           std::vector<ItemIndex> col_idx)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)) {
  if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 ||
      row_ptr_.back() != col_idx_.size()) {
    throw ContractError("inconsistent CSR row pointers");
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    if (row_ptr_[r] > row_ptr_[r + 1]) {
      throw ContractError("CSR row pointers not monotone");
    }
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      if (col_idx_[k] >= cols_) throw ContractError("CSR column out of range");
      if (k > row_ptr_[r] && col_idx_[k] <= col_idx_[k - 1]) {
        throw ContractError("CSR columns not strictly increasing in a row");
      }
    }
  }
}

SparseUserItemMatrix SparseUserItemMatrix::from_rows(
    std::size_t cols, std::vector<std::vector<ItemIndex>> rows) {
  std::vector<std::size_t> row_ptr{0};
  std::vector<ItemIndex> col_idx;
  for (auto& row : rows) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    col_idx.insert(col_idx.end(), row.begin(), row.end());
    row_ptr.push_back(col_idx.size());
  }
  return SparseUserItemMatrix(rows.size(), cols, std::move(row_ptr),
                              std::move(col_idx));
}

bool SparseUserItemMatrix::contains(std::size_t r, ItemIndex c) const {
  const auto cols = row(r);
  return std::binary_search(cols.begin(), cols.end(), c);
}

std::vector<std::size_t> SparseUserItemMatrix::column_counts() const {
  std::vector<std::size_t> counts(cols_, 0);
  for (const ItemIndex c : col_idx_) ++counts[c];
  return counts;
}

Corpus build_corpus(const InteractionLog& log) {
  if (log.empty()) throw EmptyCorpusError("cannot index an empty log");
  Corpus corpus;

  std::set<std::string> user_ids;
  std::set<std::string> item_ids;
  for (const auto& r : log.records) {
    user_ids.insert(r.user);
    item_ids.insert(r.item);
  }
  corpus.users.ids.assign(user_ids.begin(), user_ids.end());
  for (std::size_t u = 0; u < corpus.users.ids.size(); ++u) {
    corpus.users.index_of.emplace(corpus.users.ids[u],
                                  static_cast<UserIndex>(u));
  }
  auto& catalog = corpus.catalog;
  catalog.ids.assign(item_ids.begin(), item_ids.end());
  for (std::size_t i = 0; i < catalog.ids.size(); ++i) {
    catalog.index_of.emplace(catalog.ids[i], static_cast<ItemIndex>(i));
  }

  catalog.first_seen.assign(catalog.size(),
                            std::numeric_limits<Timestamp>::max());
  corpus.histories.assign(corpus.users.size(), {});
  for (const auto& r : log.records) {
    const UserIndex u = corpus.users.index_of.at(r.user);
    const ItemIndex i = catalog.index_of.at(r.item);
    catalog.first_seen[i] = std::min(catalog.first_seen[i], r.timestamp);
    corpus.histories[u].push_back({i, r.timestamp});
  }
  catalog.t_min = *std::min_element(catalog.first_seen.begin(),
                                    catalog.first_seen.end());
  catalog.t_max = *std::max_element(catalog.first_seen.begin(),
                                    catalog.first_seen.end());

  std::vector<std::vector<ItemIndex>> rows(corpus.users.size());
  for (std::size_t u = 0; u < corpus.histories.size(); ++u) {
    auto& h = corpus.histories[u];
    std::sort(h.begin(), h.end(), [](const TimedItem& a, const TimedItem& b) {
      return a.timestamp != b.timestamp ? a.timestamp < b.timestamp
                                        : a.item < b.item;
    });
    for (const auto& e : h) rows[u].push_back(e.item);
  }
  corpus.matrix =
      SparseUserItemMatrix::from_rows(catalog.size(), std::move(rows));
  if (corpus.matrix.nnz() != log.size()) {
    throw ContractError("log contains duplicate (user, item) pairs");
  }
  return corpus;
}

InteractionLog corpus_to_log(const Corpus& corpus) {
  InteractionLog log;
  for (std::size_t u = 0; u < corpus.histories.size(); ++u) {
    for (const auto& e : corpus.histories[u]) {
      log.records.push_back(
          {corpus.users.ids[u], corpus.catalog.ids[e.item], e.timestamp, {}});
    }
  }
  log.sort();
  return log;
}

void write_catalog(std::ostream& out, const ItemCatalog& catalog) {
  out << kCatalogFormatTag << '\n' << "index,item_id,first_seen\n";
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    out << i << ',' << catalog.ids[i] << ',' << catalog.first_seen[i] << '\n';
  }
}

ItemCatalog read_catalog(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCatalogFormatTag) {
    throw ParseError(1, "missing catalog format tag");
  }
  std::getline(in, line);  // column header
  ItemCatalog catalog;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_fields(line);
    std::size_t index = 0;
    Timestamp t = 0;
    if (f.size() != 3 || !parse_number(f[0], index) ||
        index != catalog.size() || !parse_number(f[2], t)) {
      throw ParseError(line_no, "malformed catalog row");
    }
    catalog.index_of.emplace(std::string(f[1]), static_cast<ItemIndex>(index));
    catalog.ids.emplace_back(f[1]);
    catalog.first_seen.push_back(t);
  }
  if (!catalog.first_seen.empty()) {
    catalog.t_min = *std::min_element(catalog.first_seen.begin(),
                                      catalog.first_seen.end());
    catalog.t_max = *std::max_element(catalog.first_seen.begin(),
                                      catalog.first_seen.end());
  }
  return catalog;
}

void write_matrix(std::ostream& out, const SparseUserItemMatrix& matrix) {
  out << kMatrixFormatTag << '\n'
      << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.nnz() << '\n';
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    for (const ItemIndex c : matrix.row(r)) out << r << ' ' << c << " 1\n";
  }
}

SparseUserItemMatrix read_matrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kMatrixFormatTag) {
    throw ParseError(1, "missing matrix format tag");
  }
  std::size_t rows = 0, cols = 0, nnz = 0;
  if (!(in >> rows >> cols >> nnz)) {
    throw ParseError(2, "malformed matrix dimensions");
  }
  std::vector<std::vector<ItemIndex>> entries(rows);
  for (std::size_t k = 0; k < nnz; ++k) {
    std::size_t r = 0, c = 0;
    int value = 0;
    if (!(in >> r >> c >> value) || r >= rows || c >= cols || value != 1) {
      throw ParseError(3 + k, "malformed matrix triplet");
    }
    entries[r].push_back(static_cast<ItemIndex>(c));
  }
  return SparseUserItemMatrix::from_rows(cols, std::move(entries));
}

void write_snapshot(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_interactions(dir / "interactions.csv", corpus_to_log(corpus));
  std::ofstream catalog(dir / "catalog.csv");
  std::ofstream matrix(dir / "matrix.csr");
  if (!catalog || !matrix) throw IoError("cannot write snapshot to " + dir.string());
  write_catalog(catalog, corpus.catalog);
  write_matrix(matrix, corpus.matrix);
}

Corpus read_snapshot(const std::filesystem::path& dir) {
  CsvSchema schema;
  Corpus corpus =
      build_corpus(parse_interactions(dir / "interactions.csv", schema).log);
  std::ifstream catalog_in(dir / "catalog.csv");
  std::ifstream matrix_in(dir / "matrix.csr");
  if (!catalog_in || !matrix_in) {
    throw IoError("incomplete snapshot in " + dir.string());
  }
  const ItemCatalog catalog = read_catalog(catalog_in);
  const SparseUserItemMatrix matrix = read_matrix(matrix_in);
  if (catalog.ids != corpus.catalog.ids ||
      catalog.first_seen != corpus.catalog.first_seen ||
      !(matrix == corpus.matrix)) {
    throw IoError("snapshot files disagree with interactions.csv in " +
                  dir.string());
  }
  return corpus;
}

}  // namespace temporec

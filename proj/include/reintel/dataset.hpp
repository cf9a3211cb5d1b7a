#pragma once

// Post loading, stratified splitting, and prediction-file IO.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reintel/common.hpp"
#include "reintel/csv.hpp"

namespace reintel {

struct RawPost {
  std::string id;
  std::string user_id;
  std::string text;
  std::optional<double> timestamp;  // epoch seconds
  std::optional<double> num_likes;
  std::optional<double> num_shares;
  std::optional<double> num_comments;
  std::vector<std::string> image_paths;
  std::optional<int> label;  // 0 = reliable, 1 = unreliable
};

struct Prediction {
  std::string id;
  double score = 0.0;  // unreliability probability in [0,1]
};

// Maps canonical field names to the column names present in the file header.
struct DatasetSchema {
  std::map<std::string, std::string> columns = {
      {"id", "id"},
      {"user_id", "user_id"},
      {"timestamp", "timestamp"},
      {"text", "text"},
      {"num_likes", "num_likes"},
      {"num_shares", "num_shares"},
      {"num_comments", "num_comments"},
      {"image_paths", "image_paths"},
      {"label", "label"},
  };
};

namespace detail {

inline std::optional<double> parse_number(const std::string& cell,
                                          const std::string& field, int row) {
  if (cell.empty()) return std::nullopt;  // empty cell is a true null
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    throw Error("row " + std::to_string(row) + ": field " + field +
                ": cannot parse number '" + cell + "'");
  }
  while (pos < cell.size() && is_space(cell[pos])) ++pos;
  if (pos != cell.size())
    throw Error("row " + std::to_string(row) + ": field " + field +
                ": cannot parse number '" + cell + "'");
  return v;
}

}  // namespace detail

inline std::vector<RawPost> load_dataset(const std::string& path,
                                         const DatasetSchema& schema = {}) {
  csv::Table t = csv::read_file(path);

  auto col = [&](const std::string& field, bool required) {
    auto it = schema.columns.find(field);
    if (it == schema.columns.end())
      throw Error("schema has no mapping for field '" + field + "'");
    int idx = t.column(it->second);
    if (idx < 0 && required)
      throw Error("dataset " + path + ": header has no column '" + it->second +
                  "' (field " + field + ")");
    return idx;
  };

  const int c_id = col("id", true);
  const int c_user = col("user_id", true);
  const int c_ts = col("timestamp", true);
  const int c_text = col("text", true);
  const int c_likes = col("num_likes", true);
  const int c_shares = col("num_shares", true);
  const int c_comments = col("num_comments", true);
  const int c_images = col("image_paths", true);
  const int c_label = col("label", false);  // absent at predict time

  std::vector<RawPost> posts;
  posts.reserve(t.rows.size());
  std::set<std::string> seen_ids;

  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const int rn = static_cast<int>(r) + 1;  // 1-based data row index
    if (row.size() != t.header.size())
      throw Error("row " + std::to_string(rn) + ": expected " +
                  std::to_string(t.header.size()) + " columns, got " +
                  std::to_string(row.size()));

    RawPost p;
    p.id = row[c_id];
    if (p.id.empty())
      throw Error("row " + std::to_string(rn) + ": empty id");
    if (!seen_ids.insert(p.id).second)
      throw Error("row " + std::to_string(rn) + ": duplicate id '" + p.id + "'");
    p.user_id = row[c_user];
    p.text = row[c_text];
    p.timestamp = detail::parse_number(row[c_ts], "timestamp", rn);
    p.num_likes = detail::parse_number(row[c_likes], "num_likes", rn);
    p.num_shares = detail::parse_number(row[c_shares], "num_shares", rn);
    p.num_comments = detail::parse_number(row[c_comments], "num_comments", rn);
    for (const auto* cnt : {&p.num_likes, &p.num_shares, &p.num_comments})
      if (*cnt && **cnt < 0)
        throw Error("row " + std::to_string(rn) + ": negative count");
    if (!row[c_images].empty())
      for (auto& ip : split(row[c_images], ';'))
        if (!ip.empty()) p.image_paths.push_back(ip);
    if (c_label >= 0 && !row[c_label].empty()) {
      auto v = detail::parse_number(row[c_label], "label", rn);
      if (*v != 0.0 && *v != 1.0)
        throw Error("row " + std::to_string(rn) + ": label must be 0 or 1, got '" +
                    row[c_label] + "'");
      p.label = static_cast<int>(*v);
    }
    posts.push_back(std::move(p));
  }
  return posts;
}

struct SplitResult {
  std::vector<RawPost> train;
  std::vector<RawPost> validation;
};

// Stratified by label. Per-class train count is round-half-up of
// fraction * class_count (ties go to train), so counts stay within one
// sample of the exact proportion.
inline SplitResult split_dataset(const std::vector<RawPost>& posts,
                                 double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw Error("train_fraction must be in (0, 1]");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (!posts[i].label)
      throw Error("split_dataset: post '" + posts[i].id + "' is unlabeled");
    by_class[*posts[i].label].push_back(i);
  }
  auto eng = make_engine(seed, "split");
  std::vector<std::size_t> train_idx, val_idx;
  for (auto& cls : by_class) {
    seeded_shuffle(cls, eng);
    std::size_t n_train =
        static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(cls.size()) + 0.5));
    n_train = std::min(n_train, cls.size());
    for (std::size_t k = 0; k < cls.size(); ++k)
      (k < n_train ? train_idx : val_idx).push_back(cls[k]);
  }
  // Keep input order within each part so downstream artifacts are stable.
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  SplitResult out;
  for (auto i : train_idx) out.train.push_back(posts[i]);
  for (auto i : val_idx) out.validation.push_back(posts[i]);
  return out;
}

inline void write_predictions(const std::string& path,
                              const std::vector<Prediction>& predictions) {
  for (const auto& p : predictions)
    if (!(p.score >= 0.0 && p.score <= 1.0))
      throw Error("prediction for '" + p.id + "' out of [0,1]: " +
                  std::to_string(p.score));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write predictions: " + path);
  out << "id,score\n";
  char buf[32];
  for (const auto& p : predictions) {
    std::snprintf(buf, sizeof(buf), "%.6f", p.score);
    out << csv::quote_field(p.id) << ',' << buf << '\n';
  }
  if (!out) throw Error("prediction write failed: " + path);
}

inline std::vector<Prediction> read_predictions(const std::string& path) {
  csv::Table t = csv::read_file(path);
  int c_id = t.column("id"), c_score = t.column("score");
  if (c_id < 0 || c_score < 0)
    throw Error("prediction file " + path + ": expected header id,score");
  std::vector<Prediction> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    auto v = detail::parse_number(t.rows[r][c_score], "score", static_cast<int>(r) + 1);
    if (!v || !(*v >= 0.0 && *v <= 1.0))
      throw Error("prediction file " + path + ": row " + std::to_string(r + 1) +
                  ": score out of [0,1]");
    out.push_back({t.rows[r][c_id], *v});
  }
  return out;
}

}  // namespace reintel

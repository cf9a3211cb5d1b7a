#pragma once

// Metadata feature engineering: mean and chained-equations imputation,
// timestamp expansion, per-user label histories, the 18-column feature
// matrix, and train-fitted standardization.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "reintel/common.hpp"
#include "reintel/csv.hpp"
#include "reintel/dataset.hpp"
#include "reintel/text.hpp"

namespace reintel {

using OptVec = std::vector<std::optional<double>>;

// ---- imputation ----

inline std::vector<double> mean_impute(const OptVec& column) {
  double sum = 0;
  long n = 0;
  for (const auto& v : column)
    if (v) { sum += *v; ++n; }
  double mean = 0;
  if (n > 0) {
    mean = sum / static_cast<double>(n);
  } else if (!column.empty()) {
    warn("mean_impute: column fully missing, filling with 0");
  }
  std::vector<double> out(column.size());
  for (std::size_t i = 0; i < column.size(); ++i) out[i] = column[i] ? *column[i] : mean;
  return out;
}

struct MiceOptions {
  int rounds = 10;
  double ridge_lambda = 1e-6;
};

// Chained equations: nulls start at column means; each sweep refits a
// ridge-regularized linear regression of every incomplete column on all the
// others (at their current imputed values) and overwrites only the missing
// entries with predictions. Observed entries never change. The pass is a
// deterministic regression chain (no posterior draws), so the seed is
// accepted for interface stability but not consumed.
inline std::vector<OptVec> mice_impute(const std::vector<OptVec>& columns,
                                       int rounds, std::uint64_t seed,
                                       double ridge_lambda = 1e-6) {
  (void)seed;
  const std::size_t n_cols = columns.size();
  if (n_cols < 2) throw Error("mice_impute: need at least 2 columns");
  const std::size_t n_rows = columns.empty() ? 0 : columns[0].size();
  for (const auto& c : columns)
    if (c.size() != n_rows) throw Error("mice_impute: ragged columns");

  std::vector<std::vector<double>> cur(n_cols);
  std::vector<std::vector<bool>> missing(n_cols);
  std::vector<bool> any_missing(n_cols, false), all_missing(n_cols, false);
  for (std::size_t c = 0; c < n_cols; ++c) {
    cur[c] = mean_impute(columns[c]);
    missing[c].resize(n_rows, false);
    std::size_t n_miss = 0;
    for (std::size_t r = 0; r < n_rows; ++r) {
      missing[c][r] = !columns[c][r].has_value();
      n_miss += missing[c][r];
    }
    any_missing[c] = n_miss > 0;
    all_missing[c] = n_miss == n_rows;
  }

  for (int round = 0; round < rounds; ++round) {
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (!any_missing[c] || all_missing[c]) continue;  // fully-null stayed at 0
      std::vector<std::size_t> obs;
      for (std::size_t r = 0; r < n_rows; ++r)
        if (!missing[c][r]) obs.push_back(r);

      // design: other columns + intercept
      const std::size_t p = n_cols - 1 + 1;
      Eigen::MatrixXd X(obs.size(), p);
      Eigen::VectorXd y(obs.size());
      for (std::size_t i = 0; i < obs.size(); ++i) {
        std::size_t k = 0;
        for (std::size_t c2 = 0; c2 < n_cols; ++c2)
          if (c2 != c) X(i, k++) = cur[c2][obs[i]];
        X(i, p - 1) = 1.0;
        y(i) = cur[c][obs[i]];
      }
      Eigen::MatrixXd gram = X.transpose() * X;
      gram.diagonal().array() += ridge_lambda;
      Eigen::VectorXd beta = gram.ldlt().solve(X.transpose() * y);
      if (!beta.allFinite()) {
        warn("mice_impute: singular regression for column " + std::to_string(c) +
             ", falling back to mean");
        continue;  // entries keep their mean initialization
      }
      for (std::size_t r = 0; r < n_rows; ++r) {
        if (!missing[c][r]) continue;
        double pred = beta(p - 1);
        std::size_t k = 0;
        for (std::size_t c2 = 0; c2 < n_cols; ++c2)
          if (c2 != c) pred += beta(k++) * cur[c2][r];
        cur[c][r] = pred;
      }
    }
  }

  std::vector<OptVec> out(n_cols, OptVec(n_rows));
  for (std::size_t c = 0; c < n_cols; ++c)
    for (std::size_t r = 0; r < n_rows; ++r) out[c][r] = cur[c][r];
  return out;
}

// ---- timestamp expansion ----

struct TimeParts {
  int day = 0;
  int month = 0;
  int year = 0;
  int hour = 0;
  int weekday = 0;  // Monday = 0 ... Sunday = 6
};

// UTC calendar decomposition via the classic civil-from-days arithmetic.
inline TimeParts expand_timestamp(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / 86400;
  std::int64_t rem = epoch_seconds % 86400;
  if (rem < 0) { rem += 86400; --days; }
  TimeParts t;
  t.hour = static_cast<int>(rem / 3600);
  t.weekday = static_cast<int>(((days % 7) + 7 + 3) % 7);  // 1970-01-01 is Thursday

  std::int64_t z = days + 719468;
  std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  std::int64_t doe = z - era * 146097;
  std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  std::int64_t y = yoe + era * 400;
  std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  std::int64_t mp = (5 * doy + 2) / 153;
  t.day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  t.month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  t.year = static_cast<int>(y + (t.month <= 2 ? 1 : 0));
  return t;
}

// ---- user history ----

struct UserHistory {
  long n_unreliable = 0;
  long n_reliable = 0;
  double ratio = 0.5;  // add-one smoothed unreliable fraction
};

inline double smoothed_ratio(long n_unreliable, long n_reliable) {
  return (static_cast<double>(n_unreliable) + 1.0) /
         (static_cast<double>(n_unreliable + n_reliable) + 2.0);
}

// Fitted on the training split only; lookup of an unseen user returns the
// smoothing prior (0, 0, 0.5).
class UserHistoryMap {
 public:
  void fit(const std::vector<RawPost>& train_posts) {
    map_.clear();
    for (const auto& p : train_posts) {
      if (!p.label)
        throw Error("user histories: post '" + p.id + "' is unlabeled");
      auto& h = map_[p.user_id];
      if (*p.label == 1) ++h.n_unreliable;
      else ++h.n_reliable;
    }
    for (auto& [_, h] : map_) h.ratio = smoothed_ratio(h.n_unreliable, h.n_reliable);
  }

  UserHistory lookup(const std::string& user_id) const {
    auto it = map_.find(user_id);
    return it == map_.end() ? UserHistory{} : it->second;
  }

  const std::map<std::string, UserHistory>& entries() const { return map_; }
  std::map<std::string, UserHistory>& entries() { return map_; }

 private:
  std::map<std::string, UserHistory> map_;
};

inline UserHistoryMap compute_user_histories(const std::vector<RawPost>& train_posts) {
  UserHistoryMap m;
  m.fit(train_posts);
  return m;
}

// ---- feature matrix ----

struct ColumnStats {
  double mean = 0;
  double stddev = 1;
};

struct FeatureMatrix {
  Eigen::MatrixXd values;                  // rows x K
  std::vector<std::string> column_names;   // K
  std::vector<bool> boolean_mask;          // K, true = exempt from scaling
  std::vector<std::string> row_ids;
  std::optional<std::vector<ColumnStats>> standardization;

  Eigen::Index cols() const { return values.cols(); }
  Eigen::Index rows() const { return values.rows(); }

  int column(std::string_view name) const {
    for (std::size_t i = 0; i < column_names.size(); ++i)
      if (column_names[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline const std::vector<std::string>& feature_column_order() {
  static const std::vector<std::string> order = {
      "num_likes",     "num_shares",   "num_comments", "day",
      "month",         "year",         "hour",         "weekday",
      "n_hashtags",    "n_urls",       "n_chars",      "n_words",
      "n_question_marks", "n_exclaim_marks", "user_n_unreliable",
      "user_n_reliable", "user_ratio", "has_image"};
  return order;
}

struct FeatureConfig {
  std::vector<std::string> drop_columns;
  MiceOptions mice;
  std::uint64_t seed = 0;
};

// Columns, fixed order: counts (mean-imputed), timestamp expansion (counts
// first serve as MICE regressors for the timestamp), raw-text statistics,
// user history, has_image flag. 18 columns before any configured drops.
inline FeatureMatrix build_feature_matrix(const std::vector<RawPost>& posts,
                                          const UserHistoryMap& histories,
                                          const std::vector<TextStats>& raw_stats,
                                          const FeatureConfig& config = {}) {
  if (raw_stats.size() != posts.size())
    throw Error("build_feature_matrix: stats/posts size mismatch");
  const auto& order = feature_column_order();
  std::set<std::string> drop(config.drop_columns.begin(), config.drop_columns.end());
  for (const auto& d : drop)
    if (std::find(order.begin(), order.end(), d) == order.end())
      throw Error("build_feature_matrix: unknown column to drop: '" + d + "'");

  const std::size_t n = posts.size();
  OptVec likes(n), shares(n), comments(n), ts(n);
  for (std::size_t i = 0; i < n; ++i) {
    likes[i] = posts[i].num_likes;
    shares[i] = posts[i].num_shares;
    comments[i] = posts[i].num_comments;
    ts[i] = posts[i].timestamp;
  }
  std::vector<double> likes_f = mean_impute(likes);
  std::vector<double> shares_f = mean_impute(shares);
  std::vector<double> comments_f = mean_impute(comments);

  // Timestamp imputed against the completed count columns.
  std::vector<double> ts_f(n, 0.0);
  bool ts_missing = std::any_of(ts.begin(), ts.end(),
                                [](const auto& v) { return !v.has_value(); });
  if (n > 0) {
    if (ts_missing) {
      std::vector<OptVec> cols(4, OptVec(n));
      for (std::size_t i = 0; i < n; ++i) {
        cols[0][i] = likes_f[i];
        cols[1][i] = shares_f[i];
        cols[2][i] = comments_f[i];
        cols[3][i] = ts[i];
      }
      auto imputed = mice_impute(cols, config.mice.rounds, config.seed,
                                 config.mice.ridge_lambda);
      for (std::size_t i = 0; i < n; ++i) ts_f[i] = *imputed[3][i];
    } else {
      for (std::size_t i = 0; i < n; ++i) ts_f[i] = *ts[i];
    }
  }

  std::map<std::string, std::vector<double>> col_values;
  for (const auto& name : order) col_values[name] = std::vector<double>(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = posts[i];
    TimeParts tp = expand_timestamp(static_cast<std::int64_t>(std::floor(ts_f[i])));
    UserHistory h = histories.lookup(p.user_id);
    col_values["num_likes"][i] = likes_f[i];
    col_values["num_shares"][i] = shares_f[i];
    col_values["num_comments"][i] = comments_f[i];
    col_values["day"][i] = tp.day;
    col_values["month"][i] = tp.month;
    col_values["year"][i] = tp.year;
    col_values["hour"][i] = tp.hour;
    col_values["weekday"][i] = tp.weekday;
    col_values["n_hashtags"][i] = static_cast<double>(raw_stats[i].n_hashtags);
    col_values["n_urls"][i] = static_cast<double>(raw_stats[i].n_urls);
    col_values["n_chars"][i] = static_cast<double>(raw_stats[i].n_chars);
    col_values["n_words"][i] = static_cast<double>(raw_stats[i].n_words);
    col_values["n_question_marks"][i] = static_cast<double>(raw_stats[i].n_question_marks);
    col_values["n_exclaim_marks"][i] = static_cast<double>(raw_stats[i].n_exclaim_marks);
    col_values["user_n_unreliable"][i] = static_cast<double>(h.n_unreliable);
    col_values["user_n_reliable"][i] = static_cast<double>(h.n_reliable);
    col_values["user_ratio"][i] = h.ratio;
    col_values["has_image"][i] = p.image_paths.empty() ? 0.0 : 1.0;
  }

  FeatureMatrix fm;
  for (const auto& name : order) {
    if (drop.count(name)) continue;
    fm.column_names.push_back(name);
    fm.boolean_mask.push_back(name == "has_image");
  }
  fm.values.resize(static_cast<Eigen::Index>(n),
                   static_cast<Eigen::Index>(fm.column_names.size()));
  for (std::size_t c = 0; c < fm.column_names.size(); ++c) {
    const auto& v = col_values[fm.column_names[c]];
    for (std::size_t r = 0; r < n; ++r)
      fm.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r];
  }
  fm.row_ids.reserve(n);
  for (const auto& p : posts) fm.row_ids.push_back(p.id);
  return fm;
}

// Non-boolean columns become (x - mean) / population_std; near-constant
// columns map to all zeros. fit=true computes and stores the parameters,
// fit=false reuses previously fitted ones.
inline FeatureMatrix standardize(const FeatureMatrix& matrix, bool fit) {
  FeatureMatrix out = matrix;
  const Eigen::Index n = matrix.rows(), k = matrix.cols();
  std::vector<ColumnStats> params;
  if (fit) {
    params.resize(static_cast<std::size_t>(k));
    for (Eigen::Index c = 0; c < k; ++c) {
      double mean = n > 0 ? matrix.values.col(c).mean() : 0.0;
      double var = 0;
      if (n > 0)
        var = (matrix.values.col(c).array() - mean).square().sum() /
              static_cast<double>(n);
      params[static_cast<std::size_t>(c)] = {mean, std::sqrt(var)};
    }
  } else {
    if (!matrix.standardization)
      throw Error("standardize: fit=false but no fitted parameters present");
    params = *matrix.standardization;
    if (params.size() != static_cast<std::size_t>(k))
      throw Error("standardize: parameter/column count mismatch");
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    if (matrix.boolean_mask[static_cast<std::size_t>(c)]) continue;
    const auto& st = params[static_cast<std::size_t>(c)];
    if (st.stddev < 1e-12) {
      out.values.col(c).setZero();
    } else {
      out.values.col(c) = (matrix.values.col(c).array() - st.mean) / st.stddev;
    }
  }
  out.standardization = params;
  return out;
}

// ---- persistence ----

inline void write_feature_matrix(const std::string& path, const FeatureMatrix& fm) {
  std::vector<std::string> header = {"id"};
  header.insert(header.end(), fm.column_names.begin(), fm.column_names.end());
  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<std::size_t>(fm.rows()));
  for (Eigen::Index r = 0; r < fm.rows(); ++r) {
    std::vector<std::string> row = {fm.row_ids[static_cast<std::size_t>(r)]};
    for (Eigen::Index c = 0; c < fm.cols(); ++c)
      row.push_back(format_double(fm.values(r, c)));
    rows.push_back(std::move(row));
  }
  csv::write_file(path, header, rows);
}

inline FeatureMatrix read_feature_matrix(const std::string& path) {
  csv::Table t = csv::read_file(path);
  if (t.header.empty() || t.header[0] != "id")
    throw Error("feature matrix " + path + ": first column must be id");
  FeatureMatrix fm;
  fm.column_names.assign(t.header.begin() + 1, t.header.end());
  for (const auto& name : fm.column_names)
    fm.boolean_mask.push_back(name == "has_image");
  fm.values.resize(static_cast<Eigen::Index>(t.rows.size()),
                   static_cast<Eigen::Index>(fm.column_names.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != t.header.size())
      throw Error("feature matrix " + path + ": row " + std::to_string(r + 1) +
                  ": column count mismatch");
    fm.row_ids.push_back(t.rows[r][0]);
    for (std::size_t c = 1; c < t.rows[r].size(); ++c)
      fm.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1)) =
          std::stod(t.rows[r][c]);
  }
  return fm;
}

// Key-value sidecar holding the train-fitted standardization parameters and
// user histories, for reuse at predict time.
inline void write_feature_params(const std::string& path, const FeatureMatrix& fm,
                                 const UserHistoryMap& histories) {
  if (!fm.standardization)
    throw Error("write_feature_params: matrix has no fitted parameters");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write feature params: " + path);
  out << "columns=" << join(fm.column_names, ",") << "\n";
  for (std::size_t c = 0; c < fm.column_names.size(); ++c) {
    const auto& name = fm.column_names[c];
    out << "col." << name << ".boolean=" << (fm.boolean_mask[c] ? 1 : 0) << "\n";
    out << "col." << name << ".mean=" << format_double((*fm.standardization)[c].mean)
        << "\n";
    out << "col." << name << ".std="
        << format_double((*fm.standardization)[c].stddev) << "\n";
  }
  for (const auto& [user, h] : histories.entries())
    out << "user." << user << "=" << h.n_unreliable << "," << h.n_reliable << "\n";
  if (!out) throw Error("feature params write failed: " + path);
}

struct FeatureParams {
  std::vector<std::string> column_names;
  std::vector<bool> boolean_mask;
  std::vector<ColumnStats> standardization;
  UserHistoryMap histories;
};

inline FeatureParams read_feature_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open feature params: " + path);
  FeatureParams fp;
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("feature params " + path + ": bad line: " + line);
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key.rfind("user.", 0) == 0) {
      auto parts = split(value, ',');
      if (parts.size() != 2)
        throw Error("feature params " + path + ": bad user entry: " + line);
      UserHistory h;
      h.n_unreliable = std::stol(parts[0]);
      h.n_reliable = std::stol(parts[1]);
      h.ratio = smoothed_ratio(h.n_unreliable, h.n_reliable);
      fp.histories.entries()[key.substr(5)] = h;
    } else {
      kv[key] = value;
    }
  }
  if (!kv.count("columns")) throw Error("feature params " + path + ": missing columns=");
  fp.column_names = split(kv["columns"], ',');
  for (const auto& name : fp.column_names) {
    fp.boolean_mask.push_back(kv.at("col." + name + ".boolean") == "1");
    ColumnStats st;
    st.mean = std::stod(kv.at("col." + name + ".mean"));
    st.stddev = std::stod(kv.at("col." + name + ".std"));
    fp.standardization.push_back(st);
  }
  return fp;
}

}  // namespace reintel

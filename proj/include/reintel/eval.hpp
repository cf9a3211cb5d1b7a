#pragma once

// ROC-AUC as an exact rank statistic (ties get average ranks) and the
// probability-averaging ensemble.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "reintel/common.hpp"

namespace reintel {

// Probability that a uniformly random positive outranks a uniformly random
// negative, ties counted 1/2. Computed from the Mann-Whitney U statistic
// with average ranks, so it is exact rather than curve-integrated.
inline double roc_auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size())
    throw Error("roc_auc: labels/scores length mismatch");
  long n_pos = 0, n_neg = 0;
  for (int y : labels) {
    if (y == 1) ++n_pos;
    else if (y == 0) ++n_neg;
    else throw Error("roc_auc: labels must be 0 or 1");
  }
  if (n_pos == 0 || n_neg == 0)
    throw Error("roc_auc: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // average ranks (1-based) over tie groups
  double rank_sum_pos = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    i = j;
  }
  double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Elementwise mean of probability vectors.
inline std::vector<double> ensemble_average(const std::vector<std::vector<double>>& score_sets) {
  if (score_sets.empty()) throw Error("ensemble_average: no score vectors");
  const std::size_t n = score_sets[0].size();
  for (const auto& s : score_sets)
    if (s.size() != n) throw Error("ensemble_average: length mismatch");
  std::vector<double> out(n, 0.0);
  for (const auto& s : score_sets)
    for (std::size_t i = 0; i < n; ++i) {
      if (!(s[i] >= 0.0 && s[i] <= 1.0))
        throw Error("ensemble_average: score out of [0,1]");
      out[i] += s[i];
    }
  for (double& v : out) v /= static_cast<double>(score_sets.size());
  return out;
}

struct EvalReport {
  double auc = 0;
  long n = 0;
  long positives = 0;
  long negatives = 0;
};

inline EvalReport evaluate_scores(const std::vector<int>& labels,
                                  const std::vector<double>& scores) {
  EvalReport r;
  r.auc = roc_auc(labels, scores);
  r.n = static_cast<long>(labels.size());
  for (int y : labels) (y == 1 ? r.positives : r.negatives) += 1;
  return r;
}

inline std::string format_report(const EvalReport& r) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", r.auc);
  std::string out;
  out += "auc=" + std::string(buf) + "\n";
  out += "n=" + std::to_string(r.n) + "\n";
  out += "positives=" + std::to_string(r.positives) + "\n";
  out += "negatives=" + std::to_string(r.negatives) + "\n";
  return out;
}

inline void write_report(const std::string& path, const EvalReport& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write report: " + path);
  out << format_report(r);
}

}  // namespace reintel

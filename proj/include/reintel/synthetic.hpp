#pragma once

// Desk-scale synthetic dataset with a planted signal: the label correlates
// with a keyword in the text, with the posting user's history, and with the
// brightness of a generated image patch. Missingness is injected at
// configurable rates. Classes are exactly balanced.

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "reintel/common.hpp"
#include "reintel/csv.hpp"
#include "reintel/image.hpp"

namespace reintel {

struct SyntheticSpec {
  int n = 64;
  double counts_missing_rate = 0.2;
  double ts_missing_rate = 0.1;
  double image_prob = 0.7;
  int image_size = 32;
};

// Returns the dataset path (<out_dir>/dataset.csv); images go to
// <out_dir>/images/.
inline std::string generate_synthetic(const std::string& out_dir,
                                      const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.n < 8) throw Error("generate_synthetic: n must be >= 8");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir + "/images");
  auto eng = make_engine(seed, "synthetic");
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const std::vector<std::string> vocab = {
      "tin",  "nong", "hom",  "nay",  "ban",   "xem", "ngay", "nha",
      "troi", "mua",  "chia", "se",   "nguoi", "dan", "khu",  "pho",
      "moi",  "vua",  "cap",  "nhat", "thong", "bao", "chinh", "thuc"};
  const std::vector<std::string> covid_terms = {"ncov", "convid", "COVID-19", "ncov"};
  const std::vector<std::string> happy_emo = {":)", ";)", "=]]", ":D"};
  const std::vector<std::string> sad_emo = {":(", "=[", ":'("};

  const int n_users = std::max(4, spec.n / 8);
  std::vector<std::string> users;
  for (int i = 0; i < n_users; ++i) users.push_back("user" + std::to_string(i));
  // first half of the pool leans unreliable

  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < spec.n; ++i) {
    const int label = i % 2;  // exact balance; evens reliable? keep 1 = odd
    const std::string id = "post" + std::to_string(i);

    // user correlated with label
    int pool_lo, pool_hi;
    if ((label == 1) == (u(eng) < 0.8)) { pool_lo = 0; pool_hi = n_users / 2; }
    else { pool_lo = n_users / 2; pool_hi = n_users; }
    const std::string user = users[pool_lo + static_cast<int>(eng() % static_cast<std::uint64_t>(
                                                  std::max(1, pool_hi - pool_lo)))];

    // text with planted keyword
    std::string text;
    int n_words = 3 + static_cast<int>(eng() % 9);
    for (int w = 0; w < n_words; ++w) {
      if (w) text += ' ';
      text += vocab[eng() % vocab.size()];
    }
    const bool keyword = (label == 1) ? (u(eng) < 0.95) : (u(eng) < 0.05);
    if (keyword) text += " giat_gan soc";
    if (u(eng) < 0.3) text += " " + covid_terms[eng() % covid_terms.size()];
    if (u(eng) < 0.4)
      text += " " + (label == 0 ? happy_emo[eng() % happy_emo.size()]
                                : sad_emo[eng() % sad_emo.size()]);
    if (u(eng) < 0.3) text += " hayyyy";
    if (u(eng) < 0.25) text += " #local";
    if (u(eng) < 0.2) text += " https://tin.example/" + std::to_string(i);
    if (u(eng) < 0.15) text += "\ndoc them, \"chi tiet\" ben duoi";
    if (u(eng) < 0.1) text += " s.áthại";
    if (label == 1 && u(eng) < 0.7) text += " !!!";
    if (u(eng) < 0.3) text += " ?";

    // engagement counts, label-shifted, with injected missingness
    auto count_cell = [&](double lo, double hi) -> std::string {
      if (u(eng) < spec.counts_missing_rate) return "";
      double v = lo + u(eng) * (hi - lo);
      return std::to_string(static_cast<long>(v));
    };
    std::string likes = label == 0 ? count_cell(50, 500) : count_cell(5, 100);
    std::string shares = label == 0 ? count_cell(10, 100) : count_cell(0, 30);
    std::string comments = count_cell(0, 50);

    // timestamp inside 2020
    std::string ts;
    if (u(eng) >= spec.ts_missing_rate) {
      long t0 = 1577836800;  // 2020-01-01T00:00:00Z
      ts = std::to_string(t0 + static_cast<long>(eng() % 31536000ull));
    }

    // bright (reliable) vs dark (unreliable) images
    std::string image_paths;
    if (u(eng) < spec.image_prob) {
      int n_img = 1 + static_cast<int>(eng() % 2);
      for (int k = 0; k < n_img; ++k) {
        Image img = blank_image(spec.image_size, spec.image_size, 1);
        double base = label == 0 ? 0.75 : 0.25;
        for (double& px : img.data) px = std::clamp(base + (u(eng) - 0.5) * 0.3, 0.0, 1.0);
        // a small contrasting patch
        int py = static_cast<int>(eng() % static_cast<std::uint64_t>(spec.image_size / 2));
        int px0 = static_cast<int>(eng() % static_cast<std::uint64_t>(spec.image_size / 2));
        for (int y = py; y < py + spec.image_size / 4; ++y)
          for (int x = px0; x < px0 + spec.image_size / 4; ++x)
            img.at(y, x, 0) = label == 0 ? 1.0 : 0.0;
        std::string path = out_dir + "/images/" + id + "_" + std::to_string(k) + ".pgm";
        save_pnm(path, img);
        if (k) image_paths += ';';
        image_paths += path;
      }
    }

    rows.push_back({id, user, ts, text, likes, shares, comments, image_paths,
                    std::to_string(label)});
  }

  std::string path = out_dir + "/dataset.csv";
  csv::write_file(path,
                  {"id", "user_id", "timestamp", "text", "num_likes", "num_shares",
                   "num_comments", "image_paths", "label"},
                  rows);
  return path;
}

}  // namespace reintel

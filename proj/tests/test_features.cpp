#include <ctime>

#include <catch2/catch.hpp>
#include <random>

#include "reintel/features.hpp"
#include "test_helpers.hpp"

using namespace reintel;

namespace {

std::optional<double> miss() { return std::nullopt; }

std::vector<RawPost> fixture_posts() {
  RawPost p1;
  p1.id = "p1";
  p1.user_id = "alice";
  p1.text = "tin #hot xem http://a.b ngay!!";
  p1.timestamp = 86400;  // 1970-01-02 00:00 UTC, Friday
  p1.num_likes = 10;
  p1.num_comments = 3;
  p1.image_paths = {"x.pgm"};
  p1.label = 1;

  RawPost p2;
  p2.id = "p2";
  p2.user_id = "bob";
  p2.text = "???";
  p2.timestamp = 0;  // 1970-01-01 00:00 UTC, Thursday
  p2.num_likes = 20;
  p2.num_shares = 4;
  p2.label = 0;

  RawPost p3;
  p3.id = "p3";
  p3.user_id = "alice";
  p3.text = "";
  p3.timestamp = 86399;  // last second of the epoch day
  p3.num_shares = 6;
  p3.num_comments = 5;
  p3.label = 0;
  return {p1, p2, p3};
}

}  // namespace

TEST_CASE("mean_impute") {
  CHECK(mean_impute({1.0, miss(), 3.0}) == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(mean_impute({4.0, 5.0}) == std::vector<double>{4.0, 5.0});
  test_helpers::WarningCapture warns;
  CHECK(mean_impute({miss(), miss()}) == std::vector<double>{0.0, 0.0});
  REQUIRE(warns.messages.size() == 1);
  CHECK(warns.messages[0].find("fully missing") != std::string::npos);
}

TEST_CASE("mice_impute leaves complete matrices untouched") {
  std::vector<OptVec> cols = {{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}};
  auto out = mice_impute(cols, 5, 0);
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (std::size_t r = 0; r < cols[c].size(); ++r)
      CHECK(*out[c][r] == *cols[c][r]);
}

TEST_CASE("mice_impute recovers an exact linear relation") {
  // y = 2x + 1 with y missing at x = 4; least squares on the observed rows
  // recovers the relation, so the imputed value must be 9
  std::vector<OptVec> cols = {{1.0, 2.0, 3.0, 4.0, 5.0},
                              {3.0, 5.0, 7.0, miss(), 11.0}};
  auto out = mice_impute(cols, 2, 0);
  CHECK(*out[1][3] == Approx(9.0).margin(1e-6));
  // observed values never move
  CHECK(*out[1][0] == 3.0);
  CHECK(*out[1][4] == 11.0);
}

TEST_CASE("mice_impute is deterministic") {
  std::mt19937_64 eng(31);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<OptVec> cols(3, OptVec(40));
  for (std::size_t r = 0; r < 40; ++r) {
    double x = u(eng);
    cols[0][r] = eng() % 5 == 0 ? miss() : std::optional<double>(x);
    cols[1][r] = eng() % 5 == 0 ? miss() : std::optional<double>(2 * x + 1);
    cols[2][r] = eng() % 5 == 0 ? miss() : std::optional<double>(u(eng));
  }
  auto a = mice_impute(cols, 10, 7);
  auto b = mice_impute(cols, 10, 7);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t r = 0; r < 40; ++r) CHECK(*a[c][r] == *b[c][r]);
}

TEST_CASE("mice_impute never alters observed entries") {
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u(-10, 10);
  std::vector<OptVec> cols(4, OptVec(30));
  for (auto& col : cols)
    for (auto& cell : col)
      cell = (eng() % 4 == 0) ? miss() : std::optional<double>(u(eng));
  // ensure at least one observed entry per column
  for (auto& col : cols) col[0] = u(eng);
  auto out = mice_impute(cols, 6, 1);
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (std::size_t r = 0; r < 30; ++r)
      if (cols[c][r]) CHECK(*out[c][r] == *cols[c][r]);
}

TEST_CASE("mice_impute falls back to the mean when the regression blows up") {
  // overflow in the gram matrix yields non-finite coefficients
  std::vector<OptVec> cols = {{1e308, -1e308, 1e308, -1e308},
                              {1.0, 2.0, miss(), 4.0}};
  test_helpers::WarningCapture warns;
  auto out = mice_impute(cols, 3, 0);
  CHECK(*out[1][2] == Approx((1.0 + 2.0 + 4.0) / 3).margin(1e-12));
  bool warned = false;
  for (const auto& m : warns.messages)
    warned = warned || m.find("falling back to mean") != std::string::npos;
  CHECK(warned);
}

TEST_CASE("expand_timestamp handles pre-epoch seconds") {
  auto t = expand_timestamp(-1);  // 1969-12-31 23:59:59 UTC, Wednesday
  CHECK(t.year == 1969);
  CHECK(t.month == 12);
  CHECK(t.day == 31);
  CHECK(t.hour == 23);
  CHECK(t.weekday == 2);
}

TEST_CASE("mice beats mean imputation under planted linear structure") {
  std::mt19937_64 eng(77);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::uniform_real_distribution<double> u(-2, 2);
  const int rows = 200;
  std::vector<double> truth(rows);
  std::vector<OptVec> cols(3, OptVec(rows));
  std::vector<bool> hidden(rows, false);
  for (int r = 0; r < rows; ++r) {
    double x = u(eng);
    double z = u(eng);
    double y = 3 * x - 2 * z + 0.5 + noise(eng);
    truth[r] = y;
    cols[0][r] = x;
    cols[1][r] = z;
    hidden[r] = (eng() % 5 == 0);
    cols[2][r] = hidden[r] ? miss() : std::optional<double>(y);
  }
  auto mice = mice_impute(cols, 10, 3);
  auto mean = mean_impute(cols[2]);
  double se_mice = 0, se_mean = 0;
  long n = 0;
  for (int r = 0; r < rows; ++r) {
    if (!hidden[r]) continue;
    se_mice += std::pow(*mice[2][r] - truth[r], 2);
    se_mean += std::pow(mean[r] - truth[r], 2);
    ++n;
  }
  REQUIRE(n > 10);
  CHECK(std::sqrt(se_mice / n) < std::sqrt(se_mean / n));
}

TEST_CASE("expand_timestamp calendar arithmetic") {
  auto t0 = expand_timestamp(0);
  CHECK(t0.day == 1);
  CHECK(t0.month == 1);
  CHECK(t0.year == 1970);
  CHECK(t0.hour == 0);
  CHECK(t0.weekday == 3);  // Thursday with Monday = 0

  auto t1 = expand_timestamp(86399);
  CHECK(t1.day == 1);
  CHECK(t1.hour == 23);
  CHECK(t1.weekday == 3);

  auto t2 = expand_timestamp(86400);
  CHECK(t2.day == 2);
  CHECK(t2.month == 1);
  CHECK(t2.year == 1970);
  CHECK(t2.hour == 0);
  CHECK(t2.weekday == 4);
}

TEST_CASE("expand_timestamp matches gmtime on random epochs") {
  std::mt19937_64 eng(19);
  for (int rep = 0; rep < 300; ++rep) {
    std::time_t ts = static_cast<std::time_t>(eng() % 4102444800ull);  // < 2100
    std::tm tm{};
    gmtime_r(&ts, &tm);
    auto t = expand_timestamp(static_cast<std::int64_t>(ts));
    CHECK(t.day == tm.tm_mday);
    CHECK(t.month == tm.tm_mon + 1);
    CHECK(t.year == tm.tm_year + 1900);
    CHECK(t.hour == tm.tm_hour);
    CHECK(t.weekday == (tm.tm_wday + 6) % 7);  // tm_wday has Sunday = 0
  }
}

TEST_CASE("user histories") {
  std::vector<RawPost> posts;
  for (int label : {1, 1, 0}) {
    RawPost p;
    p.id = "a" + std::to_string(posts.size());
    p.user_id = "alice";
    p.label = label;
    posts.push_back(p);
  }
  for (int label : {0, 0}) {
    RawPost p;
    p.id = "b" + std::to_string(posts.size());
    p.user_id = "bob";
    p.label = label;
    posts.push_back(p);
  }
  auto h = compute_user_histories(posts);
  CHECK(h.lookup("alice").n_unreliable == 2);
  CHECK(h.lookup("alice").n_reliable == 1);
  CHECK(h.lookup("alice").ratio == Approx(0.6).margin(1e-12));  // (2+1)/(3+2)
  CHECK(h.lookup("bob").ratio == Approx(0.25).margin(1e-12));   // (0+1)/(2+2)
  auto unseen = h.lookup("nobody");
  CHECK(unseen.n_unreliable == 0);
  CHECK(unseen.n_reliable == 0);
  CHECK(unseen.ratio == 0.5);

  posts[0].label.reset();
  CHECK_THROWS_AS(compute_user_histories(posts), Error);
}

TEST_CASE("smoothed ratio stays strictly inside (0,1)") {
  for (long u = 0; u < 40; ++u)
    for (long r = 0; r < 40; ++r) {
      double ratio = smoothed_ratio(u, r);
      CHECK(ratio > 0.0);
      CHECK(ratio < 1.0);
    }
}

TEST_CASE("build_feature_matrix matches the hand-assembled fixture") {
  auto posts = fixture_posts();
  auto histories = compute_user_histories(posts);
  std::vector<TextStats> stats;
  for (const auto& p : posts) stats.push_back(text_statistics(p.text));
  auto fm = build_feature_matrix(posts, histories, stats);

  REQUIRE(fm.cols() == 18);
  REQUIRE(fm.rows() == 3);
  REQUIRE(fm.column_names == feature_column_order());

  // hand-assembled expectations:
  //   likes [10,20,-] -> mean 15; shares [-,4,6] -> mean 5; comments [3,-,5] -> 4
  //   alice: 1 unreliable + 1 reliable -> ratio 0.5; bob: 0/1 -> 1/3
  Eigen::MatrixXd expected(3, 18);
  expected.row(0) << 10, 5, 3, 2, 1, 1970, 0, 4, 1, 1, 30, 5, 0, 2, 1, 1, 0.5, 1;
  expected.row(1) << 20, 4, 4, 1, 1, 1970, 0, 3, 0, 0, 3, 1, 3, 0, 0, 1, 1.0 / 3.0, 0;
  expected.row(2) << 15, 6, 5, 1, 1, 1970, 23, 3, 0, 0, 0, 0, 0, 0, 1, 1, 0.5, 0;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 18; ++c)
      CHECK(fm.values(r, c) == Approx(expected(r, c)).margin(1e-12));

  CHECK(fm.boolean_mask.back() == true);
  for (std::size_t i = 0; i + 1 < fm.boolean_mask.size(); ++i)
    CHECK(fm.boolean_mask[i] == false);
}

TEST_CASE("build_feature_matrix imputes a missing timestamp via the counts") {
  auto posts = fixture_posts();
  posts[2].timestamp.reset();
  auto histories = compute_user_histories(posts);
  std::vector<TextStats> stats;
  for (const auto& p : posts) stats.push_back(text_statistics(p.text));
  auto fm = build_feature_matrix(posts, histories, stats);
  // still no nulls anywhere and a valid calendar row
  CHECK(fm.values.allFinite());
  CHECK(fm.values(2, 5) >= 1969);  // year column stays sane
}

TEST_CASE("build_feature_matrix drop columns") {
  auto posts = fixture_posts();
  auto histories = compute_user_histories(posts);
  std::vector<TextStats> stats;
  for (const auto& p : posts) stats.push_back(text_statistics(p.text));
  FeatureConfig fc;
  fc.drop_columns = {"year"};
  auto fm = build_feature_matrix(posts, histories, stats, fc);
  CHECK(fm.cols() == 17);
  CHECK(fm.column("year") == -1);

  fc.drop_columns = {"no_such_column"};
  CHECK_THROWS_AS(build_feature_matrix(posts, histories, stats, fc), Error);
}

TEST_CASE("build_feature_matrix is deterministic") {
  auto posts = fixture_posts();
  posts[1].timestamp.reset();  // force the MICE path
  auto histories = compute_user_histories(posts);
  std::vector<TextStats> stats;
  for (const auto& p : posts) stats.push_back(text_statistics(p.text));
  auto a = build_feature_matrix(posts, histories, stats);
  auto b = build_feature_matrix(posts, histories, stats);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.values.allFinite());
}

TEST_CASE("has_image flag") {
  auto posts = fixture_posts();
  posts[1].image_paths = {"a.pgm", "b.pgm"};
  auto histories = compute_user_histories(posts);
  std::vector<TextStats> stats(posts.size());
  auto fm = build_feature_matrix(posts, histories, stats);
  int c = fm.column("has_image");
  CHECK(fm.values(0, c) == 1.0);
  CHECK(fm.values(1, c) == 1.0);
  CHECK(fm.values(2, c) == 0.0);
}

TEST_CASE("standardize examples") {
  FeatureMatrix fm;
  fm.column_names = {"a", "b", "bool"};
  fm.boolean_mask = {false, false, true};
  fm.row_ids = {"r1", "r2", "r3"};
  fm.values.resize(3, 3);
  fm.values.col(0) << 1, 2, 3;
  fm.values.col(1) << 5, 5, 5;
  fm.values.col(2) << 0, 1, 0;
  auto out = standardize(fm, true);
  const double v = std::sqrt(1.5);  // 1 / population std of {1,2,3}
  CHECK(out.values(0, 0) == Approx(-v).margin(1e-12));
  CHECK(out.values(1, 0) == Approx(0).margin(1e-12));
  CHECK(out.values(2, 0) == Approx(v).margin(1e-12));
  CHECK(out.values(0, 0) == Approx(-1.224745).margin(1e-6));
  // constant column maps to zeros
  CHECK(out.values.col(1).isZero());
  // boolean column untouched
  CHECK(out.values(0, 2) == 0.0);
  CHECK(out.values(1, 2) == 1.0);
}

TEST_CASE("standardize fit=false requires parameters") {
  FeatureMatrix fm;
  fm.column_names = {"a"};
  fm.boolean_mask = {false};
  fm.row_ids = {"r"};
  fm.values.resize(1, 1);
  fm.values(0, 0) = 2.0;
  CHECK_THROWS_AS(standardize(fm, false), Error);

  FeatureMatrix fitted;
  fitted.column_names = {"a"};
  fitted.boolean_mask = {false};
  fitted.row_ids = {"r1", "r2"};
  fitted.values.resize(2, 1);
  fitted.values.col(0) << 0, 2;
  auto f = standardize(fitted, true);
  fm.standardization = f.standardization;
  auto applied = standardize(fm, false);
  CHECK(applied.values(0, 0) == Approx(1.0).margin(1e-12));  // (2-1)/1
}

TEST_CASE("post-fit columns have zero mean and unit variance") {
  std::mt19937_64 eng(41);
  std::uniform_real_distribution<double> u(-5, 9);
  FeatureMatrix fm;
  fm.column_names = {"a", "b", "c", "flag"};
  fm.boolean_mask = {false, false, false, true};
  fm.values.resize(64, 4);
  for (int r = 0; r < 64; ++r) {
    fm.values(r, 0) = u(eng);
    fm.values(r, 1) = 100 + 3 * u(eng);
    fm.values(r, 2) = u(eng) * u(eng);
    fm.values(r, 3) = eng() % 2;
    fm.row_ids.push_back("r" + std::to_string(r));
  }
  auto out = standardize(fm, true);
  for (int c = 0; c < 3; ++c) {
    double mean = out.values.col(c).mean();
    double var = (out.values.col(c).array() - mean).square().mean();
    CHECK(std::abs(mean) < 1e-6);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-4);
  }
}

TEST_CASE("feature matrix file round trip") {
  test_helpers::TempDir dir("fm");
  auto posts = fixture_posts();
  auto histories = compute_user_histories(posts);
  std::vector<TextStats> stats;
  for (const auto& p : posts) stats.push_back(text_statistics(p.text));
  auto fm = standardize(build_feature_matrix(posts, histories, stats), true);
  write_feature_matrix(dir.file("f.csv"), fm);
  auto back = read_feature_matrix(dir.file("f.csv"));
  CHECK(back.column_names == fm.column_names);
  CHECK(back.row_ids == fm.row_ids);
  REQUIRE(back.values.rows() == fm.values.rows());
  CHECK((back.values - fm.values).cwiseAbs().maxCoeff() == 0.0);  // %.17g exact

  write_feature_params(dir.file("p.txt"), fm, histories);
  auto params = read_feature_params(dir.file("p.txt"));
  CHECK(params.column_names == fm.column_names);
  REQUIRE(params.standardization.size() == fm.column_names.size());
  for (std::size_t c = 0; c < params.standardization.size(); ++c) {
    CHECK(params.standardization[c].mean == (*fm.standardization)[c].mean);
    CHECK(params.standardization[c].stddev == (*fm.standardization)[c].stddev);
  }
  CHECK(params.histories.lookup("alice").n_unreliable == 1);
  CHECK(params.histories.lookup("alice").ratio == 0.5);
  CHECK(params.boolean_mask == fm.boolean_mask);
}

#pragma once

// Stage orchestration: preprocess -> featurize -> train -> predict ->
// ensemble -> evaluate, plus the synthetic generator. Every stage reads a
// flat key=value config (env vars with the REINTEL_ prefix and CLI flags
// override file keys), writes its artifacts under out_dir, and is
// re-runnable: unchanged inputs and seed give byte-identical outputs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reintel/common.hpp"
#include "reintel/dataset.hpp"
#include "reintel/encoders.hpp"
#include "reintel/eval.hpp"
#include "reintel/features.hpp"
#include "reintel/fusion.hpp"
#include "reintel/synthetic.hpp"
#include "reintel/text.hpp"

namespace reintel {

struct PipelineConfig {
  std::string dataset;          // defaults to <out_dir>/dataset.csv
  std::string out_dir = "out";
  std::uint64_t seed = 42;
  double train_fraction = 0.8;
  int variant = 1;

  // preprocessing
  std::string lexicon;          // path; empty = built-in list
  std::string happy_token = "vui";
  std::string sad_token = "buồn";
  std::string segmenter = "whitespace";  // or command:<cmd>

  // encoders
  std::string encoder = "stub";  // or files:<dir>
  int image_size = 32;
  int region_feature_dim = 16;

  // features
  std::vector<std::string> drop_columns;
  int mice_rounds = 10;
  double mice_ridge = 1e-6;

  // model (Table-scale defaults; synthetic profiles shrink them)
  ModelConfig model;

  // synthetic generator
  SyntheticSpec synth;

  DatasetSchema schema;

  std::string dataset_path() const {
    return dataset.empty() ? out_dir + "/dataset.csv" : dataset;
  }
  std::string preprocessed_path() const { return out_dir + "/preprocessed.csv"; }
  std::string features_path() const { return out_dir + "/features.csv"; }
  std::string feature_params_path() const { return out_dir + "/feature_params.txt"; }
  std::string split_path() const { return out_dir + "/split.csv"; }
  std::string checkpoint_path(int v) const {
    return out_dir + "/model_v" + std::to_string(v) + ".ckpt";
  }
  std::string history_path(int v) const {
    return out_dir + "/model_v" + std::to_string(v) + "_history.csv";
  }
  std::string predictions_path(int v) const {
    return out_dir + "/preds_v" + std::to_string(v) + ".csv";
  }
  std::string ensemble_path() const { return out_dir + "/preds_ensemble.csv"; }
};

namespace config_detail {

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "dataset", "out_dir", "seed", "train_fraction", "variant",
      "lexicon", "happy_token", "sad_token", "segmenter",
      "encoder", "image_size", "region_feature_dim",
      "drop_columns", "mice_rounds", "mice_ridge",
      "fc_width", "dropout", "pool_size", "conv_filters", "filter_sizes",
      "extra_conv_layers", "extra_conv_filters", "extra_conv_kernel",
      "learning_rate", "batch_size", "epochs", "patience",
      "l_max", "text_dim", "attn_dim",
      "synth_n", "counts_missing_rate", "ts_missing_rate", "image_prob",
      "schema_id", "schema_user_id", "schema_timestamp", "schema_text",
      "schema_num_likes", "schema_num_shares", "schema_num_comments",
      "schema_image_paths", "schema_label"};
  return keys;
}

inline int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos;
    int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error("config: key '" + key + "': not an integer: '" + v + "'");
  }
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error("config: key '" + key + "': not a number: '" + v + "'");
  }
}

}  // namespace config_detail

inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw Error("config " + path + " line " + std::to_string(n) +
                  ": expected key=value");
    std::string key = trim(trimmed.substr(0, eq));
    if (!config_detail::known_keys().count(key))
      throw Error("config " + path + " line " + std::to_string(n) +
                  ": unknown key '" + key + "'");
    kv[key] = trim(trimmed.substr(eq + 1));
  }
  return kv;
}

// Precedence: config file < REINTEL_* environment variables < overrides
// (CLI flags).
inline PipelineConfig make_pipeline_config(
    std::map<std::string, std::string> kv,
    const std::map<std::string, std::string>& overrides = {}) {
  for (const auto& key : config_detail::known_keys()) {
    std::string env_name = "REINTEL_";
    for (char c : key) env_name += static_cast<char>(c >= 'a' && c <= 'z' ? c - 'a' + 'A' : c);
    if (const char* v = std::getenv(env_name.c_str())) kv[key] = v;
  }
  for (const auto& [k, v] : overrides) {
    if (!config_detail::known_keys().count(k))
      throw Error("config: unknown key '" + k + "'");
    kv[k] = v;
  }

  using config_detail::to_double;
  using config_detail::to_int;
  PipelineConfig cfg;
  auto get = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };

  if (auto v = get("dataset")) cfg.dataset = *v;
  if (auto v = get("out_dir")) cfg.out_dir = *v;
  if (auto v = get("seed")) cfg.seed = static_cast<std::uint64_t>(std::stoull(*v));
  if (auto v = get("train_fraction")) cfg.train_fraction = to_double("train_fraction", *v);
  if (auto v = get("variant")) cfg.variant = to_int("variant", *v);
  if (auto v = get("lexicon")) cfg.lexicon = *v;
  if (auto v = get("happy_token")) cfg.happy_token = *v;
  if (auto v = get("sad_token")) cfg.sad_token = *v;
  if (auto v = get("segmenter")) cfg.segmenter = *v;
  if (auto v = get("encoder")) cfg.encoder = *v;
  if (auto v = get("image_size")) cfg.image_size = to_int("image_size", *v);
  if (auto v = get("region_feature_dim"))
    cfg.region_feature_dim = to_int("region_feature_dim", *v);
  if (auto v = get("drop_columns")) {
    cfg.drop_columns.clear();
    for (auto& c : split(*v, ','))
      if (!trim(c).empty()) cfg.drop_columns.push_back(trim(c));
  }
  if (auto v = get("mice_rounds")) cfg.mice_rounds = to_int("mice_rounds", *v);
  if (auto v = get("mice_ridge")) cfg.mice_ridge = to_double("mice_ridge", *v);

  if (auto v = get("fc_width")) cfg.model.fc_width = to_int("fc_width", *v);
  if (auto v = get("dropout")) cfg.model.dropout = to_double("dropout", *v);
  if (auto v = get("pool_size")) cfg.model.pool_size = to_int("pool_size", *v);
  if (auto v = get("conv_filters")) cfg.model.conv_filters = to_int("conv_filters", *v);
  if (auto v = get("filter_sizes")) {
    cfg.model.filter_sizes.clear();
    for (auto& f : split(*v, ','))
      cfg.model.filter_sizes.push_back(to_int("filter_sizes", trim(f)));
  }
  if (auto v = get("extra_conv_layers"))
    cfg.model.extra_conv_layers = to_int("extra_conv_layers", *v);
  if (auto v = get("extra_conv_filters"))
    cfg.model.extra_conv_filters = to_int("extra_conv_filters", *v);
  if (auto v = get("extra_conv_kernel"))
    cfg.model.extra_conv_kernel = to_int("extra_conv_kernel", *v);
  if (auto v = get("learning_rate"))
    cfg.model.learning_rate = to_double("learning_rate", *v);
  if (auto v = get("batch_size")) cfg.model.batch_size = to_int("batch_size", *v);
  if (auto v = get("epochs")) cfg.model.epochs = to_int("epochs", *v);
  if (auto v = get("patience")) cfg.model.patience = to_int("patience", *v);
  if (auto v = get("l_max")) cfg.model.l_max = to_int("l_max", *v);
  if (auto v = get("text_dim")) cfg.model.text_dim = to_int("text_dim", *v);
  if (auto v = get("attn_dim")) cfg.model.attn_dim = to_int("attn_dim", *v);

  if (auto v = get("synth_n")) cfg.synth.n = to_int("synth_n", *v);
  if (auto v = get("counts_missing_rate"))
    cfg.synth.counts_missing_rate = to_double("counts_missing_rate", *v);
  if (auto v = get("ts_missing_rate"))
    cfg.synth.ts_missing_rate = to_double("ts_missing_rate", *v);
  if (auto v = get("image_prob")) cfg.synth.image_prob = to_double("image_prob", *v);
  cfg.synth.image_size = cfg.image_size;

  for (auto& [field, col] : cfg.schema.columns)
    if (auto v = get(("schema_" + field).c_str())) col = *v;

  cfg.model.seed = cfg.seed;
  cfg.model.variant = cfg.variant;
  return cfg;
}

inline PipelineConfig load_pipeline_config(
    const std::string& path, const std::map<std::string, std::string>& overrides = {}) {
  return make_pipeline_config(parse_config_file(path), overrides);
}

// ---- stage helpers ----

namespace stage_detail {

inline void require_artifact(const std::string& path, const std::string& producer) {
  if (!std::filesystem::exists(path))
    throw Error("missing artifact '" + path + "'; run the " + producer +
                " stage first");
}

inline PreprocessOptions preprocess_options(const PipelineConfig& cfg) {
  PreprocessOptions opts;
  opts.emoticons = cfg.lexicon.empty()
                       ? default_emoticon_map(cfg.happy_token, cfg.sad_token)
                       : load_emoticon_lexicon(cfg.lexicon, cfg.happy_token,
                                               cfg.sad_token);
  return opts;
}

inline std::unique_ptr<Segmenter> make_segmenter(const PipelineConfig& cfg) {
  if (cfg.segmenter == "whitespace") return std::make_unique<WhitespaceSegmenter>();
  if (cfg.segmenter.rfind("command:", 0) == 0)
    return std::make_unique<CommandSegmenter>(cfg.segmenter.substr(8));
  throw Error("config: segmenter must be 'whitespace' or 'command:<cmd>'");
}

struct EncoderBundle {
  std::shared_ptr<TextEncoder> text;
  std::shared_ptr<ImageBackbone> backbone;
};

inline EncoderBundle make_encoders(const PipelineConfig& cfg) {
  EncoderBundle b;
  if (cfg.encoder == "stub") {
    b.text = std::make_shared<HashTextEncoder>(cfg.model.text_dim);
  } else if (cfg.encoder.rfind("files:", 0) == 0) {
    b.text = std::make_shared<PrecomputedTextEncoder>(cfg.encoder.substr(6),
                                                      cfg.model.text_dim);
  } else {
    throw Error("config: encoder must be 'stub' or 'files:<dir>'");
  }
  StubConvBackbone::Config bc;
  bc.input_size = cfg.image_size;
  bc.feature_dim = cfg.region_feature_dim;
  bc.seed = cfg.seed;
  b.backbone = std::make_shared<StubConvBackbone>(bc);
  return b;
}

inline std::map<std::string, std::string> read_id_text_map(const std::string& path) {
  csv::Table t = csv::read_file(path);
  int c_id = t.column("id"), c_text = t.column("text");
  if (c_id < 0 || c_text < 0)
    throw Error(path + ": expected header id,text");
  std::map<std::string, std::string> out;
  for (auto& row : t.rows) out[row[c_id]] = row[c_text];
  return out;
}

inline std::map<std::string, std::string> read_split_map(const std::string& path) {
  csv::Table t = csv::read_file(path);
  int c_id = t.column("id"), c_part = t.column("part");
  if (c_id < 0 || c_part < 0) throw Error(path + ": expected header id,part");
  std::map<std::string, std::string> out;
  for (auto& row : t.rows) out[row[c_id]] = row[c_part];
  return out;
}

// Per-post model inputs from the persisted artifacts; the encoders are
// frozen so this happens once, before training.
inline std::vector<Sample> build_samples(const PipelineConfig& cfg,
                                         const std::vector<RawPost>& posts,
                                         const std::map<std::string, std::string>& pp_text,
                                         const FeatureMatrix& fm,
                                         const EncoderBundle& enc) {
  std::map<std::string, Eigen::Index> fm_row;
  for (std::size_t i = 0; i < fm.row_ids.size(); ++i)
    fm_row[fm.row_ids[i]] = static_cast<Eigen::Index>(i);

  std::vector<Sample> out;
  out.reserve(posts.size());
  for (const auto& p : posts) {
    auto tp = pp_text.find(p.id);
    if (tp == pp_text.end())
      throw Error("post '" + p.id + "' missing from preprocessed text; rerun the "
                  "preprocess stage");
    auto fr = fm_row.find(p.id);
    if (fr == fm_row.end())
      throw Error("post '" + p.id + "' missing from feature matrix; rerun the "
                  "featurize stage");
    Sample s;
    s.id = p.id;
    TokenEmbeddings emb =
        encode_text(split_ws(tp->second), *enc.text, cfg.model.l_max, p.id);
    s.in.emb = emb.matrix;
    s.in.summary = text_summary(emb);
    Image img = select_image(p, enc.backbone->input_size(),
                             enc.backbone->input_size(), cfg.seed);
    s.in.regions = enc.backbone->encode(img).matrix;
    s.in.meta = fm.values.row(fr->second);
    s.label = p.label ? static_cast<double>(*p.label) : 0.0;
    out.push_back(std::move(s));
  }
  return out;
}

inline ModelConfig model_config_for(const PipelineConfig& cfg, int variant,
                                    const FeatureMatrix& fm,
                                    const EncoderBundle& enc) {
  ModelConfig mc = cfg.model;
  mc.variant = variant;
  mc.seed = cfg.seed;
  mc.meta_dim = static_cast<int>(fm.cols());
  mc.text_dim = enc.text->dim();
  mc.region_dim = enc.backbone->feature_dim();
  return mc;
}

}  // namespace stage_detail

// ---- stages ----

inline std::string stage_generate(const PipelineConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  return generate_synthetic(cfg.out_dir, cfg.synth, cfg.seed);
}

inline std::string stage_preprocess(const PipelineConfig& cfg) {
  stage_detail::require_artifact(cfg.dataset_path(), "generate (or point dataset= at a file)");
  std::filesystem::create_directories(cfg.out_dir);
  auto posts = load_dataset(cfg.dataset_path(), cfg.schema);
  auto opts = stage_detail::preprocess_options(cfg);
  auto seg = stage_detail::make_segmenter(cfg);
  std::vector<std::vector<std::string>> rows;
  rows.reserve(posts.size());
  for (const auto& p : posts)
    rows.push_back({p.id, preprocess(p.text, *seg, opts, p.id)});
  csv::write_file(cfg.preprocessed_path(), {"id", "text"}, rows);
  return cfg.preprocessed_path();
}

inline std::string stage_featurize(const PipelineConfig& cfg) {
  stage_detail::require_artifact(cfg.dataset_path(), "generate");
  std::filesystem::create_directories(cfg.out_dir);
  auto posts = load_dataset(cfg.dataset_path(), cfg.schema);

  auto split_res = split_dataset(posts, cfg.train_fraction, cfg.seed);
  std::set<std::string> train_ids;
  for (const auto& p : split_res.train) train_ids.insert(p.id);

  UserHistoryMap histories = compute_user_histories(split_res.train);

  std::vector<TextStats> stats;
  stats.reserve(posts.size());
  for (const auto& p : posts) stats.push_back(text_statistics(p.text));

  FeatureConfig fc;
  fc.drop_columns = cfg.drop_columns;
  fc.mice.rounds = cfg.mice_rounds;
  fc.mice.ridge_lambda = cfg.mice_ridge;
  fc.seed = cfg.seed;
  FeatureMatrix fm = build_feature_matrix(posts, histories, stats, fc);

  // standardization fitted on the training rows only, applied to all rows
  FeatureMatrix train_fm = fm;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < fm.rows(); ++r)
    if (train_ids.count(fm.row_ids[static_cast<std::size_t>(r)]))
      keep.push_back(r);
  train_fm.values.resize(static_cast<Eigen::Index>(keep.size()), fm.cols());
  train_fm.row_ids.clear();
  for (std::size_t i = 0; i < keep.size(); ++i) {
    train_fm.values.row(static_cast<Eigen::Index>(i)) = fm.values.row(keep[i]);
    train_fm.row_ids.push_back(fm.row_ids[static_cast<std::size_t>(keep[i])]);
  }
  FeatureMatrix fitted = standardize(train_fm, true);
  fm.standardization = fitted.standardization;
  FeatureMatrix out = standardize(fm, false);

  write_feature_matrix(cfg.features_path(), out);
  write_feature_params(cfg.feature_params_path(), out, histories);

  std::vector<std::vector<std::string>> split_rows;
  for (const auto& p : posts)
    split_rows.push_back({p.id, train_ids.count(p.id) ? "train" : "val"});
  csv::write_file(cfg.split_path(), {"id", "part"}, split_rows);
  return cfg.features_path();
}

inline std::string stage_train(const PipelineConfig& cfg, int variant) {
  stage_detail::require_artifact(cfg.dataset_path(), "generate");
  stage_detail::require_artifact(cfg.preprocessed_path(), "preprocess");
  stage_detail::require_artifact(cfg.features_path(), "featurize");
  stage_detail::require_artifact(cfg.split_path(), "featurize");

  auto posts = load_dataset(cfg.dataset_path(), cfg.schema);
  auto pp = stage_detail::read_id_text_map(cfg.preprocessed_path());
  auto fm = read_feature_matrix(cfg.features_path());
  auto split_map = stage_detail::read_split_map(cfg.split_path());
  auto enc = stage_detail::make_encoders(cfg);

  auto samples = stage_detail::build_samples(cfg, posts, pp, fm, enc);
  std::vector<Sample> train, val;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (!posts[i].label)
      throw Error("train: post '" + posts[i].id + "' is unlabeled");
    auto it = split_map.find(posts[i].id);
    if (it == split_map.end())
      throw Error("train: post '" + posts[i].id + "' missing from split; rerun featurize");
    (it->second == "train" ? train : val).push_back(samples[i]);
  }

  FusionModel model(stage_detail::model_config_for(cfg, variant, fm, enc));
  TrainResult result = train_model(model, train, val);

  std::map<std::string, std::string> extra = {
      {"encoder", cfg.encoder},
      {"image_size", std::to_string(cfg.image_size)},
      {"region_feature_dim", std::to_string(cfg.region_feature_dim)},
      {"columns", join(fm.column_names, ",")},
  };
  save_checkpoint(cfg.checkpoint_path(variant), model, extra);
  write_history(cfg.history_path(variant), result);
  return cfg.checkpoint_path(variant);
}

inline std::string stage_predict(const PipelineConfig& cfg, int variant) {
  stage_detail::require_artifact(cfg.dataset_path(), "generate");
  stage_detail::require_artifact(cfg.preprocessed_path(), "preprocess");
  stage_detail::require_artifact(cfg.features_path(), "featurize");
  stage_detail::require_artifact(cfg.checkpoint_path(variant),
                                 "train --variant " + std::to_string(variant));

  auto posts = load_dataset(cfg.dataset_path(), cfg.schema);
  auto pp = stage_detail::read_id_text_map(cfg.preprocessed_path());
  auto fm = read_feature_matrix(cfg.features_path());
  Checkpoint ck = load_checkpoint(cfg.checkpoint_path(variant));
  if (auto it = ck.extra.find("columns");
      it != ck.extra.end() && it->second != join(fm.column_names, ","))
    throw Error("predict: feature columns differ from the checkpoint's; rerun "
                "featurize with the training configuration");

  auto enc = stage_detail::make_encoders(cfg);
  auto samples = stage_detail::build_samples(cfg, posts, pp, fm, enc);
  std::vector<double> scores = ck.model->predict_proba(samples);

  std::vector<Prediction> preds;
  preds.reserve(posts.size());
  for (std::size_t i = 0; i < posts.size(); ++i)
    preds.push_back({posts[i].id, scores[i]});
  write_predictions(cfg.predictions_path(variant), preds);
  return cfg.predictions_path(variant);
}

inline std::string stage_ensemble(const PipelineConfig& cfg,
                                  const std::vector<std::string>& inputs,
                                  std::string out_path = "") {
  if (inputs.empty()) throw Error("ensemble: no input prediction files");
  if (out_path.empty()) out_path = cfg.ensemble_path();
  std::vector<std::vector<double>> score_sets;
  std::vector<std::string> ids;
  for (const auto& path : inputs) {
    stage_detail::require_artifact(path, "predict");
    auto preds = read_predictions(path);
    std::vector<double> scores;
    scores.reserve(preds.size());
    if (score_sets.empty()) {
      for (const auto& p : preds) ids.push_back(p.id);
    } else {
      if (preds.size() != ids.size())
        throw Error("ensemble: prediction files have different lengths");
      for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i].id != ids[i])
          throw Error("ensemble: prediction files disagree on row " +
                      std::to_string(i + 1) + " (" + preds[i].id + " vs " +
                      ids[i] + ")");
    }
    for (const auto& p : preds) scores.push_back(p.score);
    score_sets.push_back(std::move(scores));
  }
  std::vector<double> avg = ensemble_average(score_sets);
  std::vector<Prediction> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out.push_back({ids[i], avg[i]});
  write_predictions(out_path, out);
  return out_path;
}

inline EvalReport stage_evaluate(const PipelineConfig& cfg, const std::string& pred_path,
                                 const std::string& split_filter = "val",
                                 std::string report_path = "") {
  stage_detail::require_artifact(pred_path, "predict");
  stage_detail::require_artifact(cfg.dataset_path(), "generate");
  if (split_filter != "train" && split_filter != "val" && split_filter != "all")
    throw Error("evaluate: split must be train, val or all");

  auto posts = load_dataset(cfg.dataset_path(), cfg.schema);
  std::map<std::string, int> labels;
  for (const auto& p : posts) {
    if (!p.label) throw Error("evaluate: post '" + p.id + "' is unlabeled");
    labels[p.id] = *p.label;
  }
  std::map<std::string, std::string> split_map;
  if (split_filter != "all") {
    stage_detail::require_artifact(cfg.split_path(), "featurize");
    split_map = stage_detail::read_split_map(cfg.split_path());
  }

  auto preds = read_predictions(pred_path);
  std::vector<int> y;
  std::vector<double> s;
  for (const auto& p : preds) {
    auto it = labels.find(p.id);
    if (it == labels.end())
      throw Error("evaluate: prediction id '" + p.id + "' not in dataset");
    if (split_filter != "all") {
      auto sp = split_map.find(p.id);
      if (sp == split_map.end() || sp->second != split_filter) continue;
    }
    y.push_back(it->second);
    s.push_back(p.score);
  }
  if (y.empty()) throw Error("evaluate: no rows left after split filter");
  EvalReport r = evaluate_scores(y, s);
  if (report_path.empty()) report_path = pred_path + ".report.txt";
  write_report(report_path, r);
  return r;
}

}  // namespace reintel

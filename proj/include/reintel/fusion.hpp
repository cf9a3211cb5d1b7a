#pragma once

// The three fusion model variants: parallel 1-D convolutions over token
// embeddings (Model 1), a vertically stacked map refined by three further
// conv layers (Model 2), the same stack with shortcut connections (Model 3);
// plus average fusion of the three modality vectors, the sigmoid head, the
// training loop, and checkpoint IO.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "reintel/common.hpp"
#include "reintel/encoders.hpp"
#include "reintel/eval.hpp"
#include "reintel/matrix_file.hpp"
#include "reintel/nn/autograd.hpp"
#include "reintel/nn/layers.hpp"

namespace reintel {

struct ModelConfig {
  int variant = 1;  // 1, 2 or 3
  int fc_width = 512;
  double dropout = 0.2;
  int pool_size = 5;
  int conv_filters = 256;
  std::vector<int> filter_sizes = {2, 3, 4, 5};
  int extra_conv_layers = 3;   // variants 2/3
  int extra_conv_filters = 256;
  int extra_conv_kernel = 3;
  double learning_rate = 2e-5;
  int batch_size = 16;
  int epochs = 10;
  int patience = 3;
  std::uint64_t seed = 42;
  // input dimensions
  int l_max = 256;
  int text_dim = 768;   // D_t
  int region_dim = 16;  // D_v
  int attn_dim = 64;    // d_a
  int meta_dim = 18;

  void validate() const {
    if (variant < 1 || variant > 3) throw Error("config: variant must be 1..3");
    if (filter_sizes.empty()) throw Error("config: filter_sizes must be non-empty");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("config: dropout must be in [0,1)");
    for (int v : {fc_width, pool_size, conv_filters, extra_conv_layers,
                  extra_conv_filters, extra_conv_kernel, batch_size, epochs,
                  l_max, text_dim, region_dim, attn_dim, meta_dim})
      if (v <= 0) throw Error("config: all sizes must be positive");
    if (learning_rate <= 0) throw Error("config: learning_rate must be positive");
    if (l_max < pool_size)
      throw Error("config: l_max (" + std::to_string(l_max) +
                  ") is smaller than pool_size (" + std::to_string(pool_size) +
                  "); increase l_max");
  }
};

// Per-post encoder outputs, precomputed once since the desk-scale encoders
// are frozen.
struct SampleInputs {
  Eigen::MatrixXd emb;          // l_max x D_t, masked rows zero
  Eigen::RowVectorXd summary;   // 1 x D_t
  Eigen::MatrixXd regions;      // R x D_v
  Eigen::RowVectorXd meta;      // 1 x meta_dim
};

struct Sample {
  std::string id;
  SampleInputs in;
  double label = 0;
};

// Modality vectors and attention weights of one forward pass, for tests.
struct BatchTrace {
  nn::NodeRef text_v, image_v, meta_v;
  std::vector<Eigen::RowVectorXd> attention_weights;
};

class FusionModel {
 public:
  explicit FusionModel(const ModelConfig& config) : cfg(config) {
    cfg.validate();
    auto eng = make_engine(cfg.seed, "init:v" + std::to_string(cfg.variant));
    const int F = cfg.conv_filters;

    for (int f : cfg.filter_sizes)
      base_convs.emplace_back("text.conv" + std::to_string(f), f, cfg.text_dim, F,
                              eng);
    if (cfg.variant >= 2) {
      int cin = F * static_cast<int>(cfg.filter_sizes.size());
      for (int i = 0; i < cfg.extra_conv_layers; ++i) {
        extra_convs.emplace_back("text.extra" + std::to_string(i),
                                 cfg.extra_conv_kernel, cin,
                                 cfg.extra_conv_filters, eng);
        if (cfg.variant == 3) {
          if (cin != cfg.extra_conv_filters)
            shortcut_projs.emplace_back(nn::Conv1dSame(
                "text.shortcut" + std::to_string(i), 1, cin,
                cfg.extra_conv_filters, eng));
          else
            shortcut_projs.emplace_back(std::nullopt);
        }
        cin = cfg.extra_conv_filters;
      }
    }

    const int pooled = cfg.l_max / cfg.pool_size;
    text_fc_in_ =
        cfg.variant == 1
            ? static_cast<int>(cfg.filter_sizes.size()) * pooled * F
            : pooled * cfg.extra_conv_filters;
    text_fc = nn::Dense("text.fc", text_fc_in_, cfg.fc_width, eng);
    text_bn = nn::BatchNorm1d("text.bn", cfg.fc_width);
    attention = AttentionPool("image.att", cfg.text_dim, cfg.region_dim,
                              cfg.attn_dim, cfg.fc_width, eng);
    metadata = MetadataBranch("meta", cfg.meta_dim, cfg.fc_width, eng);
    head = nn::Dense("head", cfg.fc_width, 1, eng);
  }

  int text_fc_in() const { return text_fc_in_; }

  // Per-post text features up to the flatten, one row out.
  nn::NodeRef text_features(nn::Tape& t, const Eigen::MatrixXd& emb_masked) {
    if (emb_masked.rows() != cfg.l_max || emb_masked.cols() != cfg.text_dim)
      throw Error("text branch: embeddings must be l_max x text_dim");
    auto x = t.leaf(emb_masked, false);
    std::vector<nn::NodeRef> conv_outs;
    conv_outs.reserve(base_convs.size());
    for (auto& conv : base_convs)
      conv_outs.push_back(nn::relu(t, conv.apply(t, x)));

    if (cfg.variant == 1) {
      std::vector<nn::NodeRef> flat;
      flat.reserve(conv_outs.size());
      for (auto& c : conv_outs)
        flat.push_back(nn::flatten_to_row(t, nn::maxpool_rows(t, c, cfg.pool_size)));
      return nn::concat_cols(t, flat);
    }

    // variants 2/3: stack the maps along channels, refine with extra convs
    auto map = nn::concat_cols(t, conv_outs);  // L x 4F
    for (std::size_t i = 0; i < extra_convs.size(); ++i) {
      auto conv_out = nn::relu(t, extra_convs[i].apply(t, map));
      if (cfg.variant == 3) {
        auto& proj = shortcut_projs[i];
        nn::NodeRef sc = proj ? proj->apply(t, map) : map;
        conv_out = nn::add(t, conv_out, sc);
      }
      map = conv_out;
    }
    return nn::flatten_to_row(t, nn::maxpool_rows(t, map, cfg.pool_size));
  }

  // Full batch forward to logits (B x 1).
  nn::NodeRef forward_batch(nn::Tape& t, const std::vector<const SampleInputs*>& batch,
                            bool training, std::mt19937_64* dropout_eng,
                            BatchTrace* trace = nullptr) {
    if (batch.empty()) throw Error("forward_batch: empty batch");
    if (training && cfg.dropout > 0 && !dropout_eng)
      throw Error("forward_batch: training with dropout needs an engine");

    std::vector<nn::NodeRef> text_rows, image_rows, meta_rows;
    text_rows.reserve(batch.size());
    for (const SampleInputs* s : batch) {
      text_rows.push_back(text_features(t, s->emb));
      auto regions = t.leaf(s->regions, false);
      auto summary = t.leaf(s->summary, false);
      Eigen::RowVectorXd w;
      image_rows.push_back(attention.apply(t, regions, summary,
                                           trace ? &w : nullptr));
      if (trace) trace->attention_weights.push_back(w);
      meta_rows.push_back(t.leaf(s->meta, false));
    }

    auto text_v = nn::relu(t, text_bn.apply(t, text_fc.apply(t, nn::vstack(t, text_rows)),
                                            training));
    if (training && cfg.dropout > 0)
      text_v = nn::dropout(t, text_v, cfg.dropout, *dropout_eng, training);
    auto image_v = nn::vstack(t, image_rows);
    auto meta_v = metadata.apply(t, nn::vstack(t, meta_rows), training);

    if (trace) {
      trace->text_v = text_v;
      trace->image_v = image_v;
      trace->meta_v = meta_v;
    }
    auto fused = nn::scale(t, nn::add(t, nn::add(t, text_v, image_v), meta_v),
                           1.0 / 3.0);
    return head.apply(t, fused);
  }

  // Inference probabilities; batch composition cannot matter since batch
  // norm runs on its running statistics.
  std::vector<double> predict_proba(const std::vector<Sample>& samples) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (std::size_t start = 0; start < samples.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end =
          std::min(samples.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const SampleInputs*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&samples[i].in);
      nn::Tape t;
      auto logits = forward_batch(t, batch, false, nullptr);
      for (Eigen::Index i = 0; i < logits->value.rows(); ++i)
        out.push_back(1.0 / (1.0 + std::exp(-logits->value(i, 0))));
    }
    return out;
  }

  std::vector<nn::Param*> params() {
    std::vector<nn::Param*> out;
    auto append = [&](std::vector<nn::Param*> ps) {
      out.insert(out.end(), ps.begin(), ps.end());
    };
    for (auto& c : base_convs) append(c.params());
    for (auto& c : extra_convs) append(c.params());
    for (auto& p : shortcut_projs)
      if (p) append(p->params());
    append(text_fc.params());
    append(text_bn.params());
    append(attention.params());
    append(metadata.params());
    append(head.params());
    return out;
  }

  // Named state beyond trainable parameters (batch-norm running statistics).
  std::vector<std::pair<std::string, Eigen::MatrixXd*>> state_tensors() {
    return {{"text.bn.running_mean", &text_bn.running_mean},
            {"text.bn.running_var", &text_bn.running_var},
            {"meta.bn.running_mean", &metadata.bn.running_mean},
            {"meta.bn.running_var", &metadata.bn.running_var}};
  }

  ModelConfig cfg;
  std::vector<nn::Conv1dSame> base_convs;
  std::vector<nn::Conv1dSame> extra_convs;
  std::vector<std::optional<nn::Conv1dSame>> shortcut_projs;
  nn::Dense text_fc;
  nn::BatchNorm1d text_bn;
  AttentionPool attention;
  MetadataBranch metadata;
  nn::Dense head;

 private:
  int text_fc_in_ = 0;
};

// Elementwise mean of the three modality vectors.
inline Eigen::RowVectorXd fuse(const Eigen::RowVectorXd& text_v,
                               const Eigen::RowVectorXd& image_v,
                               const Eigen::RowVectorXd& meta_v) {
  if (text_v.size() != image_v.size() || text_v.size() != meta_v.size())
    throw Error("fuse: modality width mismatch");
  return (text_v + image_v + meta_v) / 3.0;
}

// ---- training ----

struct EpochStats {
  int epoch = 0;
  double loss = 0;
  double train_auc = 0;
  double val_auc = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_auc = 0;
};

namespace detail {

struct ModelSnapshot {
  std::vector<Eigen::MatrixXd> params;
  std::vector<Eigen::MatrixXd> state;
};

inline ModelSnapshot snapshot(FusionModel& m) {
  ModelSnapshot s;
  for (auto* p : m.params()) s.params.push_back(p->value);
  for (auto& [_, t] : m.state_tensors()) s.state.push_back(*t);
  return s;
}

inline void restore(FusionModel& m, const ModelSnapshot& s) {
  auto ps = m.params();
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->value = s.params[i];
  auto ts = m.state_tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) *ts[i].second = s.state[i];
}

inline double auc_of(FusionModel& m, const std::vector<Sample>& samples) {
  std::vector<double> scores = m.predict_proba(samples);
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(static_cast<int>(s.label));
  return roc_auc(labels, scores);
}

}  // namespace detail

// Minimizes binary cross-entropy with Adam; shuffles per epoch from the
// seed's shuffle substream; early-stops on validation ROC-AUC (training
// ROC-AUC when no validation set is given) and returns the best checkpoint.
inline TrainResult train_model(FusionModel& model, const std::vector<Sample>& train,
                               const std::vector<Sample>& val) {
  if (train.empty()) throw Error("train: empty training set");
  const ModelConfig& cfg = model.cfg;
  auto shuffle_eng = make_engine(cfg.seed, "shuffle:v" + std::to_string(cfg.variant));
  auto dropout_eng = make_engine(cfg.seed, "dropout:v" + std::to_string(cfg.variant));
  nn::AdamOptimizer opt(cfg.learning_rate);

  TrainResult result;
  detail::ModelSnapshot best = detail::snapshot(model);
  double best_auc = -1;
  int best_epoch = 0, since_best = 0;

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    seeded_shuffle(order, shuffle_eng);
    double loss_sum = 0;
    long n_batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const SampleInputs*> batch;
      Eigen::MatrixXd targets(static_cast<Eigen::Index>(end - start), 1);
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(&train[order[i]].in);
        targets(static_cast<Eigen::Index>(i - start), 0) = train[order[i]].label;
      }
      nn::Tape tape;
      auto logits = model.forward_batch(tape, batch, true, &dropout_eng);
      auto loss = nn::bce_with_logits(tape, logits, targets);
      if (!std::isfinite(loss->value(0, 0)))
        throw Error("train: non-finite loss at epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(n_batches + 1) +
                    " (lr=" + std::to_string(cfg.learning_rate) + ")");
      tape.backward(loss);
      opt.step(model.params());
      loss_sum += loss->value(0, 0);
      ++n_batches;
    }

    EpochStats st;
    st.epoch = epoch;
    st.loss = loss_sum / static_cast<double>(std::max(1L, n_batches));
    st.train_auc = detail::auc_of(model, train);
    double monitored = st.train_auc;
    if (!val.empty()) {
      st.val_auc = detail::auc_of(model, val);
      monitored = st.val_auc;
    }
    result.history.push_back(st);

    if (monitored > best_auc) {
      best_auc = monitored;
      best_epoch = epoch;
      best = detail::snapshot(model);
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= cfg.patience) break;
    }
  }

  detail::restore(model, best);
  result.best_epoch = best_epoch;
  result.best_auc = best_auc;
  return result;
}

inline void write_history(const std::string& path, const TrainResult& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write history: " + path);
  out << "epoch,loss,train_auc,val_auc\n";
  char buf[96];
  for (const auto& st : r.history) {
    if (std::isnan(st.val_auc))
      std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,\n", st.epoch, st.loss,
                    st.train_auc);
    else
      std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", st.epoch, st.loss,
                    st.train_auc, st.val_auc);
    out << buf;
  }
}

// ---- checkpoints ----
//
// Single-file container: a text manifest (config, extra pipeline keys), then
// named RMAT tensor blocks for every parameter and batch-norm statistic.

inline void save_checkpoint(const std::string& path, FusionModel& model,
                            const std::map<std::string, std::string>& extra = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path);
  const ModelConfig& c = model.cfg;
  out << "reintel-checkpoint-v1\n";
  out << "variant=" << c.variant << "\n";
  out << "fc_width=" << c.fc_width << "\n";
  out << "dropout=" << format_double(c.dropout) << "\n";
  out << "pool_size=" << c.pool_size << "\n";
  out << "conv_filters=" << c.conv_filters << "\n";
  {
    std::vector<std::string> fs;
    for (int f : c.filter_sizes) fs.push_back(std::to_string(f));
    out << "filter_sizes=" << join(fs, ",") << "\n";
  }
  out << "extra_conv_layers=" << c.extra_conv_layers << "\n";
  out << "extra_conv_filters=" << c.extra_conv_filters << "\n";
  out << "extra_conv_kernel=" << c.extra_conv_kernel << "\n";
  out << "learning_rate=" << format_double(c.learning_rate) << "\n";
  out << "batch_size=" << c.batch_size << "\n";
  out << "epochs=" << c.epochs << "\n";
  out << "patience=" << c.patience << "\n";
  out << "seed=" << c.seed << "\n";
  out << "l_max=" << c.l_max << "\n";
  out << "text_dim=" << c.text_dim << "\n";
  out << "region_dim=" << c.region_dim << "\n";
  out << "attn_dim=" << c.attn_dim << "\n";
  out << "meta_dim=" << c.meta_dim << "\n";
  for (const auto& [k, v] : extra) out << "x." << k << "=" << v << "\n";

  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> tensors;
  for (auto* p : model.params()) tensors.emplace_back(p->name, &p->value);
  for (auto& [name, t] : model.state_tensors()) tensors.emplace_back(name, t);
  out << "tensors=" << tensors.size() << "\n";
  for (auto& [name, m] : tensors) {
    out << name << "\n";
    write_matrix_block(out, *m);
  }
  if (!out) throw Error("checkpoint write failed: " + path);
}

struct Checkpoint {
  std::shared_ptr<FusionModel> model;
  std::map<std::string, std::string> extra;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  std::string line;
  std::getline(in, line);
  if (line != "reintel-checkpoint-v1")
    throw Error("checkpoint " + path + ": bad header");

  std::map<std::string, std::string> kv, extra;
  long n_tensors = -1;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("checkpoint " + path + ": bad manifest line: " + line);
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "tensors") {
      n_tensors = std::stol(value);
      break;
    }
    if (key.rfind("x.", 0) == 0) extra[key.substr(2)] = value;
    else kv[key] = value;
  }
  if (n_tensors < 0) throw Error("checkpoint " + path + ": missing tensors=");

  ModelConfig c;
  c.variant = std::stoi(kv.at("variant"));
  c.fc_width = std::stoi(kv.at("fc_width"));
  c.dropout = std::stod(kv.at("dropout"));
  c.pool_size = std::stoi(kv.at("pool_size"));
  c.conv_filters = std::stoi(kv.at("conv_filters"));
  c.filter_sizes.clear();
  for (const auto& f : split(kv.at("filter_sizes"), ','))
    c.filter_sizes.push_back(std::stoi(f));
  c.extra_conv_layers = std::stoi(kv.at("extra_conv_layers"));
  c.extra_conv_filters = std::stoi(kv.at("extra_conv_filters"));
  c.extra_conv_kernel = std::stoi(kv.at("extra_conv_kernel"));
  c.learning_rate = std::stod(kv.at("learning_rate"));
  c.batch_size = std::stoi(kv.at("batch_size"));
  c.epochs = std::stoi(kv.at("epochs"));
  c.patience = std::stoi(kv.at("patience"));
  c.seed = std::stoull(kv.at("seed"));
  c.l_max = std::stoi(kv.at("l_max"));
  c.text_dim = std::stoi(kv.at("text_dim"));
  c.region_dim = std::stoi(kv.at("region_dim"));
  c.attn_dim = std::stoi(kv.at("attn_dim"));
  c.meta_dim = std::stoi(kv.at("meta_dim"));

  Checkpoint ck;
  ck.model = std::make_shared<FusionModel>(c);
  ck.extra = std::move(extra);

  std::map<std::string, Eigen::MatrixXd*> by_name;
  for (auto* p : ck.model->params()) by_name[p->name] = &p->value;
  for (auto& [name, t] : ck.model->state_tensors()) by_name[name] = t;

  for (long i = 0; i < n_tensors; ++i) {
    if (!std::getline(in, line))
      throw Error("checkpoint " + path + ": truncated tensor list");
    auto it = by_name.find(line);
    if (it == by_name.end())
      throw Error("checkpoint " + path + ": unknown tensor '" + line + "'");
    Eigen::MatrixXd m = read_matrix_block(in);
    if (m.rows() != it->second->rows() || m.cols() != it->second->cols())
      throw Error("checkpoint " + path + ": tensor '" + line + "' has shape " +
                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                  ", expected " + std::to_string(it->second->rows()) + "x" +
                  std::to_string(it->second->cols()));
    *it->second = std::move(m);
  }
  return ck;
}

}  // namespace reintel

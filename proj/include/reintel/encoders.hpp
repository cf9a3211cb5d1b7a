#pragma once

// Per-modality encoders: contextual token embeddings and image region
// features behind contracts, deterministic desk-scale stubs, text-conditioned
// attention pooling over regions, and the metadata branch.

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "reintel/common.hpp"
#include "reintel/dataset.hpp"
#include "reintel/image.hpp"
#include "reintel/matrix_file.hpp"
#include "reintel/nn/layers.hpp"

namespace reintel {

// ---- token embeddings ----

struct TokenEmbeddings {
  Eigen::MatrixXd matrix;       // L_max x D_t, masked rows zero
  std::vector<bool> mask;       // true = real token
  long n_real() const {
    long n = 0;
    for (bool b : mask) n += b;
    return n;
  }
};

// Contract: tokens in, one embedding row per token out. Must be
// deterministic in inference mode.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual Eigen::MatrixXd encode_tokens(const std::vector<std::string>& tokens) const = 0;
  virtual int dim() const = 0;
};

// Deterministic stub: each token's vector is a pure content hash, so equal
// tokens embed equally everywhere and no model download is needed.
class HashTextEncoder final : public TextEncoder {
 public:
  explicit HashTextEncoder(int dim = 768, std::uint64_t salt = 0x5eed)
      : dim_(dim), salt_(salt) {}

  Eigen::MatrixXd encode_tokens(const std::vector<std::string>& tokens) const override {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(tokens.size()), dim_);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      std::uint64_t state = splitmix64(fnv1a64(tokens[i]) ^ salt_);
      for (int d = 0; d < dim_; ++d) {
        state = splitmix64(state);
        // map to [-1, 1)
        m(static_cast<Eigen::Index>(i), d) =
            static_cast<double>(state >> 11) * (2.0 / 9007199254740992.0) - 1.0;
      }
    }
    return m;
  }

  int dim() const override { return dim_; }

 private:
  int dim_;
  std::uint64_t salt_;
};

// Adapter over precomputed embedding files: looks up
// <dir>/<fnv1a64-hex-of-joined-tokens>.rmat written by any external encoder.
class PrecomputedTextEncoder final : public TextEncoder {
 public:
  PrecomputedTextEncoder(std::string dir, int dim) : dir_(std::move(dir)), dim_(dim) {}

  Eigen::MatrixXd encode_tokens(const std::vector<std::string>& tokens) const override {
    std::string text = join(tokens, " ");
    char name[32];
    std::snprintf(name, sizeof(name), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text)));
    Eigen::MatrixXd m = read_matrix_file(dir_ + "/" + name + ".rmat");
    if (m.cols() != dim_)
      throw Error("precomputed embedding " + std::string(name) + ": dim " +
                  std::to_string(m.cols()) + " != expected " + std::to_string(dim_));
    return m;
  }

  int dim() const override { return dim_; }

 private:
  std::string dir_;
  int dim_;
};

// Truncates/pads token embeddings to l_max and zeroes masked rows.
inline TokenEmbeddings encode_text(const std::vector<std::string>& tokens,
                                   const TextEncoder& encoder, int l_max,
                                   const std::string& text_id = "") {
  if (l_max < 1) throw Error("encode_text: l_max must be >= 1");
  TokenEmbeddings out;
  out.matrix = Eigen::MatrixXd::Zero(l_max, encoder.dim());
  out.mask.assign(static_cast<std::size_t>(l_max), false);
  if (tokens.empty()) return out;
  Eigen::MatrixXd emb;
  try {
    emb = encoder.encode_tokens(tokens);
  } catch (const std::exception& e) {
    throw Error("encode_text" + (text_id.empty() ? "" : " [id " + text_id + "]") +
                ": " + e.what());
  }
  const Eigen::Index n = std::min<Eigen::Index>(emb.rows(), l_max);
  out.matrix.topRows(n) = emb.topRows(n);
  for (Eigen::Index i = 0; i < n; ++i) out.mask[static_cast<std::size_t>(i)] = true;
  return out;
}

// Mask-weighted mean of token embeddings; the attention query source.
inline Eigen::RowVectorXd text_summary(const TokenEmbeddings& emb) {
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(emb.matrix.cols());
  long n = 0;
  for (Eigen::Index i = 0; i < emb.matrix.rows(); ++i)
    if (emb.mask[static_cast<std::size_t>(i)]) {
      sum += emb.matrix.row(i);
      ++n;
    }
  if (n > 0) sum /= static_cast<double>(n);
  return sum;
}

// ---- image side ----

struct RegionFeatures {
  Eigen::MatrixXd matrix;  // R x D_v
};

// Contract: image at the backbone's input resolution in, final-conv-map
// region vectors out (spatial grid flattened row-major).
class ImageBackbone {
 public:
  virtual ~ImageBackbone() = default;
  virtual RegionFeatures encode(const Image& image) const = 0;
  virtual int input_size() const = 0;   // square input, pixels per side
  virtual int input_channels() const = 0;
  virtual int grid_side() const = 0;
  virtual int feature_dim() const = 0;
  int regions() const { return grid_side() * grid_side(); }
};

// Frozen random-weight convolutional stub: three 3x3 conv + relu + 2x2
// mean-pool stages, so the grid side is input_size / 8. Weights are fixed at
// construction; the backbone never trains.
class StubConvBackbone final : public ImageBackbone {
 public:
  struct Config {
    int input_size = 32;   // must be a positive multiple of 8
    int input_channels = 1;
    int feature_dim = 16;
    std::uint64_t seed = 7;
  };

  explicit StubConvBackbone(const Config& cfg) : cfg_(cfg) {
    if (cfg.input_size <= 0 || cfg.input_size % 8 != 0)
      throw Error("stub backbone: input_size must be a positive multiple of 8");
    auto eng = make_engine(cfg.seed, "stub-backbone");
    int chans[4] = {cfg.input_channels, 8, 16, cfg.feature_dim};
    for (int s = 0; s < 3; ++s)
      kernels_.push_back(nn::uniform_init(9 * chans[s], chans[s + 1],
                                          9 * chans[s], eng));
  }

  RegionFeatures encode(const Image& image) const override {
    if (image.height != cfg_.input_size || image.width != cfg_.input_size)
      throw Error("backbone: expected " + std::to_string(cfg_.input_size) + "x" +
                  std::to_string(cfg_.input_size) + " input, got " +
                  std::to_string(image.height) + "x" + std::to_string(image.width));
    Image in = to_channels(image, cfg_.input_channels);
    // feature map as (H*W) x C matrix per stage
    int h = in.height, w = in.width, c = in.channels;
    Eigen::MatrixXd fm(h * w, c);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < c; ++ch) fm(y * w + x, ch) = in.at(y, x, ch);

    for (const auto& k : kernels_) {
      const int cout = static_cast<int>(k.cols());
      Eigen::MatrixXd conv = Eigen::MatrixXd::Zero(h * w, cout);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          Eigen::RowVectorXd patch = Eigen::RowVectorXd::Zero(9 * c);
          int idx = 0;
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx, ++idx) {
              int yy = y + dy, xx = x + dx;
              if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
              patch.segment(idx * c, c) = fm.row(yy * w + xx);
            }
          conv.row(y * w + x) = (patch * k).cwiseMax(0.0);
        }
      // 2x2 mean pool
      int h2 = h / 2, w2 = w / 2;
      Eigen::MatrixXd pooled(h2 * w2, cout);
      for (int y = 0; y < h2; ++y)
        for (int x = 0; x < w2; ++x)
          pooled.row(y * w2 + x) =
              0.25 * (conv.row((2 * y) * w + 2 * x) + conv.row((2 * y) * w + 2 * x + 1) +
                      conv.row((2 * y + 1) * w + 2 * x) +
                      conv.row((2 * y + 1) * w + 2 * x + 1));
      fm = std::move(pooled);
      h = h2;
      w = w2;
      c = cout;
    }
    return RegionFeatures{std::move(fm)};
  }

  int input_size() const override { return cfg_.input_size; }
  int input_channels() const override { return cfg_.input_channels; }
  int grid_side() const override { return cfg_.input_size / 8; }
  int feature_dim() const override { return cfg_.feature_dim; }

 private:
  Config cfg_;
  std::vector<Eigen::MatrixXd> kernels_;
};

// Picks one image per post (uniform, keyed by global seed and post id so the
// choice is stable across runs and iteration orders), loads and resizes it.
// Posts without images, and unreadable files, yield the all-zero blank image.
inline Image select_image(const RawPost& post, int height, int width,
                          std::uint64_t seed) {
  if (post.image_paths.empty()) return blank_image(height, width, 1);
  std::size_t idx = 0;
  if (post.image_paths.size() > 1)
    idx = static_cast<std::size_t>(splitmix64(substream(seed, "image") ^ fnv1a64(post.id)) %
                                   post.image_paths.size());
  Image img;
  try {
    img = load_pnm(post.image_paths[idx]);
  } catch (const std::exception& e) {
    warn("post " + post.id + ": unreadable image '" + post.image_paths[idx] +
         "' (" + e.what() + "), using blank image");
    return blank_image(height, width, 1);
  }
  return resize_bilinear(img, height, width);
}

inline RegionFeatures encode_image(const Image& image, const ImageBackbone& backbone) {
  return backbone.encode(image);
}

// ---- attention pooling ----

// Text-conditioned scaled dot-product attention over region vectors:
//   q = summary * Wq,  k_i = r_i * Wk,  s_i = q . k_i / sqrt(d_a),
//   w = softmax(s),    out = sum_i w_i (r_i * Wv)
// The output is a convex combination of the projected regions.
class AttentionPool {
 public:
  AttentionPool() = default;
  AttentionPool(const std::string& name, Eigen::Index text_dim, Eigen::Index region_dim,
                Eigen::Index attn_dim, Eigen::Index out_dim, std::mt19937_64& eng)
      : attn_dim_(attn_dim) {
    wq.name = name + ".wq";
    wq.value = nn::uniform_init(text_dim, attn_dim, text_dim, eng);
    wq.init_moments();
    wk.name = name + ".wk";
    wk.value = nn::uniform_init(region_dim, attn_dim, region_dim, eng);
    wk.init_moments();
    wv.name = name + ".wv";
    wv.value = nn::uniform_init(region_dim, out_dim, region_dim, eng);
    wv.init_moments();
  }

  // regions: (R x D_v) node, summary: (1 x D_t) node. Returns the pooled
  // (1 x out_dim) node; *weights_out, when given, receives the softmax
  // weights of this call.
  nn::NodeRef apply(nn::Tape& t, nn::NodeRef regions, nn::NodeRef summary,
                    Eigen::RowVectorXd* weights_out = nullptr) {
    wq.leaf_in(t);
    wk.leaf_in(t);
    wv.leaf_in(t);
    auto q = nn::matmul(t, summary, wq.node);              // 1 x d_a
    auto keys = nn::matmul(t, regions, wk.node);           // R x d_a
    auto keys_t = transpose(t, keys);                      // d_a x R
    auto scores = nn::scale(t, nn::matmul(t, q, keys_t),
                            1.0 / std::sqrt(static_cast<double>(attn_dim_)));
    auto weights = nn::softmax_rows(t, scores);            // 1 x R
    if (weights_out) *weights_out = weights->value.row(0);
    auto values = nn::matmul(t, regions, wv.node);         // R x out
    return nn::matmul(t, weights, values);                 // 1 x out
  }

  std::vector<nn::Param*> params() { return {&wq, &wk, &wv}; }

  nn::Param wq, wk, wv;

 private:
  static nn::NodeRef transpose(nn::Tape& t, nn::NodeRef x) {
    return t.make(x->value.transpose(), {x}, [](nn::Node& n) {
      if (n.inputs[0]->requires_grad)
        n.inputs[0]->accumulate(n.grad.transpose());
    });
  }
  Eigen::Index attn_dim_ = 1;
};

// ---- metadata branch ----

// Affine map to the shared modality width, batch normalization, rectifier.
class MetadataBranch {
 public:
  MetadataBranch() = default;
  MetadataBranch(const std::string& name, Eigen::Index in_dim, Eigen::Index out_dim,
                 std::mt19937_64& eng)
      : fc(name + ".fc", in_dim, out_dim, eng), bn(name + ".bn", out_dim) {}

  nn::NodeRef apply(nn::Tape& t, nn::NodeRef features, bool training) {
    if (features->value.cols() != fc.in_dim())
      throw Error("metadata branch: feature width " +
                  std::to_string(features->value.cols()) + " != expected " +
                  std::to_string(fc.in_dim()));
    return nn::relu(t, bn.apply(t, fc.apply(t, features), training));
  }

  std::vector<nn::Param*> params() {
    std::vector<nn::Param*> out = fc.params();
    for (auto* p : bn.params()) out.push_back(p);
    return out;
  }

  nn::Dense fc;
  nn::BatchNorm1d bn;
};

}  // namespace reintel

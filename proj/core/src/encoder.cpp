#include "tdre/encoder.hpp"

#include <array>
#include <cassert>

namespace tdre {

void EncoderConfig::validate() const {
  if (word_dim <= 0 || char_dim <= 0 || char_filters <= 0 || char_kernel <= 0 ||
      lstm_layers <= 0 || lstm_hidden <= 0 || label_emb_dim <= 0)
    throw ConfigError("encoder dimensions must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
  if (use_label_emb && label_emb_dim != d_h())
    throw ConfigError("label_emb_dim (" + std::to_string(label_emb_dim) +
                      ") must equal d_h = 2*lstm_hidden (" + std::to_string(d_h()) +
                      ") for additive fusion");
}

Encoder::Encoder(ParamStore& store, const EncoderConfig& cfg, const Vocabulary& vocab, Rng& rng,
                 const std::unordered_map<std::string, std::vector<double>>* pretrained)
    : cfg_(cfg) {
  cfg_.validate();

  word_emb_ = &store.add("enc.word_emb", vocab.n_words(), cfg_.word_dim);
  init_uniform(*word_emb_, rng, -0.1, 0.1);
  if (pretrained) {
    for (int w = 0; w < vocab.n_words(); ++w) {
      auto it = pretrained->find(vocab.words()[static_cast<size_t>(w)]);
      if (it == pretrained->end()) continue;
      if (static_cast<int>(it->second.size()) != cfg_.word_dim)
        throw ConfigError("pretrained embedding dimension " +
                          std::to_string(it->second.size()) + " != word_dim " +
                          std::to_string(cfg_.word_dim));
      for (int d = 0; d < cfg_.word_dim; ++d)
        word_emb_->value(w, d) = it->second[static_cast<size_t>(d)];
    }
  }

  if (cfg_.use_char_emb) {
    char_emb_ = &store.add("enc.char_emb", vocab.n_chars(), cfg_.char_dim);
    init_uniform(*char_emb_, rng, -0.1, 0.1);
    conv_w_ = &store.add("enc.conv_w", cfg_.char_kernel * cfg_.char_dim, cfg_.char_filters);
    conv_b_ = &store.add("enc.conv_b", 1, cfg_.char_filters);
    init_glorot(*conv_w_, rng);
  }

  int in = cfg_.input_dim();
  int H = cfg_.lstm_hidden;
  layers_.resize(static_cast<size_t>(cfg_.lstm_layers));
  for (int l = 0; l < cfg_.lstm_layers; ++l) {
    int layer_in = l == 0 ? in : 2 * H;
    for (int d = 0; d < 2; ++d) {
      std::string p = "enc.lstm" + std::to_string(l) + (d == 0 ? ".fwd" : ".bwd");
      LstmDir& ld = layers_[static_cast<size_t>(l)][static_cast<size_t>(d)];
      ld.wx = &store.add(p + ".wx", layer_in, 4 * H);
      ld.wh = &store.add(p + ".wh", H, 4 * H);
      ld.b = &store.add(p + ".b", 1, 4 * H);
      init_glorot(*ld.wx, rng);
      init_glorot(*ld.wh, rng);
      ld.b->value.block(0, H, 1, H).setConstant(1.0);  // forget-gate bias
    }
  }

  if (cfg_.use_label_emb) {
    label_emb_ = &store.add("enc.label_emb", vocab.n_tags(), cfg_.label_emb_dim);
    init_uniform(*label_emb_, rng, -0.1, 0.1);
  }
}

VarId Encoder::embed_words(Graph& g, const std::vector<int>& word_ids) const {
  return g.rows_of(*word_emb_, word_ids);
}

VarId Encoder::embed_chars(Graph& g, const std::vector<int>& char_grid, int max_word_len) const {
  assert(cfg_.use_char_emb);
  if (max_word_len < cfg_.char_kernel)
    throw ConfigError("max_word_len must be >= char_kernel");
  VarId embs = g.rows_of(*char_emb_, char_grid);  // (n*L) x char_dim
  VarId windows = g.conv_windows(embs, max_word_len, cfg_.char_kernel);
  VarId conv = g.tanh_op(g.add_rowvec(g.matmul(windows, g.param(*conv_w_)), g.param(*conv_b_)));
  return g.rowblock_colwise_max(conv, max_word_len - cfg_.char_kernel + 1);
}

VarId Encoder::apply_dropout(Graph& g, VarId x, bool training, Rng* rng) const {
  if (!training || cfg_.dropout <= 0.0) return x;
  assert(rng && "training mode requires a dropout rng");
  const Mat& v = g.value(x);
  Mat mask(v.rows(), v.cols());
  double keep = 1.0 - cfg_.dropout;
  for (Eigen::Index c = 0; c < v.cols(); ++c)
    for (Eigen::Index r = 0; r < v.rows(); ++r)
      mask(r, c) = uniform(*rng, 0.0, 1.0) < cfg_.dropout ? 0.0 : 1.0 / keep;
  return g.cmul(x, g.input(std::move(mask)));
}

VarId Encoder::lstm_direction(Graph& g, VarId x, int layer, int dir) const {
  const LstmDir& p = layers_[static_cast<size_t>(layer)][static_cast<size_t>(dir)];
  int H = cfg_.lstm_hidden;
  Eigen::Index n = g.value(x).rows();
  VarId xw = g.matmul(x, g.param(*p.wx));  // n x 4H, all timesteps at once
  VarId wh = g.param(*p.wh);
  VarId b = g.param(*p.b);
  VarId h = g.input(Mat::Zero(1, H));
  VarId c = g.input(Mat::Zero(1, H));
  std::vector<VarId> hs(static_cast<size_t>(n));
  for (Eigen::Index s = 0; s < n; ++s) {
    Eigen::Index t = dir == 0 ? s : n - 1 - s;
    VarId pre = g.add(g.add(g.rows(xw, t, 1), g.matmul(h, wh)), b);
    VarId ifo = g.sigmoid(g.cols(pre, 0, 3 * H));
    VarId gg = g.tanh_op(g.cols(pre, 3 * H, H));
    VarId i = g.cols(ifo, 0, H);
    VarId f = g.cols(ifo, H, H);
    VarId o = g.cols(ifo, 2 * H, H);
    c = g.add(g.cmul(f, c), g.cmul(i, gg));
    h = g.cmul(o, g.tanh_op(c));
    hs[static_cast<size_t>(t)] = h;
  }
  return g.concat_rows(hs);  // n x H, in sentence order
}

VarId Encoder::encode_sequence(Graph& g, VarId x, bool training, Rng* rng) const {
  if (g.value(x).rows() == 0) throw ValidationError("cannot encode an empty sequence");
  VarId cur = x;
  for (int l = 0; l < cfg_.lstm_layers; ++l) {
    VarId fwd = lstm_direction(g, cur, l, 0);
    VarId bwd = lstm_direction(g, cur, l, 1);
    cur = g.concat_cols({fwd, bwd});
    if (l + 1 < cfg_.lstm_layers) cur = apply_dropout(g, cur, training, rng);
  }
  return cur;
}

VarId Encoder::fuse_label_embedding(Graph& g, VarId A, const std::vector<int>& tag_ids) const {
  assert(cfg_.use_label_emb);
  if (static_cast<Eigen::Index>(tag_ids.size()) != g.value(A).rows())
    throw ValidationError("tag sequence length != sequence length");
  return g.add(A, g.rows_of(*label_emb_, tag_ids));
}

VarId Encoder::forward(Graph& g, const EncodedExample& enc, bool training, Rng* rng) const {
  VarId x = embed_words(g, enc.word_ids);
  if (cfg_.use_char_emb) {
    VarId ch = embed_chars(g, enc.char_ids, enc.max_word_len);
    x = g.concat_cols({x, ch});
  }
  x = apply_dropout(g, x, training, rng);
  return encode_sequence(g, x, training, rng);
}

}  // namespace tdre

#pragma once

#include "tdre/corpus.hpp"
#include "tdre/graph.hpp"
#include "tdre/types.hpp"

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace tdre {

struct EncoderConfig {
  int word_dim = 50;
  int char_dim = 30;
  int char_kernel = 3;
  int char_filters = 50;
  int lstm_layers = 3;
  int lstm_hidden = 64;  // per direction
  int label_emb_dim = 128;
  double dropout = 0.1;
  bool use_char_emb = true;
  bool use_label_emb = true;

  int d_h() const { return 2 * lstm_hidden; }
  int input_dim() const { return word_dim + (use_char_emb ? char_filters : 0); }
  void validate() const;
};

/// Shared sentence encoder: word + char-CNN embeddings into a multi-layer
/// BiLSTM. Produces A (n x d_h) and optionally fuses entity-label embeddings
/// into it.
class Encoder {
 public:
  Encoder(ParamStore& store, const EncoderConfig& cfg, const Vocabulary& vocab, Rng& rng,
          const std::unordered_map<std::string, std::vector<double>>* pretrained = nullptr);

  VarId embed_words(Graph& g, const std::vector<int>& word_ids) const;

  /// grid is n x max_word_len (row-major); output n x char_filters via a
  /// width-`char_kernel` convolution, tanh, and max-over-time pooling.
  VarId embed_chars(Graph& g, const std::vector<int>& char_grid, int max_word_len) const;

  /// BiLSTM stack; dropout between layers only when training.
  VarId encode_sequence(Graph& g, VarId x, bool training = false, Rng* dropout_rng = nullptr) const;

  VarId fuse_label_embedding(Graph& g, VarId A, const std::vector<int>& tag_ids) const;

  /// Embeddings + input dropout + BiLSTM. No label fusion.
  VarId forward(Graph& g, const EncodedExample& enc, bool training = false,
                Rng* dropout_rng = nullptr) const;

  const EncoderConfig& config() const { return cfg_; }
  int d_h() const { return cfg_.d_h(); }

 private:
  VarId lstm_direction(Graph& g, VarId x, int layer, int dir) const;
  VarId apply_dropout(Graph& g, VarId x, bool training, Rng* rng) const;

  EncoderConfig cfg_;
  Parameter* word_emb_ = nullptr;
  Parameter* char_emb_ = nullptr;
  Parameter* conv_w_ = nullptr;  // (kernel*char_dim) x filters
  Parameter* conv_b_ = nullptr;
  Parameter* label_emb_ = nullptr;
  struct LstmDir {
    Parameter* wx;  // in x 4H
    Parameter* wh;  // H x 4H
    Parameter* b;   // 1 x 4H
  };
  std::vector<std::array<LstmDir, 2>> layers_;
};

}  // namespace tdre

#pragma once

#include "tdre/graph.hpp"
#include "tdre/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tdre {

enum class Pooling { kMax, kMean };

/// Sentence-level multi-label relation classifier: per-token scores f(A) are
/// pooled over the token axis and squashed by the sigmoid.
class RelationClassifier {
 public:
  RelationClassifier(ParamStore& store, int d_h, int n_relations, Rng& rng,
                     Pooling pooling = Pooling::kMax, const std::string& prefix = "cls");

  int n_relations() const { return n_rel_; }

  /// Pooled pre-sigmoid logits, 1 x K.
  VarId pooled_logits(Graph& g, VarId A) const;

  /// Full sigmoid cross-entropy against y (sum over relation types).
  VarId relation_loss(Graph& g, VarId pooled_logits, const std::vector<double>& y) const;

  /// Probability vector p = sigma(pooled logits), each entry in (0,1).
  RowVec relation_scores(const Mat& A) const;

  double relation_loss(const RowVec& probs, const std::vector<double>& y) const;

 private:
  int n_rel_;
  Pooling pooling_;
  Parameter* w_;  // d_h x K
  Parameter* b_;  // 1 x K
};

/// P_k = 1 iff p_k >= gamma1 (inclusive threshold).
std::vector<uint8_t> predict_relation_set(const RowVec& probs, double gamma1);

}  // namespace tdre

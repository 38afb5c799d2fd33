#include "tdre/relation_classifier.hpp"

#include <cassert>
#include <cmath>

namespace tdre {

RelationClassifier::RelationClassifier(ParamStore& store, int d_h, int n_relations, Rng& rng,
                                       Pooling pooling, const std::string& prefix)
    : n_rel_(n_relations), pooling_(pooling) {
  w_ = &store.add(prefix + ".w", d_h, n_relations);
  b_ = &store.add(prefix + ".b", 1, n_relations);
  init_glorot(*w_, rng);
}

VarId RelationClassifier::pooled_logits(Graph& g, VarId A) const {
  VarId scores = g.add_rowvec(g.matmul(A, g.param(*w_)), g.param(*b_));  // n x K
  return pooling_ == Pooling::kMax ? g.colwise_max(scores) : g.colwise_mean(scores);
}

VarId RelationClassifier::relation_loss(Graph& g, VarId logits,
                                        const std::vector<double>& y) const {
  assert(static_cast<int>(y.size()) == n_rel_);
  Mat target(1, n_rel_);
  for (int k = 0; k < n_rel_; ++k) target(0, k) = y[static_cast<size_t>(k)];
  return g.bce_with_logits_sum(logits, g.input(std::move(target)));
}

RowVec RelationClassifier::relation_scores(const Mat& A) const {
  Graph g;
  VarId logits = pooled_logits(g, g.input(A));
  Mat p = g.value(logits).unaryExpr([](double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
  return p.row(0);
}

double RelationClassifier::relation_loss(const RowVec& probs,
                                         const std::vector<double>& y) const {
  // route through logits so the arithmetic matches the training path
  Graph g;
  Mat logits(1, probs.size());
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    double p = std::min(std::max(probs(k), 1e-15), 1.0 - 1e-15);
    logits(0, k) = std::log(p) - std::log1p(-p);
  }
  return g.scalar(relation_loss(g, g.input(std::move(logits)), y));
}

std::vector<uint8_t> predict_relation_set(const RowVec& probs, double gamma1) {
  std::vector<uint8_t> out(static_cast<size_t>(probs.size()));
  for (Eigen::Index k = 0; k < probs.size(); ++k)
    out[static_cast<size_t>(k)] = probs(k) >= gamma1 ? 1 : 0;
  return out;
}

}  // namespace tdre

#include "tdre/crf.hpp"

#include <cassert>
#include <cmath>

namespace tdre {

CrfTagger::CrfTagger(ParamStore& store, int d_h, int n_tags, Rng& rng, const std::string& prefix)
    : n_tags_(n_tags) {
  proj_ = &store.add(prefix + ".proj", d_h, n_tags);
  bias_ = &store.add(prefix + ".bias", 1, n_tags);
  trans_ = &store.add(prefix + ".trans", n_tags, n_tags);
  start_ = &store.add(prefix + ".start", 1, n_tags);
  stop_ = &store.add(prefix + ".stop", 1, n_tags);
  init_glorot(*proj_, rng);
  init_uniform(*trans_, rng, -0.1, 0.1);
  init_uniform(*start_, rng, -0.1, 0.1);
  init_uniform(*stop_, rng, -0.1, 0.1);
}

VarId CrfTagger::emissions(Graph& g, VarId A) const {
  return g.add_rowvec(g.matmul(A, g.param(*proj_)), g.param(*bias_));
}

VarId CrfTagger::ner_loss(Graph& g, VarId em, const std::vector<int>& gold) const {
  Eigen::Index n = g.value(em).rows();
  int m = n_tags_;
  assert(static_cast<Eigen::Index>(gold.size()) == n);
  for (int t : gold)
    if (t < 0 || t >= m) throw ValidationError("tag id out of range: " + std::to_string(t));

  VarId trans = g.param(*trans_);
  VarId start = g.param(*start_);
  VarId stop = g.param(*stop_);

  // gold path score via indicator masks
  Mat em_mask = Mat::Zero(n, m);
  for (Eigen::Index i = 0; i < n; ++i) em_mask(i, gold[static_cast<size_t>(i)]) = 1.0;
  Mat tr_mask = Mat::Zero(m, m);
  for (Eigen::Index i = 1; i < n; ++i)
    tr_mask(gold[static_cast<size_t>(i - 1)], gold[static_cast<size_t>(i)]) += 1.0;
  Mat start_mask = Mat::Zero(1, m);
  start_mask(0, gold.front()) = 1.0;
  Mat stop_mask = Mat::Zero(1, m);
  stop_mask(0, gold.back()) = 1.0;

  VarId gold_score = g.sum_all(g.cmul(em, g.input(em_mask)));
  gold_score = g.add(gold_score, g.sum_all(g.cmul(trans, g.input(tr_mask))));
  gold_score = g.add(gold_score, g.sum_all(g.cmul(start, g.input(start_mask))));
  gold_score = g.add(gold_score, g.sum_all(g.cmul(stop, g.input(stop_mask))));

  // forward recursion in log space; alpha is 1 x m
  VarId alpha = g.add(start, g.rows(em, 0, 1));
  for (Eigen::Index i = 1; i < n; ++i) {
    VarId scores = g.add_colvec(trans, g.transpose(alpha));  // (from, to) + alpha_from
    alpha = g.add(g.logsumexp_cols(scores), g.rows(em, i, 1));
  }
  VarId log_z = g.logsumexp_all(g.add(alpha, stop));
  return g.sub(log_z, gold_score);
}

double CrfTagger::ner_loss(const Mat& A, const std::vector<int>& gold) const {
  Graph g;
  VarId a = g.input(A);
  return g.scalar(ner_loss(g, emissions(g, a), gold));
}

namespace {
double logsumexp(const Eigen::Ref<const Vec>& v) {
  double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}
}  // namespace

double CrfTagger::log_partition(const Mat& em) const {
  Eigen::Index n = em.rows();
  int m = n_tags_;
  Vec alpha = start_->value.row(0).transpose() + em.row(0).transpose();
  for (Eigen::Index i = 1; i < n; ++i) {
    Vec next(m);
    for (int to = 0; to < m; ++to)
      next(to) = logsumexp(Vec(alpha + trans_->value.col(to))) + em(i, to);
    alpha = next;
  }
  return logsumexp(Vec(alpha + stop_->value.row(0).transpose()));
}

double CrfTagger::sequence_score(const Mat& em, const std::vector<int>& tags) const {
  double s = start_->value(0, tags.front()) + stop_->value(0, tags.back());
  for (size_t i = 0; i < tags.size(); ++i) {
    s += em(static_cast<Eigen::Index>(i), tags[i]);
    if (i > 0) s += trans_->value(tags[i - 1], tags[i]);
  }
  return s;
}

std::vector<int> CrfTagger::viterbi_decode(const Mat& em) const {
  Eigen::Index n = em.rows();
  int m = n_tags_;
  Mat score(n, m);
  Eigen::MatrixXi back(n, m);
  score.row(0) = start_->value.row(0) + em.row(0);
  back.row(0).setConstant(-1);
  for (Eigen::Index i = 1; i < n; ++i) {
    for (int to = 0; to < m; ++to) {
      int best_from = 0;
      double best = score(i - 1, 0) + trans_->value(0, to);
      for (int from = 1; from < m; ++from) {
        double s = score(i - 1, from) + trans_->value(from, to);
        if (s > best) {  // strict: ties keep the lowest tag id
          best = s;
          best_from = from;
        }
      }
      score(i, to) = best + em(i, to);
      back(i, to) = best_from;
    }
  }
  RowVec fin = score.row(n - 1) + stop_->value.row(0);
  int cur = 0;
  for (int t = 1; t < m; ++t)
    if (fin(t) > fin(cur)) cur = t;
  std::vector<int> tags(static_cast<size_t>(n));
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    tags[static_cast<size_t>(i)] = cur;
    if (i > 0) cur = back(i, cur);
  }
  return tags;
}

std::vector<int> CrfTagger::viterbi_decode_from_repr(const Mat& A) const {
  Mat em = A * proj_->value;
  em.rowwise() += bias_->value.row(0);
  return viterbi_decode(em);
}

std::vector<Span> tags_to_spans(const std::vector<int>& tags, const Vocabulary& vocab) {
  std::vector<Span> spans;
  int n = static_cast<int>(tags.size());
  int i = 0;
  while (i < n) {
    int tag = tags[static_cast<size_t>(i)];
    if (tag == Vocabulary::tag_o()) {
      ++i;
      continue;
    }
    int type = (tag - 1) / 2;
    // B starts a span; a dangling I starts one too (lenient repair)
    int start = i;
    ++i;
    while (i < n && tags[static_cast<size_t>(i)] == vocab.tag_i(type)) ++i;
    spans.push_back({start, i - 1, type});
  }
  return spans;
}

}  // namespace tdre

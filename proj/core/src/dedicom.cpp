#include "tdre/dedicom.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <map>

namespace tdre {

DedicomExtractor::DedicomExtractor(ParamStore& store, int d_h, int n_relations, Rng& rng,
                                   const std::string& prefix)
    : n_rel_(n_relations) {
  d_ = &store.add(prefix + ".d", n_relations, d_h);
  h_ = &store.add(prefix + ".h", d_h, d_h);
  // diagonals start near 1 so early slices are not uniformly damped
  init_uniform(*d_, rng, 0.9, 1.1);
  init_glorot(*h_, rng);
}

std::vector<std::optional<VarId>> DedicomExtractor::score_slices(
    Graph& g, VarId A, const std::vector<uint8_t>& P) const {
  if (static_cast<int>(P.size()) != n_rel_)
    throw ValidationError("mask length " + std::to_string(P.size()) + " != K=" +
                          std::to_string(n_rel_));
  std::vector<std::optional<VarId>> out(static_cast<size_t>(n_rel_));
  VarId d = -1, h = -1;
  for (int k = 0; k < n_rel_; ++k) {
    if (!P[static_cast<size_t>(k)]) continue;  // pruned, never computed
    if (d < 0) {
      d = g.param(*d_);
      h = g.param(*h_);
    }
    VarId dk = g.rows(d, k, 1);
    VarId scaled = g.col_scale(A, dk);  // A diag(D_k), shared by both sides
    out[static_cast<size_t>(k)] = g.matmul(g.matmul(scaled, h), g.transpose(scaled));
  }
  return out;
}

VarId DedicomExtractor::extraction_loss(Graph& g,
                                        const std::vector<std::optional<VarId>>& slices,
                                        const TripletTensor& gold,
                                        const std::vector<uint8_t>& p_train) const {
  assert(static_cast<int>(p_train.size()) == n_rel_);
  std::vector<VarId> terms;
  long cells = 0;
  for (int k = 0; k < n_rel_; ++k) {
    if (!p_train[static_cast<size_t>(k)]) continue;
    const auto& s = slices[static_cast<size_t>(k)];
    if (!s) continue;
    Mat target = gold.slice(k);
    cells += static_cast<long>(target.size());
    terms.push_back(g.bce_with_logits_sum(*s, g.input(std::move(target)), positive_weight_));
  }
  if (terms.empty()) {
    log_warn("extraction loss: all relation slices masked; contributing 0");
    return g.input(Mat::Zero(1, 1));
  }
  VarId total = terms[0];
  for (size_t i = 1; i < terms.size(); ++i) total = g.add(total, terms[i]);
  return g.scalar_mul(total, 1.0 / static_cast<double>(cells));
}

Mat DedicomExtractor::mask_core(const Mat& D, const std::vector<uint8_t>& P) {
  if (static_cast<Eigen::Index>(P.size()) != D.rows())
    throw ValidationError("mask length " + std::to_string(P.size()) +
                          " != number of D rows " + std::to_string(D.rows()));
  Mat out = D;
  for (Eigen::Index k = 0; k < D.rows(); ++k)
    if (!P[static_cast<size_t>(k)]) out.row(k).setZero();
  return out;
}

TripletScoreTensor DedicomExtractor::score_triplets(const Mat& A, const Mat& D, const Mat& H,
                                                    const std::vector<uint8_t>& P) {
  if (A.cols() != D.cols() || H.rows() != A.cols() || H.cols() != A.cols())
    throw ValidationError("dimension mismatch between A, D, H");
  if (static_cast<Eigen::Index>(P.size()) != D.rows())
    throw ValidationError("mask length != K");
  Eigen::Index n = A.rows();
  TripletScoreTensor out;
  out.mask = P;
  out.slices.resize(P.size());
  for (Eigen::Index k = 0; k < D.rows(); ++k) {
    if (!P[static_cast<size_t>(k)]) {
      out.slices[static_cast<size_t>(k)] = Mat::Zero(n, n);  // exactly zero, never computed
      continue;
    }
    Mat scaled = A.array().rowwise() * D.row(k).array();
    out.slices[static_cast<size_t>(k)] = scaled * H * scaled.transpose();
  }
  return out;
}

TripletScoreTensor DedicomExtractor::score_triplets(const Mat& A,
                                                    const std::vector<uint8_t>& P) const {
  return score_triplets(A, d_->value, h_->value, P);
}

namespace {
inline double sigma(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}
}  // namespace

double DedicomExtractor::extraction_loss_value(const TripletScoreTensor& scores,
                                               const TripletTensor& gold,
                                               const std::vector<uint8_t>& p_train,
                                               double positive_weight) {
  double total = 0;
  long cells = 0;
  for (size_t k = 0; k < p_train.size(); ++k) {
    if (!p_train[k]) continue;
    const Mat& x = scores.slices[k];
    Mat y = gold.slice(static_cast<int>(k));
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        total += positive_weight * y(i, j) * softplus(-x(i, j)) +
                 (1.0 - y(i, j)) * softplus(x(i, j));
    cells += static_cast<long>(x.size());
  }
  if (cells == 0) {
    log_warn("extraction loss: all relation slices masked; contributing 0");
    return 0.0;
  }
  return total / static_cast<double>(cells);
}

std::vector<DecodedTriplet> decode_triplets(const TripletScoreTensor& scores, double gamma2,
                                            const std::vector<Span>& spans) {
  // tail word -> chosen span (longest, then earliest start)
  std::map<int, Span> by_tail;
  for (const auto& s : spans) {
    auto it = by_tail.find(s.end);
    if (it == by_tail.end()) {
      by_tail[s.end] = s;
    } else {
      const Span& have = it->second;
      int lh = have.end - have.start, ls = s.end - s.start;
      if (ls > lh || (ls == lh && s.start < have.start)) it->second = s;
    }
  }
  std::vector<DecodedTriplet> out;
  for (size_t k = 0; k < scores.slices.size(); ++k) {
    if (!scores.mask[k]) continue;  // pruned slices cannot fire
    const Mat& x = scores.slices[k];
    if (x.size() == 0) continue;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      auto hi = by_tail.find(static_cast<int>(i));
      if (hi == by_tail.end()) continue;
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (sigma(x(i, j)) < gamma2) continue;
        auto ti = by_tail.find(static_cast<int>(j));
        if (ti == by_tail.end()) continue;
        if (hi->second == ti->second) continue;  // self pair
        out.push_back({hi->second, static_cast<int>(k), ti->second});
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace tdre

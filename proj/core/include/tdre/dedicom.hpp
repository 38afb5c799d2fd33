#pragma once

#include "tdre/corpus.hpp"
#include "tdre/graph.hpp"
#include "tdre/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tdre {

/// Pre-sigmoid score slices plus the mask they were produced under. Masked
/// slices are exact zero matrices and never fire during decoding.
struct TripletScoreTensor {
  std::vector<Mat> slices;
  std::vector<uint8_t> mask;
};

/// Masked DEDICOM triplet scorer. Each relation slice is
///   X'_k = A diag(D_k) H diag(D_k) A^T,
/// with D_k zeroed for relation types the classifier did not predict; masked
/// slices are skipped entirely, not just zeroed after the fact.
class DedicomExtractor {
 public:
  DedicomExtractor(ParamStore& store, int d_h, int n_relations, Rng& rng,
                   const std::string& prefix = "dedicom");

  int n_relations() const { return n_rel_; }

  /// Tape nodes for the unmasked slices; nullopt marks a masked (exact-zero)
  /// slice whose computation was pruned.
  std::vector<std::optional<VarId>> score_slices(Graph& g, VarId A,
                                                 const std::vector<uint8_t>& P) const;

  /// Mean-reduced binary cross-entropy between sigma(X') and the gold tensor
  /// over unmasked slices. All slices masked yields 0 with a warning.
  VarId extraction_loss(Graph& g, const std::vector<std::optional<VarId>>& slices,
                        const TripletTensor& gold, const std::vector<uint8_t>& p_train) const;

  // ---- value-level surface (tests, inference) ----
  /// D rows with masked relations zeroed: D'_k = P_k ? D_k : 0.
  static Mat mask_core(const Mat& D, const std::vector<uint8_t>& P);

  /// Pre-sigmoid score slices; masked slices are exact zero matrices.
  static TripletScoreTensor score_triplets(const Mat& A, const Mat& D, const Mat& H,
                                           const std::vector<uint8_t>& P);
  TripletScoreTensor score_triplets(const Mat& A, const std::vector<uint8_t>& P) const;

  static double extraction_loss_value(const TripletScoreTensor& scores,
                                      const TripletTensor& gold,
                                      const std::vector<uint8_t>& p_train,
                                      double positive_weight = 1.0);

  const Mat& core_diagonals() const { return d_->value; }  // K x d_h
  const Mat& interaction() const { return h_->value; }     // d_h x d_h
  void set_positive_weight(double w) { positive_weight_ = w; }
  double positive_weight() const { return positive_weight_; }

 private:
  int n_rel_;
  double positive_weight_ = 1.0;
  Parameter* d_;  // K x d_h, row k = diagonal of D_k
  Parameter* h_;  // d_h x d_h
};

/// Word-pair hits to entity-level triplets: a cell (i, j, k) with
/// sigma(X'_ijk) >= gamma2 fires iff some span ends at i and some span ends
/// at j. When several spans share a tail word the longest wins (ties by
/// earliest start). Self-pairs with identical spans are suppressed and cells
/// in masked slices never fire.
std::vector<DecodedTriplet> decode_triplets(const TripletScoreTensor& scores, double gamma2,
                                            const std::vector<Span>& spans);

}  // namespace tdre

#pragma once

#include "tdre/corpus.hpp"
#include "tdre/graph.hpp"
#include "tdre/types.hpp"

#include <string>
#include <vector>

namespace tdre {

/// Linear-chain CRF over the encoder representation. Emissions are a learned
/// projection of A; transitions plus start/stop scores are free parameters.
class CrfTagger {
 public:
  CrfTagger(ParamStore& store, int d_h, int n_tags, Rng& rng, const std::string& prefix = "crf");

  int n_tags() const { return n_tags_; }

  /// Emission scores, n x m.
  VarId emissions(Graph& g, VarId A) const;

  /// Exact negative log-likelihood -score(gold) + log Z, as a tape node.
  VarId ner_loss(Graph& g, VarId emissions, const std::vector<int>& gold_tags) const;

  /// Value-level convenience: builds a throwaway tape.
  double ner_loss(const Mat& A, const std::vector<int>& gold_tags) const;

  /// Log-partition over all m^n sequences for fixed emission scores.
  double log_partition(const Mat& emission_values) const;

  /// Argmax tag sequence; ties broken toward the lowest tag id.
  std::vector<int> viterbi_decode(const Mat& emission_values) const;
  std::vector<int> viterbi_decode_from_repr(const Mat& A) const;

  double sequence_score(const Mat& emission_values, const std::vector<int>& tags) const;

  const Mat& transitions() const { return trans_->value; }
  const Mat& start_scores() const { return start_->value; }
  const Mat& stop_scores() const { return stop_->value; }

 private:
  int n_tags_;
  Parameter* proj_;   // d_h x m
  Parameter* bias_;   // 1 x m
  Parameter* trans_;  // m x m, (from, to)
  Parameter* start_;  // 1 x m
  Parameter* stop_;   // 1 x m
};

/// Spans from BIO tags with lenient repair: an I without a matching B opens a
/// new span.
std::vector<Span> tags_to_spans(const std::vector<int>& tags, const Vocabulary& vocab);

}  // namespace tdre

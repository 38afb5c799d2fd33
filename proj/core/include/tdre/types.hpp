#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace tdre {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

/// Typed entity span over token indices; `end` is inclusive.
struct Span {
  int start = 0;
  int end = 0;
  int type = 0;

  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

/// Gold triplet referencing entity indices of its Example.
struct TripletRef {
  int head = 0;      // index into Example::entities
  int relation = 0;  // relation-type id in [0, K)
  int tail = 0;

  friend bool operator==(const TripletRef&, const TripletRef&) = default;
  friend auto operator<=>(const TripletRef&, const TripletRef&) = default;
};

/// Decoded triplet with resolved spans.
struct DecodedTriplet {
  Span head;
  int relation = 0;
  Span tail;

  friend bool operator==(const DecodedTriplet&, const DecodedTriplet&) = default;
  friend auto operator<=>(const DecodedTriplet&, const DecodedTriplet&) = default;
};

/// One sentence with its supervision; the unit the corpus loaders produce.
struct Example {
  std::vector<std::string> tokens;
  std::vector<Span> entities;
  std::vector<TripletRef> triplets;
};

/// Model output for one sentence.
struct DecodedOutput {
  std::vector<Span> entities;
  std::vector<uint8_t> relation_set;  // P in {0,1}^K
  std::vector<DecodedTriplet> triplets;
};

}  // namespace tdre

#pragma once

#include "tdre/types.hpp"
#include "tdre/util.hpp"

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace tdre {

/// Named trainable matrix. `grad` accumulates across a batch and is consumed
/// by the optimizer.
struct Parameter {
  std::string name;
  int index = -1;  // position within its ParamStore
  Mat value;
  Mat grad;
};

/// Ordered registry of parameters. Iteration order is registration order,
/// which keeps optimizer updates and serialization deterministic.
class ParamStore {
 public:
  Parameter& add(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  Parameter& at(size_t i) { return *params_[i]; }
  const Parameter& at(size_t i) const { return *params_[i]; }
  size_t size() const { return params_.size(); }
  void zero_grads();
  double grad_sq_norm() const;
  size_t value_count() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, Parameter*> by_name_;
};

void init_uniform(Parameter& p, Rng& rng, double lo, double hi);
void init_glorot(Parameter& p, Rng& rng);
void init_zeros(Parameter& p);

/// Per-thread gradient accumulator aligned with a ParamStore.
class GradBuffer {
 public:
  explicit GradBuffer(const ParamStore& store) : grads_(store.size()) {}
  void add(const Parameter& p, const Mat& g, double scale);
  /// Adds the buffered gradients into Parameter::grad, in store order.
  void add_to(ParamStore& store, double scale = 1.0) const;
  void clear();

 private:
  std::vector<Mat> grads_;
};

using VarId = int;

/// Reverse-mode tape over Eigen matrices. One Graph per sentence forward;
/// cleared and reused between sentences. Not thread-safe; use one per thread.
class Graph {
 public:
  // ---- leaves ----
  VarId input(Mat v);
  VarId param(Parameter& p);
  /// Embedding-style lookup: value is the selected rows of `table`; backward
  /// scatter-adds into the parameter sink without touching unselected rows.
  VarId rows_of(Parameter& table, std::vector<int> ids);

  // ---- elementwise / broadcast ----
  VarId add(VarId a, VarId b);
  VarId sub(VarId a, VarId b);
  VarId add_rowvec(VarId m, VarId row);  // row is 1 x C, broadcast over rows
  VarId add_colvec(VarId m, VarId col);  // col is R x 1, broadcast over cols
  VarId cmul(VarId a, VarId b);
  VarId scalar_mul(VarId a, double c);
  VarId sigmoid(VarId a);
  VarId tanh_op(VarId a);

  // ---- linear algebra ----
  VarId matmul(VarId a, VarId b);
  VarId transpose(VarId a);
  /// a * diag(d); d is 1 x C.
  VarId col_scale(VarId a, VarId d);

  // ---- shape ----
  VarId rows(VarId a, Eigen::Index start, Eigen::Index count);
  VarId cols(VarId a, Eigen::Index start, Eigen::Index count);
  VarId concat_rows(const std::vector<VarId>& parts);
  VarId concat_cols(const std::vector<VarId>& parts);
  /// im2row over per-word char blocks: input is (n*block_len) x d, output is
  /// (n*(block_len-kernel+1)) x (kernel*d).
  VarId conv_windows(VarId a, Eigen::Index block_len, Eigen::Index kernel);

  // ---- reductions ----
  VarId sum_all(VarId a);                                  // 1 x 1
  VarId colwise_max(VarId a);                              // 1 x C
  VarId colwise_mean(VarId a);                             // 1 x C
  VarId rowblock_colwise_max(VarId a, Eigen::Index block); // (R/block) x C
  VarId logsumexp_cols(VarId a);                           // 1 x C
  VarId logsumexp_all(VarId a);                            // 1 x 1

  // ---- losses ----
  /// Sum over cells of the stable binary cross-entropy with logits:
  ///   pos_weight*y*softplus(-x) + (1-y)*softplus(x).
  VarId bce_with_logits_sum(VarId logits, VarId targets, double pos_weight = 1.0);

  // ---- evaluation / backprop ----
  const Mat& value(VarId id) const {
    const Node& n = nodes_[id];
    return n.alias ? *n.alias : n.owned;
  }
  double scalar(VarId id) const { return value(id)(0, 0); }
  void backward(VarId root);
  void flush_grads(GradBuffer& out, double scale = 1.0);
  void clear();
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat owned;
    const Mat* alias = nullptr;  // parameter-backed leaves point at stable storage
    Mat grad;
    bool needs_grad = false;
    std::function<void(Graph&, VarId)> back;
  };

  VarId emplace(Mat value, bool needs_grad, std::function<void(Graph&, VarId)> back);
  VarId emplace_alias(const Mat* value, bool needs_grad,
                      std::function<void(Graph&, VarId)> back);
  Mat& grad_ref(VarId id);
  bool needs(VarId id) const { return nodes_[id].needs_grad; }

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, Mat> sink_;

  friend struct GraphTestAccess;
};

/// Central finite-difference check of d(loss)/d(params) for every element of
/// every parameter in `store`. `loss_fn` must rebuild its forward pass from
/// current parameter values. Returns the worst relative error seen.
double finite_difference_check(ParamStore& store,
                               const std::function<double()>& loss_fn,
                               const std::function<void(GradBuffer&)>& grad_fn,
                               double h = 1e-5);

}  // namespace tdre

#include "tdre/graph.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace tdre {

// ---------------------------------------------------------------------------
// ParamStore

Parameter& ParamStore::add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  if (by_name_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->index = static_cast<int>(params_.size());
  p->value = Mat::Zero(rows, cols);
  p->grad = Mat::Zero(rows, cols);
  by_name_[name] = p.get();
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParamStore::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

const Parameter* ParamStore::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p->grad.setZero();
}

double ParamStore::grad_sq_norm() const {
  double s = 0;
  for (const auto& p : params_) s += p->grad.squaredNorm();
  return s;
}

size_t ParamStore::value_count() const {
  size_t n = 0;
  for (const auto& p : params_) n += static_cast<size_t>(p->value.size());
  return n;
}

void init_uniform(Parameter& p, Rng& rng, double lo, double hi) {
  for (Eigen::Index j = 0; j < p.value.cols(); ++j)
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) p.value(i, j) = uniform(rng, lo, hi);
}

void init_glorot(Parameter& p, Rng& rng) {
  double r = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
  init_uniform(p, rng, -r, r);
}

void init_zeros(Parameter& p) { p.value.setZero(); }

// ---------------------------------------------------------------------------
// GradBuffer

void GradBuffer::add(const Parameter& p, const Mat& g, double scale) {
  Mat& slot = grads_[static_cast<size_t>(p.index)];
  if (slot.size() == 0)
    slot = g * scale;
  else
    slot += g * scale;
}

void GradBuffer::add_to(ParamStore& store, double scale) const {
  for (size_t i = 0; i < grads_.size(); ++i) {
    if (grads_[i].size() != 0) store.at(i).grad += grads_[i] * scale;
  }
}

void GradBuffer::clear() {
  for (auto& g : grads_) g.resize(0, 0);
}

// ---------------------------------------------------------------------------
// Graph

VarId Graph::emplace(Mat value, bool needs_grad, std::function<void(Graph&, VarId)> back) {
  Node n;
  n.owned = std::move(value);
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<VarId>(nodes_.size() - 1);
}

VarId Graph::emplace_alias(const Mat* value, bool needs_grad,
                           std::function<void(Graph&, VarId)> back) {
  Node n;
  n.alias = value;
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<VarId>(nodes_.size() - 1);
}

Mat& Graph::grad_ref(VarId id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) {
    const Mat& v = value(id);
    n.grad = Mat::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

void Graph::clear() {
  nodes_.clear();
  sink_.clear();
}

VarId Graph::input(Mat v) { return emplace(std::move(v), false, nullptr); }

VarId Graph::param(Parameter& p) {
  Parameter* pp = &p;
  return emplace_alias(&p.value, true, [pp](Graph& g, VarId self) {
    Mat& acc = g.sink_[pp];
    if (acc.size() == 0)
      acc = g.nodes_[self].grad;
    else
      acc += g.nodes_[self].grad;
  });
}

VarId Graph::rows_of(Parameter& table, std::vector<int> ids) {
  Mat v(static_cast<Eigen::Index>(ids.size()), table.value.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    int id = ids[i];
    if (id < 0 || id >= table.value.rows())
      throw ValidationError("row id " + std::to_string(id) + " out of range for parameter " +
                            table.name);
    v.row(static_cast<Eigen::Index>(i)) = table.value.row(id);
  }
  Parameter* pp = &table;
  return emplace(std::move(v), true, [pp, ids = std::move(ids)](Graph& g, VarId self) {
    Mat& acc = g.sink_[pp];
    if (acc.size() == 0) acc = Mat::Zero(pp->value.rows(), pp->value.cols());
    const Mat& gr = g.nodes_[self].grad;
    for (size_t i = 0; i < ids.size(); ++i)
      acc.row(ids[i]) += gr.row(static_cast<Eigen::Index>(i));
  });
}

VarId Graph::add(VarId a, VarId b) {
  assert(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols());
  return emplace(value(a) + value(b), needs(a) || needs(b), [a, b](Graph& g, VarId self) {
    const Mat& gr = g.nodes_[self].grad;
    if (g.needs(a)) g.grad_ref(a) += gr;
    if (g.needs(b)) g.grad_ref(b) += gr;
  });
}

VarId Graph::sub(VarId a, VarId b) {
  assert(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols());
  return emplace(value(a) - value(b), needs(a) || needs(b), [a, b](Graph& g, VarId self) {
    const Mat& gr = g.nodes_[self].grad;
    if (g.needs(a)) g.grad_ref(a) += gr;
    if (g.needs(b)) g.grad_ref(b) -= gr;
  });
}

VarId Graph::add_rowvec(VarId m, VarId row) {
  assert(value(row).rows() == 1 && value(row).cols() == value(m).cols());
  Mat v = value(m);
  v.rowwise() += value(row).row(0);
  return emplace(std::move(v), needs(m) || needs(row), [m, row](Graph& g, VarId self) {
    const Mat& gr = g.nodes_[self].grad;
    if (g.needs(m)) g.grad_ref(m) += gr;
    if (g.needs(row)) g.grad_ref(row) += gr.colwise().sum();
  });
}

VarId Graph::add_colvec(VarId m, VarId col) {
  assert(value(col).cols() == 1 && value(col).rows() == value(m).rows());
  Mat v = value(m);
  v.colwise() += value(col).col(0);
  return emplace(std::move(v), needs(m) || needs(col), [m, col](Graph& g, VarId self) {
    const Mat& gr = g.nodes_[self].grad;
    if (g.needs(m)) g.grad_ref(m) += gr;
    if (g.needs(col)) g.grad_ref(col) += gr.rowwise().sum();
  });
}

VarId Graph::cmul(VarId a, VarId b) {
  assert(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols());
  return emplace(value(a).cwiseProduct(value(b)), needs(a) || needs(b),
                 [a, b](Graph& g, VarId self) {
                   const Mat& gr = g.nodes_[self].grad;
                   if (g.needs(a)) g.grad_ref(a) += gr.cwiseProduct(g.value(b));
                   if (g.needs(b)) g.grad_ref(b) += gr.cwiseProduct(g.value(a));
                 });
}

VarId Graph::scalar_mul(VarId a, double c) {
  return emplace(value(a) * c, needs(a), [a, c](Graph& g, VarId self) {
    if (g.needs(a)) g.grad_ref(a) += g.nodes_[self].grad * c;
  });
}

VarId Graph::sigmoid(VarId a) {
  Mat v = value(a).unaryExpr([](double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
  return emplace(std::move(v), needs(a), [a](Graph& g, VarId self) {
    if (!g.needs(a)) return;
    const Mat& s = g.value(self);
    g.grad_ref(a).array() += g.nodes_[self].grad.array() * s.array() * (1.0 - s.array());
  });
}

VarId Graph::tanh_op(VarId a) {
  Mat v = value(a).array().tanh();
  return emplace(std::move(v), needs(a), [a](Graph& g, VarId self) {
    if (!g.needs(a)) return;
    const Mat& t = g.value(self);
    g.grad_ref(a).array() += g.nodes_[self].grad.array() * (1.0 - t.array().square());
  });
}

VarId Graph::matmul(VarId a, VarId b) {
  assert(value(a).cols() == value(b).rows());
  return emplace(value(a) * value(b), needs(a) || needs(b), [a, b](Graph& g, VarId self) {
    const Mat& gr = g.nodes_[self].grad;
    if (g.needs(a)) g.grad_ref(a).noalias() += gr * g.value(b).transpose();
    if (g.needs(b)) g.grad_ref(b).noalias() += g.value(a).transpose() * gr;
  });
}

VarId Graph::transpose(VarId a) {
  return emplace(value(a).transpose(), needs(a), [a](Graph& g, VarId self) {
    if (g.needs(a)) g.grad_ref(a) += g.nodes_[self].grad.transpose();
  });
}

VarId Graph::col_scale(VarId a, VarId d) {
  assert(value(d).rows() == 1 && value(d).cols() == value(a).cols());
  Mat v = value(a).array().rowwise() * value(d).row(0).array();
  return emplace(std::move(v), needs(a) || needs(d), [a, d](Graph& g, VarId self) {
    const Mat& gr = g.nodes_[self].grad;
    if (g.needs(a)) g.grad_ref(a).array() += gr.array().rowwise() * g.value(d).row(0).array();
    if (g.needs(d)) g.grad_ref(d) += g.value(a).cwiseProduct(gr).colwise().sum();
  });
}

VarId Graph::rows(VarId a, Eigen::Index start, Eigen::Index count) {
  assert(start >= 0 && start + count <= value(a).rows());
  return emplace(value(a).middleRows(start, count), needs(a),
                 [a, start, count](Graph& g, VarId self) {
                   if (g.needs(a))
                     g.grad_ref(a).middleRows(start, count) += g.nodes_[self].grad;
                 });
}

VarId Graph::cols(VarId a, Eigen::Index start, Eigen::Index count) {
  assert(start >= 0 && start + count <= value(a).cols());
  return emplace(value(a).middleCols(start, count), needs(a),
                 [a, start, count](Graph& g, VarId self) {
                   if (g.needs(a))
                     g.grad_ref(a).middleCols(start, count) += g.nodes_[self].grad;
                 });
}

VarId Graph::concat_rows(const std::vector<VarId>& parts) {
  assert(!parts.empty());
  Eigen::Index rows = 0, cols = value(parts[0]).cols();
  bool ng = false;
  for (VarId p : parts) {
    assert(value(p).cols() == cols);
    rows += value(p).rows();
    ng = ng || needs(p);
  }
  Mat v(rows, cols);
  Eigen::Index r = 0;
  for (VarId p : parts) {
    v.middleRows(r, value(p).rows()) = value(p);
    r += value(p).rows();
  }
  return emplace(std::move(v), ng, [parts](Graph& g, VarId self) {
    const Mat& gr = g.nodes_[self].grad;
    Eigen::Index r = 0;
    for (VarId p : parts) {
      Eigen::Index pr = g.value(p).rows();
      if (g.needs(p)) g.grad_ref(p) += gr.middleRows(r, pr);
      r += pr;
    }
  });
}

VarId Graph::concat_cols(const std::vector<VarId>& parts) {
  assert(!parts.empty());
  Eigen::Index cols = 0, rows = value(parts[0]).rows();
  bool ng = false;
  for (VarId p : parts) {
    assert(value(p).rows() == rows);
    cols += value(p).cols();
    ng = ng || needs(p);
  }
  Mat v(rows, cols);
  Eigen::Index c = 0;
  for (VarId p : parts) {
    v.middleCols(c, value(p).cols()) = value(p);
    c += value(p).cols();
  }
  return emplace(std::move(v), ng, [parts](Graph& g, VarId self) {
    const Mat& gr = g.nodes_[self].grad;
    Eigen::Index c = 0;
    for (VarId p : parts) {
      Eigen::Index pc = g.value(p).cols();
      if (g.needs(p)) g.grad_ref(p) += gr.middleCols(c, pc);
      c += pc;
    }
  });
}

VarId Graph::conv_windows(VarId a, Eigen::Index block_len, Eigen::Index kernel) {
  const Mat& x = value(a);
  assert(x.rows() % block_len == 0);
  assert(kernel <= block_len);
  Eigen::Index n = x.rows() / block_len;
  Eigen::Index out_per_block = block_len - kernel + 1;
  Eigen::Index d = x.cols();
  Mat v(n * out_per_block, kernel * d);
  for (Eigen::Index w = 0; w < n; ++w)
    for (Eigen::Index t = 0; t < out_per_block; ++t)
      for (Eigen::Index k = 0; k < kernel; ++k)
        v.block(w * out_per_block + t, k * d, 1, d) = x.row(w * block_len + t + k);
  return emplace(std::move(v), needs(a), [a, block_len, kernel](Graph& g, VarId self) {
    if (!g.needs(a)) return;
    Mat& da = g.grad_ref(a);
    const Mat& gr = g.nodes_[self].grad;
    Eigen::Index n = da.rows() / block_len;
    Eigen::Index out_per_block = block_len - kernel + 1;
    Eigen::Index d = da.cols();
    for (Eigen::Index w = 0; w < n; ++w)
      for (Eigen::Index t = 0; t < out_per_block; ++t)
        for (Eigen::Index k = 0; k < kernel; ++k)
          da.row(w * block_len + t + k) += gr.block(w * out_per_block + t, k * d, 1, d);
  });
}

VarId Graph::sum_all(VarId a) {
  Mat v(1, 1);
  v(0, 0) = value(a).sum();
  return emplace(std::move(v), needs(a), [a](Graph& g, VarId self) {
    if (g.needs(a)) g.grad_ref(a).array() += g.nodes_[self].grad(0, 0);
  });
}

VarId Graph::colwise_max(VarId a) {
  const Mat& x = value(a);
  Mat v(1, x.cols());
  std::vector<Eigen::Index> arg(static_cast<size_t>(x.cols()));
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < x.rows(); ++r)
      if (x(r, c) > x(best, c)) best = r;  // first max wins ties
    arg[static_cast<size_t>(c)] = best;
    v(0, c) = x(best, c);
  }
  return emplace(std::move(v), needs(a), [a, arg = std::move(arg)](Graph& g, VarId self) {
    if (!g.needs(a)) return;
    Mat& da = g.grad_ref(a);
    const Mat& gr = g.nodes_[self].grad;
    for (Eigen::Index c = 0; c < da.cols(); ++c)
      da(arg[static_cast<size_t>(c)], c) += gr(0, c);
  });
}

VarId Graph::colwise_mean(VarId a) {
  const Mat& x = value(a);
  Mat v = x.colwise().mean();
  Eigen::Index r = x.rows();
  return emplace(std::move(v), needs(a), [a, r](Graph& g, VarId self) {
    if (!g.needs(a)) return;
    const Mat& gr = g.nodes_[self].grad;
    g.grad_ref(a).array() += (gr / static_cast<double>(r)).replicate(r, 1).array();
  });
}

VarId Graph::rowblock_colwise_max(VarId a, Eigen::Index block) {
  const Mat& x = value(a);
  assert(x.rows() % block == 0);
  Eigen::Index n = x.rows() / block;
  Mat v(n, x.cols());
  std::vector<Eigen::Index> arg(static_cast<size_t>(n * x.cols()));
  for (Eigen::Index w = 0; w < n; ++w) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      Eigen::Index best = w * block;
      for (Eigen::Index r = w * block + 1; r < (w + 1) * block; ++r)
        if (x(r, c) > x(best, c)) best = r;
      arg[static_cast<size_t>(w * x.cols() + c)] = best;
      v(w, c) = x(best, c);
    }
  }
  return emplace(std::move(v), needs(a), [a, arg = std::move(arg)](Graph& g, VarId self) {
    if (!g.needs(a)) return;
    Mat& da = g.grad_ref(a);
    const Mat& gr = g.nodes_[self].grad;
    for (Eigen::Index w = 0; w < gr.rows(); ++w)
      for (Eigen::Index c = 0; c < gr.cols(); ++c)
        da(arg[static_cast<size_t>(w * gr.cols() + c)], c) += gr(w, c);
  });
}

VarId Graph::logsumexp_cols(VarId a) {
  const Mat& x = value(a);
  Mat v(1, x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    double m = x.col(c).maxCoeff();
    v(0, c) = m + std::log((x.col(c).array() - m).exp().sum());
  }
  return emplace(std::move(v), needs(a), [a](Graph& g, VarId self) {
    if (!g.needs(a)) return;
    const Mat& x = g.value(a);
    const Mat& lse = g.value(self);
    const Mat& gr = g.nodes_[self].grad;
    Mat& da = g.grad_ref(a);
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      da.col(c).array() += gr(0, c) * (x.col(c).array() - lse(0, c)).exp();
  });
}

VarId Graph::logsumexp_all(VarId a) {
  const Mat& x = value(a);
  double m = x.maxCoeff();
  Mat v(1, 1);
  v(0, 0) = m + std::log((x.array() - m).exp().sum());
  return emplace(std::move(v), needs(a), [a](Graph& g, VarId self) {
    if (!g.needs(a)) return;
    const Mat& x = g.value(a);
    double lse = g.value(self)(0, 0);
    g.grad_ref(a).array() += g.nodes_[self].grad(0, 0) * (x.array() - lse).exp();
  });
}

namespace {
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}
inline double sigma(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
}  // namespace

VarId Graph::bce_with_logits_sum(VarId logits, VarId targets, double pos_weight) {
  const Mat& x = value(logits);
  const Mat& y = value(targets);
  assert(x.rows() == y.rows() && x.cols() == y.cols());
  double loss = 0;
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      loss += pos_weight * y(r, c) * softplus(-x(r, c)) + (1.0 - y(r, c)) * softplus(x(r, c));
  Mat v(1, 1);
  v(0, 0) = loss;
  return emplace(std::move(v), needs(logits),
                 [logits, targets, pos_weight](Graph& g, VarId self) {
                   if (!g.needs(logits)) return;
                   const Mat& x = g.value(logits);
                   const Mat& y = g.value(targets);
                   double s = g.nodes_[self].grad(0, 0);
                   Mat& dx = g.grad_ref(logits);
                   for (Eigen::Index c = 0; c < x.cols(); ++c)
                     for (Eigen::Index r = 0; r < x.rows(); ++r)
                       dx(r, c) += s * ((1.0 - y(r, c)) * sigma(x(r, c)) -
                                        pos_weight * y(r, c) * sigma(-x(r, c)));
                 });
}

void Graph::backward(VarId root) {
  assert(value(root).rows() == 1 && value(root).cols() == 1);
  grad_ref(root)(0, 0) += 1.0;
  for (VarId id = root; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.size() != 0 && n.back) n.back(*this, id);
  }
}

void Graph::flush_grads(GradBuffer& out, double scale) {
  for (auto& [p, g] : sink_) out.add(*p, g, scale);
  sink_.clear();
}

// ---------------------------------------------------------------------------

double finite_difference_check(ParamStore& store, const std::function<double()>& loss_fn,
                               const std::function<void(GradBuffer&)>& grad_fn, double h) {
  GradBuffer analytic(store);
  grad_fn(analytic);
  // materialize analytic grads into plain mats via a scratch store pass
  std::vector<Mat> got(store.size());
  for (size_t i = 0; i < store.size(); ++i) {
    store.at(i).grad.setZero();
    got[i] = Mat::Zero(store.at(i).value.rows(), store.at(i).value.cols());
  }
  analytic.add_to(store);
  for (size_t i = 0; i < store.size(); ++i) {
    got[i] = store.at(i).grad;
    store.at(i).grad.setZero();
  }

  double worst = 0;
  for (size_t i = 0; i < store.size(); ++i) {
    Parameter& p = store.at(i);
    for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
      for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
        double keep = p.value(r, c);
        p.value(r, c) = keep + h;
        double up = loss_fn();
        p.value(r, c) = keep - h;
        double down = loss_fn();
        p.value(r, c) = keep;
        double fd = (up - down) / (2 * h);
        double an = got[i](r, c);
        double err = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-2});
        worst = std::max(worst, err);
      }
    }
  }
  return worst;
}

}  // namespace tdre

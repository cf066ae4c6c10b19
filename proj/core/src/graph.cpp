// SPDX-License-Identifier: Apache-2.0
#include "shlk/graph.hpp"

#include <algorithm>
#include <cmath>

namespace shlk::graph {

namespace {

std::string shape_str(Shape s) {
  return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

std::string shape_str(const Matrix& m) { return shape_str(Shape{m.rows(), m.cols()}); }

template <class Expr>
void accumulate(Matrix& grad, const Expr& contribution) {
  if (grad.size() == 0) {
    grad = contribution;
  } else {
    grad += contribution;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ParamStore

void ParamStore::add(const std::string& name, Matrix value) {
  require(!tensors_.count(name), ErrorKind::invalid_argument, "duplicate parameter '" + name + "'");
  tensors_.emplace(name, std::move(value));
}

const Matrix& ParamStore::at(const std::string& name) const {
  auto it = tensors_.find(name);
  require(it != tensors_.end(), ErrorKind::invalid_argument, "unknown parameter '" + name + "'");
  return it->second;
}

Matrix& ParamStore::at(const std::string& name) {
  auto it = tensors_.find(name);
  require(it != tensors_.end(), ErrorKind::invalid_argument, "unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, m] : tensors_) n += static_cast<std::size_t>(m.size());
  return n;
}

bool ParamStore::all_finite() const {
  return std::all_of(tensors_.begin(), tensors_.end(),
                     [](const auto& kv) { return kv.second.allFinite(); });
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (a.tensors_.size() != b.tensors_.size()) return false;
  auto ib = b.tensors_.begin();
  for (const auto& [name, m] : a.tensors_) {
    if (name != ib->first) return false;
    if (m.rows() != ib->second.rows() || m.cols() != ib->second.cols()) return false;
    if (!(m.array() == ib->second.array()).all()) return false;
    ++ib;
  }
  return true;
}

Matrix init_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
  }
  return m;
}

std::string_view to_string(Op op) {
  switch (op) {
    case Op::parameter: return "parameter";
    case Op::input: return "input";
    case Op::constant: return "constant";
    case Op::affine: return "affine";
    case Op::tanh: return "tanh";
    case Op::sigmoid: return "sigmoid";
    case Op::elementwise_add: return "elementwise_add";
    case Op::elementwise_sub: return "elementwise_sub";
    case Op::elementwise_mul: return "elementwise_mul";
    case Op::scale: return "scale";
    case Op::concat_rows: return "concat_rows";
    case Op::slice_rows: return "slice_rows";
    case Op::gather_rows: return "gather_rows";
    case Op::mean_sq_error: return "mean_sq_error";
    case Op::soft_dtw_loss: return "soft_dtw_loss";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Graph construction

NodeId Graph::push(Node node) {
  for (NodeId p : node.parents) {
    require(p.index < nodes_.size(), ErrorKind::invalid_argument, "node refers to an unknown parent");
  }
  nodes_.push_back(std::move(node));
  evaluated_ = false;
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Graph::Node& Graph::node(NodeId id) const {
  require(id.index < nodes_.size(), ErrorKind::invalid_argument, "unknown node id");
  return nodes_[id.index];
}

NodeId Graph::parameter(const std::string& name, Shape shape) {
  if (auto it = param_nodes_.find(name); it != param_nodes_.end()) {
    require(nodes_[it->second.index].shape == shape, ErrorKind::dimension_mismatch,
            "parameter '" + name + "' used with two shapes");
    return it->second;
  }
  Node n{};
  n.op = Op::parameter;
  n.shape = shape;
  n.name = name;
  const NodeId id = push(std::move(n));
  param_nodes_.emplace(name, id);
  return id;
}

NodeId Graph::input(const std::string& name, Shape shape) {
  Node n{};
  n.op = Op::input;
  n.shape = shape;
  n.name = name;
  return push(std::move(n));
}

NodeId Graph::constant(Matrix value) {
  Node n{};
  n.op = Op::constant;
  n.shape = Shape{value.rows(), value.cols()};
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::affine(NodeId x, NodeId w, std::optional<NodeId> b) {
  const Shape sx = shape(x);
  const Shape sw = shape(w);
  require(sx.cols == sw.rows, ErrorKind::dimension_mismatch,
          "affine: input " + shape_str(sx) + " does not match weight " + shape_str(sw));
  Node n{};
  n.op = Op::affine;
  n.shape = Shape{sx.rows, sw.cols};
  n.parents = {x, w};
  if (b) {
    const Shape sb = shape(*b);
    require(sb.rows == 1 && sb.cols == sw.cols, ErrorKind::dimension_mismatch,
            "affine: bias " + shape_str(sb) + " does not match output width");
    n.parents.push_back(*b);
  }
  return push(std::move(n));
}

NodeId Graph::tanh(NodeId x) {
  Node n{};
  n.op = Op::tanh;
  n.shape = shape(x);
  n.parents = {x};
  return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId x) {
  Node n{};
  n.op = Op::sigmoid;
  n.shape = shape(x);
  n.parents = {x};
  return push(std::move(n));
}

namespace {
void require_same(Shape a, Shape b, const char* op) {
  require(a == b, ErrorKind::dimension_mismatch,
          std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) + " differ");
}
}  // namespace

NodeId Graph::add(NodeId a, NodeId b) {
  require_same(shape(a), shape(b), "elementwise_add");
  Node n{};
  n.op = Op::elementwise_add;
  n.shape = shape(a);
  n.parents = {a, b};
  return push(std::move(n));
}

NodeId Graph::sub(NodeId a, NodeId b) {
  require_same(shape(a), shape(b), "elementwise_sub");
  Node n{};
  n.op = Op::elementwise_sub;
  n.shape = shape(a);
  n.parents = {a, b};
  return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  require_same(shape(a), shape(b), "elementwise_mul");
  Node n{};
  n.op = Op::elementwise_mul;
  n.shape = shape(a);
  n.parents = {a, b};
  return push(std::move(n));
}

NodeId Graph::scale(NodeId x, double factor) {
  Node n{};
  n.op = Op::scale;
  n.shape = shape(x);
  n.parents = {x};
  n.factor = factor;
  return push(std::move(n));
}

NodeId Graph::concat_rows(std::span<const NodeId> parts) {
  require(!parts.empty(), ErrorKind::invalid_argument, "concat_rows of nothing");
  Node n{};
  n.op = Op::concat_rows;
  n.shape = Shape{0, shape(parts[0]).cols};
  for (NodeId p : parts) {
    const Shape s = shape(p);
    require(s.cols == n.shape.cols, ErrorKind::dimension_mismatch,
            "concat_rows: column counts differ");
    n.shape.rows += s.rows;
    n.parents.push_back(p);
  }
  return push(std::move(n));
}

NodeId Graph::slice_rows(NodeId x, Eigen::Index begin, Eigen::Index count) {
  const Shape s = shape(x);
  require(begin >= 0 && count >= 1 && begin + count <= s.rows, ErrorKind::dimension_mismatch,
          "slice_rows: range out of bounds for " + shape_str(s));
  Node n{};
  n.op = Op::slice_rows;
  n.shape = Shape{count, s.cols};
  n.parents = {x};
  n.index = {begin};
  return push(std::move(n));
}

NodeId Graph::gather_rows(NodeId x, std::vector<Eigen::Index> index) {
  const Shape s = shape(x);
  require(!index.empty(), ErrorKind::invalid_argument, "gather_rows with no indices");
  for (Eigen::Index k : index) {
    require(k >= 0 && k < s.rows, ErrorKind::dimension_mismatch, "gather_rows: index out of range");
  }
  Node n{};
  n.op = Op::gather_rows;
  n.shape = Shape{static_cast<Eigen::Index>(index.size()), s.cols};
  n.parents = {x};
  n.index = std::move(index);
  return push(std::move(n));
}

NodeId Graph::mean_sq_error(NodeId a, NodeId b) {
  require_same(shape(a), shape(b), "mean_sq_error");
  Node n{};
  n.op = Op::mean_sq_error;
  n.shape = Shape{1, 1};
  n.parents = {a, b};
  return push(std::move(n));
}

NodeId Graph::soft_dtw_loss(NodeId a, NodeId b, SoftDtwOptions options) {
  require(shape(a).cols == shape(b).cols, ErrorKind::dimension_mismatch,
          "soft_dtw_loss: feature dimensions differ");
  require(options.gamma > 0.0, ErrorKind::invalid_argument, "soft_dtw_loss needs gamma > 0");
  Node n{};
  n.op = Op::soft_dtw_loss;
  n.shape = Shape{1, 1};
  n.parents = {a, b};
  n.sdtw = options;
  return push(std::move(n));
}

const Matrix& Graph::value(NodeId id) const {
  const Node& n = node(id);
  require(evaluated_ || n.op == Op::constant, ErrorKind::invalid_argument,
          "graph has not been evaluated");
  return n.value;
}

double Graph::scalar(NodeId id) const {
  const Matrix& v = value(id);
  require(v.rows() == 1 && v.cols() == 1, ErrorKind::dimension_mismatch, "node is not scalar");
  return v(0, 0);
}

Shape Graph::shape(NodeId id) const { return node(id).shape; }
Op Graph::op(NodeId id) const { return node(id).op; }
std::span<const NodeId> Graph::parents(NodeId id) const { return node(id).parents; }

// ---------------------------------------------------------------------------
// Evaluation

void Graph::evaluate(Node& n, const ParamStore& params, const Bindings& bindings) {
  auto in = [&](std::size_t k) -> const Matrix& { return nodes_[n.parents[k].index].value; };
  switch (n.op) {
    case Op::parameter: {
      const Matrix& p = params.at(n.name);
      require(p.rows() == n.shape.rows && p.cols() == n.shape.cols, ErrorKind::dimension_mismatch,
              "parameter '" + n.name + "' is " + shape_str(p) + ", graph expects " +
                  shape_str(n.shape));
      n.value = p;
      break;
    }
    case Op::input: {
      auto it = bindings.find(n.name);
      require(it != bindings.end(), ErrorKind::invalid_argument, "unbound input '" + n.name + "'");
      require(it->second.rows() == n.shape.rows && it->second.cols() == n.shape.cols,
              ErrorKind::dimension_mismatch,
              "input '" + n.name + "' is " + shape_str(it->second) + ", graph expects " +
                  shape_str(n.shape));
      n.value = it->second;
      break;
    }
    case Op::constant:
      break;
    case Op::affine:
      n.value.noalias() = in(0) * in(1);
      if (n.parents.size() == 3) n.value.rowwise() += in(2).row(0);
      break;
    case Op::tanh:
      n.value = in(0).array().tanh();
      break;
    case Op::sigmoid:
      n.value = 1.0 / (1.0 + (-in(0).array()).exp());
      break;
    case Op::elementwise_add:
      n.value = in(0) + in(1);
      break;
    case Op::elementwise_sub:
      n.value = in(0) - in(1);
      break;
    case Op::elementwise_mul:
      n.value = in(0).cwiseProduct(in(1));
      break;
    case Op::scale:
      n.value = n.factor * in(0);
      break;
    case Op::concat_rows: {
      n.value.resize(n.shape.rows, n.shape.cols);
      Eigen::Index r = 0;
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        const Matrix& p = in(k);
        n.value.middleRows(r, p.rows()) = p;
        r += p.rows();
      }
      break;
    }
    case Op::slice_rows:
      n.value = in(0).middleRows(n.index[0], n.shape.rows);
      break;
    case Op::gather_rows: {
      const Matrix& x = in(0);
      n.value.resize(n.shape.rows, n.shape.cols);
      for (Eigen::Index k = 0; k < n.shape.rows; ++k) n.value.row(k) = x.row(n.index[k]);
      break;
    }
    case Op::mean_sq_error:
      n.value.resize(1, 1);
      n.value(0, 0) = (in(0) - in(1)).squaredNorm() / static_cast<double>(in(0).size());
      break;
    case Op::soft_dtw_loss: {
      n.cost_cache = align::pairwise_cost(in(0), in(1), n.sdtw.metric);
      n.sdtw_cache = align::soft_dtw(n.cost_cache, n.sdtw.gamma);
      n.value.resize(1, 1);
      n.value(0, 0) = n.sdtw_cache.value;
      break;
    }
  }
}

void Graph::forward(const ParamStore& params, const Bindings& bindings) {
  for (Node& n : nodes_) evaluate(n, params, bindings);
  evaluated_ = true;
}

void Graph::forward(const ParamStore& params, const Bindings& bindings,
                    std::span<const NodeId> order) {
  require(order.size() == nodes_.size(), ErrorKind::invalid_argument,
          "evaluation order must list every node once");
  std::vector<bool> done(nodes_.size(), false);
  for (NodeId id : order) {
    require(id.index < nodes_.size() && !done[id.index], ErrorKind::invalid_argument,
            "evaluation order repeats or names an unknown node");
    Node& n = nodes_[id.index];
    for (NodeId p : n.parents) {
      require(done[p.index], ErrorKind::invalid_argument, "evaluation order is not topological");
    }
    evaluate(n, params, bindings);
    done[id.index] = true;
  }
  evaluated_ = true;
}

// ---------------------------------------------------------------------------
// Reverse mode

void Graph::propagate(Node& n) {
  const Matrix& g = n.grad;
  auto parent = [&](std::size_t k) -> Node& { return nodes_[n.parents[k].index]; };
  auto wants = [&](std::size_t k) {
    const Op op = parent(k).op;
    return op != Op::input && op != Op::constant;
  };
  switch (n.op) {
    case Op::parameter:
    case Op::input:
    case Op::constant:
      break;
    case Op::affine: {
      Node& x = parent(0);
      Node& w = parent(1);
      if (wants(0)) accumulate(x.grad, g * w.value.transpose());
      if (wants(1)) accumulate(w.grad, x.value.transpose() * g);
      if (n.parents.size() == 3 && wants(2)) accumulate(parent(2).grad, g.colwise().sum());
      break;
    }
    case Op::tanh:
      if (wants(0)) {
        accumulate(parent(0).grad,
                   (g.array() * (1.0 - n.value.array().square())).matrix());
      }
      break;
    case Op::sigmoid:
      if (wants(0)) {
        accumulate(parent(0).grad,
                   (g.array() * n.value.array() * (1.0 - n.value.array())).matrix());
      }
      break;
    case Op::elementwise_add:
      if (wants(0)) accumulate(parent(0).grad, g);
      if (wants(1)) accumulate(parent(1).grad, g);
      break;
    case Op::elementwise_sub:
      if (wants(0)) accumulate(parent(0).grad, g);
      if (wants(1)) accumulate(parent(1).grad, -g);
      break;
    case Op::elementwise_mul: {
      const Matrix& a = parent(0).value;
      const Matrix& b = parent(1).value;
      if (wants(0)) accumulate(parent(0).grad, g.cwiseProduct(b));
      if (wants(1)) accumulate(parent(1).grad, g.cwiseProduct(a));
      break;
    }
    case Op::scale:
      if (wants(0)) accumulate(parent(0).grad, n.factor * g);
      break;
    case Op::concat_rows: {
      Eigen::Index r = 0;
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        Node& p = parent(k);
        if (wants(k)) accumulate(p.grad, g.middleRows(r, p.shape.rows));
        r += p.shape.rows;
      }
      break;
    }
    case Op::slice_rows:
      if (wants(0)) {
        Node& p = parent(0);
        if (p.grad.size() == 0) p.grad = Matrix::Zero(p.shape.rows, p.shape.cols);
        p.grad.middleRows(n.index[0], n.shape.rows) += g;
      }
      break;
    case Op::gather_rows:
      if (wants(0)) {
        Node& p = parent(0);
        if (p.grad.size() == 0) p.grad = Matrix::Zero(p.shape.rows, p.shape.cols);
        for (Eigen::Index k = 0; k < n.shape.rows; ++k) p.grad.row(n.index[k]) += g.row(k);
      }
      break;
    case Op::mean_sq_error: {
      const double coef = 2.0 * g(0, 0) / static_cast<double>(parent(0).value.size());
      const Matrix diff = parent(0).value - parent(1).value;
      if (wants(0)) accumulate(parent(0).grad, coef * diff);
      if (wants(1)) accumulate(parent(1).grad, -coef * diff);
      break;
    }
    case Op::soft_dtw_loss: {
      const Matrix& a = parent(0).value;
      const Matrix& b = parent(1).value;
      const Matrix e = align::soft_dtw_grad(n.sdtw_cache, n.cost_cache);
      auto [da, db] = align::cost_jacobian_apply(a, b, e, n.sdtw.metric);
      if (wants(0)) accumulate(parent(0).grad, g(0, 0) * da);
      if (wants(1)) accumulate(parent(1).grad, g(0, 0) * db);
      break;
    }
  }
}

Gradients Graph::backward(NodeId loss) {
  require(evaluated_, ErrorKind::invalid_argument, "backward before forward");
  require(shape(loss) == Shape{1, 1}, ErrorKind::dimension_mismatch,
          "backward needs a scalar loss, got " + shape_str(shape(loss)));
  for (Node& n : nodes_) n.grad.resize(0, 0);
  nodes_[loss.index].grad = Matrix::Ones(1, 1);
  for (std::size_t k = loss.index + 1; k-- > 0;) {
    Node& n = nodes_[k];
    if (n.grad.size() == 0) continue;
    propagate(n);
  }
  Gradients out;
  for (const auto& [name, id] : param_nodes_) {
    const Node& n = nodes_[id.index];
    out.emplace(name, n.grad.size() == 0 ? Matrix::Zero(n.shape.rows, n.shape.cols) : n.grad);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Layers

void GruCell::init(ParamStore& params, std::mt19937_64& rng) const {
  // PyTorch-style: every GRU tensor uses 1/sqrt(hidden_dim).
  const std::size_t fan = hidden_dim;
  for (const char* w : {"Wz", "Wr", "Wh"}) params.add(name(w), init_uniform(input_dim, hidden_dim, fan, rng));
  for (const char* u : {"Uz", "Ur", "Uh"}) params.add(name(u), init_uniform(hidden_dim, hidden_dim, fan, rng));
  for (const char* b : {"bz", "br", "bh"}) params.add(name(b), init_uniform(1, hidden_dim, fan, rng));
}

GruInputs gru_project(Graph& g, const GruCell& cell, NodeId x) {
  const Shape w{static_cast<Eigen::Index>(cell.input_dim), static_cast<Eigen::Index>(cell.hidden_dim)};
  const Shape b{1, static_cast<Eigen::Index>(cell.hidden_dim)};
  return GruInputs{
      g.affine(x, g.parameter(cell.name("Wz"), w), g.parameter(cell.name("bz"), b)),
      g.affine(x, g.parameter(cell.name("Wr"), w), g.parameter(cell.name("br"), b)),
      g.affine(x, g.parameter(cell.name("Wh"), w), g.parameter(cell.name("bh"), b)),
  };
}

NodeId gru_step(Graph& g, const GruCell& cell, const GruInputs& x, NodeId h) {
  const Shape u{static_cast<Eigen::Index>(cell.hidden_dim), static_cast<Eigen::Index>(cell.hidden_dim)};
  const NodeId z = g.sigmoid(g.add(x.z, g.affine(h, g.parameter(cell.name("Uz"), u))));
  const NodeId r = g.sigmoid(g.add(x.r, g.affine(h, g.parameter(cell.name("Ur"), u))));
  const NodeId cand =
      g.tanh(g.add(x.h, g.affine(g.mul(r, h), g.parameter(cell.name("Uh"), u))));
  return g.add(h, g.mul(z, g.sub(cand, h)));
}

NodeId gru_unroll(Graph& g, const GruCell& cell, NodeId inputs, NodeId h0) {
  const Shape si = g.shape(inputs);
  require(si.cols == static_cast<Eigen::Index>(cell.input_dim), ErrorKind::dimension_mismatch,
          "gru_unroll: input width " + std::to_string(si.cols) + " does not match cell input " +
              std::to_string(cell.input_dim));
  require(g.shape(h0) == Shape{1, static_cast<Eigen::Index>(cell.hidden_dim)},
          ErrorKind::dimension_mismatch, "gru_unroll: h0 must be 1 x hidden_dim");
  const GruInputs proj = gru_project(g, cell, inputs);
  std::vector<NodeId> states;
  states.reserve(static_cast<std::size_t>(si.rows));
  NodeId h = h0;
  for (Eigen::Index t = 0; t < si.rows; ++t) {
    const GruInputs step{g.slice_rows(proj.z, t, 1), g.slice_rows(proj.r, t, 1),
                         g.slice_rows(proj.h, t, 1)};
    h = gru_step(g, cell, step, h);
    states.push_back(h);
  }
  return g.concat_rows(states);
}

std::vector<NodeId> gru_unroll_constant(Graph& g, const GruCell& cell, NodeId input, NodeId h0,
                                        std::size_t steps) {
  require(g.shape(input).cols == static_cast<Eigen::Index>(cell.input_dim),
          ErrorKind::dimension_mismatch, "gru_unroll_constant: input width mismatch");
  require(g.shape(h0) == Shape{g.shape(input).rows, static_cast<Eigen::Index>(cell.hidden_dim)},
          ErrorKind::dimension_mismatch, "gru_unroll_constant: h0 shape mismatch");
  const GruInputs proj = gru_project(g, cell, input);
  std::vector<NodeId> states;
  states.reserve(steps);
  NodeId h = h0;
  for (std::size_t s = 0; s < steps; ++s) {
    h = gru_step(g, cell, proj, h);
    states.push_back(h);
  }
  return states;
}

void Dense::init(ParamStore& params, std::mt19937_64& rng) const {
  params.add(prefix + ".W", init_uniform(input_dim, output_dim, input_dim, rng));
  params.add(prefix + ".b", init_uniform(1, output_dim, input_dim, rng));
}

NodeId Dense::apply(Graph& g, NodeId x) const {
  return g.affine(x,
                  g.parameter(prefix + ".W", Shape{static_cast<Eigen::Index>(input_dim),
                                                   static_cast<Eigen::Index>(output_dim)}),
                  g.parameter(prefix + ".b", Shape{1, static_cast<Eigen::Index>(output_dim)}));
}

// ---------------------------------------------------------------------------
// Optimizer

void adam_step(AdamState& state, ParamStore& params, const Gradients& grads) {
  for (const auto& [name, g] : grads) {
    const Matrix& p = params.at(name);
    require(p.rows() == g.rows() && p.cols() == g.cols(), ErrorKind::dimension_mismatch,
            "adam_step: gradient for '" + name + "' is " + shape_str(g) + ", parameter is " +
                shape_str(p));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (const auto& [name, g] : grads) {
    Matrix& p = params.at(name);
    auto [mit, m_new] = state.first_moment.try_emplace(name, Matrix::Zero(p.rows(), p.cols()));
    auto [vit, v_new] = state.second_moment.try_emplace(name, Matrix::Zero(p.rows(), p.cols()));
    Matrix& m = mit->second;
    Matrix& v = vit->second;
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    p.array() -= state.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  }
}

double clip_global_norm(Gradients& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [_, g] : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& [_, g] : grads) g *= f;
  }
  return norm;
}

}  // namespace shlk::graph

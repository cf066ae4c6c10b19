// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "shlk/align.hpp"
#include "shlk/common.hpp"

namespace shlk::graph {

// Named parameter tensors. Ordered by name so iteration (init, Adam, checkpoints)
// is deterministic.
class ParamStore {
 public:
  void add(const std::string& name, Matrix value);
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  const Matrix& at(const std::string& name) const;
  Matrix& at(const std::string& name);
  std::size_t size() const noexcept { return tensors_.size(); }
  std::size_t scalar_count() const;
  bool all_finite() const;

  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }
  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }

  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  std::map<std::string, Matrix> tensors_;
};

/// Gradients keyed like the ParamStore they belong to.
using Gradients = std::map<std::string, Matrix>;

/// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initializer.
Matrix init_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, std::mt19937_64& rng);

enum class Op : std::uint8_t {
  parameter,
  input,
  constant,
  affine,
  tanh,
  sigmoid,
  elementwise_add,
  elementwise_sub,
  elementwise_mul,
  scale,
  concat_rows,
  slice_rows,
  gather_rows,
  mean_sq_error,
  soft_dtw_loss,
};

std::string_view to_string(Op op);

struct NodeId {
  std::uint32_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

struct Shape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  friend bool operator==(Shape, Shape) = default;
};

struct SoftDtwOptions {
  double gamma = 1.0;
  align::Metric metric = align::Metric::euclidean;
};

/// Input values bound by name for one forward pass.
using Bindings = std::map<std::string, Matrix>;

// A static computation graph over row-major matrices. Nodes are created in
// topological order; forward() evaluates, backward() runs reverse mode from a
// scalar loss. Shapes are checked at construction time.
class Graph {
 public:
  NodeId parameter(const std::string& name, Shape shape);
  NodeId input(const std::string& name, Shape shape);
  NodeId constant(Matrix value);

  /// x * w (+ b broadcast over rows). x: B x in, w: in x out, b: 1 x out.
  NodeId affine(NodeId x, NodeId w, std::optional<NodeId> b = std::nullopt);
  NodeId tanh(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId x, double factor);
  NodeId concat_rows(std::span<const NodeId> parts);
  NodeId slice_rows(NodeId x, Eigen::Index begin, Eigen::Index count);
  /// Output row k is input row index[k]; indices may repeat.
  NodeId gather_rows(NodeId x, std::vector<Eigen::Index> index);
  /// Mean of squared entry differences (1 x 1).
  NodeId mean_sq_error(NodeId a, NodeId b);
  /// soft-DTW value between the row sequences of a and b (1 x 1).
  NodeId soft_dtw_loss(NodeId a, NodeId b, SoftDtwOptions options = {});

  void forward(const ParamStore& params, const Bindings& bindings = {});
  /// Evaluates in a caller-supplied order, which must be topological and complete.
  void forward(const ParamStore& params, const Bindings& bindings, std::span<const NodeId> order);

  /// Reverse mode from a 1 x 1 node; accumulates into one gradient per parameter name.
  /// Parameters the loss does not depend on get an exact zero gradient.
  Gradients backward(NodeId loss);

  const Matrix& value(NodeId id) const;
  double scalar(NodeId id) const;
  Shape shape(NodeId id) const;
  Op op(NodeId id) const;
  std::span<const NodeId> parents(NodeId id) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  bool evaluated() const noexcept { return evaluated_; }

 private:
  struct Node {
    Op op;
    Shape shape;
    std::vector<NodeId> parents;
    std::string name;                    // parameter / input
    std::vector<Eigen::Index> index;     // gather_rows; slice begin at [0]
    double factor = 1.0;                 // scale
    SoftDtwOptions sdtw;                 // soft_dtw_loss
    Matrix value;
    Matrix grad;
    align::SoftDtwResult sdtw_cache;
    align::CostMatrix cost_cache;
  };

  NodeId push(Node node);
  const Node& node(NodeId id) const;
  void evaluate(Node& n, const ParamStore& params, const Bindings& bindings);
  void propagate(Node& n);

  std::vector<Node> nodes_;
  std::map<std::string, NodeId> param_nodes_;
  bool evaluated_ = false;
};

// Gated recurrent unit with separate update / reset / candidate weights:
//   z  = sigmoid(x Wz + h Uz + bz)
//   r  = sigmoid(x Wr + h Ur + br)
//   h~ = tanh(x Wh + (r * h) Uh + bh)
//   h' = h + z * (h~ - h)
struct GruCell {
  std::string prefix;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  void init(ParamStore& params, std::mt19937_64& rng) const;
  std::string name(const char* tensor) const { return prefix + "." + tensor; }
};

/// Precomputed input projections for one GRU step (or a block of steps).
struct GruInputs {
  NodeId z;
  NodeId r;
  NodeId h;
};

GruInputs gru_project(Graph& g, const GruCell& cell, NodeId x);
NodeId gru_step(Graph& g, const GruCell& cell, const GruInputs& x, NodeId h);

/// Runs the cell over the rows of `inputs` (T x input_dim) from h0 (1 x hidden).
/// Returns the T hidden states as rows of one T x hidden node.
NodeId gru_unroll(Graph& g, const GruCell& cell, NodeId inputs, NodeId h0);

/// Runs `steps` steps feeding the same input block (B x input_dim) every step.
/// Returns the B x hidden state after each step.
std::vector<NodeId> gru_unroll_constant(Graph& g, const GruCell& cell, NodeId input, NodeId h0,
                                        std::size_t steps);

/// Dense layer parameters: prefix.W (in x out) and prefix.b (1 x out).
struct Dense {
  std::string prefix;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;

  void init(ParamStore& params, std::mt19937_64& rng) const;
  NodeId apply(Graph& g, NodeId x) const;
};

struct AdamState {
  std::uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::map<std::string, Matrix> first_moment;
  std::map<std::string, Matrix> second_moment;
};

/// One bias-corrected Adam update of every parameter with a gradient entry.
void adam_step(AdamState& state, ParamStore& params, const Gradients& grads);

/// Rescales `grads` so their global L2 norm is at most max_norm. Returns the pre-clip norm.
double clip_global_norm(Gradients& grads, double max_norm);

/// Little-endian "SHLKCKPT" checkpoint: per tensor name, shape and float32 payload.
void save_checkpoint(const std::string& path, const ParamStore& params);
ParamStore load_checkpoint(const std::string& path);
std::vector<std::uint8_t> encode_checkpoint(const ParamStore& params);
ParamStore decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Rounds every parameter to float32, matching what a checkpoint round trip stores.
void quantize_to_float32(ParamStore& params);

}  // namespace shlk::graph

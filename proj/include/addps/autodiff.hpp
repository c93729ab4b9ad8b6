#pragma once

#include <functional>
#include <vector>

#include "addps/numerics.hpp"

namespace addps {

using NodeId = int;

/// External primitive plugged into the tape: a forward map together with its
/// vector-Jacobian product. Used for score functions whose derivative is
/// supplied analytically rather than recorded op-by-op.
class CustomVjp {
 public:
  virtual ~CustomVjp() = default;
  virtual Vec forward(const Vec& x) const = 0;
  virtual Vec vjp(const Vec& x, const Vec& cotangent) const = 0;
};

/// Tape-based reverse-mode differentiation over a fixed primitive set:
/// matrix-vector product (constant or differentiable matrix), vector add/sub,
/// scaling by a constant or by a recorded scalar, elementwise tanh and square,
/// sum, squared L2 norm, and scalar power (covers the 1/sqrt needed by the
/// power-normalization layer). Evaluation is eager; node inputs may only
/// reference earlier nodes.
class Tape {
 public:
  NodeId input(Vec value);
  NodeId constant(Vec value);

  NodeId matvec(const Matrix& w, NodeId x);  // w must outlive the tape
  NodeId matvec_node(NodeId w_entries, std::size_t rows, std::size_t cols, NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId scale(NodeId x, double c);
  NodeId scale_by(NodeId scalar, NodeId x);  // scalar is a length-1 node
  NodeId tanh(NodeId x);
  NodeId square(NodeId x);
  NodeId sum(NodeId x);
  NodeId squared_norm(NodeId x);
  NodeId pow_scalar(NodeId x, double exponent);  // length-1 node
  NodeId custom(const CustomVjp& hook, NodeId x);  // hook must outlive the tape

  const Vec& value(NodeId id) const;
  double scalar_value(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  /// Reverse pass seeded at a scalar output. Raises NonFiniteForward if any
  /// recorded value is non-finite.
  void backward(NodeId output);
  const Vec& adjoint(NodeId id) const;

  /// Clears all nodes but keeps allocated capacity (hot-loop reuse).
  void reset();

 private:
  enum class Op {
    Input,
    Constant,
    MatVecConst,
    MatVecNode,
    Add,
    Sub,
    ScaleConst,
    ScaleBy,
    Tanh,
    Square,
    Sum,
    SquaredNorm,
    PowScalar,
    Custom,
  };

  struct Node {
    Op op;
    NodeId a = -1, b = -1;
    double c = 0.0;                   // scale factor or exponent
    std::size_t rows = 0, cols = 0;   // matvec_node shape
    const Matrix* w = nullptr;        // matvec constant matrix
    const CustomVjp* hook = nullptr;  // custom primitive
    Vec value;
  };

  NodeId push(Node n);
  const Vec& val(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  void check_id(NodeId id) const;

  std::vector<Node> nodes_;
  std::vector<Vec> adjoints_;
};

/// Gradient of a recorded scalar function at x: builds the graph via `record`
/// (which receives the tape and the input node) and runs the reverse pass.
Vec gradient(const std::function<NodeId(Tape&, NodeId)>& record, const Vec& x);

}  // namespace addps

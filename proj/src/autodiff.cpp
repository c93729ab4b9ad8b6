#include "addps/autodiff.hpp"

#include <cmath>
#include <string>

namespace addps {

void Tape::check_id(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
    raise(Errc::UnsupportedPrimitive, "node id " + std::to_string(id) + " out of range");
}

NodeId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::input(Vec value) {
  Node n{Op::Input};
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Tape::constant(Vec value) {
  Node n{Op::Constant};
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Tape::matvec(const Matrix& w, NodeId x) {
  check_id(x);
  Node n{Op::MatVecConst};
  n.a = x;
  n.w = &w;
  n.value = addps::matvec(w, val(x));
  return push(std::move(n));
}

NodeId Tape::matvec_node(NodeId w_entries, std::size_t rows, std::size_t cols, NodeId x) {
  check_id(w_entries);
  check_id(x);
  const Vec& we = val(w_entries);
  const Vec& xv = val(x);
  if (we.size() != rows * cols || xv.size() != cols)
    raise(Errc::DimensionMismatch, "matvec_node shape mismatch");
  Node n{Op::MatVecNode};
  n.a = w_entries;
  n.b = x;
  n.rows = rows;
  n.cols = cols;
  n.value.assign(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    const double* row = we.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) s += row[j] * xv[j];
    n.value[i] = s;
  }
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  Node n{Op::Add};
  n.a = a;
  n.b = b;
  n.value = vec_add(val(a), val(b));
  return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  Node n{Op::Sub};
  n.a = a;
  n.b = b;
  n.value = vec_sub(val(a), val(b));
  return push(std::move(n));
}

NodeId Tape::scale(NodeId x, double c) {
  check_id(x);
  Node n{Op::ScaleConst};
  n.a = x;
  n.c = c;
  n.value = vec_scale(val(x), c);
  return push(std::move(n));
}

NodeId Tape::scale_by(NodeId scalar, NodeId x) {
  check_id(scalar);
  check_id(x);
  if (val(scalar).size() != 1)
    raise(Errc::DimensionMismatch, "scale_by expects a length-1 scalar node");
  Node n{Op::ScaleBy};
  n.a = scalar;
  n.b = x;
  n.value = vec_scale(val(x), val(scalar)[0]);
  return push(std::move(n));
}

NodeId Tape::tanh(NodeId x) {
  check_id(x);
  Node n{Op::Tanh};
  n.a = x;
  n.value = val(x);
  for (auto& v : n.value) v = std::tanh(v);
  return push(std::move(n));
}

NodeId Tape::square(NodeId x) {
  check_id(x);
  Node n{Op::Square};
  n.a = x;
  n.value = val(x);
  for (auto& v : n.value) v = v * v;
  return push(std::move(n));
}

NodeId Tape::sum(NodeId x) {
  check_id(x);
  Node n{Op::Sum};
  n.a = x;
  double s = 0.0;
  for (double v : val(x)) s += v;
  n.value = {s};
  return push(std::move(n));
}

NodeId Tape::squared_norm(NodeId x) {
  check_id(x);
  Node n{Op::SquaredNorm};
  n.a = x;
  n.value = {vec_squared_norm(val(x))};
  return push(std::move(n));
}

NodeId Tape::pow_scalar(NodeId x, double exponent) {
  check_id(x);
  if (val(x).size() != 1)
    raise(Errc::DimensionMismatch, "pow_scalar expects a length-1 node");
  Node n{Op::PowScalar};
  n.a = x;
  n.c = exponent;
  n.value = {std::pow(val(x)[0], exponent)};
  return push(std::move(n));
}

NodeId Tape::custom(const CustomVjp& hook, NodeId x) {
  check_id(x);
  Node n{Op::Custom};
  n.a = x;
  n.hook = &hook;
  n.value = hook.forward(val(x));
  return push(std::move(n));
}

const Vec& Tape::value(NodeId id) const {
  check_id(id);
  return val(id);
}

double Tape::scalar_value(NodeId id) const {
  check_id(id);
  if (val(id).size() != 1) raise(Errc::DimensionMismatch, "node is not scalar");
  return val(id)[0];
}

const Vec& Tape::adjoint(NodeId id) const {
  check_id(id);
  return adjoints_[static_cast<std::size_t>(id)];
}

void Tape::reset() {
  nodes_.clear();
  adjoints_.clear();
}

void Tape::backward(NodeId output) {
  check_id(output);
  if (val(output).size() != 1)
    raise(Errc::DimensionMismatch, "backward requires a scalar output node");
  for (const Node& n : nodes_)
    if (!vec_all_finite(n.value))
      raise(Errc::NonFiniteForward, "non-finite value in forward pass");

  adjoints_.assign(nodes_.size(), Vec());
  auto adj = [&](NodeId id) -> Vec& {
    Vec& a = adjoints_[static_cast<std::size_t>(id)];
    if (a.empty()) a.assign(val(id).size(), 0.0);
    return a;
  };
  adj(output)[0] = 1.0;

  for (std::size_t idx = static_cast<std::size_t>(output) + 1; idx-- > 0;) {
    const Node& n = nodes_[idx];
    Vec& g = adjoints_[idx];
    if (g.empty()) continue;  // node does not influence the output

    switch (n.op) {
      case Op::Input:
      case Op::Constant:
        break;
      case Op::MatVecConst: {
        Vec& ga = adj(n.a);
        const Matrix& w = *n.w;
        for (std::size_t i = 0; i < w.rows(); ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          for (std::size_t j = 0; j < w.cols(); ++j) ga[j] += w(i, j) * gi;
        }
        break;
      }
      case Op::MatVecNode: {
        Vec& gw = adj(n.a);
        Vec& gx = adj(n.b);
        const Vec& we = val(n.a);
        const Vec& xv = val(n.b);
        for (std::size_t i = 0; i < n.rows; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          double* gw_row = gw.data() + i * n.cols;
          const double* w_row = we.data() + i * n.cols;
          for (std::size_t j = 0; j < n.cols; ++j) {
            gw_row[j] += gi * xv[j];
            gx[j] += w_row[j] * gi;
          }
        }
        break;
      }
      case Op::Add: {
        Vec& ga = adj(n.a);
        Vec& gb = adj(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case Op::Sub: {
        Vec& ga = adj(n.a);
        Vec& gb = adj(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] -= g[i];
        }
        break;
      }
      case Op::ScaleConst: {
        Vec& ga = adj(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.c * g[i];
        break;
      }
      case Op::ScaleBy: {
        Vec& gs = adj(n.a);
        Vec& gx = adj(n.b);
        const double s = val(n.a)[0];
        const Vec& xv = val(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) {
          gs[0] += g[i] * xv[i];
          gx[i] += s * g[i];
        }
        break;
      }
      case Op::Tanh: {
        Vec& ga = adj(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += (1.0 - n.value[i] * n.value[i]) * g[i];
        break;
      }
      case Op::Square: {
        Vec& ga = adj(n.a);
        const Vec& xv = val(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * xv[i] * g[i];
        break;
      }
      case Op::Sum: {
        Vec& ga = adj(n.a);
        for (auto& v : ga) v += g[0];
        break;
      }
      case Op::SquaredNorm: {
        Vec& ga = adj(n.a);
        const Vec& xv = val(n.a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * xv[i] * g[0];
        break;
      }
      case Op::PowScalar: {
        Vec& ga = adj(n.a);
        const double x0 = val(n.a)[0];
        ga[0] += n.c * std::pow(x0, n.c - 1.0) * g[0];
        break;
      }
      case Op::Custom: {
        Vec& ga = adj(n.a);
        const Vec contrib = n.hook->vjp(val(n.a), g);
        if (contrib.size() != ga.size())
          raise(Errc::DimensionMismatch, "custom vjp returned wrong size");
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += contrib[i];
        break;
      }
      default:
        raise(Errc::UnsupportedPrimitive, "unknown op in backward pass");
    }
  }

  // nodes the output does not depend on get explicit zero adjoints
  for (std::size_t idx = 0; idx < nodes_.size(); ++idx)
    if (adjoints_[idx].empty()) adjoints_[idx].assign(nodes_[idx].value.size(), 0.0);
}

Vec gradient(const std::function<NodeId(Tape&, NodeId)>& record, const Vec& x) {
  Tape tape;
  const NodeId in = tape.input(x);
  const NodeId out = record(tape, in);
  tape.backward(out);
  return tape.adjoint(in);
}

}  // namespace addps

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "kesa/tensor.hpp"

namespace kesa {

// Reverse-mode tape over dense tensors. One tape per training batch; build
// the forward graph through the op methods, then call backward(loss) once.
// Gradients of parameter leaves accumulate into their Variable::grad.
class Tape {
 public:
  struct NodeId {
    std::uint32_t v;
  };

  enum class Op : std::uint8_t {
    kParam,
    kConstant,
    kEmbedGather,
    kMeanPool,
    kAdd,
    kConcat,
    kAffine,
    kTanh,
    kSoftmax,
    kCrossEntropy,
    kScalarMul,
    kMaskedSlice,
    kSum,
    kElemMul,
  };

  // Leaves ------------------------------------------------------------
  NodeId param(Variable& var);
  NodeId constant(Tensor value);

  // Forward primitives. Shapes are validated before any compute; there is
  // no broadcasting anywhere except the bias add inside affine.
  NodeId embed_gather(NodeId table, std::vector<std::uint32_t> ids);     // (V,d),ids[n] -> (n,d)
  NodeId mean_pool(NodeId matrix, std::size_t true_len);                 // (n,d) -> (d), rows [0,true_len)
  NodeId add(NodeId a, NodeId b);                                        // same shape
  NodeId concat(NodeId a, NodeId b);                                     // (n),(m) -> (n+m)
  NodeId affine(NodeId w, NodeId x, NodeId b);                           // (n,m),(n),(m) -> (m): w^T x + b
  NodeId tanh_fn(NodeId x);
  NodeId softmax(NodeId logits);                                         // (n) -> (n), max-subtracted
  NodeId cross_entropy(NodeId probs, std::size_t target);                // (n),i -> (1); fuses with softmax input
  NodeId scalar_mul(NodeId x, real_t c);
  NodeId masked_slice(NodeId x, std::vector<std::size_t> indices);       // (n),I -> (|I|), strictly increasing I
  NodeId sum(NodeId x);                                                  // -> (1)
  NodeId elem_mul(NodeId x, Tensor mask);                                // same-shape constant mask

  // Reverse pass. loss must be a size-1 node; calling twice without a new
  // tape is a usage error.
  void backward(NodeId loss);

  const Tensor& value(NodeId id) const { return nodes_[id.v].value; }
  const Tensor& grad(NodeId id) const;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t clamp_events() const { return clamp_events_; }

  // Debug mode: verify every computed tensor is finite at construction.
  void set_check_finite(bool on) { check_finite_ = on; }

  void dump(std::ostream& os) const;

 private:
  struct Node {
    Op op;
    std::int32_t in0 = -1;
    std::int32_t in1 = -1;
    std::int32_t in2 = -1;
    Tensor value;
    Tensor grad;  // allocated lazily at backward()
    Variable* var = nullptr;
    std::vector<std::size_t> indices;  // gather ids / slice indices / CE target
    std::size_t true_len = 0;
    real_t c = 0;
    Tensor mask;
    bool fused_ce = false;  // cross_entropy computed from the softmax's logits
  };

  NodeId push(Node n);
  const Node& node(NodeId id) const { return nodes_[id.v]; }
  void check_id(NodeId id, const char* who) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
  bool check_finite_ = false;
  std::size_t clamp_events_ = 0;
};

// Numerically stable helpers shared by the graph ops and the tape-free
// inference path.
namespace math {
void softmax_inplace(std::span<real_t> v);
real_t log_sum_exp(std::span<const real_t> v);
}  // namespace math

// Max over all parameter coordinates of the relative error between the
// analytic gradient and a central finite difference with step eps.
// loss_fn(true) must build a fresh tape, run backward and return the loss
// value (accumulating into Variable::grad); loss_fn(false) returns the loss
// value only. Requires the 64-bit build.
real_t grad_check(std::span<Variable* const> params,
                  const std::function<real_t(bool with_grad)>& loss_fn,
                  real_t eps);

}  // namespace kesa

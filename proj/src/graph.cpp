#include "kesa/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace kesa {

namespace math {

void softmax_inplace(std::span<real_t> v) {
  real_t mx = v[0];
  for (real_t x : v) mx = std::max(mx, x);
  real_t denom = 0;
  for (real_t& x : v) {
    // floor keeps outputs strictly positive when exp underflows
    x = std::max(std::exp(x - mx), std::numeric_limits<real_t>::min());
    denom += x;
  }
  for (real_t& x : v) x /= denom;
}

real_t log_sum_exp(std::span<const real_t> v) {
  real_t mx = v[0];
  for (real_t x : v) mx = std::max(mx, x);
  real_t s = 0;
  for (real_t x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace math

namespace {
constexpr real_t kProbClamp = real_t(1e-12);

const char* op_name(Tape::Op op) {
  switch (op) {
    case Tape::Op::kParam: return "param";
    case Tape::Op::kConstant: return "constant";
    case Tape::Op::kEmbedGather: return "embed_gather";
    case Tape::Op::kMeanPool: return "mean_pool";
    case Tape::Op::kAdd: return "add";
    case Tape::Op::kConcat: return "concat";
    case Tape::Op::kAffine: return "affine";
    case Tape::Op::kTanh: return "tanh";
    case Tape::Op::kSoftmax: return "softmax";
    case Tape::Op::kCrossEntropy: return "cross_entropy";
    case Tape::Op::kScalarMul: return "scalar_mul";
    case Tape::Op::kMaskedSlice: return "masked_slice";
    case Tape::Op::kSum: return "sum";
    case Tape::Op::kElemMul: return "elem_mul";
  }
  return "?";
}
}  // namespace

void Tape::check_id(NodeId id, const char* who) const {
  if (id.v >= nodes_.size()) throw UsageError(std::string(who) + ": bad node id");
}

Tape::NodeId Tape::push(Node n) {
  if (check_finite_ && !n.value.all_finite())
    throw UsageError(std::string("non-finite value out of ") + op_name(n.op));
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tape::NodeId Tape::param(Variable& var) {
  Node n;
  n.op = Op::kParam;
  n.value = var.value;
  n.var = &var;
  return push(std::move(n));
}

Tape::NodeId Tape::constant(Tensor value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::NodeId Tape::embed_gather(NodeId table, std::vector<std::uint32_t> ids) {
  check_id(table, "embed_gather");
  const Tensor& t = nodes_[table.v].value;
  if (t.ndim() != 2) throw UsageError("embed_gather: table must be 2-D, got " + t.shape_str());
  if (ids.empty()) throw UsageError("embed_gather: empty id list");
  const std::size_t rows = t.extent(0), d = t.extent(1);
  for (std::uint32_t id : ids)
    if (id >= rows) throw UsageError("embed_gather: id " + std::to_string(id) + " out of range");

  Node n;
  n.op = Op::kEmbedGather;
  n.in0 = static_cast<std::int32_t>(table.v);
  n.indices.assign(ids.begin(), ids.end());
  n.value = Tensor({ids.size(), d});
  for (std::size_t r = 0; r < ids.size(); ++r)
    for (std::size_t j = 0; j < d; ++j) n.value.at(r, j) = t.at(ids[r], j);
  return push(std::move(n));
}

Tape::NodeId Tape::mean_pool(NodeId matrix, std::size_t true_len) {
  check_id(matrix, "mean_pool");
  const Tensor& m = nodes_[matrix.v].value;
  if (m.ndim() != 2) throw UsageError("mean_pool: input must be 2-D, got " + m.shape_str());
  if (true_len == 0 || true_len > m.extent(0))
    throw UsageError("mean_pool: true_len " + std::to_string(true_len) + " out of range for " + m.shape_str());

  Node n;
  n.op = Op::kMeanPool;
  n.in0 = static_cast<std::int32_t>(matrix.v);
  n.true_len = true_len;
  const std::size_t d = m.extent(1);
  n.value = Tensor({d});
  for (std::size_t r = 0; r < true_len; ++r)
    for (std::size_t j = 0; j < d; ++j) n.value[j] += m.at(r, j);
  for (std::size_t j = 0; j < d; ++j) n.value[j] /= static_cast<real_t>(true_len);
  return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  check_id(a, "add");
  check_id(b, "add");
  const Tensor& ta = nodes_[a.v].value;
  const Tensor& tb = nodes_[b.v].value;
  if (!ta.same_shape(tb))
    throw UsageError("add: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());

  Node n;
  n.op = Op::kAdd;
  n.in0 = static_cast<std::int32_t>(a.v);
  n.in1 = static_cast<std::int32_t>(b.v);
  n.value = ta;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] += tb[i];
  return push(std::move(n));
}

Tape::NodeId Tape::concat(NodeId a, NodeId b) {
  check_id(a, "concat");
  check_id(b, "concat");
  const Tensor& ta = nodes_[a.v].value;
  const Tensor& tb = nodes_[b.v].value;
  if (ta.ndim() != 1 || tb.ndim() != 1)
    throw UsageError("concat: inputs must be 1-D, got " + ta.shape_str() + " and " + tb.shape_str());

  Node n;
  n.op = Op::kConcat;
  n.in0 = static_cast<std::int32_t>(a.v);
  n.in1 = static_cast<std::int32_t>(b.v);
  n.value = Tensor({ta.size() + tb.size()});
  for (std::size_t i = 0; i < ta.size(); ++i) n.value[i] = ta[i];
  for (std::size_t i = 0; i < tb.size(); ++i) n.value[ta.size() + i] = tb[i];
  return push(std::move(n));
}

Tape::NodeId Tape::affine(NodeId w, NodeId x, NodeId b) {
  check_id(w, "affine");
  check_id(x, "affine");
  check_id(b, "affine");
  const Tensor& tw = nodes_[w.v].value;
  const Tensor& tx = nodes_[x.v].value;
  const Tensor& tb = nodes_[b.v].value;
  if (tw.ndim() != 2 || tx.ndim() != 1 || tb.ndim() != 1)
    throw UsageError("affine: want (n,m),(n),(m); got " + tw.shape_str() + "," + tx.shape_str() + "," + tb.shape_str());
  const std::size_t in = tw.extent(0), out = tw.extent(1);
  if (tx.size() != in || tb.size() != out)
    throw UsageError("affine: shape mismatch " + tw.shape_str() + "," + tx.shape_str() + "," + tb.shape_str());

  Node n;
  n.op = Op::kAffine;
  n.in0 = static_cast<std::int32_t>(w.v);
  n.in1 = static_cast<std::int32_t>(x.v);
  n.in2 = static_cast<std::int32_t>(b.v);
  n.value = tb;
  for (std::size_t i = 0; i < in; ++i) {
    const real_t xi = tx[i];
    for (std::size_t j = 0; j < out; ++j) n.value[j] += tw.at(i, j) * xi;
  }
  return push(std::move(n));
}

Tape::NodeId Tape::tanh_fn(NodeId x) {
  check_id(x, "tanh");
  Node n;
  n.op = Op::kTanh;
  n.in0 = static_cast<std::int32_t>(x.v);
  n.value = nodes_[x.v].value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = std::tanh(n.value[i]);
  return push(std::move(n));
}

Tape::NodeId Tape::softmax(NodeId logits) {
  check_id(logits, "softmax");
  const Tensor& t = nodes_[logits.v].value;
  if (t.ndim() != 1) throw UsageError("softmax: input must be 1-D, got " + t.shape_str());

  Node n;
  n.op = Op::kSoftmax;
  n.in0 = static_cast<std::int32_t>(logits.v);
  n.value = t;
  math::softmax_inplace(n.value.flat());
  return push(std::move(n));
}

Tape::NodeId Tape::cross_entropy(NodeId probs, std::size_t target) {
  check_id(probs, "cross_entropy");
  const Node& p = nodes_[probs.v];
  if (p.value.ndim() != 1) throw UsageError("cross_entropy: input must be 1-D");
  if (target >= p.value.size())
    throw UsageError("cross_entropy: target " + std::to_string(target) + " out of range");

  Node n;
  n.op = Op::kCrossEntropy;
  n.in0 = static_cast<std::int32_t>(probs.v);
  n.indices = {target};
  if (p.op == Op::kSoftmax) {
    // exact -log softmax(z)[t] via log-sum-exp over the parent logits
    n.fused_ce = true;
    const Tensor& z = nodes_[p.in0].value;
    n.value = Tensor::scalar(math::log_sum_exp(z.flat()) - z[target]);
  } else {
    real_t s = 0;
    for (std::size_t i = 0; i < p.value.size(); ++i) s += p.value[i];
    if (std::abs(s - real_t(1)) > real_t(1e-6))
      throw UsageError("cross_entropy: input does not sum to 1");
    real_t pt = p.value[target];
    if (pt < kProbClamp) {
      pt = kProbClamp;
      ++clamp_events_;
    }
    n.value = Tensor::scalar(-std::log(pt));
  }
  return push(std::move(n));
}

Tape::NodeId Tape::scalar_mul(NodeId x, real_t c) {
  check_id(x, "scalar_mul");
  Node n;
  n.op = Op::kScalarMul;
  n.in0 = static_cast<std::int32_t>(x.v);
  n.c = c;
  n.value = nodes_[x.v].value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= c;
  return push(std::move(n));
}

Tape::NodeId Tape::masked_slice(NodeId x, std::vector<std::size_t> indices) {
  check_id(x, "masked_slice");
  const Tensor& t = nodes_[x.v].value;
  if (t.ndim() != 1) throw UsageError("masked_slice: input must be 1-D");
  if (indices.empty()) throw UsageError("masked_slice: empty index set");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= t.size()) throw UsageError("masked_slice: index out of range");
    if (i > 0 && indices[i] <= indices[i - 1])
      throw UsageError("masked_slice: indices must be strictly increasing");
  }

  Node n;
  n.op = Op::kMaskedSlice;
  n.in0 = static_cast<std::int32_t>(x.v);
  n.value = Tensor({indices.size()});
  for (std::size_t i = 0; i < indices.size(); ++i) n.value[i] = t[indices[i]];
  n.indices = std::move(indices);
  return push(std::move(n));
}

Tape::NodeId Tape::sum(NodeId x) {
  check_id(x, "sum");
  const Tensor& t = nodes_[x.v].value;
  Node n;
  n.op = Op::kSum;
  n.in0 = static_cast<std::int32_t>(x.v);
  real_t s = 0;
  for (std::size_t i = 0; i < t.size(); ++i) s += t[i];
  n.value = Tensor::scalar(s);
  return push(std::move(n));
}

Tape::NodeId Tape::elem_mul(NodeId x, Tensor mask) {
  check_id(x, "elem_mul");
  const Tensor& t = nodes_[x.v].value;
  if (!t.same_shape(mask))
    throw UsageError("elem_mul: shape mismatch " + t.shape_str() + " vs " + mask.shape_str());
  Node n;
  n.op = Op::kElemMul;
  n.in0 = static_cast<std::int32_t>(x.v);
  n.value = t;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= mask[i];
  n.mask = std::move(mask);
  return push(std::move(n));
}

const Tensor& Tape::grad(NodeId id) const {
  check_id(id, "grad");
  if (!backward_done_) throw UsageError("grad: backward has not run");
  return nodes_[id.v].grad;
}

void Tape::backward(NodeId loss) {
  check_id(loss, "backward");
  if (backward_done_) throw UsageError("backward: already ran on this tape");
  if (nodes_[loss.v].value.size() != 1) throw UsageError("backward: loss must be scalar");
  backward_done_ = true;

  for (Node& n : nodes_) n.grad = Tensor(n.value.shape());
  nodes_[loss.v].grad[0] = 1;

  // Nodes are already in topological order (inputs precede consumers).
  for (std::size_t k = nodes_.size(); k-- > 0;) {
    Node& n = nodes_[k];
    const Tensor& g = n.grad;
    switch (n.op) {
      case Op::kParam: {
        Tensor& pg = n.var->grad;
        for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += g[i];
        break;
      }
      case Op::kConstant:
        break;
      case Op::kEmbedGather: {
        Tensor& tg = nodes_[n.in0].grad;
        const std::size_t d = n.value.extent(1);
        for (std::size_t r = 0; r < n.indices.size(); ++r)
          for (std::size_t j = 0; j < d; ++j) tg.at(n.indices[r], j) += g.at(r, j);
        break;
      }
      case Op::kMeanPool: {
        Tensor& mg = nodes_[n.in0].grad;
        const std::size_t d = n.value.size();
        const real_t inv = real_t(1) / static_cast<real_t>(n.true_len);
        for (std::size_t r = 0; r < n.true_len; ++r)
          for (std::size_t j = 0; j < d; ++j) mg.at(r, j) += g[j] * inv;
        break;
      }
      case Op::kAdd: {
        Tensor& ga = nodes_[n.in0].grad;
        Tensor& gb = nodes_[n.in1].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case Op::kConcat: {
        Tensor& ga = nodes_[n.in0].grad;
        Tensor& gb = nodes_[n.in1].grad;
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[ga.size() + i];
        break;
      }
      case Op::kAffine: {
        Tensor& gw = nodes_[n.in0].grad;
        Tensor& gx = nodes_[n.in1].grad;
        Tensor& gb = nodes_[n.in2].grad;
        const Tensor& w = nodes_[n.in0].value;
        const Tensor& x = nodes_[n.in1].value;
        const std::size_t in = w.extent(0), out = w.extent(1);
        for (std::size_t j = 0; j < out; ++j) gb[j] += g[j];
        for (std::size_t i = 0; i < in; ++i) {
          const real_t xi = x[i];
          real_t acc = 0;
          for (std::size_t j = 0; j < out; ++j) {
            gw.at(i, j) += g[j] * xi;
            acc += w.at(i, j) * g[j];
          }
          gx[i] += acc;
        }
        break;
      }
      case Op::kTanh: {
        Tensor& gx = nodes_[n.in0].grad;
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1 - n.value[i] * n.value[i]);
        break;
      }
      case Op::kSoftmax: {
        // dz_i = p_i * (g_i - sum_j g_j p_j)
        Tensor& gz = nodes_[n.in0].grad;
        real_t dot = 0;
        for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * n.value[i];
        for (std::size_t i = 0; i < g.size(); ++i) gz[i] += n.value[i] * (g[i] - dot);
        break;
      }
      case Op::kCrossEntropy: {
        const std::size_t t = n.indices[0];
        if (n.fused_ce) {
          // route straight to the logits: d/dz = softmax(z) - onehot(t)
          const Node& sm = nodes_[n.in0];
          Tensor& gz = nodes_[sm.in0].grad;
          for (std::size_t i = 0; i < gz.size(); ++i) gz[i] += g[0] * sm.value[i];
          gz[t] -= g[0];
        } else {
          Tensor& gp = nodes_[n.in0].grad;
          const real_t pt = std::max(nodes_[n.in0].value[t], kProbClamp);
          gp[t] -= g[0] / pt;
        }
        break;
      }
      case Op::kScalarMul: {
        Tensor& gx = nodes_[n.in0].grad;
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.c;
        break;
      }
      case Op::kMaskedSlice: {
        Tensor& gx = nodes_[n.in0].grad;
        for (std::size_t i = 0; i < n.indices.size(); ++i) gx[n.indices[i]] += g[i];
        break;
      }
      case Op::kSum: {
        Tensor& gx = nodes_[n.in0].grad;
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
        break;
      }
      case Op::kElemMul: {
        Tensor& gx = nodes_[n.in0].grad;
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.mask[i];
        break;
      }
    }
  }
}

void Tape::dump(std::ostream& os) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    os << '[' << i << "] " << op_name(n.op) << ' ' << n.value.shape_str();
    if (n.in0 >= 0) {
      os << " <- " << n.in0;
      if (n.in1 >= 0) os << ',' << n.in1;
      if (n.in2 >= 0) os << ',' << n.in2;
    }
    if (n.var) os << " {" << n.var->name << '}';
    os << '\n';
  }
}

real_t grad_check(std::span<Variable* const> params,
                  const std::function<real_t(bool with_grad)>& loss_fn,
                  real_t eps) {
  static_assert(sizeof(real_t) == 8 || sizeof(real_t) == 4);
  for (Variable* p : params) p->zero_grad();
  loss_fn(true);

  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Variable* p : params) analytic.push_back(p->grad);

  real_t worst = 0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& v = params[pi]->value;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const real_t orig = v[i];
      v[i] = orig + eps;
      const real_t up = loss_fn(false);
      v[i] = orig - eps;
      const real_t down = loss_fn(false);
      v[i] = orig;
      const real_t numeric = (up - down) / (2 * eps);
      const real_t a = analytic[pi][i];
      const real_t err = std::abs(a - numeric) / std::max(real_t(1e-8), std::abs(a) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace kesa

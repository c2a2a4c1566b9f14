#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gpd/nn/layers.hpp"
#include "gpd/nn/tensor.hpp"

namespace gpd::nn {

template <class T>
using LayerStack = std::vector<Layer<T>>;

/// A view on one trainable tensor.
template <class T>
struct ParamView {
  std::string name;
  std::span<T> values;
};

/// Sequential stacks with optional late fusion: each input runs through its own
/// branch, branch outputs are concatenated along channels, and the result runs
/// through the shared head. A plain sequential net is a single branch.
template <class T>
class Network {
 public:
  std::string arch;
  std::vector<Shape> input_shapes;
  std::vector<LayerStack<T>> branches;
  LayerStack<T> head;

  /// True after fully connected layers were rewritten as convolutions; such a net
  /// accepts inputs at least as large as the declared shapes.
  bool fully_convolutional = false;

  std::size_t branch_count() const { return branches.size(); }

  /// Shape algebra over the declared input shapes; throws ShapeError on any mismatch.
  Shape output_shape() const { return output_shape_for(input_shapes); }

  Shape output_shape_for(const std::vector<Shape>& inputs) const {
    if (inputs.size() != branches.size()) throw ShapeError("network expects " + std::to_string(branches.size()) + " inputs");
    Shape fused{0, 0, 0};
    for (std::size_t b = 0; b < branches.size(); ++b) {
      Shape s = inputs[b];
      for (const auto& layer : branches[b]) s = nn::output_shape<T>(layer, s);
      if (b == 0) {
        fused = s;
      } else {
        if (s.h != fused.h || s.w != fused.w) throw ShapeError("branch outputs differ in spatial size");
        fused.c += s.c;
      }
    }
    for (const auto& layer : head) fused = nn::output_shape<T>(layer, fused);
    return fused;
  }

  /// Shapes entering every head layer, given the declared inputs.
  std::vector<Shape> head_input_shapes() const {
    std::vector<Shape> shapes;
    Shape fused{0, 0, 0};
    for (std::size_t b = 0; b < branches.size(); ++b) {
      Shape s = input_shapes[b];
      for (const auto& layer : branches[b]) s = nn::output_shape<T>(layer, s);
      if (b == 0) fused = s; else fused.c += s.c;
    }
    for (const auto& layer : head) {
      shapes.push_back(fused);
      fused = nn::output_shape<T>(layer, fused);
    }
    return shapes;
  }

  std::vector<ParamView<T>> params() {
    std::vector<ParamView<T>> out;
    auto collect = [&out](LayerStack<T>& stack, const std::string& prefix) {
      for (std::size_t i = 0; i < stack.size(); ++i) {
        const std::string name = prefix + ".l" + std::to_string(i);
        if (auto* c = std::get_if<Conv2d<T>>(&stack[i])) {
          out.push_back({name + ".weight", c->weight});
          out.push_back({name + ".bias", c->bias});
        } else if (auto* d = std::get_if<Dense<T>>(&stack[i])) {
          out.push_back({name + ".weight", d->weight});
          out.push_back({name + ".bias", d->bias});
        }
      }
    };
    for (std::size_t b = 0; b < branches.size(); ++b) collect(branches[b], "b" + std::to_string(b));
    collect(head, "head");
    return out;
  }

  std::vector<ParamView<const T>> params() const {
    std::vector<ParamView<const T>> out;
    for (auto& p : const_cast<Network*>(this)->params()) out.push_back({p.name, p.values});
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params()) n += p.values.size();
    return n;
  }

  void init(std::uint64_t seed) {
    Rng rng(seed);
    for (auto& stack : branches)
      for (auto& layer : stack) init_glorot(layer, rng);
    for (auto& layer : head) init_glorot(layer, rng);
  }

  template <class U>
  Network<U> cast() const {
    Network<U> out;
    out.arch = arch;
    out.input_shapes = input_shapes;
    out.fully_convolutional = fully_convolutional;
    for (const auto& stack : branches) {
      LayerStack<U> s;
      for (const auto& layer : stack) s.push_back(cast_layer<U, T>(layer));
      out.branches.push_back(std::move(s));
    }
    for (const auto& layer : head) out.head.push_back(cast_layer<U, T>(layer));
    return out;
  }
};

/// Per-parameter gradient buffers, aligned with Network::params().
template <class T>
struct Gradients {
  std::vector<std::vector<T>> values;

  static Gradients zeros_like(const Network<T>& net) {
    Gradients g;
    for (const auto& p : net.params()) g.values.emplace_back(p.values.size(), T{0});
    return g;
  }
  void zero() {
    for (auto& v : values) std::fill(v.begin(), v.end(), T{0});
  }
};

/// Everything backward() needs from a forward pass.
template <class T>
struct ForwardTrace {
  struct StackTrace {
    std::vector<Tensor<T>> inputs;                     // input of every layer
    std::vector<std::vector<std::uint32_t>> argmax;    // per layer, pools only
  };
  std::vector<StackTrace> branches;
  StackTrace head;
  std::vector<int> branch_channels;
  Tensor<T> output;
};

namespace detail {

template <class T>
Tensor<T> run_stack(const LayerStack<T>& stack, Tensor<T> x, typename ForwardTrace<T>::StackTrace* trace) {
  if (trace) {
    trace->inputs.clear();
    trace->argmax.assign(stack.size(), {});
  }
  for (std::size_t i = 0; i < stack.size(); ++i) {
    Tensor<T> y;
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, MaxPool2>) {
            l.forward(x, y, trace ? &trace->argmax[i] : nullptr);
          } else {
            l.forward(x, y);
          }
        },
        stack[i]);
    if (trace) trace->inputs.push_back(std::move(x));
    x = std::move(y);
  }
  return x;
}

/// Walks a stack backwards, accumulating into grads starting at `param_index`.
/// Returns the gradient w.r.t. the stack input unless `need_input_grad` is false.
template <class T>
Tensor<T> back_stack(const LayerStack<T>& stack, const typename ForwardTrace<T>::StackTrace& trace, Tensor<T> g,
                     Gradients<T>& grads, std::size_t param_index, bool need_input_grad) {
  // Parameter slots of this stack, in forward order.
  std::vector<std::size_t> slot(stack.size(), 0);
  std::size_t next = param_index;
  for (std::size_t i = 0; i < stack.size(); ++i) {
    slot[i] = next;
    if (std::holds_alternative<Conv2d<T>>(stack[i]) || std::holds_alternative<Dense<T>>(stack[i])) next += 2;
  }
  for (std::size_t k = stack.size(); k-- > 0;) {
    const Tensor<T>& in = trace.inputs[k];
    const bool want_din = k > 0 || need_input_grad;
    Tensor<T> din;
    if (auto* c = std::get_if<Conv2d<T>>(&stack[k])) {
      c->backward(in, g, grads.values[slot[k]], grads.values[slot[k] + 1], want_din ? &din : nullptr);
    } else if (auto* d = std::get_if<Dense<T>>(&stack[k])) {
      d->backward(in, g, grads.values[slot[k]], grads.values[slot[k] + 1], want_din ? &din : nullptr);
    } else if (auto* r = std::get_if<Relu>(&stack[k])) {
      r->backward(in, g, din);
    } else {
      std::get<MaxPool2>(stack[k]).backward(in.shape, trace.argmax[k], g, din);
    }
    if (!want_din) return {};
    g = std::move(din);
  }
  return g;
}

template <class T>
std::size_t param_slots(const LayerStack<T>& stack) {
  std::size_t n = 0;
  for (const auto& l : stack)
    if (std::holds_alternative<Conv2d<T>>(l) || std::holds_alternative<Dense<T>>(l)) n += 2;
  return n;
}

}  // namespace detail

template <class T>
void check_inputs(const Network<T>& net, const std::vector<Tensor<T>>& inputs) {
  if (inputs.size() != net.branches.size()) {
    throw ShapeError("network expects " + std::to_string(net.branches.size()) + " inputs, got " +
                     std::to_string(inputs.size()));
  }
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const Shape& want = net.input_shapes[b];
    const Shape& got = inputs[b].shape;
    const bool ok = net.fully_convolutional ? (got.c == want.c && got.h >= want.h && got.w >= want.w) : got == want;
    if (!ok) throw ShapeError("input " + std::to_string(b) + " has shape " + got.str() + ", expected " + want.str());
  }
}

/// Raw class scores. Shape (classes, 1, 1), or (classes, gh, gw) for fully convolutional nets.
template <class T>
Tensor<T> forward(const Network<T>& net, const std::vector<Tensor<T>>& inputs, ForwardTrace<T>* trace = nullptr) {
  check_inputs(net, inputs);
  if (trace) {
    trace->branches.assign(net.branches.size(), {});
    trace->branch_channels.clear();
  }
  Tensor<T> fused;
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    Tensor<T> y = detail::run_stack(net.branches[b], inputs[b], trace ? &trace->branches[b] : nullptr);
    if (trace) trace->branch_channels.push_back(y.shape.c);
    if (b == 0) {
      fused = std::move(y);
    } else {
      if (y.shape.h != fused.shape.h || y.shape.w != fused.shape.w) {
        throw ShapeError("branch outputs differ in spatial size: " + fused.shape.str() + " vs " + y.shape.str());
      }
      fused.shape.c += y.shape.c;
      fused.data.insert(fused.data.end(), y.data.begin(), y.data.end());
    }
  }
  Tensor<T> out = detail::run_stack(net.head, std::move(fused), trace ? &trace->head : nullptr);
  if (trace) trace->output = out;
  return out;
}

template <class T>
Tensor<T> forward(const Network<T>& net, const Tensor<T>& input) {
  return forward(net, std::vector<Tensor<T>>{input});
}

/// Numerically stable softmax over the flattened scores.
template <class T>
std::vector<T> softmax(std::span<const T> scores) {
  std::vector<T> p(scores.begin(), scores.end());
  if (p.empty()) return p;
  const T m = *std::max_element(p.begin(), p.end());
  T sum = 0;
  for (T& x : p) {
    x = std::exp(x - m);
    sum += x;
  }
  for (T& x : p) x /= sum;
  return p;
}

/// -log softmax(scores)[label], computed via log-sum-exp.
template <class T>
T cross_entropy(std::span<const T> scores, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= scores.size()) throw std::invalid_argument("label out of range");
  const T m = *std::max_element(scores.begin(), scores.end());
  T sum = 0;
  for (T x : scores) sum += std::exp(x - m);
  return std::log(sum) + m - scores[label];
}

template <class T>
T loss(const Network<T>& net, const std::vector<Tensor<T>>& inputs, int label) {
  const Tensor<T> out = forward(net, inputs);
  return cross_entropy<T>(out.data, label);
}

/// Softmax cross-entropy loss of one sample; parameter gradients are added to `grads`.
template <class T>
T backward(const Network<T>& net, const std::vector<Tensor<T>>& inputs, int label, Gradients<T>& grads,
           ForwardTrace<T>* trace_out = nullptr) {
  ForwardTrace<T> local;
  ForwardTrace<T>& trace = trace_out ? *trace_out : local;
  const Tensor<T> out = forward(net, inputs, &trace);
  if (out.shape.h != 1 || out.shape.w != 1) throw ShapeError("backward needs a single score vector per sample");
  const T l = cross_entropy<T>(out.data, label);
  std::vector<T> p = softmax<T>(out.data);
  p[label] -= T{1};
  Tensor<T> g(out.shape, std::move(p));

  std::vector<std::size_t> branch_offset;
  std::size_t offset = 0;
  for (const auto& stack : net.branches) {
    branch_offset.push_back(offset);
    offset += detail::param_slots(stack);
  }
  bool head_needs_input = false;
  for (const auto& stack : net.branches) head_needs_input = head_needs_input || !stack.empty();
  Tensor<T> dfused = detail::back_stack(net.head, trace.head, std::move(g), grads, offset, head_needs_input);
  if (!head_needs_input) return l;

  std::size_t channel = 0;
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    const int c = trace.branch_channels[b];
    const std::size_t plane = static_cast<std::size_t>(dfused.shape.h) * dfused.shape.w;
    Tensor<T> gb(Shape{c, dfused.shape.h, dfused.shape.w});
    std::copy_n(dfused.data.begin() + channel * plane, c * plane, gb.data.begin());
    channel += c;
    detail::back_stack(net.branches[b], trace.branches[b], std::move(gb), grads, branch_offset[b], false);
  }
  return l;
}

/// ReLU on/off bits and pool choices of a traced forward pass. Two evaluations
/// with equal patterns lie in the same differentiable piece of the network.
template <class T>
std::vector<std::uint32_t> activation_pattern(const Network<T>& net, const ForwardTrace<T>& trace) {
  std::vector<std::uint32_t> pattern;
  auto add = [&pattern](const LayerStack<T>& stack, const typename ForwardTrace<T>::StackTrace& st) {
    for (std::size_t i = 0; i < stack.size(); ++i) {
      if (std::holds_alternative<Relu>(stack[i])) {
        for (T x : st.inputs[i].data) pattern.push_back(x > T{0});
      } else if (std::holds_alternative<MaxPool2>(stack[i])) {
        pattern.insert(pattern.end(), st.argmax[i].begin(), st.argmax[i].end());
      }
    }
  };
  for (std::size_t b = 0; b < net.branches.size(); ++b) add(net.branches[b], trace.branches[b]);
  add(net.head, trace.head);
  return pattern;
}

/// SGD with momentum: velocity = momentum * velocity - lr * grad / batch_count; param += velocity.
template <class T>
class Sgd {
 public:
  Sgd(T lr, T momentum) : lr_(lr), momentum_(momentum) {}

  void step(Network<T>& net, const Gradients<T>& grads, std::size_t batch_count) {
    auto params = net.params();
    if (grads.values.size() != params.size()) throw ShapeError("gradient set does not match network parameters");
    if (velocity_.empty()) {
      for (const auto& p : params) velocity_.emplace_back(p.values.size(), T{0});
    }
    const T scale = lr_ / static_cast<T>(batch_count == 0 ? 1 : batch_count);
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (grads.values[k].size() != params[k].values.size()) throw ShapeError("gradient shape mismatch for " + params[k].name);
      auto& vel = velocity_[k];
      const auto& g = grads.values[k];
      auto p = params[k].values;
      for (std::size_t i = 0; i < p.size(); ++i) {
        vel[i] = momentum_ * vel[i] - scale * g[i];
        p[i] += vel[i];
      }
    }
  }

  T learning_rate() const { return lr_; }

 private:
  T lr_;
  T momentum_;
  std::vector<std::vector<T>> velocity_;
};

}  // namespace gpd::nn

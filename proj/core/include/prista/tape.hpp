#pragma once

#include <functional>
#include <vector>

#include "prista/tensor.hpp"

namespace prista {

class Tape;

/// Handle to a tensor recorded on a Tape. Vars from different tapes never
/// combine; ops throw on mismatch.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  bool requires_grad() const { return rg_; }
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id, bool rg) : tape_(tape), id_(id), rg_(rg) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
  bool rg_ = false;
};

/// Record of primitive operations for one forward pass. Creation order is a
/// topological order, so backward() walks ids in reverse and accumulates
/// gradients deterministically. Single-threaded by design; parallelism
/// happens across independent tapes.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& upstream)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Record an op result. `back` receives the upstream cotangent of the new
  /// node and accumulates into the parents' buffers via grad_buffer(). The
  /// node is recorded only if some input requires grad.
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn back);

  /// Reverse-mode accumulation from a scalar root. Gradients of earlier
  /// backward() calls are discarded.
  void backward(const Var& root);

  bool has_grad(const Var& v) const;
  const Tensor& grad(const Var& v) const;

  const Tensor& value_of(int id) const { return values_[static_cast<std::size_t>(id)]; }
  /// Accumulation buffer for a node, zero-initialized on first touch.
  Tensor& grad_buffer(int id);

  std::size_t node_count() const { return num_ops_; }
  std::size_t var_count() const { return values_.size(); }

  /// Throws unless every Var lives on this tape.
  void check_owns(const std::vector<Var>& vs, const char* op) const;

 private:
  std::vector<Tensor> values_;
  std::vector<char> requires_grad_;
  std::vector<BackwardFn> nodes_;  // empty fn for leaves / constant-folded results
  std::vector<Tensor> grads_;
  std::vector<char> has_grad_;
  std::size_t num_ops_ = 0;
  bool backward_done_ = false;
};

}  // namespace prista

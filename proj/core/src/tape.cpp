#include "prista/tape.hpp"

#include <stdexcept>

namespace prista {

const Tensor& Var::value() const {
  if (!tape_) throw std::logic_error("Var: value() on default-constructed handle");
  return tape_->value_of(id_);
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  values_.push_back(std::move(value));
  requires_grad_.push_back(requires_grad ? 1 : 0);
  nodes_.emplace_back();
  return Var(this, static_cast<int>(values_.size()) - 1, requires_grad);
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn back) {
  check_owns(inputs, "record");
  bool rg = false;
  for (const Var& v : inputs) rg = rg || v.requires_grad();
  values_.push_back(std::move(value));
  requires_grad_.push_back(rg ? 1 : 0);
  if (rg) {
    nodes_.push_back(std::move(back));
    ++num_ops_;
  } else {
    nodes_.emplace_back();
  }
  return Var(this, static_cast<int>(values_.size()) - 1, rg);
}

void Tape::check_owns(const std::vector<Var>& vs, const char* op) const {
  for (const Var& v : vs) {
    if (v.tape() != this) {
      throw std::invalid_argument(std::string(op) + ": Var from a different tape");
    }
  }
}

void Tape::backward(const Var& root) {
  if (root.tape() != this) throw std::invalid_argument("backward: root from a different tape");
  if (!root.value().is_scalar()) {
    throw std::invalid_argument("backward: root must be scalar, got shape " +
                                shape_string(root.value().shape()));
  }
  if (!root.requires_grad()) {
    throw std::invalid_argument("backward: root is detached (no grad path to any leaf)");
  }
  grads_.assign(values_.size(), Tensor());
  has_grad_.assign(values_.size(), 0);
  grad_buffer(root.id())[0] = 1.0;
  for (int id = root.id(); id >= 0; --id) {
    const std::size_t i = static_cast<std::size_t>(id);
    if (!has_grad_[i] || !nodes_[i]) continue;
    nodes_[i](*this, grads_[i]);
  }
  backward_done_ = true;
}

Tensor& Tape::grad_buffer(int id) {
  const std::size_t i = static_cast<std::size_t>(id);
  if (!has_grad_[i]) {
    grads_[i] = Tensor::zeros(values_[i].shape());
    has_grad_[i] = 1;
  }
  return grads_[i];
}

bool Tape::has_grad(const Var& v) const {
  if (!backward_done_ || v.tape() != this) return false;
  return has_grad_[static_cast<std::size_t>(v.id())] != 0;
}

const Tensor& Tape::grad(const Var& v) const {
  if (v.tape() != this) throw std::invalid_argument("grad: Var from a different tape");
  if (!backward_done_) throw std::logic_error("grad: backward() has not run");
  if (!has_grad_[static_cast<std::size_t>(v.id())]) {
    throw std::logic_error("grad: no gradient reached this Var");
  }
  return grads_[static_cast<std::size_t>(v.id())];
}

}  // namespace prista

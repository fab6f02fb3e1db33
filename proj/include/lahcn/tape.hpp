#pragma once

// Reverse-mode gradient tape over dense matrices.
//
// A Tape records every operation executed through the free functions below.
// Parameters are registered by name; backward() replays the record from a
// scalar loss and yields one gradient per registered parameter. A tape and
// its Vars belong to one thread; independent tapes may run concurrently.

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lahcn/matrix.hpp"

namespace lahcn {

class Tape;

// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using GradientMap = std::map<std::string, Matrix>;

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);

  // Registers a trainable tensor. `value` is referenced, not copied, and must
  // outlive the tape. Each name may be registered once.
  Var parameter(const std::string& name, const Matrix& value);

  // Selects rows of a registered table (registering it on first use). The
  // gradient is scattered into the selected rows only.
  Var gather_rows(const std::string& name, const Matrix& table, std::span<const int> rows);

  const Matrix& value(Var v) const;

  // Gradients of a 1x1 loss for every registered parameter; parameters off
  // the loss path get zeros.
  GradientMap backward(Var loss);
  // Same, accumulated into `into` (entries are created as needed).
  void backward(Var loss, GradientMap& into);

  std::vector<std::string> parameter_names() const;
  std::size_t size() const noexcept { return nodes_.size(); }

  // Op-implementation interface.
  Var push(Matrix value, BackwardFn backward);
  Matrix& grad(std::size_t id);
  const Matrix& value_at(std::size_t id) const;

 private:
  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;
    Matrix grad;
    bool has_grad = false;
    BackwardFn backward;
    std::string param;
  };
  struct Registered {
    std::size_t rows;
    std::size_t cols;
  };

  Node& node(Var v);

  std::vector<Node> nodes_;
  std::map<std::string, Registered> registry_;
  std::map<std::string, const Matrix*> tables_;
  GradientMap* sink_ = nullptr;
};

enum class Activation { kLinear, kRelu, kLeakyRelu, kSigmoid, kTanh };

struct ActivationSpec {
  Activation kind = Activation::kLinear;
  double slope = 0.01;  // leaky_relu only, must lie in (0, 1)
};

double sigmoid(double x);

Var matmul(Var a, Var b);
Var transpose(Var a);
// x·W + b with b broadcast over rows.
Var affine(Var x, Var w, Var b);
Var activate(Var x, ActivationSpec act);
// Row softmax over positions where mask is 1; masked positions are exactly 0.
Var row_softmax_masked(Var x, std::span<const double> mask);
Var row_softmax(Var x);
// p×n -> p×1 mean per row.
Var row_average(Var x);
Var concat_cols(std::span<const Var> parts);
// 1×d -> n×d
Var tile_rows(Var row, std::size_t n);
// x[j,:] * factors[j]; factors is q×1.
Var scale_rows(Var x, Var factors);
// out[j] = <a[j,:], b[j,:]>, q×1.
Var rowwise_dot(Var a, Var b);
// -Σ z·log p + (1-z)·log(1-p), p clamped to [eps, 1-eps].
Var bce_sum(Var p, const Matrix& targets);
Var add(Var a, Var b);
Var scale(Var a, double factor);
Var sum(Var a);

inline constexpr double kBceEpsilon = 1e-7;

}  // namespace lahcn

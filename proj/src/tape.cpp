#include "lahcn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lahcn/error.hpp"
#include "lahcn/kernels.hpp"

namespace lahcn {

const Matrix& Var::value() const { return tape_->value(*this); }

Tape::Node& Tape::node(Var v) {
  if (v.tape() != this || v.id() >= nodes_.size()) throw ShapeMismatch("variable does not belong to this tape");
  return nodes_[v.id()];
}

Var Tape::constant(Matrix value) { return push(std::move(value), nullptr); }

Var Tape::parameter(const std::string& name, const Matrix& value) {
  if (!registry_.emplace(name, Registered{value.rows(), value.cols()}).second) {
    throw ConfigError("parameter registered twice: " + name);
  }
  Node n;
  n.ref = &value;
  n.param = name;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::gather_rows(const std::string& name, const Matrix& table, std::span<const int> rows) {
  auto it = tables_.find(name);
  if (it == tables_.end()) {
    if (!registry_.emplace(name, Registered{table.rows(), table.cols()}).second) {
      throw ConfigError("parameter registered twice: " + name);
    }
    tables_.emplace(name, &table);
  } else if (it->second != &table) {
    throw ConfigError("table name reused for a different tensor: " + name);
  }

  Matrix out(rows.size(), table.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || static_cast<std::size_t>(rows[r]) >= table.rows()) {
      throw ShapeMismatch("gather index out of range for " + name);
    }
    auto src = table.row_span(static_cast<std::size_t>(rows[r]));
    std::copy(src.begin(), src.end(), out.row_span(r).begin());
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return push(std::move(out), [name, idx = std::move(idx)](Tape& t, std::size_t self) {
    Matrix& dst = t.sink_->at(name);
    const Matrix& g = t.grad(self);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto gr = g.row_span(r);
      auto dr = dst.row_span(static_cast<std::size_t>(idx[r]));
      for (std::size_t c = 0; c < gr.size(); ++c) dr[c] += gr[c];
    }
  });
}

const Matrix& Tape::value(Var v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) throw ShapeMismatch("variable does not belong to this tape");
  return value_at(v.id());
}

const Matrix& Tape::value_at(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.ref ? *n.ref : n.value;
}

Var Tape::push(Matrix value, BackwardFn backward) {
  if (!value.all_finite()) throw NonFiniteError("operation produced a non-finite value");
  Node n;
  n.value = std::move(value);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Matrix& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (sink_ && !n.param.empty()) return sink_->at(n.param);
  if (!n.has_grad) {
    const Matrix& v = value_at(id);
    n.grad = Matrix(v.rows(), v.cols());
    n.has_grad = true;
  }
  return n.grad;
}

GradientMap Tape::backward(Var loss) {
  GradientMap out;
  backward(loss, out);
  return out;
}

void Tape::backward(Var loss, GradientMap& into) {
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw NotScalarError("backward requires a 1x1 loss, got " + lv.shape_string());
  }
  for (const auto& [name, shape] : registry_) {
    auto it = into.find(name);
    if (it == into.end()) {
      into.emplace(name, Matrix(shape.rows, shape.cols));
    } else if (it->second.rows() != shape.rows || it->second.cols() != shape.cols) {
      throw ShapeMismatch("gradient buffer shape mismatch for " + name);
    }
  }
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Matrix();
  }
  sink_ = &into;
  grad(loss.id())(0, 0) = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    if (n.backward) {
      n.backward(*this, i);
    }
  }
  sink_ = nullptr;
}

std::vector<std::string> Tape::parameter_names() const {
  std::vector<std::string> names;
  for (const auto& [name, _] : registry_) names.push_back(name);
  return names;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

Tape& tape_of(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) throw ShapeMismatch("variables on different tapes");
  return *a.tape();
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeMismatch("matmul: " + av.shape_string() + " * " + bv.shape_string());
  }
  const kernels::Dims d{av.rows(), bv.cols(), av.cols()};
  Matrix out(d.m, d.n);
  kernels::gemm_nn(d, av.data(), bv.data(), out.data());
  return t.push(std::move(out), [ia = a.id(), ib = b.id(), d](Tape& t, std::size_t self) {
    // dA += G·Bᵀ, dB += Aᵀ·G
    kernels::gemm_nt({d.m, d.k, d.n}, t.grad(self).data(), t.value_at(ib).data(), t.grad(ia).data());
    kernels::gemm_tn({d.k, d.n, d.m}, t.value_at(ia).data(), t.grad(self).data(), t.grad(ib).data());
  });
}

Var transpose(Var a) {
  Tape& t = *a.tape();
  return t.push(a.value().transposed(), [ia = a.id()](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(ia);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(c, r) += g(r, c);
  });
}

Var affine(Var x, Var w, Var b) {
  Tape& t = tape_of(x, w);
  tape_of(w, b);
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  const Matrix& bv = b.value();
  if (xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols()) {
    throw ShapeMismatch("affine: x " + xv.shape_string() + ", W " + wv.shape_string() + ", b " +
                        bv.shape_string());
  }
  const kernels::Dims d{xv.rows(), wv.cols(), xv.cols()};
  Matrix out(d.m, d.n);
  for (std::size_t r = 0; r < d.m; ++r) {
    auto row = out.row_span(r);
    std::copy(bv.data().begin(), bv.data().end(), row.begin());
  }
  kernels::gemm_nn(d, xv.data(), wv.data(), out.data());
  return t.push(std::move(out),
                [ix = x.id(), iw = w.id(), ib = b.id(), d](Tape& t, std::size_t self) {
                  const Matrix& g = t.grad(self);
                  kernels::gemm_nt({d.m, d.k, d.n}, g.data(), t.value_at(iw).data(), t.grad(ix).data());
                  kernels::gemm_tn({d.k, d.n, d.m}, t.value_at(ix).data(), g.data(), t.grad(iw).data());
                  Matrix& gb = t.grad(ib);
                  for (std::size_t r = 0; r < d.m; ++r)
                    for (std::size_t c = 0; c < d.n; ++c) gb(0, c) += g(r, c);
                });
}

Var activate(Var x, ActivationSpec act) {
  Tape& t = *x.tape();
  if (act.kind == Activation::kLeakyRelu && !(act.slope > 0.0 && act.slope < 1.0)) {
    throw ConfigError("leaky_relu slope must lie in (0,1)");
  }
  const Matrix& xv = x.value();
  Matrix out(xv.rows(), xv.cols());
  auto in = xv.data();
  auto o = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = in[i];
    switch (act.kind) {
      case Activation::kLinear: o[i] = v; break;
      case Activation::kRelu: o[i] = v > 0.0 ? v : 0.0; break;
      case Activation::kLeakyRelu: o[i] = v > 0.0 ? v : act.slope * v; break;
      case Activation::kSigmoid: o[i] = sigmoid(v); break;
      case Activation::kTanh: o[i] = std::tanh(v); break;
    }
  }
  return t.push(std::move(out), [ix = x.id(), act](Tape& t, std::size_t self) {
    auto g = t.grad(self).data();
    auto in = t.value_at(ix).data();
    auto y = t.value_at(self).data();
    auto dx = t.grad(ix).data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      double deriv = 1.0;
      switch (act.kind) {
        case Activation::kLinear: break;
        case Activation::kRelu: deriv = in[i] > 0.0 ? 1.0 : 0.0; break;
        case Activation::kLeakyRelu: deriv = in[i] > 0.0 ? 1.0 : act.slope; break;
        case Activation::kSigmoid: deriv = y[i] * (1.0 - y[i]); break;
        case Activation::kTanh: deriv = 1.0 - y[i] * y[i]; break;
      }
      dx[i] += g[i] * deriv;
    }
  });
}

Var row_softmax_masked(Var x, std::span<const double> mask) {
  Tape& t = *x.tape();
  const Matrix& xv = x.value();
  if (mask.size() != xv.cols()) {
    throw ShapeMismatch("softmax mask length " + std::to_string(mask.size()) + " vs " +
                        std::to_string(xv.cols()) + " columns");
  }
  if (std::none_of(mask.begin(), mask.end(), [](double m) { return m != 0.0; })) {
    throw AllMaskedError("softmax mask has no unmasked position");
  }
  Matrix out(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto in = xv.row_span(r);
    auto o = out.row_span(r);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < in.size(); ++c)
      if (mask[c] != 0.0) mx = std::max(mx, in[c]);
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      if (mask[c] != 0.0) {
        o[c] = std::exp(in[c] - mx);
        total += o[c];
      }
    }
    for (std::size_t c = 0; c < in.size(); ++c) o[c] = mask[c] != 0.0 ? o[c] / total : 0.0;
  }
  return t.push(std::move(out), [ix = x.id()](Tape& t, std::size_t self) {
    const Matrix& y = t.value_at(self);
    const Matrix& g = t.grad(self);
    Matrix& dx = t.grad(ix);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      auto yr = y.row_span(r);
      auto gr = g.row_span(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < yr.size(); ++c) dot += gr[c] * yr[c];
      auto dr = dx.row_span(r);
      for (std::size_t c = 0; c < yr.size(); ++c) dr[c] += yr[c] * (gr[c] - dot);
    }
  });
}

Var row_softmax(Var x) {
  std::vector<double> mask(x.cols(), 1.0);
  return row_softmax_masked(x, mask);
}

Var row_average(Var x) {
  Tape& t = *x.tape();
  const Matrix& xv = x.value();
  if (xv.cols() == 0) throw EmptyAxis("row_average over zero columns");
  Matrix out(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double s = 0.0;
    for (double v : xv.row_span(r)) s += v;
    out(r, 0) = s / static_cast<double>(xv.cols());
  }
  return t.push(std::move(out), [ix = x.id()](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& dx = t.grad(ix);
    const double inv = 1.0 / static_cast<double>(dx.cols());
    for (std::size_t r = 0; r < dx.rows(); ++r)
      for (double& v : dx.row_span(r)) v += g(r, 0) * inv;
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeMismatch("concat_cols of zero parts");
  Tape& t = *parts.front().tape();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    tape_of(parts.front(), p);
    if (p.rows() != rows) throw ShapeMismatch("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::size_t> ids;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Matrix& pv = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < pv.cols(); ++c) out(r, offset + c) = pv(r, c);
    offset += pv.cols();
    ids.push_back(p.id());
  }
  return t.push(std::move(out), [ids = std::move(ids)](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    std::size_t offset = 0;
    for (std::size_t id : ids) {
      Matrix& dp = t.grad(id);
      for (std::size_t r = 0; r < dp.rows(); ++r)
        for (std::size_t c = 0; c < dp.cols(); ++c) dp(r, c) += g(r, offset + c);
      offset += dp.cols();
    }
  });
}

Var tile_rows(Var row, std::size_t n) {
  Tape& t = *row.tape();
  const Matrix& rv = row.value();
  if (rv.rows() != 1) throw ShapeMismatch("tile_rows expects a single row, got " + rv.shape_string());
  Matrix out(n, rv.cols());
  for (std::size_t r = 0; r < n; ++r) std::copy(rv.data().begin(), rv.data().end(), out.row_span(r).begin());
  return t.push(std::move(out), [ir = row.id()](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& dr = t.grad(ir);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) dr(0, c) += g(r, c);
  });
}

Var scale_rows(Var x, Var factors) {
  Tape& t = tape_of(x, factors);
  const Matrix& xv = x.value();
  const Matrix& fv = factors.value();
  if (fv.cols() != 1 || fv.rows() != xv.rows()) {
    throw ShapeMismatch("scale_rows: " + xv.shape_string() + " by " + fv.shape_string());
  }
  Matrix out(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) = fv(r, 0) * xv(r, c);
  return t.push(std::move(out), [ix = x.id(), iff = factors.id()](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& xv = t.value_at(ix);
    const Matrix& fv = t.value_at(iff);
    Matrix& dx = t.grad(ix);
    for (std::size_t r = 0; r < xv.rows(); ++r)
      for (std::size_t c = 0; c < xv.cols(); ++c) dx(r, c) += g(r, c) * fv(r, 0);
    Matrix& df = t.grad(iff);
    for (std::size_t r = 0; r < xv.rows(); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < xv.cols(); ++c) s += g(r, c) * xv(r, c);
      df(r, 0) += s;
    }
  });
}

Var rowwise_dot(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require_same_shape(av, bv, "rowwise_dot");
  Matrix out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < av.cols(); ++c) s += av(r, c) * bv(r, c);
    out(r, 0) = s;
  }
  return t.push(std::move(out), [ia = a.id(), ib = b.id()](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& av = t.value_at(ia);
    const Matrix& bv = t.value_at(ib);
    Matrix& da = t.grad(ia);
    for (std::size_t r = 0; r < av.rows(); ++r)
      for (std::size_t c = 0; c < av.cols(); ++c) da(r, c) += g(r, 0) * bv(r, c);
    Matrix& db = t.grad(ib);
    for (std::size_t r = 0; r < av.rows(); ++r)
      for (std::size_t c = 0; c < av.cols(); ++c) db(r, c) += g(r, 0) * av(r, c);
  });
}

Var bce_sum(Var p, const Matrix& targets) {
  Tape& t = *p.tape();
  const Matrix& pv = p.value();
  require_same_shape(pv, targets, "bce_sum");
  double loss = 0.0;
  auto pd = pv.data();
  auto zd = targets.data();
  for (std::size_t i = 0; i < pd.size(); ++i) {
    const double q = std::clamp(pd[i], kBceEpsilon, 1.0 - kBceEpsilon);
    loss -= zd[i] * std::log(q) + (1.0 - zd[i]) * std::log(1.0 - q);
  }
  return t.push(Matrix(1, 1, loss), [ip = p.id(), z = targets](Tape& t, std::size_t self) {
    const double g = t.grad(self)(0, 0);
    auto pd = t.value_at(ip).data();
    auto zd = z.data();
    auto dp = t.grad(ip).data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      const double q = pd[i];
      // The clamp has zero derivative outside [eps, 1-eps].
      if (q < kBceEpsilon || q > 1.0 - kBceEpsilon) continue;
      dp[i] += g * (-zd[i] / q + (1.0 - zd[i]) / (1.0 - q));
    }
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  out.add_scaled(b.value());
  return t.push(std::move(out), [ia = a.id(), ib = b.id()](Tape& t, std::size_t self) {
    t.grad(ia).add_scaled(t.grad(self));
    t.grad(ib).add_scaled(t.grad(self));
  });
}

Var scale(Var a, double factor) {
  Tape& t = *a.tape();
  Matrix out = a.value();
  for (double& v : out.data()) v *= factor;
  return t.push(std::move(out), [ia = a.id(), factor](Tape& t, std::size_t self) {
    t.grad(ia).add_scaled(t.grad(self), factor);
  });
}

Var sum(Var a) {
  Tape& t = *a.tape();
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return t.push(Matrix(1, 1, s), [ia = a.id()](Tape& t, std::size_t self) {
    const double g = t.grad(self)(0, 0);
    for (double& v : t.grad(ia).data()) v += g;
  });
}

}  // namespace lahcn

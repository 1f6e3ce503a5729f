#include "mixagg/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <unordered_set>

#include "mixagg/errors.hpp"

namespace mixagg {

template <typename T>
void Node<T>::accumulate_grad(const BasicTensor<T>& g) {
  if (g.dims() != value.dims()) {
    throw ShapeError("gradient dims " + to_string(g.dims()) + " do not match value dims " +
                     to_string(value.dims()));
  }
  if (grad.empty()) {
    grad = g;
    return;
  }
  auto dst = grad.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename T>
Var<T> Var<T>::leaf(BasicTensor<T> value, bool requires_grad) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Var<T>(std::move(node));
}

template <typename T>
BasicTensor<T> Var<T>::grad() const {
  if (node_->grad.empty()) return BasicTensor<T>(node_->value.dims());
  return node_->grad;
}

template <typename T>
Var<T> make_op(BasicTensor<T> value, std::vector<Var<T>> parents,
               std::function<void(Node<T>&)> backward_fn) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  for (const auto& p : parents) {
    if (p.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->parents.reserve(parents.size());
    for (const auto& p : parents) node->parents.push_back(p.shared());
    node->backward_fn = std::move(backward_fn);
  }
  return Var<T>(std::move(node));
}

namespace {

template <typename T>
Var<T> make_result(BasicTensor<T> value, std::vector<Var<T>> parents,
                   std::function<void(Node<T>&)> backward_fn) {
  return make_op<T>(std::move(value), std::move(parents), std::move(backward_fn));
}

template <typename T>
void require_same_dims(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.dims() != b.dims()) {
    throw ShapeError(std::string(op) + ": dims " + to_string(a.dims()) + " vs " +
                     to_string(b.dims()));
  }
}

template <typename T>
void require_matrix(const Var<T>& a, const char* op) {
  if (a.value().rank() != 2) {
    throw ShapeError(std::string(op) + " expects a matrix, got dims " + to_string(a.dims()));
  }
}

template <typename T>
Node<T>& parent(Node<T>& self, std::size_t i) {
  return *self.parents[i];
}

}  // namespace

template <typename T>
void backward(const Var<T>& root) {
  if (!root) throw ContractError("backward on an empty variable");
  if (root.value().size() != 1) {
    throw ContractError("backward needs a scalar root, got dims " + to_string(root.dims()));
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  visited.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->accumulate_grad(BasicTensor<T>::full(root.dims(), T{1}));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  auto out = kernels::matmul(a.value(), b.value());
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& self) {
    auto& pa = parent(self, 0);
    auto& pb = parent(self, 1);
    if (pa.requires_grad) pa.accumulate_grad(kernels::matmul_nt(self.grad, pb.value));
    if (pb.requires_grad) pb.accumulate_grad(kernels::matmul_tn(pa.value, self.grad));
  });
}

template <typename T>
Var<T> transpose(const Var<T>& a) {
  require_matrix(a, "transpose");
  return make_result<T>(kernels::transpose(a.value()), {a}, [](Node<T>& self) {
    parent(self, 0).accumulate_grad(kernels::transpose(self.grad));
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_dims(a, b, "add");
  BasicTensor<T> out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& self) {
    for (std::size_t i = 0; i < 2; ++i) {
      if (parent(self, i).requires_grad) parent(self, i).accumulate_grad(self.grad);
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_dims(a, b, "mul");
  BasicTensor<T> out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& self) {
    auto& pa = parent(self, 0);
    auto& pb = parent(self, 1);
    const auto g = self.grad.data();
    if (pa.requires_grad) {
      BasicTensor<T> ga = pb.value;
      auto d = ga.data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= g[i];
      pa.accumulate_grad(ga);
    }
    if (pb.requires_grad) {
      BasicTensor<T> gb = pa.value;
      auto d = gb.data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= g[i];
      pb.accumulate_grad(gb);
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  BasicTensor<T> out = a.value();
  for (auto& v : out.data()) v *= factor;
  return make_result<T>(std::move(out), {a}, [factor](Node<T>& self) {
    BasicTensor<T> g = self.grad;
    for (auto& v : g.data()) v *= factor;
    parent(self, 0).accumulate_grad(g);
  });
}

template <typename T>
Var<T> add_row_bias(const Var<T>& x, const Var<T>& bias) {
  require_matrix(x, "add_row_bias");
  const std::size_t m = x.value().rows(), p = x.value().cols();
  if (bias.value().size() != p) {
    throw ShapeError("add_row_bias: bias dims " + to_string(bias.dims()) +
                     " do not match row length of " + to_string(x.dims()));
  }
  BasicTensor<T> out = x.value();
  const auto b = bias.value().data();
  for (std::size_t i = 0; i < m; ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < p; ++j) r[j] += b[j];
  }
  return make_result<T>(std::move(out), {x, bias}, [m, p](Node<T>& self) {
    auto& px = parent(self, 0);
    auto& pb = parent(self, 1);
    if (px.requires_grad) px.accumulate_grad(self.grad);
    if (pb.requires_grad) {
      BasicTensor<T> gb(pb.value.dims());
      auto d = gb.data();
      for (std::size_t i = 0; i < m; ++i) {
        auto r = std::as_const(self.grad).row(i);
        for (std::size_t j = 0; j < p; ++j) d[j] += r[j];
      }
      pb.accumulate_grad(gb);
    }
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  BasicTensor<T> out = x.value();
  for (auto& v : out.data()) v = v > T{0} ? v : T{0};
  return make_result<T>(std::move(out), {x}, [](Node<T>& self) {
    auto& px = parent(self, 0);
    BasicTensor<T> g = self.grad;
    auto d = g.data();
    const auto in = px.value.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!(in[i] > T{0})) d[i] = T{0};
    }
    px.accumulate_grad(g);
  });
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps) {
  require_matrix(x, "layer_norm");
  if (!(eps > T{0})) throw ParamError("layer_norm eps must be positive");
  const std::size_t m = x.value().rows(), n = x.value().cols();
  if (gamma.value().size() != n || beta.value().size() != n) {
    throw ShapeError("layer_norm: gamma " + to_string(gamma.dims()) + " / beta " +
                     to_string(beta.dims()) + " do not match row length " + std::to_string(n));
  }
  BasicTensor<T> xhat({m, n});
  std::vector<T> rstd(m);
  BasicTensor<T> out({m, n});
  const auto g = gamma.value().data();
  const auto b = beta.value().data();
  for (std::size_t i = 0; i < m; ++i) {
    const auto r = x.value().row(i);
    T mean{0};
    for (auto v : r) mean += v;
    mean /= static_cast<T>(n);
    T var{0};
    for (auto v : r) var += (v - mean) * (v - mean);
    var /= static_cast<T>(n);
    rstd[i] = T{1} / std::sqrt(var + eps);
    auto xh = xhat.row(i);
    auto o = out.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      xh[j] = (r[j] - mean) * rstd[i];
      o[j] = g[j] * xh[j] + b[j];
    }
  }
  return make_result<T>(
      std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), rstd = std::move(rstd), m, n](Node<T>& self) {
        auto& px = parent(self, 0);
        auto& pg = parent(self, 1);
        auto& pb = parent(self, 2);
        const auto& dy = self.grad;
        if (pg.requires_grad || pb.requires_grad) {
          BasicTensor<T> dg(pg.value.dims());
          BasicTensor<T> db(pb.value.dims());
          for (std::size_t i = 0; i < m; ++i) {
            const auto d = dy.row(i);
            const auto xh = xhat.row(i);
            for (std::size_t j = 0; j < n; ++j) {
              dg[j] += d[j] * xh[j];
              db[j] += d[j];
            }
          }
          if (pg.requires_grad) pg.accumulate_grad(dg);
          if (pb.requires_grad) pb.accumulate_grad(db);
        }
        if (px.requires_grad) {
          const auto gv = pg.value.data();
          BasicTensor<T> dx({m, n});
          std::vector<T> dxhat(n);
          for (std::size_t i = 0; i < m; ++i) {
            const auto d = dy.row(i);
            const auto xh = xhat.row(i);
            T mean_d{0}, mean_dx{0};
            for (std::size_t j = 0; j < n; ++j) {
              dxhat[j] = d[j] * gv[j];
              mean_d += dxhat[j];
              mean_dx += dxhat[j] * xh[j];
            }
            mean_d /= static_cast<T>(n);
            mean_dx /= static_cast<T>(n);
            auto o = dx.row(i);
            for (std::size_t j = 0; j < n; ++j) {
              o[j] = rstd[i] * (dxhat[j] - mean_d - xh[j] * mean_dx);
            }
          }
          px.accumulate_grad(dx);
        }
      });
}

template <typename T>
Var<T> l2_normalize_rows(const Var<T>& x) {
  require_matrix(x, "l2_normalize_rows");
  const std::size_t m = x.value().rows(), n = x.value().cols();
  BasicTensor<T> out = x.value();
  std::vector<T> norms(m);
  for (std::size_t i = 0; i < m; ++i) {
    auto r = out.row(i);
    T ss{0};
    for (auto v : r) ss += v * v;
    norms[i] = std::max(std::sqrt(ss), T(1e-12));
    for (auto& v : r) v /= norms[i];
  }
  BasicTensor<T> saved = out;
  return make_result<T>(
      std::move(out), {x}, [y = std::move(saved), norms = std::move(norms), m, n](Node<T>& self) {
        BasicTensor<T> dx({m, n});
        for (std::size_t i = 0; i < m; ++i) {
          const auto d = self.grad.row(i);
          const auto yr = y.row(i);
          T dot{0};
          for (std::size_t j = 0; j < n; ++j) dot += yr[j] * d[j];
          auto o = dx.row(i);
          for (std::size_t j = 0; j < n; ++j) o[j] = (d[j] - yr[j] * dot) / norms[i];
        }
        parent(self, 0).accumulate_grad(dx);
      });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape dims) {
  auto out = x.value().reshaped(std::move(dims));
  return make_result<T>(std::move(out), {x}, [](Node<T>& self) {
    auto& px = parent(self, 0);
    px.accumulate_grad(self.grad.reshaped(px.value.dims()));
  });
}

template <typename T>
Var<T> slice_rows(const Var<T>& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_rows");
  const std::size_t m = x.value().rows(), n = x.value().cols();
  if (begin >= end || end > m) {
    throw ShapeError("slice_rows [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for dims " + to_string(x.dims()));
  }
  const auto src = x.value().data();
  std::vector<T> data(src.begin() + begin * n, src.begin() + end * n);
  BasicTensor<T> out({end - begin, n}, std::move(data));
  return make_result<T>(std::move(out), {x}, [begin, n](Node<T>& self) {
    auto& px = parent(self, 0);
    BasicTensor<T> g(px.value.dims());
    const auto src = self.grad.data();
    std::copy(src.begin(), src.end(), g.data().begin() + begin * n);
    px.accumulate_grad(g);
  });
}

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows needs at least one part");
  const std::size_t n = parts.front().value().cols();
  std::size_t m = 0;
  for (const auto& p : parts) {
    require_matrix(p, "concat_rows");
    if (p.value().cols() != n) {
      throw ShapeError("concat_rows: column mismatch " + to_string(p.dims()) + " vs " +
                       std::to_string(n) + " columns");
    }
    m += p.value().rows();
  }
  std::vector<T> data;
  data.reserve(m * n);
  std::vector<std::size_t> offsets;
  offsets.reserve(parts.size());
  for (const auto& p : parts) {
    offsets.push_back(data.size());
    const auto src = p.value().data();
    data.insert(data.end(), src.begin(), src.end());
  }
  BasicTensor<T> out({m, n}, std::move(data));
  return make_result<T>(std::move(out), parts, [offsets = std::move(offsets)](Node<T>& self) {
    const auto src = self.grad.data();
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      auto& p = *self.parents[i];
      if (!p.requires_grad) continue;
      const auto begin = src.begin() + static_cast<std::ptrdiff_t>(offsets[i]);
      std::vector<T> g(begin, begin + static_cast<std::ptrdiff_t>(p.value.size()));
      p.accumulate_grad(BasicTensor<T>(p.value.dims(), std::move(g)));
    }
  });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  T total{0};
  for (auto v : x.value().data()) total += v;
  return make_result<T>(BasicTensor<T>({1}, {total}), {x}, [](Node<T>& self) {
    auto& px = parent(self, 0);
    px.accumulate_grad(BasicTensor<T>::full(px.value.dims(), self.grad[0]));
  });
}

template <typename T>
Var<T> row_mean(const Var<T>& x) {
  require_matrix(x, "row_mean");
  const std::size_t m = x.value().rows(), n = x.value().cols();
  BasicTensor<T> out({1, m});
  for (std::size_t i = 0; i < m; ++i) {
    T s{0};
    for (auto v : x.value().row(i)) s += v;
    out[i] = s / static_cast<T>(n);
  }
  return make_result<T>(std::move(out), {x}, [m, n](Node<T>& self) {
    BasicTensor<T> g({m, n});
    for (std::size_t i = 0; i < m; ++i) {
      const T gi = self.grad[i] / static_cast<T>(n);
      for (auto& v : g.row(i)) v = gi;
    }
    parent(self, 0).accumulate_grad(g);
  });
}

#define MIXAGG_INSTANTIATE_AUTOGRAD(T)                                                  \
  template struct Node<T>;                                                              \
  template class Var<T>;                                                                \
  template void backward(const Var<T>&);                                                \
  template Var<T> make_op(BasicTensor<T>, std::vector<Var<T>>, std::function<void(Node<T>&)>); \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                                 \
  template Var<T> transpose(const Var<T>&);                                             \
  template Var<T> add(const Var<T>&, const Var<T>&);                                    \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                    \
  template Var<T> scale(const Var<T>&, T);                                              \
  template Var<T> add_row_bias(const Var<T>&, const Var<T>&);                           \
  template Var<T> relu(const Var<T>&);                                                  \
  template Var<T> layer_norm(const Var<T>&, const Var<T>&, const Var<T>&, T);           \
  template Var<T> l2_normalize_rows(const Var<T>&);                                     \
  template Var<T> reshape(const Var<T>&, Shape);                                        \
  template Var<T> slice_rows(const Var<T>&, std::size_t, std::size_t);                  \
  template Var<T> concat_rows(const std::vector<Var<T>>&);                              \
  template Var<T> sum(const Var<T>&);                                                   \
  template Var<T> row_mean(const Var<T>&);

MIXAGG_INSTANTIATE_AUTOGRAD(float)
MIXAGG_INSTANTIATE_AUTOGRAD(double)

#undef MIXAGG_INSTANTIATE_AUTOGRAD

}  // namespace mixagg

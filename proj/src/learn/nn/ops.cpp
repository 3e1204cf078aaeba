// Copyright 2026 The LEARN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "learn/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace learn::nn {

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

AttentionMask AttentionMask::causal(std::size_t length) {
  AttentionMask mask(length, length);
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t s = 0; s <= t; ++s) mask.set(t, s, true);
  }
  return mask;
}

AttentionMask AttentionMask::diagonal(std::size_t length) {
  AttentionMask mask(length, length);
  for (std::size_t t = 0; t < length; ++t) mask.set(t, t, true);
  return mask;
}

namespace {

template <class T>
using NodeRef = std::shared_ptr<Node<T>>;

template <class T>
Tensor<T> make_result(Shape shape, std::vector<T> value,
                      std::vector<NodeRef<T>> parents,
                      std::function<void(Node<T>&)> backward_fn) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  const bool needs = std::any_of(parents.begin(), parents.end(),
                                 [](const auto& p) { return p->requires_grad; });
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor<T>(std::move(node));
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw Error(ErrorCode::kShapeMismatch, std::string(op) + ": " +
                                             shape_string(a) + " vs " +
                                             shape_string(b));
}

template <class T>
void require_matrix(const Tensor<T>& t, const char* op) {
  if (t.rank() != 2) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(op) + ": expected a matrix, got " +
                    shape_string(t.shape()));
  }
}

// c[m,n] += a[m,k] * b[k,n]
template <class T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    const T* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ai[p];
      const T* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// c[m,n] += a[m,k] * b[n,k]^T
template <class T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* bj = b + j * k;
      T acc = T(0);
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      c[i * n + j] += acc;
    }
  }
}

// c[k,n] += a[m,k]^T * b[m,n]
template <class T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    const T* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ai[p];
      T* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

}  // namespace

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) shape_error("matmul", a.shape(), b.shape());
  std::vector<T> out(m * n, T(0));
  gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  return make_result<T>(
      {m, n}, std::move(out), {a.node_ptr(), b.node_ptr()},
      [m, k, n](Node<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
          gemm_nt(self.grad.data(), pb.value.data(), pa.ensure_grad().data(), m,
                  n, k);
        }
        if (pb.requires_grad) {
          gemm_tn(pa.value.data(), self.grad.data(), pb.ensure_grad().data(), m,
                  k, n);
        }
      });
}

template <class T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) shape_error("matmul_nt", a.shape(), b.shape());
  std::vector<T> out(m * n, T(0));
  gemm_nt(a.data().data(), b.data().data(), out.data(), m, k, n);
  return make_result<T>(
      {m, n}, std::move(out), {a.node_ptr(), b.node_ptr()},
      [m, k, n](Node<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
          gemm_nn(self.grad.data(), pb.value.data(), pa.ensure_grad().data(), m,
                  n, k);
        }
        if (pb.requires_grad) {
          gemm_tn(self.grad.data(), pa.value.data(), pb.ensure_grad().data(), m,
                  n, k);
        }
      });
}

template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w,
                 const Tensor<T>& bias) {
  require_matrix(x, "linear");
  require_matrix(w, "linear");
  const std::size_t m = x.rows(), k = x.cols(), n = w.cols();
  if (w.rows() != k) shape_error("linear", x.shape(), w.shape());
  const bool has_bias = bias.defined();
  if (has_bias && bias.size() != n) shape_error("linear", w.shape(), bias.shape());
  std::vector<T> out(m * n, T(0));
  if (has_bias) {
    for (std::size_t i = 0; i < m; ++i) {
      std::copy(bias.data().begin(), bias.data().end(), out.begin() + i * n);
    }
  }
  gemm_nn(x.data().data(), w.data().data(), out.data(), m, k, n);
  std::vector<NodeRef<T>> parents{x.node_ptr(), w.node_ptr()};
  if (has_bias) parents.push_back(bias.node_ptr());
  return make_result<T>(
      {m, n}, std::move(out), std::move(parents), [m, k, n](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        if (px.requires_grad) {
          gemm_nt(self.grad.data(), pw.value.data(), px.ensure_grad().data(), m,
                  n, k);
        }
        if (pw.requires_grad) {
          gemm_tn(px.value.data(), self.grad.data(), pw.ensure_grad().data(), m,
                  k, n);
        }
        if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
          auto gb = self.parents[2]->ensure_grad();
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) gb[j] += self.grad[i * n + j];
          }
        }
      });
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_result<T>(a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                        [](Node<T>& self) {
                          for (auto& parent : self.parents) {
                            if (!parent->requires_grad) continue;
                            auto g = parent->ensure_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) {
                              g[i] += self.grad[i];
                            }
                          }
                        });
}

template <class T>
Tensor<T> add_bias(const Tensor<T>& a, const Tensor<T>& bias) {
  require_matrix(a, "add_bias");
  const std::size_t m = a.rows(), n = a.cols();
  if (bias.size() != n) shape_error("add_bias", a.shape(), bias.shape());
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = a.data()[i * n + j] + bias.data()[j];
    }
  }
  return make_result<T>(
      a.shape(), std::move(out), {a.node_ptr(), bias.node_ptr()},
      [m, n](Node<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
          auto g = pa.ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (pb.requires_grad) {
          auto g = pb.ensure_grad();
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
          }
        }
      });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result<T>(a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                        [](Node<T>& self) {
                          auto& pa = *self.parents[0];
                          auto& pb = *self.parents[1];
                          if (pa.requires_grad) {
                            auto g = pa.ensure_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) {
                              g[i] += self.grad[i] * pb.value[i];
                            }
                          }
                          if (pb.requires_grad) {
                            auto g = pb.ensure_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) {
                              g[i] += self.grad[i] * pa.value[i];
                            }
                          }
                        });
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  return make_result<T>(a.shape(), std::move(out), {a.node_ptr()},
                        [factor](Node<T>& self) {
                          auto g = self.parents[0]->ensure_grad();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            g[i] += self.grad[i] * factor;
                          }
                        });
}

template <class T>
Tensor<T> gelu(const Tensor<T>& a) {
  const T inv_sqrt2 = T(1) / std::sqrt(T(2));
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T x = a.data()[i];
    out[i] = T(0.5) * x * (T(1) + std::erf(x * inv_sqrt2));
  }
  return make_result<T>(
      a.shape(), std::move(out), {a.node_ptr()}, [inv_sqrt2](Node<T>& self) {
        auto& pa = *self.parents[0];
        auto g = pa.ensure_grad();
        const T inv_sqrt_2pi = T(1) / std::sqrt(T(2) * std::numbers::pi_v<T>);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const T x = pa.value[i];
          const T cdf = T(0.5) * (T(1) + std::erf(x * inv_sqrt2));
          const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * x * x);
          g[i] += self.grad[i] * (cdf + x * pdf);
        }
      });
}

template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain,
                     const Tensor<T>& bias, T eps) {
  require_matrix(x, "layer_norm");
  const std::size_t m = x.rows(), n = x.cols();
  if (gain.size() != n) shape_error("layer_norm", x.shape(), gain.shape());
  if (bias.size() != n) shape_error("layer_norm", x.shape(), bias.shape());
  std::vector<T> xhat(m * n);
  std::vector<T> inv_std(m);
  std::vector<T> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const T* xi = x.data().data() + i * n;
    T mu = T(0);
    for (std::size_t j = 0; j < n; ++j) mu += xi[j];
    mu /= static_cast<T>(n);
    T var = T(0);
    for (std::size_t j = 0; j < n; ++j) var += (xi[j] - mu) * (xi[j] - mu);
    var /= static_cast<T>(n);
    inv_std[i] = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      const T h = (xi[j] - mu) * inv_std[i];
      xhat[i * n + j] = h;
      out[i * n + j] = h * gain.data()[j] + bias.data()[j];
    }
  }
  return make_result<T>(
      x.shape(), std::move(out),
      {x.node_ptr(), gain.node_ptr(), bias.node_ptr()},
      [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        const T* dy = self.grad.data();
        if (pg.requires_grad) {
          auto g = pg.ensure_grad();
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
              g[j] += dy[i * n + j] * xhat[i * n + j];
            }
          }
        }
        if (pb.requires_grad) {
          auto g = pb.ensure_grad();
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) g[j] += dy[i * n + j];
          }
        }
        if (px.requires_grad) {
          auto g = px.ensure_grad();
          const T inv_n = T(1) / static_cast<T>(n);
          for (std::size_t i = 0; i < m; ++i) {
            T mean_d = T(0), mean_dx = T(0);
            for (std::size_t j = 0; j < n; ++j) {
              const T d = dy[i * n + j] * pg.value[j];
              mean_d += d;
              mean_dx += d * xhat[i * n + j];
            }
            mean_d *= inv_n;
            mean_dx *= inv_n;
            for (std::size_t j = 0; j < n; ++j) {
              const T d = dy[i * n + j] * pg.value[j];
              g[i * n + j] +=
                  inv_std[i] * (d - mean_d - xhat[i * n + j] * mean_dx);
            }
          }
        }
      });
}

namespace {

// Softmax over the entries of `row` flagged by `allowed` (all when null);
// others get exactly zero.
template <class T>
void softmax_row(const T* row, T* out, std::size_t n,
                 const std::uint8_t* allowed) {
  T max = -std::numeric_limits<T>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    if (allowed == nullptr || allowed[j]) max = std::max(max, row[j]);
  }
  T total = T(0);
  for (std::size_t j = 0; j < n; ++j) {
    if (allowed == nullptr || allowed[j]) {
      out[j] = std::exp(row[j] - max);
      total += out[j];
    } else {
      out[j] = T(0);
    }
  }
  for (std::size_t j = 0; j < n; ++j) out[j] /= total;
}

}  // namespace

template <class T>
Tensor<T> softmax(const Tensor<T>& a) {
  require_matrix(a, "softmax");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<T> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    softmax_row(a.data().data() + i * n, out.data() + i * n, n,
                static_cast<const std::uint8_t*>(nullptr));
  }
  return make_result<T>(a.shape(), std::move(out), {a.node_ptr()},
                        [m, n](Node<T>& self) {
                          auto g = self.parents[0]->ensure_grad();
                          for (std::size_t i = 0; i < m; ++i) {
                            const T* y = self.value.data() + i * n;
                            const T* dy = self.grad.data() + i * n;
                            T dot = T(0);
                            for (std::size_t j = 0; j < n; ++j) dot += y[j] * dy[j];
                            for (std::size_t j = 0; j < n; ++j) {
                              g[i * n + j] += y[j] * (dy[j] - dot);
                            }
                          }
                        });
}

template <class T>
Tensor<T> masked_attention(const Tensor<T>& q, const Tensor<T>& k,
                           const Tensor<T>& v, const AttentionMask& mask,
                           std::size_t heads) {
  require_matrix(q, "masked_attention");
  require_matrix(k, "masked_attention");
  require_matrix(v, "masked_attention");
  const std::size_t lq = q.rows(), lk = k.rows(), d = q.cols(), dv = v.cols();
  if (k.cols() != d) shape_error("masked_attention", q.shape(), k.shape());
  if (v.rows() != lk) shape_error("masked_attention", k.shape(), v.shape());
  if (mask.rows() != lq || mask.cols() != lk) {
    shape_error("masked_attention", q.shape(), Shape{mask.rows(), mask.cols()});
  }
  if (heads == 0 || d % heads != 0 || dv % heads != 0) {
    throw Error(ErrorCode::kShapeMismatch,
                "masked_attention: width not divisible by heads");
  }
  std::vector<std::uint8_t> allowed(lq * lk);
  for (std::size_t t = 0; t < lq; ++t) {
    bool any = false;
    for (std::size_t s = 0; s < lk; ++s) {
      allowed[t * lk + s] = mask.allowed(t, s) ? 1 : 0;
      any = any || allowed[t * lk + s];
    }
    if (!any) {
      throw Error(ErrorCode::kAllMaskedRow,
                  "attention row " + std::to_string(t) + " is fully masked", t);
    }
  }

  const std::size_t dh = d / heads, dvh = dv / heads;
  const T scale_factor = T(1) / std::sqrt(static_cast<T>(dh));
  const T* qd = q.data().data();
  const T* kd = k.data().data();
  const T* vd = v.data().data();
  // probs[h][t][s]
  std::vector<T> probs(heads * lq * lk, T(0));
  std::vector<T> out(lq * dv, T(0));
  std::vector<T> logits(lk);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t t = 0; t < lq; ++t) {
      const std::uint8_t* row_mask = allowed.data() + t * lk;
      for (std::size_t s = 0; s < lk; ++s) {
        if (!row_mask[s]) {
          logits[s] = static_cast<T>(kMaskedLogit);
          continue;
        }
        T acc = T(0);
        for (std::size_t c = 0; c < dh; ++c) {
          acc += qd[t * d + h * dh + c] * kd[s * d + h * dh + c];
        }
        logits[s] = acc * scale_factor;
      }
      T* p = probs.data() + (h * lq + t) * lk;
      softmax_row(logits.data(), p, lk, row_mask);
      T* o = out.data() + t * dv + h * dvh;
      for (std::size_t s = 0; s < lk; ++s) {
        if (!row_mask[s]) continue;
        const T ps = p[s];
        const T* vs = vd + s * dv + h * dvh;
        for (std::size_t c = 0; c < dvh; ++c) o[c] += ps * vs[c];
      }
    }
  }

  return make_result<T>(
      {lq, dv}, std::move(out), {q.node_ptr(), k.node_ptr(), v.node_ptr()},
      [=, probs = std::move(probs), allowed = std::move(allowed)](Node<T>& self) {
        auto& pq = *self.parents[0];
        auto& pk = *self.parents[1];
        auto& pv = *self.parents[2];
        const T* dout = self.grad.data();
        T* gq = pq.requires_grad ? pq.ensure_grad().data() : nullptr;
        T* gk = pk.requires_grad ? pk.ensure_grad().data() : nullptr;
        T* gv = pv.requires_grad ? pv.ensure_grad().data() : nullptr;
        std::vector<T> dp(lk);
        for (std::size_t h = 0; h < heads; ++h) {
          for (std::size_t t = 0; t < lq; ++t) {
            const std::uint8_t* row_mask = allowed.data() + t * lk;
            const T* p = probs.data() + (h * lq + t) * lk;
            const T* dot = dout + t * dv + h * dvh;
            T weighted = T(0);
            for (std::size_t s = 0; s < lk; ++s) {
              if (!row_mask[s]) continue;
              const T* vs = pv.value.data() + s * dv + h * dvh;
              T acc = T(0);
              for (std::size_t c = 0; c < dvh; ++c) acc += dot[c] * vs[c];
              dp[s] = acc;
              weighted += acc * p[s];
              if (gv != nullptr) {
                T* gvs = gv + s * dv + h * dvh;
                for (std::size_t c = 0; c < dvh; ++c) gvs[c] += p[s] * dot[c];
              }
            }
            for (std::size_t s = 0; s < lk; ++s) {
              if (!row_mask[s]) continue;
              const T ds = p[s] * (dp[s] - weighted) * scale_factor;
              if (gq != nullptr) {
                const T* ks = pk.value.data() + s * d + h * dh;
                T* gqt = gq + t * d + h * dh;
                for (std::size_t c = 0; c < dh; ++c) gqt[c] += ds * ks[c];
              }
              if (gk != nullptr) {
                const T* qt = pq.value.data() + t * d + h * dh;
                T* gks = gk + s * d + h * dh;
                for (std::size_t c = 0; c < dh; ++c) gks[c] += ds * qt[c];
              }
            }
          }
        }
      });
}

template <class T>
Tensor<T> l2_normalize_rows(const Tensor<T>& a) {
  require_matrix(a, "l2_normalize_rows");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<T> out(m * n);
  std::vector<T> norms(m);
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a.data().data() + i * n;
    T s = T(0);
    for (std::size_t j = 0; j < n; ++j) s += ai[j] * ai[j];
    norms[i] = std::max(std::sqrt(s), std::numeric_limits<T>::min());
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = ai[j] / norms[i];
  }
  return make_result<T>(
      a.shape(), std::move(out), {a.node_ptr()},
      [m, n, norms = std::move(norms)](Node<T>& self) {
        auto g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          const T* y = self.value.data() + i * n;
          const T* dy = self.grad.data() + i * n;
          T dot = T(0);
          for (std::size_t j = 0; j < n; ++j) dot += y[j] * dy[j];
          for (std::size_t j = 0; j < n; ++j) {
            g[i * n + j] += (dy[j] - y[j] * dot) / norms[i];
          }
        }
      });
}

template <class T>
Tensor<T> gather_rows(const Tensor<T>& a, std::span<const std::size_t> rows) {
  require_matrix(a, "gather_rows");
  const std::size_t n = a.cols();
  std::vector<T> out(rows.size() * n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= a.rows()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "gather_rows: row " + std::to_string(rows[r]) +
                      " out of range " + shape_string(a.shape()));
    }
    std::copy_n(a.data().begin() + rows[r] * n, n, out.begin() + r * n);
  }
  return make_result<T>(
      {rows.size(), n}, std::move(out), {a.node_ptr()},
      [n, idx = std::vector<std::size_t>(rows.begin(), rows.end())](Node<T>& self) {
        auto g = self.parents[0]->ensure_grad();
        for (std::size_t r = 0; r < idx.size(); ++r) {
          for (std::size_t j = 0; j < n; ++j) {
            g[idx[r] * n + j] += self.grad[r * n + j];
          }
        }
      });
}

template <class T>
Tensor<T> concat_rows(std::span<const Tensor<T>> parts) {
  if (parts.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "concat_rows: no inputs");
  }
  const std::size_t n = parts.front().cols();
  std::size_t total = 0;
  std::vector<NodeRef<T>> parents;
  for (const auto& p : parts) {
    require_matrix(p, "concat_rows");
    if (p.cols() != n) shape_error("concat_rows", parts.front().shape(), p.shape());
    total += p.rows();
    parents.push_back(p.node_ptr());
  }
  std::vector<T> out;
  out.reserve(total * n);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return make_result<T>({total, n}, std::move(out), std::move(parents),
                        [](Node<T>& self) {
                          std::size_t offset = 0;
                          for (auto& parent : self.parents) {
                            const std::size_t len = parent->value.size();
                            if (parent->requires_grad) {
                              auto g = parent->ensure_grad();
                              for (std::size_t i = 0; i < len; ++i) {
                                g[i] += self.grad[offset + i];
                              }
                            }
                            offset += len;
                          }
                        });
}

template <class T>
Tensor<T> sum(const Tensor<T>& a) {
  T total = T(0);
  for (const T x : a.data()) total += x;
  return make_result<T>({1}, {total}, {a.node_ptr()}, [](Node<T>& self) {
    auto g = self.parents[0]->ensure_grad();
    for (auto& x : g) x += self.grad[0];
  });
}

template <class T>
Tensor<T> mean(const Tensor<T>& a) {
  return scale(sum(a), T(1) / static_cast<T>(a.size()));
}

template <class T>
Tensor<T> cross_entropy(const Tensor<T>& logits,
                        std::span<const std::size_t> rows,
                        std::span<const std::size_t> targets,
                        std::span<const std::uint8_t> allowed) {
  require_matrix(logits, "cross_entropy");
  const std::size_t c = logits.cols();
  const std::size_t pairs = rows.size();
  if (targets.size() != pairs || allowed.size() != pairs * c || pairs == 0) {
    throw Error(ErrorCode::kShapeMismatch,
                "cross_entropy: rows/targets/allowed sizes disagree");
  }
  std::vector<std::uint8_t> mask(allowed.begin(), allowed.end());
  std::vector<T> probs(pairs * c);
  // Loss value accumulated in double for any T.
  double total = 0.0;
  for (std::size_t p = 0; p < pairs; ++p) {
    if (rows[p] >= logits.rows() || targets[p] >= c) {
      throw Error(ErrorCode::kShapeMismatch, "cross_entropy: index out of range");
    }
    mask[p * c + targets[p]] = 1;
    const T* x = logits.data().data() + rows[p] * c;
    T* prob = probs.data() + p * c;
    softmax_row(x, prob, c, mask.data() + p * c);
    double max = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) {
      if (mask[p * c + j]) max = std::max(max, static_cast<double>(x[j]));
    }
    double se = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (mask[p * c + j]) se += std::exp(static_cast<double>(x[j]) - max);
    }
    total += max + std::log(se) - static_cast<double>(x[targets[p]]);
  }
  const T inv_pairs = T(1) / static_cast<T>(pairs);
  return make_result<T>(
      {1}, {static_cast<T>(total / static_cast<double>(pairs))}, {logits.node_ptr()},
      [c, inv_pairs, probs = std::move(probs),
       idx = std::vector<std::size_t>(rows.begin(), rows.end()),
       tgt = std::vector<std::size_t>(targets.begin(), targets.end())](Node<T>& self) {
        auto g = self.parents[0]->ensure_grad();
        const T upstream = self.grad[0] * inv_pairs;
        for (std::size_t p = 0; p < idx.size(); ++p) {
          T* gr = g.data() + idx[p] * c;
          const T* prob = probs.data() + p * c;
          for (std::size_t j = 0; j < c; ++j) gr[j] += upstream * prob[j];
          gr[tgt[p]] -= upstream;
        }
      });
}

#define LEARN_INSTANTIATE_OPS(T)                                               \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&,                \
                            const Tensor<T>&);                                 \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);             \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> scale(const Tensor<T>&, T);                               \
  template Tensor<T> gelu(const Tensor<T>&);                                   \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&,            \
                                const Tensor<T>&, T);                          \
  template Tensor<T> softmax(const Tensor<T>&);                                \
  template Tensor<T> masked_attention(const Tensor<T>&, const Tensor<T>&,      \
                                      const Tensor<T>&, const AttentionMask&,  \
                                      std::size_t);                            \
  template Tensor<T> l2_normalize_rows(const Tensor<T>&);                      \
  template Tensor<T> gather_rows(const Tensor<T>&,                             \
                                 std::span<const std::size_t>);                \
  template Tensor<T> concat_rows(std::span<const Tensor<T>>);                  \
  template Tensor<T> sum(const Tensor<T>&);                                    \
  template Tensor<T> mean(const Tensor<T>&);                                   \
  template Tensor<T> cross_entropy(                                            \
      const Tensor<T>&, std::span<const std::size_t>,                          \
      std::span<const std::size_t>, std::span<const std::uint8_t>);

LEARN_INSTANTIATE_OPS(float)
LEARN_INSTANTIATE_OPS(double)

#undef LEARN_INSTANTIATE_OPS

}  // namespace learn::nn

#pragma once

// Matrix-free linear operator algebra.
//
// A LinearOperator is an immutable pair of callables (forward, adjoint)
// with declared dimensions. Copies share the captured state, so operators
// are cheap to pass around and safe to apply concurrently.

#include "erligme/types.hpp"

#include <cmath>
#include <functional>
#include <initializer_list>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace erligme {

class LinearOperator {
 public:
  using Apply = std::function<void(VecCRef in, VecRef out)>;

  LinearOperator() = default;

  LinearOperator(Index in_dim, Index out_dim, Apply forward, Apply adjoint,
                 std::string tag)
      : in_dim_(in_dim),
        out_dim_(out_dim),
        forward_(std::move(forward)),
        adjoint_(std::move(adjoint)),
        tag_(std::move(tag)) {
    require_dim(in_dim > 0 && out_dim > 0,
                "operator '" + tag_ + "' needs positive dimensions");
  }

  Index in_dim() const { return in_dim_; }
  Index out_dim() const { return out_dim_; }
  const std::string& tag() const { return tag_; }

  /// True when the operator is known to be identically zero.
  bool is_zero() const { return zero_; }

  /// Diagonal of a square diagonal operator, or nullptr.
  const Vec* diagonal() const { return diag_.get(); }

  void apply_into(VecCRef x, VecRef out) const {
    require_dim(x.size() == in_dim_ && out.size() == out_dim_,
                "dimension mismatch applying '" + tag_ + "'");
    forward_(x, out);
  }

  void adjoint_into(VecCRef y, VecRef out) const {
    require_dim(y.size() == out_dim_ && out.size() == in_dim_,
                "dimension mismatch applying adjoint of '" + tag_ + "'");
    adjoint_(y, out);
  }

  Vec apply(VecCRef x) const {
    Vec out(out_dim_);
    apply_into(x, out);
    return out;
  }

  Vec adjoint(VecCRef y) const {
    Vec out(in_dim_);
    adjoint_into(y, out);
    return out;
  }

  LinearOperator with_tag(std::string tag) const {
    LinearOperator op = *this;
    op.tag_ = std::move(tag);
    return op;
  }

  // Structural hints; set only by the factories below.
  LinearOperator& mark_zero() {
    zero_ = true;
    return *this;
  }
  LinearOperator& mark_diagonal(Vec d) {
    diag_ = std::make_shared<const Vec>(std::move(d));
    return *this;
  }

 private:
  Index in_dim_ = 0;
  Index out_dim_ = 0;
  Apply forward_;
  Apply adjoint_;
  std::string tag_;
  bool zero_ = false;
  std::shared_ptr<const Vec> diag_;
};

// ---------------------------------------------------------------------------
// Elementary operators

inline LinearOperator identity(Index n) {
  auto copy = [](VecCRef in, VecRef out) { out = in; };
  LinearOperator op(n, n, copy, copy, "I");
  op.mark_diagonal(Vec::Ones(n));
  return op;
}

inline LinearOperator zero(Index out_dim, Index in_dim) {
  auto fill = [](VecCRef, VecRef out) { out.setZero(); };
  LinearOperator op(in_dim, out_dim, fill, fill, "O");
  op.mark_zero();
  if (in_dim == out_dim) op.mark_diagonal(Vec::Zero(in_dim));
  return op;
}

inline LinearOperator diagonal(Vec d, std::string tag = "diag") {
  auto shared = std::make_shared<const Vec>(d);
  auto mul = [shared](VecCRef in, VecRef out) {
    out = shared->cwiseProduct(in);
  };
  LinearOperator op(d.size(), d.size(), mul, mul, std::move(tag));
  if (d.isZero(0.0)) op.mark_zero();
  op.mark_diagonal(std::move(d));
  return op;
}

inline LinearOperator scaled_identity(Index n, double c) {
  if (c == 0.0) return zero(n, n);
  return diagonal(Vec::Constant(n, c), "cI");
}

/// Dense matrix wrapper (the matrix is shared, not copied per application).
inline LinearOperator dense(Mat m, std::string tag = "dense") {
  auto shared = std::make_shared<const Mat>(std::move(m));
  auto fwd = [shared](VecCRef in, VecRef out) { out.noalias() = (*shared) * in; };
  auto adj = [shared](VecCRef in, VecRef out) {
    out.noalias() = shared->transpose() * in;
  };
  return LinearOperator(shared->cols(), shared->rows(), fwd, adj, std::move(tag));
}

/// Restriction to the slice [offset, offset + len) of an n-vector.
inline LinearOperator select(Index n, Index offset, Index len) {
  require_dim(offset >= 0 && len > 0 && offset + len <= n,
              "select: slice outside the vector");
  auto fwd = [offset, len](VecCRef in, VecRef out) {
    out = in.segment(offset, len);
  };
  auto adj = [offset, len](VecCRef in, VecRef out) {
    out.setZero();
    out.segment(offset, len) = in;
  };
  return LinearOperator(n, len, fwd, adj, "S");
}

// ---------------------------------------------------------------------------
// Algebra

inline LinearOperator scale(const LinearOperator& op, double c) {
  if (c == 0.0 || op.is_zero()) return zero(op.out_dim(), op.in_dim());
  auto fwd = [op, c](VecCRef in, VecRef out) {
    op.apply_into(in, out);
    out *= c;
  };
  auto adj = [op, c](VecCRef in, VecRef out) {
    op.adjoint_into(in, out);
    out *= c;
  };
  LinearOperator res(op.in_dim(), op.out_dim(), fwd, adj,
                     std::to_string(c) + "*" + op.tag());
  if (op.diagonal()) res.mark_diagonal(c * *op.diagonal());
  return res;
}

/// The operator y -> A^T y.
inline LinearOperator transpose(const LinearOperator& op) {
  auto fwd = [op](VecCRef in, VecRef out) { op.adjoint_into(in, out); };
  auto adj = [op](VecCRef in, VecRef out) { op.apply_into(in, out); };
  LinearOperator res(op.out_dim(), op.in_dim(), fwd, adj, op.tag() + "^T");
  if (op.is_zero()) res.mark_zero();
  if (op.diagonal()) res.mark_diagonal(*op.diagonal());
  return res;
}

/// outer ∘ inner, i.e. x -> outer(inner(x)).
inline LinearOperator compose(const LinearOperator& outer,
                              const LinearOperator& inner) {
  require_dim(outer.in_dim() == inner.out_dim(),
              "compose: '" + outer.tag() + "' cannot follow '" + inner.tag() + "'");
  if (outer.is_zero() || inner.is_zero())
    return zero(outer.out_dim(), inner.in_dim());
  auto fwd = [outer, inner](VecCRef in, VecRef out) {
    Vec tmp(inner.out_dim());
    inner.apply_into(in, tmp);
    outer.apply_into(tmp, out);
  };
  auto adj = [outer, inner](VecCRef in, VecRef out) {
    Vec tmp(outer.in_dim());
    outer.adjoint_into(in, tmp);
    inner.adjoint_into(tmp, out);
  };
  LinearOperator res(inner.in_dim(), outer.out_dim(), fwd, adj,
                     outer.tag() + "*" + inner.tag());
  if (outer.diagonal() && inner.diagonal())
    res.mark_diagonal(outer.diagonal()->cwiseProduct(*inner.diagonal()));
  return res;
}

inline LinearOperator compose(std::initializer_list<LinearOperator> chain) {
  require_dim(chain.size() > 0, "compose: empty chain");
  auto it = std::rbegin(chain);
  LinearOperator acc = *it;
  for (++it; it != std::rend(chain); ++it) acc = compose(*it, acc);
  return acc;
}

/// A^T A as an operator.
inline LinearOperator gram(const LinearOperator& op) {
  return compose(transpose(op), op).with_tag(op.tag() + "^T" + op.tag());
}

inline LinearOperator sum(const LinearOperator& a, const LinearOperator& b) {
  require_dim(a.in_dim() == b.in_dim() && a.out_dim() == b.out_dim(),
              "sum: operand dimensions differ");
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  auto fwd = [a, b](VecCRef in, VecRef out) {
    Vec tmp(b.out_dim());
    a.apply_into(in, out);
    b.apply_into(in, tmp);
    out += tmp;
  };
  auto adj = [a, b](VecCRef in, VecRef out) {
    Vec tmp(b.in_dim());
    a.adjoint_into(in, out);
    b.adjoint_into(in, tmp);
    out += tmp;
  };
  return LinearOperator(a.in_dim(), a.out_dim(), fwd, adj,
                        a.tag() + "+" + b.tag());
}

/// Vertical stack [A1; A2; ...]; all blocks share the input space.
inline LinearOperator stack(std::vector<LinearOperator> ops) {
  require_dim(!ops.empty(), "stack: no operators");
  const Index in = ops.front().in_dim();
  Index out = 0;
  std::string tag = "[";
  for (const auto& op : ops) {
    require_dim(op.in_dim() == in, "stack: '" + op.tag() + "' has wrong input size");
    out += op.out_dim();
    tag += op.tag() + ";";
  }
  tag.back() = ']';
  auto shared = std::make_shared<const std::vector<LinearOperator>>(std::move(ops));
  auto fwd = [shared](VecCRef x, VecRef y) {
    Index off = 0;
    for (const auto& op : *shared) {
      if (op.is_zero()) {
        y.segment(off, op.out_dim()).setZero();
      } else {
        op.apply_into(x, y.segment(off, op.out_dim()));
      }
      off += op.out_dim();
    }
  };
  auto adj = [shared, in](VecCRef y, VecRef x) {
    x.setZero();
    Vec tmp(in);
    Index off = 0;
    for (const auto& op : *shared) {
      if (!op.is_zero()) {
        op.adjoint_into(y.segment(off, op.out_dim()), tmp);
        x += tmp;
      }
      off += op.out_dim();
    }
  };
  return LinearOperator(in, out, fwd, adj, tag);
}

/// Horizontal concatenation [A1, A2, ...]; all blocks share the output space.
inline LinearOperator hstack(std::vector<LinearOperator> ops) {
  require_dim(!ops.empty(), "hstack: no operators");
  std::vector<LinearOperator> transposed;
  for (const auto& op : ops) transposed.push_back(transpose(op));
  LinearOperator t = stack(std::move(transposed));
  return transpose(t);
}

/// Block-diagonal operator diag(A1, A2, ...).
inline LinearOperator block_diag(std::vector<LinearOperator> ops) {
  require_dim(!ops.empty(), "block_diag: no operators");
  Index in = 0, out = 0;
  std::string tag = "diag(";
  bool all_diag = true;
  for (const auto& op : ops) {
    in += op.in_dim();
    out += op.out_dim();
    tag += op.tag() + ",";
    all_diag = all_diag && op.diagonal() != nullptr;
  }
  tag.back() = ')';
  auto shared = std::make_shared<const std::vector<LinearOperator>>(ops);
  auto fwd = [shared](VecCRef x, VecRef y) {
    Index xi = 0, yi = 0;
    for (const auto& op : *shared) {
      if (op.is_zero()) {
        y.segment(yi, op.out_dim()).setZero();
      } else {
        op.apply_into(x.segment(xi, op.in_dim()), y.segment(yi, op.out_dim()));
      }
      xi += op.in_dim();
      yi += op.out_dim();
    }
  };
  auto adj = [shared](VecCRef y, VecRef x) {
    Index xi = 0, yi = 0;
    for (const auto& op : *shared) {
      if (op.is_zero()) {
        x.segment(xi, op.in_dim()).setZero();
      } else {
        op.adjoint_into(y.segment(yi, op.out_dim()), x.segment(xi, op.in_dim()));
      }
      xi += op.in_dim();
      yi += op.out_dim();
    }
  };
  LinearOperator res(in, out, fwd, adj, tag);
  if (all_diag) {
    Vec d(in);
    Index off = 0;
    for (const auto& op : ops) {
      d.segment(off, op.in_dim()) = *op.diagonal();
      off += op.in_dim();
    }
    if (d.isZero(0.0)) res.mark_zero();
    res.mark_diagonal(std::move(d));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Dense fallback and spectral estimates

/// Materializes the operator column by column. Only for small operators.
inline Mat materialize(const LinearOperator& op, Index limit = kDenseLimit) {
  if (op.in_dim() + op.out_dim() > limit)
    throw CapacityError("materialize: '" + op.tag() + "' exceeds the dense limit");
  Mat m(op.out_dim(), op.in_dim());
  Vec e = Vec::Zero(op.in_dim());
  for (Index j = 0; j < op.in_dim(); ++j) {
    e[j] = 1.0;
    op.apply_into(e, m.col(j));
    e[j] = 0.0;
  }
  return m;
}

struct NormEstimate {
  double value = 0.0;  ///< estimate of lambda_max(A^T A)
  int iterations = 0;
  bool converged = false;
};

/// Power iteration on A^T A from a fixed-seed start. Stops when successive
/// Rayleigh quotients agree to within tol (relative); otherwise the best
/// estimate is returned with converged = false.
inline NormEstimate op_norm_estimate(const LinearOperator& op, double tol = 1e-6,
                                     int max_iters = 5000) {
  NormEstimate est;
  if (op.is_zero()) {
    est.converged = true;
    return est;
  }
  if (const Vec* d = op.diagonal()) {
    est.value = d->cwiseAbs2().maxCoeff();
    est.converged = true;
    return est;
  }
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> normal;
  Vec v(op.in_dim());
  for (Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  v.normalize();
  Vec av(op.out_dim()), w(op.in_dim());
  double prev = 0.0;
  for (int k = 1; k <= max_iters; ++k) {
    op.apply_into(v, av);
    op.adjoint_into(av, w);
    const double lambda = v.dot(w);
    est.value = std::max(est.value, lambda);
    est.iterations = k;
    const double wn = w.norm();
    if (wn == 0.0) {
      est.converged = true;
      return est;
    }
    if (k > 1 && std::abs(lambda - prev) <= tol * std::abs(lambda)) {
      est.converged = true;
      return est;
    }
    prev = lambda;
    v = w / wn;
  }
  return est;
}

}  // namespace erligme

#pragma once
// Dense array + reverse-mode tape. Arrays are value handles over shared
// storage; every differentiable op is recorded on a Tape and replayed in
// reverse for gradients. Only the kernels this model needs are provided.
// Raw matrix products are delegated to Eigen; all gradient rules live here.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "carl/errors.hpp"
#include "carl/rng.hpp"

namespace carl::ad {

using Shape = std::vector<long>;

inline long shape_size(const Shape& s) {
    long n = 1;
    for (long d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << ']';
    return os.str();
}

struct Node {
    Shape shape;
    std::shared_ptr<std::vector<double>> value;
    std::vector<double> grad;
    std::string op;   // producing op, empty for leaves
    long step = -1;   // index on the producing tape, -1 for leaves

    Node(Shape s, std::shared_ptr<std::vector<double>> v, std::string o)
        : shape(std::move(s)), value(std::move(v)), grad(value->size(), 0.0), op(std::move(o)) {}
};

class Array {
public:
    Array() = default;

    static Array zeros(Shape s) { return full(std::move(s), 0.0); }

    static Array full(Shape s, double v) {
        auto buf = std::make_shared<std::vector<double>>(static_cast<std::size_t>(shape_size(s)), v);
        return Array(std::make_shared<Node>(std::move(s), std::move(buf), ""));
    }

    static Array of(Shape s, std::vector<double> data) {
        if (shape_size(s) != static_cast<long>(data.size()))
            throw ShapeError("array literal: " + shape_str(s) + " does not hold " + std::to_string(data.size()) + " values");
        auto buf = std::make_shared<std::vector<double>>(std::move(data));
        return Array(std::make_shared<Node>(std::move(s), std::move(buf), ""));
    }

    static Array scalar(double v) { return full({1}, v); }

    /// Leaf aliasing an external value buffer (used for parameter views).
    /// The grad buffer belongs to this node, not to the parameter.
    static Array view(Shape s, std::shared_ptr<std::vector<double>> buf) {
        if (shape_size(s) != static_cast<long>(buf->size()))
            throw ShapeError("view: " + shape_str(s) + " does not match buffer of " + std::to_string(buf->size()));
        return Array(std::make_shared<Node>(std::move(s), std::move(buf), ""));
    }

    bool defined() const { return static_cast<bool>(n_); }
    const Shape& shape() const { return n_->shape; }
    long ndim() const { return static_cast<long>(n_->shape.size()); }
    long dim(long i) const { return n_->shape[static_cast<std::size_t>(i)]; }
    long rows() const { return n_->shape[0]; }
    long cols() const { return n_->shape.size() > 1 ? n_->shape[1] : 1; }
    long size() const { return static_cast<long>(n_->value->size()); }

    double* data() { return n_->value->data(); }
    const double* data() const { return n_->value->data(); }
    double* grad_data() { return n_->grad.data(); }
    const double* grad_data() const { return n_->grad.data(); }
    std::vector<double>& grad_vec() { return n_->grad; }

    double at(long i) const { return (*n_->value)[static_cast<std::size_t>(i)]; }
    double at(long r, long c) const { return (*n_->value)[static_cast<std::size_t>(r * cols() + c)]; }
    double grad_at(long i) const { return n_->grad[static_cast<std::size_t>(i)]; }
    double grad_at(long r, long c) const { return n_->grad[static_cast<std::size_t>(r * cols() + c)]; }

    double scalar_value() const {
        if (size() != 1) throw ShapeError("scalar_value on array " + shape_str(shape()));
        return (*n_->value)[0];
    }

    void zero_grad() { std::fill(n_->grad.begin(), n_->grad.end(), 0.0); }

    const std::string& op() const { return n_->op; }
    const std::shared_ptr<Node>& node() const { return n_; }

private:
    explicit Array(std::shared_ptr<Node> n) : n_(std::move(n)) {}
    std::shared_ptr<Node> n_;
    friend class Tape;
};

/// Row-indexed gradient accumulator for large lookup tables (embeddings).
struct SparseRowGrad {
    long cols = 0;
    std::unordered_map<long, std::vector<double>> rows;

    void add_row(long row, const double* g, long n) {
        auto& acc = rows[row];
        if (acc.empty()) acc.assign(static_cast<std::size_t>(n), 0.0);
        for (long i = 0; i < n; ++i) acc[static_cast<std::size_t>(i)] += g[i];
    }

    std::vector<long> sorted_rows() const {
        std::vector<long> keys;
        keys.reserve(rows.size());
        for (const auto& kv : rows) keys.push_back(kv.first);
        std::sort(keys.begin(), keys.end());
        return keys;
    }

    void clear() { rows.clear(); }
};

namespace detail {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

inline void check_finite(const double* p, long n, const char* op) {
    for (long i = 0; i < n; ++i) {
        if (!std::isfinite(p[i]))
            throw NumericFault(op, "input has non-finite value at flat index " + std::to_string(i));
    }
}

}  // namespace detail

class Tape {
public:
    /// Matrix product. `a_active` (when >= 0) promises that rows of `a` at
    /// and beyond that index are exactly zero AND that gradients flowing back
    /// to those rows are discarded upstream (the zero rows come out of a ReLU
    /// over exact zeros); the product and backward passes then skip them
    /// bit-identically.
    Array matmul(const Array& a, const Array& b, long a_active = -1) {
        if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.rows())
            throw ShapeError("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()) + " inner extents differ");
        long ar = a_active < 0 || a_active > a.rows() ? a.rows() : a_active;
        Array out = make({a.rows(), b.cols()}, "matmul");
        if (ar > 0)
            detail::Map(out.data(), ar, b.cols()).noalias() =
                detail::CMap(a.data(), ar, a.cols()) * detail::CMap(b.data(), b.rows(), b.cols());
        record(out, [an = a.node(), bn = b.node(), on = out.node(), ar] {
            long k = an->shape[1], c = bn->shape[1];
            if (ar == 0) return;
            detail::CMap g(on->grad.data(), on->shape[0], c);
            detail::Map(an->grad.data(), an->shape[0], k).topRows(ar).noalias() +=
                g.topRows(ar) * detail::CMap(bn->value->data(), k, c).transpose();
            detail::Map(bn->grad.data(), k, c).noalias() +=
                detail::CMap(an->value->data(), an->shape[0], k).topRows(ar).transpose() * g.topRows(ar);
        });
        return out;
    }

    /// a [r x k] times b-transposed where b is [c x k]; result [r x c].
    /// `a_active`/`b_active` carry the same zero-tail contract as matmul.
    Array matmul_nt(const Array& a, const Array& b, long a_active = -1, long b_active = -1) {
        if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.cols())
            throw ShapeError("matmul_nt: " + shape_str(a.shape()) + " x " + shape_str(b.shape()) + "^T inner extents differ");
        long ar = a_active < 0 || a_active > a.rows() ? a.rows() : a_active;
        long br = b_active < 0 || b_active > b.rows() ? b.rows() : b_active;
        Array out = make({a.rows(), b.rows()}, "matmul_nt");
        if (ar > 0 && br > 0)
            detail::Map(out.data(), a.rows(), b.rows()).topLeftCorner(ar, br).noalias() =
                detail::CMap(a.data(), ar, a.cols()) * detail::CMap(b.data(), br, b.cols()).transpose();
        record(out, [an = a.node(), bn = b.node(), on = out.node(), ar, br] {
            if (ar == 0 || br == 0) return;
            long k = an->shape[1];
            detail::CMap g(on->grad.data(), on->shape[0], on->shape[1]);
            auto g_block = g.topLeftCorner(ar, br);
            detail::Map(an->grad.data(), an->shape[0], k).topRows(ar).noalias() +=
                g_block * detail::CMap(bn->value->data(), bn->shape[0], k).topRows(br);
            detail::Map(bn->grad.data(), bn->shape[0], k).topRows(br).noalias() +=
                g_block.transpose() * detail::CMap(an->value->data(), an->shape[0], k).topRows(ar);
        });
        return out;
    }

    /// Sliding-window affine map: row h of the output applies `weights`
    /// (f x window*t) to the flattened rows h..h+window-1 of `doc` (n x t),
    /// with window-1 zero rows logically padded past the end, so the output
    /// keeps n rows.
    /// Sliding-window affine map with the zero-tail contract of matmul on the
    /// doc rows: when `active_rows` >= 0, doc rows at and beyond it are exactly
    /// zero, making output rows there zero and their gradients ReLU-masked.
    Array slide_window_affine(const Array& doc, const Array& weights, long window, long active_rows = -1) {
        if (window < 1) throw ConfigError("slide_window_affine: window must be >= 1, got " + std::to_string(window));
        if (doc.ndim() != 2 || weights.ndim() != 2 || weights.cols() != window * doc.cols())
            throw ShapeError("slide_window_affine: weights " + shape_str(weights.shape()) + " do not match window " +
                             std::to_string(window) + " over doc " + shape_str(doc.shape()));
        long n = doc.rows(), t = doc.cols(), f = weights.rows(), st = window * t;
        long ar = active_rows < 0 || active_rows > n ? n : active_rows;
        auto patches = std::make_shared<std::vector<double>>(static_cast<std::size_t>(ar * st), 0.0);
        for (long h = 0; h < ar; ++h) {
            double* dst = patches->data() + h * st;
            long take = std::min(window, n - h);
            std::copy(doc.data() + h * t, doc.data() + (h + take) * t, dst);
        }
        Array out = make({n, f}, "slide_window_affine");
        if (ar > 0)
            detail::Map(out.data(), n, f).topRows(ar).noalias() =
                detail::CMap(patches->data(), ar, st) * detail::CMap(weights.data(), f, st).transpose();
        record(out, [dn = doc.node(), wn = weights.node(), on = out.node(), patches, window, ar] {
            if (ar == 0) return;
            long n2 = dn->shape[0], t2 = dn->shape[1], f2 = wn->shape[0], st2 = window * t2;
            detail::CMap g(on->grad.data(), n2, f2);
            detail::Map(wn->grad.data(), f2, st2).noalias() +=
                g.topRows(ar).transpose() * detail::CMap(patches->data(), ar, st2);
            std::vector<double> dpatches(static_cast<std::size_t>(ar * st2));
            detail::Map(dpatches.data(), ar, st2).noalias() = g.topRows(ar) * detail::CMap(wn->value->data(), f2, st2);
            for (long h = 0; h < ar; ++h) {
                long take = std::min(window, n2 - h);
                const double* src = dpatches.data() + h * st2;
                double* dst = dn->grad.data() + h * t2;
                for (long i = 0; i < take * t2; ++i) dst[i] += src[i];
            }
        });
        return out;
    }

    /// Row lookup into a dense table that participates in the tape.
    Array gather_rows(const Array& table, std::vector<int32_t> ids, long frozen_row = -1) {
        long rows = table.rows(), cols = table.cols();
        Array out = make({static_cast<long>(ids.size()), cols}, "gather_rows");
        for (std::size_t r = 0; r < ids.size(); ++r) {
            long id = ids[r];
            if (id < 0 || id >= rows)
                throw DataError("gather_rows: id " + std::to_string(id) + " out of range for table " + shape_str(table.shape()));
            std::copy(table.data() + id * cols, table.data() + (id + 1) * cols, out.data() + static_cast<long>(r) * cols);
        }
        record(out, [tn = table.node(), on = out.node(), ids = std::move(ids), frozen_row] {
            long cols2 = tn->shape[1];
            for (std::size_t r = 0; r < ids.size(); ++r) {
                long id = ids[r];
                if (id == frozen_row) continue;
                const double* g = on->grad.data() + static_cast<long>(r) * cols2;
                double* dst = tn->grad.data() + id * cols2;
                for (long i = 0; i < cols2; ++i) dst[i] += g[i];
            }
        });
        return out;
    }

    /// Row lookup into a table that is NOT a tape leaf; gradients are routed
    /// to `sink` (may be null at inference). Used for the big embedding table.
    Array gather_rows_sparse(const double* table, long rows, long cols, std::vector<int32_t> ids,
                             SparseRowGrad* sink, long frozen_row, const std::string& table_name) {
        Array out = make({static_cast<long>(ids.size()), cols}, "gather_rows");
        for (std::size_t r = 0; r < ids.size(); ++r) {
            long id = ids[r];
            if (id < 0 || id >= rows)
                throw DataError("gather_rows(" + table_name + "): id " + std::to_string(id) + " out of range [0," +
                                std::to_string(rows) + ")");
            std::copy(table + id * cols, table + (id + 1) * cols, out.data() + static_cast<long>(r) * cols);
        }
        if (sink && sink->cols == 0) sink->cols = cols;
        record(out, [on = out.node(), ids = std::move(ids), sink, frozen_row, cols] {
            if (!sink) return;
            for (std::size_t r = 0; r < ids.size(); ++r) {
                long id = ids[r];
                if (id == frozen_row) continue;
                sink->add_row(id, on->grad.data() + static_cast<long>(r) * cols, cols);
            }
        });
        return out;
    }

    Array relu(const Array& x) {
        detail::check_finite(x.data(), x.size(), "relu");
        Array out = make(x.shape(), "relu");
        for (long i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i] > 0.0 ? x.data()[i] : 0.0;
        record(out, [xn = x.node(), on = out.node()] {
            for (std::size_t i = 0; i < xn->grad.size(); ++i)
                if ((*xn->value)[i] > 0.0) xn->grad[i] += on->grad[i];
        });
        return out;
    }

    /// tanh; `active_rows` follows the matmul zero-tail contract (zero input
    /// rows map to zero outputs, and the skipped rows' gradients must only
    /// ever multiply quantities that are themselves zero downstream).
    Array tanh(const Array& x, long active_rows = -1) {
        long limit = x.size();
        if (active_rows >= 0 && x.ndim() == 2 && active_rows <= x.rows()) limit = active_rows * x.cols();
        detail::check_finite(x.data(), limit, "tanh");
        Array out = make(x.shape(), "tanh");
        for (long i = 0; i < limit; ++i) out.data()[i] = std::tanh(x.data()[i]);
        record(out, [xn = x.node(), on = out.node(), limit] {
            for (long i = 0; i < limit; ++i)
                xn->grad[static_cast<std::size_t>(i)] +=
                    on->grad[static_cast<std::size_t>(i)] *
                    (1.0 - (*on->value)[static_cast<std::size_t>(i)] * (*on->value)[static_cast<std::size_t>(i)]);
        });
        return out;
    }

    /// Numerically stable softmax over a 1-D array.
    Array softmax(const Array& x) {
        if (x.ndim() != 1) throw ShapeError("softmax expects a vector, got " + shape_str(x.shape()));
        detail::check_finite(x.data(), x.size(), "softmax");
        Array out = make(x.shape(), "softmax");
        double mx = x.data()[0];
        for (long i = 1; i < x.size(); ++i) mx = std::max(mx, x.data()[i]);
        double z = 0.0;
        for (long i = 0; i < x.size(); ++i) {
            out.data()[i] = std::exp(x.data()[i] - mx);
            z += out.data()[i];
        }
        for (long i = 0; i < x.size(); ++i) out.data()[i] /= z;
        record(out, [xn = x.node(), on = out.node()] {
            double dot = 0.0;
            for (std::size_t i = 0; i < xn->grad.size(); ++i) dot += on->grad[i] * (*on->value)[i];
            for (std::size_t i = 0; i < xn->grad.size(); ++i)
                xn->grad[i] += (*on->value)[i] * (on->grad[i] - dot);
        });
        return out;
    }

    /// Per-row mean of a matrix: [n x m] -> [n].
    Array mean_rows(const Array& x) {
        if (x.ndim() != 2) throw ShapeError("mean_rows expects a matrix, got " + shape_str(x.shape()));
        detail::check_finite(x.data(), x.size(), "mean_rows");
        long n = x.rows(), m = x.cols();
        Array out = make({n}, "mean_rows");
        for (long j = 0; j < n; ++j) {
            double s = 0.0;
            for (long k = 0; k < m; ++k) s += x.at(j, k);
            out.data()[j] = s / static_cast<double>(m);
        }
        record(out, [xn = x.node(), on = out.node()] {
            long n2 = xn->shape[0], m2 = xn->shape[1];
            for (long j = 0; j < n2; ++j) {
                double g = on->grad[static_cast<std::size_t>(j)] / static_cast<double>(m2);
                for (long k = 0; k < m2; ++k) xn->grad[static_cast<std::size_t>(j * m2 + k)] += g;
            }
        });
        return out;
    }

    /// Per-column mean of a matrix: [n x m] -> [m].
    Array mean_cols(const Array& x) {
        if (x.ndim() != 2) throw ShapeError("mean_cols expects a matrix, got " + shape_str(x.shape()));
        detail::check_finite(x.data(), x.size(), "mean_cols");
        long n = x.rows(), m = x.cols();
        Array out = make({m}, "mean_cols");
        for (long k = 0; k < m; ++k) out.data()[k] = 0.0;
        for (long j = 0; j < n; ++j)
            for (long k = 0; k < m; ++k) out.data()[k] += x.at(j, k);
        for (long k = 0; k < m; ++k) out.data()[k] /= static_cast<double>(n);
        record(out, [xn = x.node(), on = out.node()] {
            long n2 = xn->shape[0], m2 = xn->shape[1];
            for (long j = 0; j < n2; ++j)
                for (long k = 0; k < m2; ++k)
                    xn->grad[static_cast<std::size_t>(j * m2 + k)] += on->grad[static_cast<std::size_t>(k)] / static_cast<double>(n2);
        });
        return out;
    }

    /// Per-column max of a matrix: [n x m] -> [m]. Ties go to the first row.
    Array max_cols(const Array& x) {
        if (x.ndim() != 2) throw ShapeError("max_cols expects a matrix, got " + shape_str(x.shape()));
        detail::check_finite(x.data(), x.size(), "max_cols");
        long n = x.rows(), m = x.cols();
        Array out = make({m}, "max_cols");
        auto arg = std::make_shared<std::vector<long>>(static_cast<std::size_t>(m), 0L);
        for (long k = 0; k < m; ++k) {
            double best = x.at(0, k);
            long bi = 0;
            for (long j = 1; j < n; ++j)
                if (x.at(j, k) > best) { best = x.at(j, k); bi = j; }
            out.data()[k] = best;
            (*arg)[static_cast<std::size_t>(k)] = bi;
        }
        record(out, [xn = x.node(), on = out.node(), arg] {
            long m2 = xn->shape[1];
            for (long k = 0; k < m2; ++k)
                xn->grad[static_cast<std::size_t>((*arg)[static_cast<std::size_t>(k)] * m2 + k)] +=
                    on->grad[static_cast<std::size_t>(k)];
        });
        return out;
    }

    /// Scale row j of x by w[j] (diag(w) * X).
    Array scale_rows(const Array& x, const Array& w) {
        if (x.ndim() != 2 || w.ndim() != 1 || w.size() != x.rows())
            throw ShapeError("scale_rows: weights " + shape_str(w.shape()) + " do not match rows of " + shape_str(x.shape()));
        long n = x.rows(), m = x.cols();
        Array out = make(x.shape(), "scale_rows");
        for (long j = 0; j < n; ++j)
            for (long k = 0; k < m; ++k) out.data()[j * m + k] = w.data()[j] * x.at(j, k);
        record(out, [xn = x.node(), wn = w.node(), on = out.node()] {
            long n2 = xn->shape[0], m2 = xn->shape[1];
            for (long j = 0; j < n2; ++j) {
                double wj = (*wn->value)[static_cast<std::size_t>(j)];
                double dw = 0.0;
                for (long k = 0; k < m2; ++k) {
                    std::size_t idx = static_cast<std::size_t>(j * m2 + k);
                    xn->grad[idx] += wj * on->grad[idx];
                    dw += (*xn->value)[idx] * on->grad[idx];
                }
                wn->grad[static_cast<std::size_t>(j)] += dw;
            }
        });
        return out;
    }

    Array elementwise_mul(const Array& a, const Array& b) {
        require_same_shape(a, b, "elementwise_mul");
        detail::check_finite(a.data(), a.size(), "elementwise_mul");
        detail::check_finite(b.data(), b.size(), "elementwise_mul");
        Array out = make(a.shape(), "elementwise_mul");
        for (long i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
        record(out, [an = a.node(), bn = b.node(), on = out.node()] {
            for (std::size_t i = 0; i < on->grad.size(); ++i) {
                an->grad[i] += on->grad[i] * (*bn->value)[i];
                bn->grad[i] += on->grad[i] * (*an->value)[i];
            }
        });
        return out;
    }

    Array div(const Array& a, const Array& b) {
        require_same_shape(a, b, "div");
        detail::check_finite(a.data(), a.size(), "div");
        detail::check_finite(b.data(), b.size(), "div");
        Array out = make(a.shape(), "div");
        for (long i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] / b.data()[i];
        record(out, [an = a.node(), bn = b.node(), on = out.node()] {
            for (std::size_t i = 0; i < on->grad.size(); ++i) {
                double bv = (*bn->value)[i];
                an->grad[i] += on->grad[i] / bv;
                bn->grad[i] -= on->grad[i] * (*an->value)[i] / (bv * bv);
            }
        });
        return out;
    }

    Array add(const Array& a, const Array& b) {
        require_same_shape(a, b, "add");
        Array out = make(a.shape(), "add");
        for (long i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
        record(out, [an = a.node(), bn = b.node(), on = out.node()] {
            for (std::size_t i = 0; i < on->grad.size(); ++i) {
                an->grad[i] += on->grad[i];
                bn->grad[i] += on->grad[i];
            }
        });
        return out;
    }

    Array sub(const Array& a, const Array& b) {
        require_same_shape(a, b, "sub");
        Array out = make(a.shape(), "sub");
        for (long i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
        record(out, [an = a.node(), bn = b.node(), on = out.node()] {
            for (std::size_t i = 0; i < on->grad.size(); ++i) {
                an->grad[i] += on->grad[i];
                bn->grad[i] -= on->grad[i];
            }
        });
        return out;
    }

    Array scale(const Array& x, double c) {
        Array out = make(x.shape(), "scale");
        for (long i = 0; i < x.size(); ++i) out.data()[i] = c * x.data()[i];
        record(out, [xn = x.node(), on = out.node(), c] {
            for (std::size_t i = 0; i < on->grad.size(); ++i) xn->grad[i] += c * on->grad[i];
        });
        return out;
    }

    Array sum(const Array& x) {
        Array out = make({1}, "sum");
        double s = 0.0;
        for (long i = 0; i < x.size(); ++i) s += x.data()[i];
        out.data()[0] = s;
        record(out, [xn = x.node(), on = out.node()] {
            for (std::size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += on->grad[0];
        });
        return out;
    }

    /// Concatenate 1-D arrays. Gradient slices route back disjointly.
    Array concat(const std::vector<Array>& parts) {
        long total = 0;
        for (const auto& p : parts) {
            if (p.ndim() != 1) throw ShapeError("concat expects vectors, got " + shape_str(p.shape()));
            detail::check_finite(p.data(), p.size(), "concat");
            total += p.size();
        }
        Array out = make({total}, "concat");
        long off = 0;
        for (const auto& p : parts) {
            std::copy(p.data(), p.data() + p.size(), out.data() + off);
            off += p.size();
        }
        std::vector<std::shared_ptr<Node>> ins;
        ins.reserve(parts.size());
        for (const auto& p : parts) ins.push_back(p.node());
        record(out, [ins = std::move(ins), on = out.node()] {
            long off2 = 0;
            for (const auto& in : ins) {
                for (std::size_t i = 0; i < in->grad.size(); ++i)
                    in->grad[i] += on->grad[static_cast<std::size_t>(off2) + i];
                off2 += static_cast<long>(in->grad.size());
            }
        });
        return out;
    }

    Array reshape(const Array& x, Shape s) {
        if (shape_size(s) != x.size())
            throw ShapeError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(s) + " changes element count");
        Array out = make(std::move(s), "reshape");
        std::copy(x.data(), x.data() + x.size(), out.data());
        record(out, [xn = x.node(), on = out.node()] {
            for (std::size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += on->grad[i];
        });
        return out;
    }

    /// Single element of a vector as a scalar.
    Array pick(const Array& v, long index) {
        if (v.ndim() != 1 || index < 0 || index >= v.size())
            throw ShapeError("pick: index " + std::to_string(index) + " out of " + shape_str(v.shape()));
        Array out = make({1}, "pick");
        out.data()[0] = v.data()[index];
        record(out, [vn = v.node(), on = out.node(), index] {
            vn->grad[static_cast<std::size_t>(index)] += on->grad[0];
        });
        return out;
    }

    /// Inverted dropout: zero with probability `rate`, scale survivors by
    /// 1/(1-rate). Identity when not training or rate == 0.
    Array dropout(const Array& x, double rate, bool training, Rng& rng) {
        if (rate < 0.0 || rate >= 1.0)
            throw ConfigError("dropout rate must be in [0,1), got " + std::to_string(rate));
        if (!training || rate == 0.0) return x;
        double keep = 1.0 - rate;
        double inv = 1.0 / keep;
        Array out = make(x.shape(), "dropout");
        auto mask = std::make_shared<std::vector<uint8_t>>(static_cast<std::size_t>(x.size()));
        for (long i = 0; i < x.size(); ++i) {
            bool on = rng.uniform01() >= rate;
            (*mask)[static_cast<std::size_t>(i)] = on;
            out.data()[i] = on ? x.data()[i] * inv : 0.0;
        }
        record(out, [xn = x.node(), on = out.node(), mask, inv] {
            for (std::size_t i = 0; i < xn->grad.size(); ++i)
                if ((*mask)[i]) xn->grad[i] += on->grad[i] * inv;
        });
        return out;
    }

    /// Reverse pass from a scalar root: seeds its grad with 1 and replays the
    /// recorded steps once each, newest to oldest.
    void backward(const Array& root) {
        if (root.size() != 1) throw ShapeError("backward root must be scalar, got " + shape_str(root.shape()));
        root.node()->grad[0] += 1.0;
        long start = root.node()->step;
        if (start < 0) return;  // leaf root: nothing recorded
        for (long i = start; i >= 0; --i) steps_[static_cast<std::size_t>(i)].back();
    }

    void clear() { steps_.clear(); }
    std::size_t size() const { return steps_.size(); }

    /// Diagnostic scan: name of the earliest recorded op whose output holds a
    /// NaN/Inf, if any. Used to attribute a NaN loss to its producer.
    std::optional<std::string> first_nonfinite() const {
        for (const auto& s : steps_) {
            for (double v : *s.out->value)
                if (!std::isfinite(v)) return s.name;
        }
        return std::nullopt;
    }

private:
    struct Step {
        std::string name;
        std::shared_ptr<Node> out;
        std::function<void()> back;
    };
    std::vector<Step> steps_;

    Array make(Shape s, const char* op) {
        auto buf = std::make_shared<std::vector<double>>(static_cast<std::size_t>(shape_size(s)), 0.0);
        return Array(std::make_shared<Node>(std::move(s), std::move(buf), op));
    }

    void record(Array& out, std::function<void()> back) {
        out.n_->step = static_cast<long>(steps_.size());
        steps_.push_back({out.n_->op, out.n_, std::move(back)});
    }

    static void require_same_shape(const Array& a, const Array& b, const char* op) {
        if (a.shape() != b.shape())
            throw ShapeError(std::string(op) + ": " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
};

}  // namespace carl::ad

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tcgan/common.hpp"

// Dense 64-bit tensors with define-by-run reverse-mode differentiation.
// A Tape, while alive, is the active recorder for its thread; ops executed
// with no active tape are pure computations. Gradients accumulate into the
// tensors themselves and are reset whenever a tensor is (re)registered on a
// new tape generation.

namespace tcgan {

using Shape = std::vector<int>;

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

inline int shape_numel(const Shape& s) {
    int n = 1;
    for (int d : s) {
        if (d <= 0) throw ShapeError("tensor extent must be positive, got " + shape_str(s));
        n *= d;
    }
    return n;
}

class Tape;

class Tensor {
public:
    struct Impl {
        Shape shape;
        std::vector<double> data;
        std::vector<double> grad;  // empty until the tensor joins a tape
        bool requires_grad = false;
        std::uint64_t tape_gen = 0;  // generation of the tape this is bound to
        int node_id = -1;
    };

    Tensor() : impl_(std::make_shared<Impl>()) {}

    static Tensor zeros(Shape shape) {
        Tensor t;
        t.impl_->data.assign(static_cast<size_t>(shape_numel(shape)), 0.0);
        t.impl_->shape = std::move(shape);
        return t;
    }
    static Tensor full(Shape shape, double value) {
        Tensor t = zeros(std::move(shape));
        std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
        return t;
    }
    static Tensor from(Shape shape, std::vector<double> values) {
        if (static_cast<int>(values.size()) != shape_numel(shape))
            throw ShapeError("value count " + std::to_string(values.size()) +
                             " does not match shape " + shape_str(shape));
        Tensor t;
        t.impl_->shape = std::move(shape);
        t.impl_->data = std::move(values);
        return t;
    }
    static Tensor scalar(double v) { return from({1}, {v}); }
    // Leaf parameter: participates in gradient accumulation.
    static Tensor param(Shape shape, std::vector<double> values) {
        Tensor t = from(std::move(shape), std::move(values));
        t.impl_->requires_grad = true;
        return t;
    }
    static Tensor randn(Shape shape, Rng& rng, double sigma, bool requires_grad = false) {
        Tensor t = zeros(std::move(shape));
        for (double& v : t.impl_->data) v = rng.normal(0.0, sigma);
        t.impl_->requires_grad = requires_grad;
        return t;
    }

    const Shape& shape() const { return impl_->shape; }
    int dim(int axis) const { return impl_->shape.at(static_cast<size_t>(axis)); }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    int size() const { return static_cast<int>(impl_->data.size()); }

    std::vector<double>& data() { return impl_->data; }
    const std::vector<double>& data() const { return impl_->data; }
    double value() const {
        if (size() != 1) throw ContractError("value() requires a single-element tensor");
        return impl_->data[0];
    }
    // Zero-valued buffer of matching shape when the tensor never joined a tape.
    std::vector<double> grad() const {
        if (impl_->grad.empty()) return std::vector<double>(impl_->data.size(), 0.0);
        return impl_->grad;
    }
    bool has_grad() const { return !impl_->grad.empty(); }

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool on) { impl_->requires_grad = on; }

    // Deep copy with no grad participation.
    Tensor detach() const { return from(impl_->shape, impl_->data); }
    Tensor clone() const {
        Tensor t = from(impl_->shape, impl_->data);
        t.impl_->requires_grad = impl_->requires_grad;
        return t;
    }

    std::shared_ptr<Impl> impl() const { return impl_; }

private:
    std::shared_ptr<Impl> impl_;
};

namespace detail {
inline std::uint64_t next_tape_gen() {
    static std::atomic<std::uint64_t> gen{0};
    return ++gen;
}
inline Tape*& active_tape_slot() {
    thread_local Tape* active = nullptr;
    return active;
}
}  // namespace detail

// Recorder for one forward pass. Nodes are appended in execution order, so
// the list is already topologically sorted; backward walks it once in
// reverse. Construction activates the tape for the current thread.
class Tape {
public:
    Tape() : gen_(detail::next_tape_gen()) {
        Tape*& slot = detail::active_tape_slot();
        if (slot != nullptr)
            throw ContractError("a tape is already active on this thread");
        slot = this;
    }
    ~Tape() { detail::active_tape_slot() = nullptr; }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active() { return detail::active_tape_slot(); }

    bool bound_here(const Tensor& t) const {
        return t.impl()->tape_gen == gen_ && t.impl()->node_id >= 0;
    }

    // Node id for an op input: existing binding, a fresh leaf for parameters,
    // or -1 for plain constants (no gradient flows there).
    int input_node(const Tensor& t) {
        if (bound_here(t)) return t.impl()->node_id;
        if (!t.requires_grad()) return -1;
        return bind_leaf(t);
    }

    int add_node(std::vector<int> parents, std::function<void()> backward_fn) {
        nodes_.push_back(Node{std::move(parents), std::move(backward_fn)});
        return static_cast<int>(nodes_.size()) - 1;
    }

    void bind_output(const Tensor& t, int node_id) {
        auto impl = t.impl();
        impl->grad.assign(impl->data.size(), 0.0);
        impl->tape_gen = gen_;
        impl->node_id = node_id;
    }

    // Accumulate d(loss)/d(node) for every node reachable from the scalar
    // loss; unreachable leaves keep their zero gradient.
    void backward(const Tensor& loss) {
        if (consumed_)
            throw ContractError("backward already ran on this tape; reset it first");
        if (loss.size() != 1)
            throw ContractError("backward requires a scalar loss, got shape " +
                                shape_str(loss.shape()));
        if (!bound_here(loss))
            throw ContractError("loss tensor is not recorded on the active tape");
        consumed_ = true;

        std::vector<char> reachable(nodes_.size(), 0);
        std::vector<int> stack{loss.impl()->node_id};
        while (!stack.empty()) {
            int id = stack.back();
            stack.pop_back();
            if (reachable[static_cast<size_t>(id)]) continue;
            reachable[static_cast<size_t>(id)] = 1;
            for (int p : nodes_[static_cast<size_t>(id)].parents)
                if (p >= 0 && !reachable[static_cast<size_t>(p)]) stack.push_back(p);
        }

        loss.impl()->grad[0] = 1.0;
        for (int id = loss.impl()->node_id; id >= 0; --id) {
            if (!reachable[static_cast<size_t>(id)]) continue;
            auto& fn = nodes_[static_cast<size_t>(id)].backward_fn;
            if (fn) fn();
        }
    }

    void reset() {
        nodes_.clear();
        consumed_ = false;
        gen_ = detail::next_tape_gen();
    }

    size_t node_count() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }

private:
    struct Node {
        std::vector<int> parents;
        std::function<void()> backward_fn;
    };

    int bind_leaf(const Tensor& t) {
        int id = add_node({}, nullptr);
        bind_output(t, id);
        return id;
    }

    std::vector<Node> nodes_;
    bool consumed_ = false;
    std::uint64_t gen_;
};

namespace detail {

using ImplPtr = std::shared_ptr<Tensor::Impl>;

inline bool tracked(const Tensor& t) {
    if (t.requires_grad()) return true;
    Tape* tape = Tape::active();
    return tape != nullptr && tape->bound_here(t);
}

// Registers `out = f(inputs...)` on the active tape when gradients can flow.
inline void record(const Tensor& out, std::initializer_list<const Tensor*> inputs,
                   std::function<void()> backward_fn) {
    Tape* tape = Tape::active();
    if (tape == nullptr) return;
    bool any = false;
    for (const Tensor* in : inputs) any = any || tracked(*in);
    if (!any) return;
    std::vector<int> parents;
    parents.reserve(inputs.size());
    for (const Tensor* in : inputs) parents.push_back(tape->input_node(*in));
    int id = tape->add_node(std::move(parents), std::move(backward_fn));
    tape->bind_output(out, id);
}

inline bool wants_grad(const ImplPtr& impl) { return !impl->grad.empty(); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and reduction ops

inline void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " differ");
}

inline Tensor operator+(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    Tensor out = Tensor::zeros(a.shape());
    const int n = a.size();
    for (int i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
    detail::record(out, {&a, &b}, [ai = a.impl(), bi = b.impl(), oi = out.impl()] {
        const int n = static_cast<int>(oi->data.size());
        if (detail::wants_grad(ai))
            for (int i = 0; i < n; ++i) ai->grad[i] += oi->grad[i];
        if (detail::wants_grad(bi))
            for (int i = 0; i < n; ++i) bi->grad[i] += oi->grad[i];
    });
    return out;
}

inline Tensor operator*(const Tensor& a, const Tensor& b) {
    check_same_shape("mul", a, b);
    Tensor out = Tensor::zeros(a.shape());
    const int n = a.size();
    for (int i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
    detail::record(out, {&a, &b}, [ai = a.impl(), bi = b.impl(), oi = out.impl()] {
        const int n = static_cast<int>(oi->data.size());
        if (detail::wants_grad(ai))
            for (int i = 0; i < n; ++i) ai->grad[i] += oi->grad[i] * bi->data[i];
        if (detail::wants_grad(bi))
            for (int i = 0; i < n; ++i) bi->grad[i] += oi->grad[i] * ai->data[i];
    });
    return out;
}

inline Tensor scale(const Tensor& a, double c) {
    Tensor out = Tensor::zeros(a.shape());
    const int n = a.size();
    for (int i = 0; i < n; ++i) out.data()[i] = c * a.data()[i];
    detail::record(out, {&a}, [ai = a.impl(), oi = out.impl(), c] {
        if (!detail::wants_grad(ai)) return;
        const int n = static_cast<int>(oi->data.size());
        for (int i = 0; i < n; ++i) ai->grad[i] += c * oi->grad[i];
    });
    return out;
}

inline Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    Tensor out = Tensor::scalar(s);
    detail::record(out, {&a}, [ai = a.impl(), oi = out.impl()] {
        if (!detail::wants_grad(ai)) return;
        const double g = oi->grad[0];
        for (double& gv : ai->grad) gv += g;
    });
    return out;
}

inline Tensor mean_all(const Tensor& a) {
    const int n = a.size();
    double s = 0.0;
    for (double v : a.data()) s += v;
    Tensor out = Tensor::scalar(s / n);
    detail::record(out, {&a}, [ai = a.impl(), oi = out.impl(), n] {
        if (!detail::wants_grad(ai)) return;
        const double g = oi->grad[0] / n;
        for (double& gv : ai->grad) gv += g;
    });
    return out;
}

inline Tensor relu(const Tensor& a) {
    Tensor out = Tensor::zeros(a.shape());
    const int n = a.size();
    for (int i = 0; i < n; ++i) out.data()[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
    detail::record(out, {&a}, [ai = a.impl(), oi = out.impl()] {
        if (!detail::wants_grad(ai)) return;
        const int n = static_cast<int>(oi->data.size());
        for (int i = 0; i < n; ++i)
            if (ai->data[i] > 0.0) ai->grad[i] += oi->grad[i];
    });
    return out;
}

// Output is nudged into the open interval so downstream logs stay finite even
// at extreme pre-activations.
inline Tensor sigmoid(const Tensor& a) {
    Tensor out = Tensor::zeros(a.shape());
    const int n = a.size();
    constexpr double kLo = 1e-300;
    const double kHi = 1.0 - 1.1e-16;
    for (int i = 0; i < n; ++i) {
        const double x = a.data()[i];
        double s;
        if (x >= 0.0) {
            s = 1.0 / (1.0 + std::exp(-x));
        } else {
            const double e = std::exp(x);
            s = e / (1.0 + e);
        }
        out.data()[i] = std::min(std::max(s, kLo), kHi);
    }
    detail::record(out, {&a}, [ai = a.impl(), oi = out.impl()] {
        if (!detail::wants_grad(ai)) return;
        const int n = static_cast<int>(oi->data.size());
        for (int i = 0; i < n; ++i) {
            const double s = oi->data[i];
            ai->grad[i] += oi->grad[i] * s * (1.0 - s);
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Structural ops

inline Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.size())
        throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                         shape_str(shape));
    Tensor out = Tensor::from(std::move(shape), a.data());
    detail::record(out, {&a}, [ai = a.impl(), oi = out.impl()] {
        if (!detail::wants_grad(ai)) return;
        const int n = static_cast<int>(oi->data.size());
        for (int i = 0; i < n; ++i) ai->grad[i] += oi->grad[i];
    });
    return out;
}

// [N,A] ++ [N,B] -> [N,A+B]
inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeError("concat_cols: expected rank-2 inputs");
    if (a.dim(0) != b.dim(0))
        throw ShapeError("concat_cols: row counts differ on axis 0: " +
                         std::to_string(a.dim(0)) + " vs " + std::to_string(b.dim(0)));
    const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    Tensor out = Tensor::zeros({n, ca + cb});
    for (int r = 0; r < n; ++r) {
        std::copy_n(a.data().begin() + r * ca, ca, out.data().begin() + r * (ca + cb));
        std::copy_n(b.data().begin() + r * cb, cb, out.data().begin() + r * (ca + cb) + ca);
    }
    detail::record(out, {&a, &b}, [ai = a.impl(), bi = b.impl(), oi = out.impl(), n, ca, cb] {
        for (int r = 0; r < n; ++r) {
            const double* g = oi->grad.data() + r * (ca + cb);
            if (detail::wants_grad(ai)) {
                double* ga = ai->grad.data() + r * ca;
                for (int i = 0; i < ca; ++i) ga[i] += g[i];
            }
            if (detail::wants_grad(bi)) {
                double* gb = bi->grad.data() + r * cb;
                for (int i = 0; i < cb; ++i) gb[i] += g[ca + i];
            }
        }
    });
    return out;
}

// [N,L] + [N,L] -> [N,2,L]; first argument becomes channel 0.
inline Tensor stack_channels(const Tensor& a, const Tensor& b) {
    check_same_shape("stack_channels", a, b);
    if (a.rank() != 2) throw ShapeError("stack_channels: expected rank-2 inputs");
    const int n = a.dim(0), l = a.dim(1);
    Tensor out = Tensor::zeros({n, 2, l});
    for (int r = 0; r < n; ++r) {
        std::copy_n(a.data().begin() + r * l, l, out.data().begin() + r * 2 * l);
        std::copy_n(b.data().begin() + r * l, l, out.data().begin() + r * 2 * l + l);
    }
    detail::record(out, {&a, &b}, [ai = a.impl(), bi = b.impl(), oi = out.impl(), n, l] {
        for (int r = 0; r < n; ++r) {
            const double* g = oi->grad.data() + r * 2 * l;
            if (detail::wants_grad(ai)) {
                double* ga = ai->grad.data() + r * l;
                for (int i = 0; i < l; ++i) ga[i] += g[i];
            }
            if (detail::wants_grad(bi)) {
                double* gb = bi->grad.data() + r * l;
                for (int i = 0; i < l; ++i) gb[i] += g[l + i];
            }
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Network ops

// input [N,F_in] x weight [F_in,F_out] + bias [F_out] -> [N,F_out]
inline Tensor dense_forward(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    if (input.rank() != 2 || weight.rank() != 2 || bias.rank() != 1)
        throw ShapeError("dense_forward: expected input [N,F_in], weight [F_in,F_out], bias [F_out]");
    if (input.dim(1) != weight.dim(0))
        throw ShapeError("dense_forward: input axis 1 extent " + std::to_string(input.dim(1)) +
                         " != weight axis 0 extent " + std::to_string(weight.dim(0)));
    if (bias.dim(0) != weight.dim(1))
        throw ShapeError("dense_forward: bias axis 0 extent " + std::to_string(bias.dim(0)) +
                         " != weight axis 1 extent " + std::to_string(weight.dim(1)));
    const int n = input.dim(0), fin = input.dim(1), fout = weight.dim(1);
    Tensor out = Tensor::zeros({n, fout});
    {
        const double* x = input.data().data();
        const double* w = weight.data().data();
        const double* b = bias.data().data();
        double* y = out.data().data();
        for (int r = 0; r < n; ++r) {
            double* yr = y + r * fout;
            std::copy_n(b, fout, yr);
            const double* xr = x + r * fin;
            for (int i = 0; i < fin; ++i) {
                const double xv = xr[i];
                const double* wr = w + i * fout;
                for (int j = 0; j < fout; ++j) yr[j] += xv * wr[j];
            }
        }
    }
    detail::record(out, {&input, &weight, &bias},
                   [xi = input.impl(), wi = weight.impl(), bi = bias.impl(), oi = out.impl(),
                    n, fin, fout] {
        const double* gy = oi->grad.data();
        if (detail::wants_grad(xi)) {
            double* gx = xi->grad.data();
            const double* w = wi->data.data();
            for (int r = 0; r < n; ++r)
                for (int i = 0; i < fin; ++i) {
                    const double* wr = w + i * fout;
                    const double* gyr = gy + r * fout;
                    double acc = 0.0;
                    for (int j = 0; j < fout; ++j) acc += gyr[j] * wr[j];
                    gx[r * fin + i] += acc;
                }
        }
        if (detail::wants_grad(wi)) {
            double* gw = wi->grad.data();
            const double* x = xi->data.data();
            for (int r = 0; r < n; ++r)
                for (int i = 0; i < fin; ++i) {
                    const double xv = x[r * fin + i];
                    const double* gyr = gy + r * fout;
                    double* gwr = gw + i * fout;
                    for (int j = 0; j < fout; ++j) gwr[j] += xv * gyr[j];
                }
        }
        if (detail::wants_grad(bi)) {
            double* gb = bi->grad.data();
            for (int r = 0; r < n; ++r)
                for (int j = 0; j < fout; ++j) gb[j] += gy[r * fout + j];
        }
    });
    return out;
}

inline int conv1d_out_len(int len, int kernel, int stride, int padding) {
    return (len + 2 * padding - kernel) / stride + 1;
}

namespace detail {

// Stride-1 correlation microkernels. Outputs are computed per position in
// register blocks (reads may overlap, each output is stored once), which
// sidesteps the store-to-load stalls of the naive shifted-accumulate form.
// `XStep` is the stride between consecutive weight rows of the inner channel
// loop, letting one kernel serve both weight layouts.

// out[pos] (+)= sum_c sum_kk w[c*wstep + kk] * x[c*len + pos + shift0 - kk*kdir]
// where taps outside [0,len) are dropped. Forward convs assign; backward
// input-gradient kernels accumulate.
template <bool Accumulate>
inline void corr1_stride1(const double* __restrict__ x, int len, int chans,
                          const double* __restrict__ w, int wstep, int k, int kdir, int shift0,
                          double* __restrict__ out, int lout) {
    // tap index into x for output i: i + shift0 - kk*kdir, kk in [0,k)
    const int d0 = shift0;                 // kk = 0
    const int d1 = shift0 - (k - 1) * kdir;  // kk = k-1
    const int dmin = std::min(d0, d1), dmax = std::max(d0, d1);
    int mid_lo = std::max(0, -dmin);
    int mid_hi = std::min(lout, len - dmax);
    mid_lo = std::min(mid_lo, lout);
    mid_hi = std::max(mid_hi, mid_lo);
    auto edge = [&](int i) {
        double acc = 0.0;
        for (int c = 0; c < chans; ++c) {
            const double* xr = x + c * len;
            const double* wr = w + c * wstep;
            for (int kk = 0; kk < k; ++kk) {
                const int src = i + shift0 - kk * kdir;
                if (src >= 0 && src < len) acc += wr[kk] * xr[src];
            }
        }
        if constexpr (Accumulate)
            out[i] += acc;
        else
            out[i] = acc;
    };
    for (int i = 0; i < mid_lo; ++i) edge(i);
    for (int i = mid_hi; i < lout; ++i) edge(i);
    constexpr int BJ = 16;
    int i = mid_lo;
    for (; i + BJ <= mid_hi; i += BJ) {
        double acc[BJ] = {};
        for (int c = 0; c < chans; ++c) {
            const double* xr = x + c * len + i + shift0;
            const double* wr = w + c * wstep;
            for (int kk = 0; kk < k; ++kk) {
                const double wv = wr[kk];
                const double* xs = xr - kk * kdir;
#pragma omp simd
                for (int u = 0; u < BJ; ++u) acc[u] += wv * xs[u];
            }
        }
        if constexpr (Accumulate)
            for (int u = 0; u < BJ; ++u) out[i + u] += acc[u];
        else
            for (int u = 0; u < BJ; ++u) out[i + u] = acc[u];
    }
    for (; i < mid_hi; ++i) edge(i);
}

// Same contraction for two output rows at once; the x loads are shared, which
// is worth ~25% on the forward passes.
template <bool Accumulate>
inline void corr2_stride1(const double* __restrict__ x, int len, int chans,
                          const double* __restrict__ w0, const double* __restrict__ w1, int wstep,
                          int k, int kdir, int shift0, double* __restrict__ out0,
                          double* __restrict__ out1, int lout) {
    const int d0 = shift0;
    const int d1 = shift0 - (k - 1) * kdir;
    const int dmin = std::min(d0, d1), dmax = std::max(d0, d1);
    int mid_lo = std::max(0, -dmin);
    int mid_hi = std::min(lout, len - dmax);
    mid_lo = std::min(mid_lo, lout);
    mid_hi = std::max(mid_hi, mid_lo);
    auto edge = [&](int i) {
        double a0 = 0.0, a1 = 0.0;
        for (int c = 0; c < chans; ++c) {
            const double* xr = x + c * len;
            const double* wr0 = w0 + c * wstep;
            const double* wr1 = w1 + c * wstep;
            for (int kk = 0; kk < k; ++kk) {
                const int src = i + shift0 - kk * kdir;
                if (src >= 0 && src < len) {
                    a0 += wr0[kk] * xr[src];
                    a1 += wr1[kk] * xr[src];
                }
            }
        }
        if constexpr (Accumulate) {
            out0[i] += a0;
            out1[i] += a1;
        } else {
            out0[i] = a0;
            out1[i] = a1;
        }
    };
    for (int i = 0; i < mid_lo; ++i) edge(i);
    for (int i = mid_hi; i < lout; ++i) edge(i);
    constexpr int BJ = 16;
    int i = mid_lo;
    for (; i + BJ <= mid_hi; i += BJ) {
        double acc0[BJ] = {}, acc1[BJ] = {};
        for (int c = 0; c < chans; ++c) {
            const double* xr = x + c * len + i + shift0;
            const double* wr0 = w0 + c * wstep;
            const double* wr1 = w1 + c * wstep;
            for (int kk = 0; kk < k; ++kk) {
                const double v0 = wr0[kk], v1 = wr1[kk];
                const double* xs = xr - kk * kdir;
#pragma omp simd
                for (int u = 0; u < BJ; ++u) {
                    acc0[u] += v0 * xs[u];
                    acc1[u] += v1 * xs[u];
                }
            }
        }
        if constexpr (Accumulate) {
            for (int u = 0; u < BJ; ++u) {
                out0[i + u] += acc0[u];
                out1[i + u] += acc1[u];
            }
        } else {
            for (int u = 0; u < BJ; ++u) {
                out0[i + u] = acc0[u];
                out1[i + u] = acc1[u];
            }
        }
    }
    for (; i < mid_hi; ++i) edge(i);
}

// Channel-paired driver over a batch of row blocks.
template <bool Accumulate>
inline void corr_batched(const double* __restrict__ x, int xrows_stride, int len, int chans,
                         const double* __restrict__ w, int wsel_stride, int wstep, int k, int kdir,
                         int shift0, double* __restrict__ out, int orows_stride, int nout,
                         int lout, int batch) {
    for (int b = 0; b < batch; ++b) {
        const double* xb = x + b * xrows_stride;
        double* ob = out + b * orows_stride;
        int c = 0;
        for (; c + 2 <= nout; c += 2)
            corr2_stride1<Accumulate>(xb, len, chans, w + c * wsel_stride,
                                      w + (c + 1) * wsel_stride, wstep, k, kdir, shift0,
                                      ob + c * lout, ob + (c + 1) * lout, lout);
        for (; c < nout; ++c)
            corr1_stride1<Accumulate>(xb, len, chans, w + c * wsel_stride, wstep, k, kdir, shift0,
                                      ob + c * lout, lout);
    }
}

// shifted dot: sum over the valid range of y[j] * x[j + off]
inline double shifted_dot(const double* __restrict__ y, int ylen, const double* __restrict__ x,
                          int xlen, int off) {
    int j0 = std::max(0, -off);
    int j1 = std::min(ylen - 1, xlen - 1 - off);
    double acc = 0.0;
    const double* xs = x + off;
#pragma omp simd reduction(+ : acc)
    for (int j = j0; j <= j1; ++j) acc += y[j] * xs[j];
    return acc;
}

// gw[kk] += sum_j g[j] * x[j + kk - pad] for all kk in one pass over j,
// with K accumulators living in registers (K fixed at compile time so the
// inner loop fully unrolls).
template <int K>
inline void corr_weight_grad_fixed(const double* __restrict__ g, int glen,
                                   const double* __restrict__ x, int xlen, int pad,
                                   double* __restrict__ gw) {
    double acc[K] = {};
    const int jlo = std::min(glen, std::max(0, pad));
    const int jhi = std::max(jlo, std::min(glen, xlen - K + 1 + pad));
    auto edge = [&](int j) {
        for (int kk = 0; kk < K; ++kk) {
            const int src = j + kk - pad;
            if (src >= 0 && src < xlen) acc[kk] += g[j] * x[src];
        }
    };
    for (int j = 0; j < jlo; ++j) edge(j);
    for (int j = jhi; j < glen; ++j) edge(j);
    int j = jlo;
    for (; j + 2 <= jhi; j += 2) {
        const double g0 = g[j], g1 = g[j + 1];
        const double* xs = x + j - pad;
        for (int kk = 0; kk < K; ++kk) acc[kk] += g0 * xs[kk] + g1 * xs[kk + 1];
    }
    for (; j < jhi; ++j) {
        const double gv = g[j];
        const double* xs = x + j - pad;
        for (int kk = 0; kk < K; ++kk) acc[kk] += gv * xs[kk];
    }
    for (int kk = 0; kk < K; ++kk) gw[kk] += acc[kk];
}

inline void corr_weight_grad_stride1(const double* __restrict__ g, int glen,
                                     const double* __restrict__ x, int xlen, int k, int pad,
                                     double* __restrict__ gw) {
    switch (k) {
        case 1: return corr_weight_grad_fixed<1>(g, glen, x, xlen, pad, gw);
        case 3: return corr_weight_grad_fixed<3>(g, glen, x, xlen, pad, gw);
        case 5: return corr_weight_grad_fixed<5>(g, glen, x, xlen, pad, gw);
        case 7: return corr_weight_grad_fixed<7>(g, glen, x, xlen, pad, gw);
        case 9: return corr_weight_grad_fixed<9>(g, glen, x, xlen, pad, gw);
        default:
            for (int kk = 0; kk < k; ++kk) gw[kk] += shifted_dot(g, glen, x, xlen, kk - pad);
    }
}

}  // namespace detail

// Cross-correlation (no kernel flip), zero padding.
// input [N,C_in,L] * kernel [C_out,C_in,K] -> [N,C_out,L_out]
inline Tensor conv1d_forward(const Tensor& input, const Tensor& kernel, int stride, int padding) {
    if (input.rank() != 3 || kernel.rank() != 3)
        throw ShapeError("conv1d_forward: expected input [N,C_in,L] and kernel [C_out,C_in,K]");
    if (input.dim(1) != kernel.dim(1))
        throw ShapeError("conv1d_forward: input channel extent " + std::to_string(input.dim(1)) +
                         " != kernel axis 1 extent " + std::to_string(kernel.dim(1)));
    if (stride < 1) throw GeometryError("conv1d_forward: stride must be positive");
    if (padding < 0) throw GeometryError("conv1d_forward: padding must be nonnegative");
    const int n = input.dim(0), cin = input.dim(1), len = input.dim(2);
    const int cout = kernel.dim(0), k = kernel.dim(2);
    const int lout = conv1d_out_len(len, k, stride, padding);
    if (lout < 1) throw GeometryError("conv1d_forward: kernel larger than padded input");

    Tensor out = Tensor::zeros({n, cout, lout});
    {
        const double* x = input.data().data();
        const double* w = kernel.data().data();
        double* y = out.data().data();
        if (stride == 1) {
            detail::corr_batched<false>(x, cin * len, len, cin, w, cin * k, k, k, -1, -padding, y,
                                        cout * lout, cout, lout, n);
        } else {
            for (int b = 0; b < n; ++b)
                for (int co = 0; co < cout; ++co) {
                    double* yr = y + (b * cout + co) * lout;
                    for (int ci = 0; ci < cin; ++ci) {
                        const double* xr = x + (b * cin + ci) * len;
                        const double* wr = w + (co * cin + ci) * k;
                        for (int kk = 0; kk < k; ++kk) {
                            const double wv = wr[kk];
                            const int off = kk - padding;
                            int j0 = off < 0 ? (-off + stride - 1) / stride : 0;
                            int j1 = lout - 1;
                            if (off + j1 * stride >= len) j1 = (len - 1 - off) / stride;
                            for (int j = j0; j <= j1; ++j) yr[j] += wv * xr[j * stride + off];
                        }
                    }
                }
        }
    }
    detail::record(out, {&input, &kernel},
                   [xi = input.impl(), wi = kernel.impl(), oi = out.impl(),
                    n, cin, len, cout, k, lout, stride, padding] {
        const double* gy = oi->grad.data();
        if (detail::wants_grad(xi)) {
            double* gx = xi->grad.data();
            const double* w = wi->data.data();
            if (stride == 1) {
                std::vector<double> wt(static_cast<size_t>(cin) * cout * k);
                for (int co = 0; co < cout; ++co)
                    for (int ci = 0; ci < cin; ++ci)
                        std::copy_n(w + (co * cin + ci) * k, k,
                                    wt.data() + (ci * cout + co) * k);
                detail::corr_batched<true>(gy, cout * lout, lout, cout, wt.data(), cout * k, k, k,
                                           1, padding, gx, cin * len, cin, len, n);
            } else {
                for (int b = 0; b < n; ++b)
                    for (int co = 0; co < cout; ++co) {
                        const double* gyr = gy + (b * cout + co) * lout;
                        for (int ci = 0; ci < cin; ++ci) {
                            double* gxr = gx + (b * cin + ci) * len;
                            const double* wr = w + (co * cin + ci) * k;
                            for (int kk = 0; kk < k; ++kk) {
                                const double wv = wr[kk];
                                const int off = kk - padding;
                                int j0 = off < 0 ? (-off + stride - 1) / stride : 0;
                                int j1 = lout - 1;
                                if (off + j1 * stride >= len) j1 = (len - 1 - off) / stride;
                                for (int j = j0; j <= j1; ++j)
                                    gxr[j * stride + off] += wv * gyr[j];
                            }
                        }
                    }
            }
        }
        if (detail::wants_grad(wi)) {
            double* gw = wi->grad.data();
            const double* x = xi->data.data();
            for (int b = 0; b < n; ++b)
                for (int co = 0; co < cout; ++co) {
                    const double* gyr = gy + (b * cout + co) * lout;
                    for (int ci = 0; ci < cin; ++ci) {
                        const double* xr = x + (b * cin + ci) * len;
                        double* gwr = gw + (co * cin + ci) * k;
                        if (stride == 1) {
                            detail::corr_weight_grad_stride1(gyr, lout, xr, len, k, padding, gwr);
                        } else {
                            for (int kk = 0; kk < k; ++kk) {
                                const int off = kk - padding;
                                int j0 = off < 0 ? (-off + stride - 1) / stride : 0;
                                int j1 = lout - 1;
                                if (off + j1 * stride >= len) j1 = (len - 1 - off) / stride;
                                double acc = 0.0;
                                for (int j = j0; j <= j1; ++j) acc += gyr[j] * xr[j * stride + off];
                                gwr[kk] += acc;
                            }
                        }
                    }
                }
        }
    });
    return out;
}

inline int conv1d_transpose_out_len(int len, int kernel, int stride, int padding) {
    return (len - 1) * stride - 2 * padding + kernel;
}

// Adjoint of conv1d_forward with the same geometry.
// input [N,C_in,L] * kernel [C_in,C_out,K] -> [N,C_out,(L-1)*stride-2*padding+K]
inline Tensor conv1d_transpose_forward(const Tensor& input, const Tensor& kernel, int stride,
                                       int padding) {
    if (input.rank() != 3 || kernel.rank() != 3)
        throw ShapeError("conv1d_transpose_forward: expected input [N,C_in,L] and kernel [C_in,C_out,K]");
    if (input.dim(1) != kernel.dim(0))
        throw ShapeError("conv1d_transpose_forward: input channel extent " +
                         std::to_string(input.dim(1)) + " != kernel axis 0 extent " +
                         std::to_string(kernel.dim(0)));
    if (stride < 1) throw GeometryError("conv1d_transpose_forward: stride must be positive");
    if (padding < 0) throw GeometryError("conv1d_transpose_forward: padding must be nonnegative");
    const int n = input.dim(0), cin = input.dim(1), len = input.dim(2);
    const int cout = kernel.dim(1), k = kernel.dim(2);
    const int lout = conv1d_transpose_out_len(len, k, stride, padding);
    if (lout < 1) throw GeometryError("conv1d_transpose_forward: output length would be < 1");

    Tensor out = Tensor::zeros({n, cout, lout});
    {
        const double* x = input.data().data();
        const double* w = kernel.data().data();
        double* y = out.data().data();
        if (stride == 1) {
            detail::corr_batched<false>(x, cin * len, len, cin, w, k, cout * k, k, 1, padding, y,
                                        cout * lout, cout, lout, n);
        } else {
            for (int b = 0; b < n; ++b)
                for (int ci = 0; ci < cin; ++ci) {
                    const double* xr = x + (b * cin + ci) * len;
                    for (int co = 0; co < cout; ++co) {
                        double* yr = y + (b * cout + co) * lout;
                        const double* wr = w + (ci * cout + co) * k;
                        for (int kk = 0; kk < k; ++kk) {
                            const double wv = wr[kk];
                            const int off = kk - padding;
                            int j0 = off < 0 ? (-off + stride - 1) / stride : 0;
                            int j1 = len - 1;
                            if (off + j1 * stride >= lout) j1 = (lout - 1 - off) / stride;
                            for (int j = j0; j <= j1; ++j) yr[j * stride + off] += wv * xr[j];
                        }
                    }
                }
        }
    }
    detail::record(out, {&input, &kernel},
                   [xi = input.impl(), wi = kernel.impl(), oi = out.impl(),
                    n, cin, len, cout, k, lout, stride, padding] {
        const double* gy = oi->grad.data();
        if (detail::wants_grad(xi)) {
            double* gx = xi->grad.data();
            const double* w = wi->data.data();
            if (stride == 1) {
                detail::corr_batched<true>(gy, cout * lout, lout, cout, w, cout * k, k, k, -1,
                                           -padding, gx, cin * len, cin, len, n);
            } else {
                for (int b = 0; b < n; ++b)
                    for (int ci = 0; ci < cin; ++ci) {
                        double* gxr = gx + (b * cin + ci) * len;
                        for (int co = 0; co < cout; ++co) {
                            const double* gyr = gy + (b * cout + co) * lout;
                            const double* wr = w + (ci * cout + co) * k;
                            for (int kk = 0; kk < k; ++kk) {
                                const double wv = wr[kk];
                                const int off = kk - padding;
                                int j0 = off < 0 ? (-off + stride - 1) / stride : 0;
                                int j1 = len - 1;
                                if (off + j1 * stride >= lout) j1 = (lout - 1 - off) / stride;
                                for (int j = j0; j <= j1; ++j)
                                    gxr[j] += wv * gyr[j * stride + off];
                            }
                        }
                    }
            }
        }
        if (detail::wants_grad(wi)) {
            double* gw = wi->grad.data();
            const double* x = xi->data.data();
            for (int b = 0; b < n; ++b)
                for (int ci = 0; ci < cin; ++ci) {
                    const double* xr = x + (b * cin + ci) * len;
                    for (int co = 0; co < cout; ++co) {
                        const double* gyr = gy + (b * cout + co) * lout;
                        double* gwr = gw + (ci * cout + co) * k;
                        if (stride == 1) {
                            detail::corr_weight_grad_stride1(xr, len, gyr, lout, k, padding, gwr);
                        } else {
                            for (int kk = 0; kk < k; ++kk) {
                                const int off = kk - padding;
                                int j0 = off < 0 ? (-off + stride - 1) / stride : 0;
                                int j1 = len - 1;
                                if (off + j1 * stride >= lout) j1 = (lout - 1 - off) / stride;
                                double acc = 0.0;
                                for (int j = j0; j <= j1; ++j) acc += xr[j] * gyr[j * stride + off];
                                gwr[kk] += acc;
                            }
                        }
                    }
                }
        }
    });
    return out;
}

// Non-overlapping window maximum; remainder elements are dropped. Gradient
// routes to the first maximal index of each window.
inline Tensor maxpool1d(const Tensor& input, int window) {
    if (input.rank() != 3) throw ShapeError("maxpool1d: expected input [N,C,L]");
    if (window < 1) throw GeometryError("maxpool1d: window must be positive");
    const int n = input.dim(0), c = input.dim(1), len = input.dim(2);
    if (window > len)
        throw GeometryError("maxpool1d: window " + std::to_string(window) +
                            " exceeds input length " + std::to_string(len));
    const int lout = len / window;
    Tensor out = Tensor::zeros({n, c, lout});
    auto argmax = std::make_shared<std::vector<int>>(static_cast<size_t>(n * c * lout));
    {
        const double* x = input.data().data();
        double* y = out.data().data();
        int* am = argmax->data();
        for (int r = 0; r < n * c; ++r) {
            const double* xr = x + r * len;
            for (int j = 0; j < lout; ++j) {
                int best = j * window;
                double bv = xr[best];
                for (int i = best + 1; i < (j + 1) * window; ++i)
                    if (xr[i] > bv) {
                        bv = xr[i];
                        best = i;
                    }
                y[r * lout + j] = bv;
                am[r * lout + j] = best;
            }
        }
    }
    detail::record(out, {&input}, [xi = input.impl(), oi = out.impl(), argmax, n, c, len, lout] {
        if (!detail::wants_grad(xi)) return;
        const double* gy = oi->grad.data();
        double* gx = xi->grad.data();
        const int* am = argmax->data();
        for (int r = 0; r < n * c; ++r)
            for (int j = 0; j < lout; ++j) gx[r * len + am[r * lout + j]] += gy[r * lout + j];
    });
    return out;
}

// input [N,C,L] + bias [C]
inline Tensor add_channel_bias(const Tensor& input, const Tensor& bias) {
    if (input.rank() != 3 || bias.rank() != 1)
        throw ShapeError("add_channel_bias: expected input [N,C,L] and bias [C]");
    if (input.dim(1) != bias.dim(0))
        throw ShapeError("add_channel_bias: channel extent " + std::to_string(input.dim(1)) +
                         " != bias extent " + std::to_string(bias.dim(0)));
    const int n = input.dim(0), c = input.dim(1), len = input.dim(2);
    Tensor out = Tensor::zeros({n, c, len});
    for (int b = 0; b < n; ++b)
        for (int ch = 0; ch < c; ++ch) {
            const double bv = bias.data()[ch];
            const double* xr = input.data().data() + (b * c + ch) * len;
            double* yr = out.data().data() + (b * c + ch) * len;
            for (int i = 0; i < len; ++i) yr[i] = xr[i] + bv;
        }
    detail::record(out, {&input, &bias}, [xi = input.impl(), bi = bias.impl(), oi = out.impl(),
                                          n, c, len] {
        const double* gy = oi->grad.data();
        if (detail::wants_grad(xi)) {
            double* gx = xi->grad.data();
            const int total = n * c * len;
            for (int i = 0; i < total; ++i) gx[i] += gy[i];
        }
        if (detail::wants_grad(bi)) {
            double* gb = bi->grad.data();
            for (int b = 0; b < n; ++b)
                for (int ch = 0; ch < c; ++ch) {
                    const double* gyr = gy + (b * c + ch) * len;
                    double acc = 0.0;
                    for (int i = 0; i < len; ++i) acc += gyr[i];
                    gb[ch] += acc;
                }
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Batch normalization

enum class NormMode { Train, Infer };

struct RunningStats {
    std::vector<double> mean;
    std::vector<double> var;
};

inline RunningStats make_running_stats(int channels) {
    return RunningStats{std::vector<double>(static_cast<size_t>(channels), 0.0),
                        std::vector<double>(static_cast<size_t>(channels), 1.0)};
}

// Per-channel normalization over (N,L). Train mode uses batch statistics
// (population variance) and folds them into the running stats; infer mode
// reads the running stats. momentum is the kept fraction of the old value.
inline Tensor batchnorm1d_forward(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                                  NormMode mode, RunningStats& stats, double momentum = 0.9,
                                  double eps = 1e-5) {
    if (input.rank() != 3) throw ShapeError("batchnorm1d_forward: expected input [N,C,L]");
    const int n = input.dim(0), c = input.dim(1), len = input.dim(2);
    if (gamma.rank() != 1 || gamma.dim(0) != c || beta.rank() != 1 || beta.dim(0) != c)
        throw ShapeError("batchnorm1d_forward: gamma/beta must have shape [C] with C=" +
                         std::to_string(c));
    if (static_cast<int>(stats.mean.size()) != c || static_cast<int>(stats.var.size()) != c)
        throw ShapeError("batchnorm1d_forward: running stats sized for " +
                         std::to_string(stats.mean.size()) + " channels, input has " +
                         std::to_string(c));
    const int m = n * len;  // samples per channel

    Tensor out = Tensor::zeros({n, c, len});
    if (mode == NormMode::Train) {
        if (m < 2)
            throw ContractError("batchnorm1d_forward: degenerate batch (need N*L >= 2 in train mode)");
        auto xhat = std::make_shared<std::vector<double>>(static_cast<size_t>(n * c * len));
        auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(c));
        for (int ch = 0; ch < c; ++ch) {
            double mean = 0.0;
            for (int b = 0; b < n; ++b) {
                const double* xr = input.data().data() + (b * c + ch) * len;
                for (int i = 0; i < len; ++i) mean += xr[i];
            }
            mean /= m;
            double var = 0.0;
            for (int b = 0; b < n; ++b) {
                const double* xr = input.data().data() + (b * c + ch) * len;
                for (int i = 0; i < len; ++i) {
                    const double d = xr[i] - mean;
                    var += d * d;
                }
            }
            var /= m;
            const double is = 1.0 / std::sqrt(var + eps);
            (*inv_std)[static_cast<size_t>(ch)] = is;
            const double g = gamma.data()[ch], bta = beta.data()[ch];
            for (int b = 0; b < n; ++b) {
                const double* xr = input.data().data() + (b * c + ch) * len;
                double* hr = xhat->data() + (b * c + ch) * len;
                double* yr = out.data().data() + (b * c + ch) * len;
                for (int i = 0; i < len; ++i) {
                    hr[i] = (xr[i] - mean) * is;
                    yr[i] = g * hr[i] + bta;
                }
            }
            stats.mean[static_cast<size_t>(ch)] =
                momentum * stats.mean[static_cast<size_t>(ch)] + (1.0 - momentum) * mean;
            stats.var[static_cast<size_t>(ch)] =
                momentum * stats.var[static_cast<size_t>(ch)] + (1.0 - momentum) * var;
        }
        detail::record(out, {&input, &gamma, &beta},
                       [xi = input.impl(), gi = gamma.impl(), bi = beta.impl(), oi = out.impl(),
                        xhat, inv_std, n, c, len, m] {
            const double* gy = oi->grad.data();
            for (int ch = 0; ch < c; ++ch) {
                // per-channel reductions shared by the input gradient
                double sum_gy = 0.0, sum_gy_xhat = 0.0;
                for (int b = 0; b < n; ++b) {
                    const double* gyr = gy + (b * c + ch) * len;
                    const double* hr = xhat->data() + (b * c + ch) * len;
                    for (int i = 0; i < len; ++i) {
                        sum_gy += gyr[i];
                        sum_gy_xhat += gyr[i] * hr[i];
                    }
                }
                if (detail::wants_grad(gi)) gi->grad[static_cast<size_t>(ch)] += sum_gy_xhat;
                if (detail::wants_grad(bi)) bi->grad[static_cast<size_t>(ch)] += sum_gy;
                if (detail::wants_grad(xi)) {
                    const double g = gi->data[static_cast<size_t>(ch)];
                    const double is = (*inv_std)[static_cast<size_t>(ch)];
                    const double k = g * is;
                    const double mean_gy = sum_gy / m, mean_gy_xhat = sum_gy_xhat / m;
                    for (int b = 0; b < n; ++b) {
                        const double* gyr = gy + (b * c + ch) * len;
                        const double* hr = xhat->data() + (b * c + ch) * len;
                        double* gxr = xi->grad.data() + (b * c + ch) * len;
                        for (int i = 0; i < len; ++i)
                            gxr[i] += k * (gyr[i] - mean_gy - hr[i] * mean_gy_xhat);
                    }
                }
            }
        });
    } else {
        auto rm = std::make_shared<std::vector<double>>(stats.mean);
        auto rv = std::make_shared<std::vector<double>>(stats.var);
        for (int ch = 0; ch < c; ++ch) {
            const double is = 1.0 / std::sqrt((*rv)[static_cast<size_t>(ch)] + eps);
            const double g = gamma.data()[ch], bta = beta.data()[ch];
            const double mu = (*rm)[static_cast<size_t>(ch)];
            for (int b = 0; b < n; ++b) {
                const double* xr = input.data().data() + (b * c + ch) * len;
                double* yr = out.data().data() + (b * c + ch) * len;
                for (int i = 0; i < len; ++i) yr[i] = g * (xr[i] - mu) * is + bta;
            }
        }
        detail::record(out, {&input, &gamma, &beta},
                       [xi = input.impl(), gi = gamma.impl(), bi = beta.impl(), oi = out.impl(),
                        rm, rv, n, c, len, eps] {
            const double* gy = oi->grad.data();
            for (int ch = 0; ch < c; ++ch) {
                const double is = 1.0 / std::sqrt((*rv)[static_cast<size_t>(ch)] + eps);
                const double mu = (*rm)[static_cast<size_t>(ch)];
                const double g = gi->data[static_cast<size_t>(ch)];
                double sum_gy = 0.0, sum_gy_xhat = 0.0;
                for (int b = 0; b < n; ++b) {
                    const double* gyr = gy + (b * c + ch) * len;
                    const double* xr = xi->data.data() + (b * c + ch) * len;
                    double* gxr = detail::wants_grad(xi) ? xi->grad.data() + (b * c + ch) * len
                                                         : nullptr;
                    for (int i = 0; i < len; ++i) {
                        sum_gy += gyr[i];
                        sum_gy_xhat += gyr[i] * (xr[i] - mu) * is;
                        if (gxr) gxr[i] += gyr[i] * g * is;
                    }
                }
                if (detail::wants_grad(gi)) gi->grad[static_cast<size_t>(ch)] += sum_gy_xhat;
                if (detail::wants_grad(bi)) bi->grad[static_cast<size_t>(ch)] += sum_gy;
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Loss

// -mean(t*log p + (1-t)*log(1-p)) with p clamped to [1e-7, 1-1e-7]. The
// clamp keeps the loss finite; its gradient is zero in the clamped region.
inline Tensor bce_loss(const Tensor& pred, const Tensor& target) {
    check_same_shape("bce_loss", pred, target);
    constexpr double kLo = 1e-7;
    constexpr double kHi = 1.0 - 1e-7;
    const int n = pred.size();
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double p = std::min(std::max(pred.data()[i], kLo), kHi);
        const double t = target.data()[i];
        acc += t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
    Tensor out = Tensor::scalar(-acc / n);
    detail::record(out, {&pred, &target}, [pi = pred.impl(), ti = target.impl(), oi = out.impl(), n] {
        if (!detail::wants_grad(pi)) return;  // target side is treated as constant
        const double g = oi->grad[0] / n;
        for (int i = 0; i < n; ++i) {
            const double raw = pi->data[i];
            if (raw <= kLo || raw >= kHi) continue;
            const double t = ti->data[i];
            pi->grad[i] += g * (raw - t) / (raw * (1.0 - raw));
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    long long step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

inline AdamState make_adam_state(const std::vector<Tensor>& params, AdamConfig cfg = {}) {
    AdamState st;
    st.cfg = cfg;
    st.m.reserve(params.size());
    st.v.reserve(params.size());
    for (const Tensor& p : params) {
        st.m.emplace_back(static_cast<size_t>(p.size()), 0.0);
        st.v.emplace_back(static_cast<size_t>(p.size()), 0.0);
    }
    return st;
}

// Standard bias-corrected Adam; gradients are read from the parameters'
// accumulated grad buffers.
inline void adam_step(std::vector<Tensor>& params, AdamState& st) {
    if (params.size() != st.m.size())
        throw ShapeError("adam_step: state tracks " + std::to_string(st.m.size()) +
                         " parameters, got " + std::to_string(params.size()));
    st.step += 1;
    const double b1 = st.cfg.beta1, b2 = st.cfg.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = params[i];
        if (st.m[i].size() != p.data().size())
            throw ShapeError("adam_step: parameter " + std::to_string(i) +
                             " changed size under the optimizer");
        const std::vector<double> g = p.grad();
        double* m = st.m[i].data();
        double* v = st.v[i].data();
        double* w = p.data().data();
        const size_t n = g.size();
        for (size_t j = 0; j < n; ++j) {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            w[j] -= st.cfg.lr * mhat / (std::sqrt(vhat) + st.cfg.eps);
        }
    }
}

}  // namespace tcgan

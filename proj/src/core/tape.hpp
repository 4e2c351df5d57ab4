#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

#include "errors.hpp"

namespace epinn::ad {

class Tape;

// Handle to a scalar node on a Tape. Cheap to copy; only valid for the tape
// that produced it and until the next clear().
struct Var {
    Tape* tape = nullptr;
    std::int32_t idx = -1;

    bool valid() const { return tape != nullptr && idx >= 0; }
};

// Scalar reverse-mode tape. Network passes contribute leaves (their output
// components); residuals, means and penalties are composed on top with the
// overloaded operators below. backward() fills one adjoint per node.
class Tape {
public:
    Tape() { nodes_.reserve(1 << 12); }

    Var leaf(double value) { return push(value, -1, 0.0, -1, 0.0); }
    Var constant(double value) { return push(value, -1, 0.0, -1, 0.0); }

    double value(Var v) const {
        check(v);
        return nodes_[static_cast<size_t>(v.idx)].val;
    }

    std::size_t size() const { return nodes_.size(); }

    // Reverse sweep seeding d(root)/d(root) = 1.
    void backward(Var root) {
        check(root);
        adjoints_.assign(nodes_.size(), 0.0);
        adjoints_[static_cast<size_t>(root.idx)] = 1.0;
        for (std::int32_t i = root.idx; i >= 0; --i) {
            const Node& n = nodes_[static_cast<size_t>(i)];
            const double a = adjoints_[static_cast<size_t>(i)];
            if (a == 0.0) continue;
            if (n.arg0 >= 0) adjoints_[static_cast<size_t>(n.arg0)] += a * n.p0;
            if (n.arg1 >= 0) adjoints_[static_cast<size_t>(n.arg1)] += a * n.p1;
        }
        finalized_ = true;
    }

    double adjoint(Var v) const {
        check(v);
        if (!finalized_)
            throw UsageError("tape: adjoint queried before backward() finalized a scalar");
        return adjoints_[static_cast<size_t>(v.idx)];
    }

    double adjoint_at(std::int32_t idx) const {
        if (!finalized_)
            throw UsageError("tape: adjoint queried before backward() finalized a scalar");
        if (idx < 0 || static_cast<size_t>(idx) >= nodes_.size())
            throw UsageError("tape: adjoint index out of range");
        return adjoints_[static_cast<size_t>(idx)];
    }

    void clear() {
        nodes_.clear();
        adjoints_.clear();
        finalized_ = false;
    }

    // -- internal: node construction used by the operator overloads ---------
    Var push(double val, std::int32_t a0, double p0, std::int32_t a1, double p1) {
        nodes_.push_back(Node{val, p0, p1, a0, a1});
        return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
    }

private:
    struct Node {
        double val;
        double p0, p1;        // local partials w.r.t. arg0/arg1
        std::int32_t arg0, arg1;
    };

    void check(Var v) const {
        if (v.tape != this || v.idx < 0 || static_cast<size_t>(v.idx) >= nodes_.size())
            throw UsageError("tape: variable does not belong to this tape");
    }

    std::vector<Node> nodes_;
    std::vector<double> adjoints_;
    bool finalized_ = false;
};

inline Var binary(Var a, Var b, double val, double pa, double pb) {
    assert(a.tape == b.tape);
    return a.tape->push(val, a.idx, pa, b.idx, pb);
}

inline Var unary(Var a, double val, double pa) {
    return a.tape->push(val, a.idx, pa, -1, 0.0);
}

inline double val(Var v) { return v.tape->value(v); }

inline Var operator+(Var a, Var b) { return binary(a, b, val(a) + val(b), 1.0, 1.0); }
inline Var operator-(Var a, Var b) { return binary(a, b, val(a) - val(b), 1.0, -1.0); }
inline Var operator*(Var a, Var b) { return binary(a, b, val(a) * val(b), val(b), val(a)); }
inline Var operator/(Var a, Var b) {
    const double vb = val(b);
    return binary(a, b, val(a) / vb, 1.0 / vb, -val(a) / (vb * vb));
}

inline Var operator+(Var a, double c) { return unary(a, val(a) + c, 1.0); }
inline Var operator+(double c, Var a) { return a + c; }
inline Var operator-(Var a, double c) { return unary(a, val(a) - c, 1.0); }
inline Var operator-(double c, Var a) { return unary(a, c - val(a), -1.0); }
inline Var operator*(Var a, double c) { return unary(a, val(a) * c, c); }
inline Var operator*(double c, Var a) { return a * c; }
inline Var operator/(Var a, double c) { return unary(a, val(a) / c, 1.0 / c); }
inline Var operator/(double c, Var a) {
    const double va = val(a);
    return unary(a, c / va, -c / (va * va));
}
inline Var operator-(Var a) { return unary(a, -val(a), -1.0); }

inline Var square(Var a) { return unary(a, val(a) * val(a), 2.0 * val(a)); }

inline Var tanh(Var a) {
    const double t = std::tanh(val(a));
    return unary(a, t, 1.0 - t * t);
}

} // namespace epinn::ad

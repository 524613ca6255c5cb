#pragma once

#include <functional>
#include <vector>

#include "tcgan/common.hpp"
#include "tcgan/tensor.hpp"

namespace testutil {

// Central finite differences against the recorded backward pass. The loss
// functor must rebuild the graph from the current parameter values each call;
// it is evaluated untaped for the numeric side.
struct FdReport {
    double max_rel_err = 0.0;
    int checked = 0;
};

inline FdReport fd_check(const std::function<tcgan::Tensor()>& loss_fn,
                         std::vector<tcgan::Tensor> params, double h = 1e-5,
                         double rtol = 1e-4, double atol = 1e-7) {
    std::vector<std::vector<double>> analytic;
    {
        tcgan::Tape tape;
        tcgan::Tensor loss = loss_fn();
        tape.backward(loss);
        for (auto& p : params) analytic.push_back(p.grad());
    }
    FdReport rep;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& data = params[pi].data();
        for (size_t j = 0; j < data.size(); ++j) {
            const double orig = data[j];
            data[j] = orig + h;
            const double up = loss_fn().value();
            data[j] = orig - h;
            const double dn = loss_fn().value();
            data[j] = orig;
            const double numeric = (up - dn) / (2.0 * h);
            const double a = analytic[pi][j];
            const double err = std::abs(a - numeric);
            const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
            rep.max_rel_err = std::max(rep.max_rel_err, err / denom);
            if (err > atol + rtol * denom)
                throw std::runtime_error(
                    "fd mismatch: param " + std::to_string(pi) + " coord " + std::to_string(j) +
                    " analytic " + std::to_string(a) + " numeric " + std::to_string(numeric));
            ++rep.checked;
        }
    }
    return rep;
}

inline tcgan::Tensor random_tensor(tcgan::Shape shape, tcgan::Rng& rng, double lo = -1.0,
                                   double hi = 1.0, bool requires_grad = false) {
    tcgan::Tensor t = tcgan::Tensor::zeros(std::move(shape));
    for (double& v : t.data()) v = rng.uniform(lo, hi);
    t.set_requires_grad(requires_grad);
    return t;
}

// Values bounded away from zero so ReLU kinks cannot corrupt the numeric
// derivative.
inline tcgan::Tensor random_tensor_off_kink(tcgan::Shape shape, tcgan::Rng& rng,
                                            bool requires_grad = false) {
    tcgan::Tensor t = tcgan::Tensor::zeros(std::move(shape));
    for (double& v : t.data()) {
        do {
            v = rng.uniform(-1.0, 1.0);
        } while (std::abs(v) < 1e-2);
    }
    t.set_requires_grad(requires_grad);
    return t;
}

}  // namespace testutil

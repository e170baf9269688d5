#include "ccgs/optim.hpp"

#include <cmath>

#include "ccgs/error.hpp"
#include "ccgs/rng.hpp"

namespace ccgs {

void round_to_f32(Tensor& t) {
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<double>(static_cast<float>(t[i]));
}

Tensor& ParameterSet::create(const std::string& name, Tensor init) {
    if (entries_.count(name) != 0) {
        throw ValidationError("parameter '" + name + "' already registered");
    }
    round_to_f32(init);
    Entry e;
    e.m = Tensor(init.shape());
    e.v = Tensor(init.shape());
    e.value = std::move(init);
    return entries_.emplace(name, std::move(e)).first->second.value;
}

Tensor& ParameterSet::get(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ValidationError("unknown parameter '" + name + "'");
    return it->second.value;
}

const Tensor& ParameterSet::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ValidationError("unknown parameter '" + name + "'");
    return it->second.value;
}

std::vector<std::string> ParameterSet::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, entry] : entries_) out.push_back(name);
    return out;
}

void ParameterSet::adamw_step(const std::map<std::string, Tensor>& grads, const AdamWConfig& cfg) {
    step_ += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
    for (auto& [name, entry] : entries_) {
        auto git = grads.find(name);
        if (git == grads.end()) {
            throw ValidationError("adamw_step: no gradient for parameter '" + name + "'");
        }
        const Tensor& g = git->second;
        if (!g.same_shape(entry.value)) {
            throw ShapeError("adamw_step: gradient for '" + name + "' is " + g.shape_str() +
                             ", parameter is " + entry.value.shape_str());
        }
        Tensor& p = entry.value;
        Tensor& m = entry.m;
        Tensor& v = entry.v;
        for (std::size_t i = 0; i < p.numel(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p[i] -= cfg.lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * p[i]);
        }
        round_to_f32(p);
        round_to_f32(m);
        round_to_f32(v);
    }
}

Tensor glorot_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t({rows, cols});
    Rng rng(seed);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.next_real(-limit, limit);
    return t;
}

Tensor embedding_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    const double limit = std::sqrt(1.5); // uniform with variance 1/2
    Tensor t({rows, cols});
    Rng rng(seed);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.next_real(-limit, limit);
    return t;
}

Var BoundParams::at(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) throw ValidationError("parameter '" + name + "' is not bound");
    return it->second;
}

BoundParams bind_params(Tape& tape, const ParameterSet& params) {
    BoundParams bound;
    bound.tape = &tape;
    for (const auto& [name, entry] : params.entries()) {
        bound.vars.emplace(name, tape.leaf(entry.value, true));
    }
    return bound;
}

std::map<std::string, Tensor> collect_grads(const BoundParams& bound) {
    std::map<std::string, Tensor> grads;
    for (const auto& [name, var] : bound.vars) {
        if (bound.tape->has_grad(var)) {
            grads.emplace(name, bound.tape->grad(var));
        } else {
            grads.emplace(name, Tensor(bound.tape->value(var).shape()));
        }
    }
    return grads;
}

void ParameterSet::restore(std::map<std::string, Entry> entries, std::uint64_t step) {
    for (auto& [name, entry] : entries) {
        if (!entry.m.same_shape(entry.value) || !entry.v.same_shape(entry.value)) {
            throw ValidationError("restore: moment shape mismatch for parameter '" + name + "'");
        }
    }
    entries_ = std::move(entries);
    step_ = step;
}

} // namespace ccgs

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ccgs/autograd.hpp"
#include "ccgs/tensor.hpp"

namespace ccgs {

struct AdamWConfig {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

/// Named trainable tensors plus AdamW first/second moment accumulators.
///
/// Values and moments are kept 32-bit-representable at all times (rounded on
/// create and after every step), so the 32-bit checkpoint format loses nothing
/// and a save/load/resume continues bit-identically.
class ParameterSet {
public:
    /// Registers a parameter. Throws if the name is already taken.
    Tensor& create(const std::string& name, Tensor init);

    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const { return entries_.count(name) != 0; }

    /// Parameter names in sorted order (the map's iteration order).
    std::vector<std::string> names() const;
    std::size_t count() const { return entries_.size(); }
    std::uint64_t step() const { return step_; }

    /// One AdamW update with decoupled weight decay. `grads` must hold an entry
    /// for every parameter (zero tensors are fine); a missing one throws.
    void adamw_step(const std::map<std::string, Tensor>& grads, const AdamWConfig& cfg);

    // Checkpoint plumbing.
    struct Entry {
        Tensor value;
        Tensor m;
        Tensor v;
    };
    const std::map<std::string, Entry>& entries() const { return entries_; }
    void restore(std::map<std::string, Entry> entries, std::uint64_t step);

private:
    std::map<std::string, Entry> entries_;
    std::uint64_t step_ = 0;
};

/// Rounds every element to the nearest 32-bit float value (still stored as
/// doubles).
void round_to_f32(Tensor& t);

/// Glorot-uniform initialization, deterministic in the seed.
Tensor glorot_init(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// Uniform initialization for embedding tables, deterministic in the seed.
/// Per-element variance is 1/2, so an embedding row starts at the same
/// expected norm as a sinusoid position row; glorot with fan-in = table size
/// would leave token identity orders of magnitude quieter than position.
Tensor embedding_init(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// One forward/backward episode's view of a ParameterSet: every parameter as a
/// requires_grad leaf on the tape.
struct BoundParams {
    Tape* tape = nullptr;
    std::map<std::string, Var> vars;
    Var at(const std::string& name) const;
};

BoundParams bind_params(Tape& tape, const ParameterSet& params);

/// Gradients per parameter after backward(). Parameters the loss never reached
/// get zero tensors, so a partial forward (e.g. a disabled submodule) still
/// feeds adamw_step.
std::map<std::string, Tensor> collect_grads(const BoundParams& bound);

} // namespace ccgs

#pragma once

// Dataset error with cached hidden-layer state.
//
// The cache stores, for every hidden node j and sample s, the gated row sum and
// the resulting activation sigmoid(bias_j + sum). A single-gene mutation only
// invalidates one row (input-layer change), one activation (hidden bias) or
// nothing (output layer), so re-evaluation costs O(n*S) instead of O(n*h*S).
// For networks without RandomDrop gates the sums use the same ascending order
// as forward(), so the cached error is bit-identical to mse().
//
// Rows holding RandomDrop gates cache the sum over their other connections and
// add the coin-flipped terms (ascending) on every evaluation.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dendrevo/error.hpp"
#include "dendrevo/network.hpp"
#include "dendrevo/nk_landscape.hpp"
#include "dendrevo/random.hpp"

namespace dendrevo {

struct HiddenCache {
    std::size_t h = 0;
    std::size_t samples = 0;
    std::vector<double> sums;        // [j * samples + s]
    std::vector<double> activations; // [j * samples + s]
    std::vector<std::uint8_t> stochastic; // row j has RandomDrop gates
};

/// Which part of a network changed since its cache was built.
struct ChangeSite {
    enum class Where { Nothing, InputRow, HiddenBias, OutputLayer };
    Where where = Where::Nothing;
    std::size_t row = 0; ///< hidden node for InputRow / HiddenBias
};

class CachedEvaluator {
public:
    explicit CachedEvaluator(const Dataset& data, double drop_probability = default_drop_probability)
        : data_(&data), drop_probability_(drop_probability)
    {
        if (data.empty())
            throw InvalidInput("evaluator needs a nonempty dataset");
    }

    const Dataset& data() const noexcept { return *data_; }

    HiddenCache build(const Network& net, Rng& rng) const
    {
        check(net);
        HiddenCache c;
        c.h = net.h();
        c.samples = data_->size();
        c.sums.assign(c.h * c.samples, 0.0);
        c.activations.assign(c.h * c.samples, 0.0);
        c.stochastic.assign(c.h, 0);
        for (std::size_t j = 0; j < net.h(); ++j) {
            refresh_row(net, j, c);
            if (c.stochastic[j])
                redraw_row(net, j, c, rng);
        }
        return c;
    }

    /// Error of `net` whose cache was copied from a parent differing only at `site`.
    double evaluate_after(const Network& net, HiddenCache& cache, ChangeSite site, Rng& rng) const
    {
        check(net);
        for (std::size_t j = 0; j < net.h(); ++j) {
            if (site.where == ChangeSite::Where::InputRow && site.row == j)
                refresh_row(net, j, cache);
            else if (site.where == ChangeSite::Where::HiddenBias && site.row == j && !cache.stochastic[j])
                refresh_activation(net, j, cache);
            if (cache.stochastic[j])
                redraw_row(net, j, cache, rng);
        }
        return error(net, cache, rng);
    }

    /// Output-layer pass over cached activations.
    double error(const Network& net, const HiddenCache& cache, Rng& rng) const
    {
        const std::size_t S = cache.samples;
        double total = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            double sum = 0.0;
            for (std::size_t j = 0; j < net.h(); ++j) {
                const double a = cache.activations[j * S + s];
                if (gate_passes(net.out_gate(j), a, rng, drop_probability_))
                    sum += net.out_weight(j) * a;
            }
            const double e = sigmoid(net.output_bias() + sum) - data_->target(s);
            total += e * e;
        }
        return total / static_cast<double>(S);
    }

    /// Recomputes the cached sums of row j (and its activations unless the row is stochastic).
    void refresh_row(const Network& net, std::size_t j, HiddenCache& c) const
    {
        double* sums = c.sums.data() + j * c.samples;
        c.stochastic[j] = net.row_has_stochastic_gate(j) ? 1 : 0;
        if (!net.row_has_active_gate(j))
            plain_row(net.row_weights(j), sums);
        else
            gated_row(net.row_weights(j), net.row_gates(j), sums);
        if (!c.stochastic[j])
            refresh_activation(net, j, c);
    }

    void refresh_activation(const Network& net, std::size_t j, HiddenCache& c) const
    {
        const std::size_t S = c.samples;
        const double b = net.hidden_bias(j);
        for (std::size_t s = 0; s < S; ++s)
            c.activations[j * S + s] = sigmoid(b + c.sums[j * S + s]);
    }

    /// Fresh coin flips for the RandomDrop connections of row j.
    void redraw_row(const Network& net, std::size_t j, HiddenCache& c, Rng& rng) const
    {
        const std::size_t S = c.samples;
        const auto w = net.row_weights(j);
        const auto g = net.row_gates(j);
        std::vector<std::size_t> drops;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g[i].stochastic())
                drops.push_back(i);
        const double b = net.hidden_bias(j);
        for (std::size_t s = 0; s < S; ++s) {
            const double* x = data_->features(s).data();
            double sum = c.sums[j * S + s];
            for (auto i : drops)
                if (!rng.bernoulli(drop_probability_))
                    sum += w[i] * x[i];
            c.activations[j * S + s] = sigmoid(b + sum);
        }
    }

private:
    void check(const Network& net) const
    {
        if (net.n() != data_->n())
            throw InvalidInput("dataset feature length does not match network inputs");
    }

    // Four samples at a time; each accumulator keeps ascending input order.
    void plain_row(std::span<const double> w, double* out) const
    {
        const std::size_t S = data_->size();
        const std::size_t n = w.size();
        std::size_t s = 0;
        for (; s + 4 <= S; s += 4) {
            const double* x0 = data_->features(s).data();
            const double* x1 = x0 + n;
            const double* x2 = x1 + n;
            const double* x3 = x2 + n;
            double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double wi = w[i];
                a0 += wi * x0[i];
                a1 += wi * x1[i];
                a2 += wi * x2[i];
                a3 += wi * x3[i];
            }
            out[s] = a0;
            out[s + 1] = a1;
            out[s + 2] = a2;
            out[s + 3] = a3;
        }
        for (; s < S; ++s) {
            const double* x = data_->features(s).data();
            double a = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                a += w[i] * x[i];
            out[s] = a;
        }
    }

    // As plain_row, testing deterministic gates and leaving RandomDrop terms out.
    void gated_row(std::span<const double> w, std::span<const Gate> g, double* out) const
    {
        const std::size_t S = data_->size();
        const std::size_t n = w.size();
        Rng unused(0);
        std::size_t s = 0;
        for (; s + 4 <= S; s += 4) {
            const double* x0 = data_->features(s).data();
            const double* x1 = x0 + n;
            const double* x2 = x1 + n;
            const double* x3 = x2 + n;
            double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const GateKind kind = g[i].kind;
                if (kind == GateKind::Inactive) {
                    const double wi = w[i];
                    a0 += wi * x0[i];
                    a1 += wi * x1[i];
                    a2 += wi * x2[i];
                    a3 += wi * x3[i];
                } else if (kind != GateKind::RandomDrop) {
                    if (gate_passes(g[i], x0[i], unused))
                        a0 += w[i] * x0[i];
                    if (gate_passes(g[i], x1[i], unused))
                        a1 += w[i] * x1[i];
                    if (gate_passes(g[i], x2[i], unused))
                        a2 += w[i] * x2[i];
                    if (gate_passes(g[i], x3[i], unused))
                        a3 += w[i] * x3[i];
                }
            }
            out[s] = a0;
            out[s + 1] = a1;
            out[s + 2] = a2;
            out[s + 3] = a3;
        }
        for (; s < S; ++s) {
            const double* x = data_->features(s).data();
            double a = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (!g[i].stochastic() && gate_passes(g[i], x[i], unused))
                    a += w[i] * x[i];
            out[s] = a;
        }
    }

    const Dataset* data_;
    double drop_probability_;
};

} // namespace dendrevo

#pragma once

// Two-layer perceptron (n inputs, h sigmoid hidden nodes, one sigmoid output)
// whose n*h + h weighted connections each carry a Gate. Biases are ungated.

#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dendrevo/error.hpp"
#include "dendrevo/gate.hpp"
#include "dendrevo/nk_landscape.hpp"
#include "dendrevo/random.hpp"
#include "dendrevo/text.hpp"

namespace dendrevo {

inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

struct GateCounts {
    std::size_t input_layer = 0;
    std::size_t output_layer = 0;
    std::size_t gateable = 0; ///< n*h + h

    std::size_t total() const noexcept { return input_layer + output_layer; }
    double fraction() const noexcept
    {
        return gateable == 0 ? 0.0 : static_cast<double>(total()) / static_cast<double>(gateable);
    }
};

class Network {
public:
    Network(std::size_t n, std::size_t h)
        : n_(n), h_(h), in_weight_(n * h, 0.0), in_gate_(n * h), hidden_bias_(h, 0.0),
          out_weight_(h, 0.0), out_gate_(h)
    {
        if (n == 0 || h == 0)
            throw InvalidParameters("network needs at least one input and one hidden node");
    }

    /// Weights and biases uniform on [-1, 1]; all gates Inactive.
    static Network random(std::size_t n, std::size_t h, Rng& rng)
    {
        Network net(n, h);
        for (auto& w : net.in_weight_)
            w = rng.uniform_closed(-1.0, 1.0);
        for (auto& b : net.hidden_bias_)
            b = rng.uniform_closed(-1.0, 1.0);
        for (auto& w : net.out_weight_)
            w = rng.uniform_closed(-1.0, 1.0);
        net.output_bias_ = rng.uniform_closed(-1.0, 1.0);
        return net;
    }

    std::size_t n() const noexcept { return n_; }
    std::size_t h() const noexcept { return h_; }
    std::size_t gateable_count() const noexcept { return n_ * h_ + h_; }
    /// Weights plus biases: n*h + h + h + 1.
    std::size_t parameter_count() const noexcept { return n_ * h_ + 2 * h_ + 1; }

    double& in_weight(std::size_t j, std::size_t i) { return in_weight_[j * n_ + i]; }
    double in_weight(std::size_t j, std::size_t i) const { return in_weight_[j * n_ + i]; }
    Gate& in_gate(std::size_t j, std::size_t i) { return in_gate_[j * n_ + i]; }
    const Gate& in_gate(std::size_t j, std::size_t i) const { return in_gate_[j * n_ + i]; }
    double& out_weight(std::size_t j) { return out_weight_[j]; }
    double out_weight(std::size_t j) const { return out_weight_[j]; }
    Gate& out_gate(std::size_t j) { return out_gate_[j]; }
    const Gate& out_gate(std::size_t j) const { return out_gate_[j]; }
    double& hidden_bias(std::size_t j) { return hidden_bias_[j]; }
    double hidden_bias(std::size_t j) const { return hidden_bias_[j]; }
    double& output_bias() { return output_bias_; }
    double output_bias() const { return output_bias_; }

    Connection input_connection(std::size_t j, std::size_t i) const { return {in_weight(j, i), in_gate(j, i)}; }
    Connection output_connection(std::size_t j) const { return {out_weight_[j], out_gate_[j]}; }

    std::span<const double> row_weights(std::size_t j) const { return {in_weight_.data() + j * n_, n_}; }
    std::span<const Gate> row_gates(std::size_t j) const { return {in_gate_.data() + j * n_, n_}; }

    /// Gated connections are indexed input layer first (j*n + i), then output (n*h + j).
    Gate& gate_at(std::size_t c) { return c < n_ * h_ ? in_gate_[c] : out_gate_[c - n_ * h_]; }
    const Gate& gate_at(std::size_t c) const { return c < n_ * h_ ? in_gate_[c] : out_gate_[c - n_ * h_]; }

    bool row_has_active_gate(std::size_t j) const
    {
        for (const auto& g : row_gates(j))
            if (g.active())
                return true;
        return false;
    }

    bool row_has_stochastic_gate(std::size_t j) const
    {
        for (const auto& g : row_gates(j))
            if (g.stochastic())
                return true;
        return false;
    }

    bool operator==(const Network&) const = default;

private:
    std::size_t n_;
    std::size_t h_;
    std::vector<double> in_weight_; // row-major h x n
    std::vector<Gate> in_gate_;
    std::vector<double> hidden_bias_;
    std::vector<double> out_weight_;
    std::vector<Gate> out_gate_;
    double output_bias_ = 0.0;
};

/// Gated sum of one hidden row, ascending input order.
inline double hidden_row_sum(const Network& net, std::size_t j, std::span<const double> x, Rng& rng,
                             double drop_probability = default_drop_probability)
{
    auto w = net.row_weights(j);
    auto g = net.row_gates(j);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (gate_passes(g[i], x[i], rng, drop_probability))
            s += w[i] * x[i];
    return s;
}

/// Output given hidden activations, ascending hidden order.
inline double output_from_hidden(const Network& net, std::span<const double> hidden, Rng& rng,
                                 double drop_probability = default_drop_probability)
{
    double s = 0.0;
    for (std::size_t j = 0; j < net.h(); ++j)
        if (gate_passes(net.out_gate(j), hidden[j], rng, drop_probability))
            s += net.out_weight(j) * hidden[j];
    return sigmoid(net.output_bias() + s);
}

inline double forward(const Network& net, std::span<const double> features, Rng& rng,
                      double drop_probability = default_drop_probability)
{
    if (features.size() != net.n())
        throw InvalidInput("feature length " + std::to_string(features.size()) + " does not match n=" +
                           std::to_string(net.n()));
    std::vector<double> hidden(net.h());
    for (std::size_t j = 0; j < net.h(); ++j)
        hidden[j] = sigmoid(net.hidden_bias(j) + hidden_row_sum(net, j, features, rng, drop_probability));
    return output_from_hidden(net, hidden, rng, drop_probability);
}

/// Mean squared error over the dataset, accumulated in sample order.
inline double mse(const Network& net, const Dataset& data, Rng& rng, double drop_probability = default_drop_probability)
{
    if (data.empty())
        throw InvalidInput("mse over an empty dataset");
    if (data.n() != net.n())
        throw InvalidInput("dataset feature length does not match network inputs");
    double total = 0.0;
    for (std::size_t s = 0; s < data.size(); ++s) {
        double e = forward(net, data.features(s), rng, drop_probability) - data.target(s);
        total += e * e;
    }
    return total / static_cast<double>(data.size());
}

inline GateCounts count_active_gates(const Network& net)
{
    GateCounts c;
    c.gateable = net.gateable_count();
    for (std::size_t j = 0; j < net.h(); ++j) {
        for (const auto& g : net.row_gates(j))
            c.input_layer += g.active() ? 1 : 0;
        c.output_layer += net.out_gate(j).active() ? 1 : 0;
    }
    return c;
}

/// Copy with every hidden-to-output gate disabled.
inline Network ablate_output_gates(Network net)
{
    for (std::size_t j = 0; j < net.h(); ++j)
        net.out_gate(j) = Gate::inactive();
    return net;
}

// ---------------------------------------------------------------------------
// genome text format:
//   DNET 1 <n> <h>
//   <layer> <to> <from> <weight> <gate-tag> [<gate-params>]
// layer 0 = input->hidden, 1 = hidden->output; biases use from = -1.

namespace detail {

inline void write_param(std::ostream& os, int layer, std::size_t to, long from, double w, const Gate& g)
{
    os << layer << ' ' << to << ' ' << from << ' ' << text::real(w) << ' ' << gate_tag(g.kind);
    switch (g.kind) {
    case GateKind::Lower:
    case GateKind::Upper:
        os << ' ' << text::real(g.threshold());
        break;
    case GateKind::Range:
        os << ' ' << text::real(g.lo) << ' ' << text::real(g.hi);
        break;
    default:
        break;
    }
    os << '\n';
}

inline Gate parse_gate(const std::vector<std::string_view>& tok, std::size_t at, std::size_t line_no)
{
    auto need = [&](std::size_t count) {
        if (tok.size() != at + 1 + count)
            throw InvalidInput("wrong gate parameter count on line " + std::to_string(line_no));
    };
    if (tok[at].size() != 1)
        throw InvalidInput("bad gate tag on line " + std::to_string(line_no));
    switch (tok[at][0]) {
    case 'I': need(0); return Gate::inactive();
    case 'D': need(0); return Gate::random_drop();
    case 'L': need(1); return Gate::lower(text::parse_real(tok[at + 1]));
    case 'U': need(1); return Gate::upper(text::parse_real(tok[at + 1]));
    case 'R': need(2); return Gate::range(text::parse_real(tok[at + 1]), text::parse_real(tok[at + 2]));
    default: throw InvalidInput("unknown gate tag on line " + std::to_string(line_no));
    }
}

} // namespace detail

inline void write_network(std::ostream& os, const Network& net)
{
    os << "DNET 1 " << net.n() << ' ' << net.h() << '\n';
    for (std::size_t j = 0; j < net.h(); ++j) {
        detail::write_param(os, 0, j, -1, net.hidden_bias(j), Gate::inactive());
        for (std::size_t i = 0; i < net.n(); ++i)
            detail::write_param(os, 0, j, static_cast<long>(i), net.in_weight(j, i), net.in_gate(j, i));
    }
    detail::write_param(os, 1, 0, -1, net.output_bias(), Gate::inactive());
    for (std::size_t j = 0; j < net.h(); ++j)
        detail::write_param(os, 1, 0, static_cast<long>(j), net.out_weight(j), net.out_gate(j));
}

/// Lines may appear in any order but every parameter must be present exactly once.
inline Network read_network(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line))
        throw InvalidInput("empty genome file");
    auto head = text::tokens(line);
    if (head.size() != 4 || head[0] != "DNET" || head[1] != "1")
        throw InvalidInput("bad genome header: " + line);
    const auto n = text::parse_int<std::size_t>(head[2]);
    const auto h = text::parse_int<std::size_t>(head[3]);
    Network net(n, h);
    std::vector<bool> seen(net.parameter_count(), false);
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        auto tok = text::tokens(line);
        if (tok.empty())
            continue;
        if (tok.size() < 5)
            throw InvalidInput("too few fields on line " + std::to_string(line_no));
        const int layer = text::parse_int<int>(tok[0]);
        const auto to = text::parse_int<std::size_t>(tok[1]);
        const long from = text::parse_int<long>(tok[2]);
        const double w = text::parse_real(tok[3]);
        if (!std::isfinite(w))
            throw InvalidInput("non-finite weight on line " + std::to_string(line_no));
        const Gate g = detail::parse_gate(tok, 4, line_no);
        std::size_t slot = 0;
        if (layer == 0) {
            if (to >= h || from < -1 || from >= static_cast<long>(n))
                throw InvalidInput("index out of range on line " + std::to_string(line_no));
            if (from < 0) {
                if (g.active())
                    throw InvalidInput("bias cannot carry a gate (line " + std::to_string(line_no) + ")");
                net.hidden_bias(to) = w;
                slot = n * h + h + to;
            } else {
                net.in_weight(to, static_cast<std::size_t>(from)) = w;
                net.in_gate(to, static_cast<std::size_t>(from)) = g;
                slot = to * n + static_cast<std::size_t>(from);
            }
        } else if (layer == 1) {
            if (to != 0 || from < -1 || from >= static_cast<long>(h))
                throw InvalidInput("index out of range on line " + std::to_string(line_no));
            if (from < 0) {
                if (g.active())
                    throw InvalidInput("bias cannot carry a gate (line " + std::to_string(line_no) + ")");
                net.output_bias() = w;
                slot = n * h + 2 * h;
            } else {
                net.out_weight(static_cast<std::size_t>(from)) = w;
                net.out_gate(static_cast<std::size_t>(from)) = g;
                slot = n * h + static_cast<std::size_t>(from);
            }
        } else {
            throw InvalidInput("bad layer on line " + std::to_string(line_no));
        }
        if (seen[slot])
            throw InvalidInput("duplicate parameter on line " + std::to_string(line_no));
        seen[slot] = true;
    }
    for (bool s : seen)
        if (!s)
            throw InvalidInput("genome file is missing parameters");
    return net;
}

} // namespace dendrevo

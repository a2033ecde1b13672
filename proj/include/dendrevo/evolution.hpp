#pragma once

// Steady-state neuroevolution over gated perceptrons.
//
// Each step draws a parent by binary tournament, applies one mutation to a copy,
// evaluates the copy on the fixed training set and writes it over a uniformly
// chosen victim. With parsimony enabled an exact fitness tie keeps whichever of
// the two uses fewer active gates.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dendrevo/error.hpp"
#include "dendrevo/evaluator.hpp"
#include "dendrevo/gate.hpp"
#include "dendrevo/network.hpp"
#include "dendrevo/nk_landscape.hpp"
#include "dendrevo/random.hpp"

namespace dendrevo {

enum class Variant {
    Standard,          ///< plain MLP, weight mutation only
    DendriteThreshold, ///< lower/upper threshold gates
    DendriteRange,     ///< [lo, hi] band gates
    RandomDropout,     ///< gates that pass on a coin flip
};

inline std::string to_string(Variant v)
{
    switch (v) {
    case Variant::Standard: return "standard";
    case Variant::DendriteThreshold: return "dendrite";
    case Variant::DendriteRange: return "range";
    case Variant::RandomDropout: return "dropout";
    }
    return "?";
}

inline Variant parse_variant(std::string_view s)
{
    if (s == "standard" || s == "mlp")
        return Variant::Standard;
    if (s == "dendrite" || s == "threshold" || s == "dmlp")
        return Variant::DendriteThreshold;
    if (s == "range")
        return Variant::DendriteRange;
    if (s == "dropout" || s == "random" || s == "rmlp")
        return Variant::RandomDropout;
    throw InvalidParameters("unknown variant '" + std::string(s) + "'");
}

struct EvoConfig {
    std::size_t p = 50;
    std::size_t h = 10;
    double r = 0.1;
    std::size_t generations = 1000;
    std::size_t offspring_per_generation = 0; ///< 0 means p
    Variant variant = Variant::DendriteThreshold;
    double dendrite_mutation_prob = 0.5;
    bool parsimony = true;
    double drop_probability = default_drop_probability;
    bool resample_train = false; ///< fresh training set per offspring evaluation
    std::uint64_t seed = 0;

    std::size_t steps_per_generation() const noexcept { return offspring_per_generation == 0 ? p : offspring_per_generation; }

    double effective_dendrite_prob() const noexcept
    {
        return variant == Variant::Standard ? 0.0 : dendrite_mutation_prob;
    }

    void validate() const
    {
        if (p < 2)
            throw InvalidParameters("population size must be at least 2");
        if (h < 1)
            throw InvalidParameters("hidden layer needs at least one node");
        if (!(r > 0.0))
            throw InvalidParameters("mutation range r must be positive");
        if (!(dendrite_mutation_prob >= 0.0 && dendrite_mutation_prob <= 1.0))
            throw InvalidParameters("dendrite_mutation_prob must lie in [0, 1]");
        if (!(drop_probability >= 0.0 && drop_probability <= 1.0))
            throw InvalidParameters("drop_probability must lie in [0, 1]");
    }
};

struct Individual {
    Network network;
    double fitness = 0.0; ///< training MSE
    std::size_t active_gate_count = 0;
};

struct Population {
    std::vector<Individual> members;

    std::size_t size() const noexcept { return members.size(); }
    Individual& operator[](std::size_t i) { return members[i]; }
    const Individual& operator[](std::size_t i) const { return members[i]; }
};

inline Population seed_population(const EvoConfig& config, std::size_t n, const Dataset& train, Rng& rng)
{
    config.validate();
    if (train.empty())
        throw InvalidInput("training set is empty");
    Population pop;
    pop.members.reserve(config.p);
    for (std::size_t m = 0; m < config.p; ++m) {
        Individual ind{Network::random(n, config.h, rng), 0.0, 0};
        ind.fitness = mse(ind.network, train, rng, config.drop_probability);
        pop.members.push_back(std::move(ind));
    }
    return pop;
}

/// Binary tournament over `size` members, candidates drawn with replacement;
/// lower fitness wins, exact ties by coin.
template <typename FitnessOf>
std::size_t tournament_pick(std::size_t size, FitnessOf&& fitness_of, Rng& rng)
{
    const std::size_t a = rng.below(size);
    const std::size_t b = rng.below(size);
    if (a == b)
        return a;
    const double fa = fitness_of(a);
    const double fb = fitness_of(b);
    if (fa < fb)
        return a;
    if (fb < fa)
        return b;
    return rng.coin() ? a : b;
}

inline std::size_t tournament_select(const Population& pop, Rng& rng)
{
    return tournament_pick(pop.size(), [&](std::size_t i) { return pop[i].fitness; }, rng);
}

// ---------------------------------------------------------------------------
// mutation

struct Mutation {
    enum class Kind { Weight, GateActivated, GatePerturbed, GateFlipped, GateDisabled, GateUnchanged };
    Kind kind = Kind::Weight;
    ChangeSite site{};
    std::size_t index = 0; ///< parameter index (Weight) or gated-connection index
};

namespace detail {

inline ChangeSite site_of_connection(const Network& net, std::size_t c)
{
    const std::size_t nh = net.n() * net.h();
    if (c < nh)
        return {ChangeSite::Where::InputRow, c / net.n()};
    return {ChangeSite::Where::OutputLayer, 0};
}

inline Gate fresh_gate(Variant v, Rng& rng)
{
    switch (v) {
    case Variant::DendriteThreshold: {
        const double t = rng.uniform_closed(-1.0, 1.0);
        return rng.coin() ? Gate::lower(t) : Gate::upper(t);
    }
    case Variant::DendriteRange: {
        double a = rng.uniform_closed(-1.0, 1.0);
        double b = rng.uniform_closed(-1.0, 1.0);
        if (b < a)
            std::swap(a, b);
        return Gate::range(a, b);
    }
    case Variant::RandomDropout:
        return Gate::random_drop();
    case Variant::Standard:
        break;
    }
    return Gate::inactive();
}

} // namespace detail

/// Applies exactly one gene change to `net` and reports where it landed.
inline Mutation mutate_in_place(Network& net, const EvoConfig& config, Rng& rng)
{
    if (net.h() != config.h)
        throw InvalidInput("parent hidden size does not match configuration");
    const std::size_t nh = net.n() * net.h();
    const std::size_t h = net.h();

    if (!rng.bernoulli(config.effective_dendrite_prob())) {
        // weight path: parameters are [input weights | output weights | hidden biases | output bias]
        const std::size_t idx = rng.below(net.parameter_count());
        const double delta = rng.uniform_closed(-config.r, config.r);
        Mutation m{Mutation::Kind::Weight, {}, idx};
        if (idx < nh) {
            net.in_weight(idx / net.n(), idx % net.n()) += delta;
            m.site = {ChangeSite::Where::InputRow, idx / net.n()};
        } else if (idx < nh + h) {
            net.out_weight(idx - nh) += delta;
            m.site = {ChangeSite::Where::OutputLayer, 0};
        } else if (idx < nh + 2 * h) {
            net.hidden_bias(idx - nh - h) += delta;
            m.site = {ChangeSite::Where::HiddenBias, idx - nh - h};
        } else {
            net.output_bias() += delta;
            m.site = {ChangeSite::Where::OutputLayer, 0};
        }
        return m;
    }

    const std::size_t c = rng.below(net.gateable_count());
    Gate& g = net.gate_at(c);
    Mutation m{Mutation::Kind::GateActivated, detail::site_of_connection(net, c), c};

    if (!g.active()) {
        g = detail::fresh_gate(config.variant, rng);
        return m;
    }

    switch (g.kind) {
    case GateKind::Lower:
    case GateKind::Upper:
        switch (rng.below(3)) {
        case 0:
            if (g.kind == GateKind::Lower)
                g.lo += rng.uniform_closed(-config.r, config.r);
            else
                g.hi += rng.uniform_closed(-config.r, config.r);
            m.kind = Mutation::Kind::GatePerturbed;
            break;
        case 1:
            g = g.kind == GateKind::Lower ? Gate::upper(g.lo) : Gate::lower(g.hi);
            m.kind = Mutation::Kind::GateFlipped;
            break;
        default:
            g = Gate::inactive();
            m.kind = Mutation::Kind::GateDisabled;
            break;
        }
        break;
    case GateKind::Range:
        if (rng.coin()) {
            double lo = g.lo + rng.uniform_closed(-config.r, config.r);
            double hi = g.hi + rng.uniform_closed(-config.r, config.r);
            if (hi < lo)
                std::swap(lo, hi);
            g = Gate::range(lo, hi);
            m.kind = Mutation::Kind::GatePerturbed;
        } else {
            g = Gate::inactive();
            m.kind = Mutation::Kind::GateDisabled;
        }
        break;
    case GateKind::RandomDrop:
        // no parameter to perturb: disable, or re-enable (leaves the gate as is)
        if (rng.coin()) {
            g = Gate::inactive();
            m.kind = Mutation::Kind::GateDisabled;
        } else {
            m.kind = Mutation::Kind::GateUnchanged;
        }
        break;
    case GateKind::Inactive:
        break;
    }
    return m;
}

inline Network mutate(const Network& parent, const EvoConfig& config, Rng& rng)
{
    Network child = parent;
    mutate_in_place(child, config, rng);
    return child;
}

// ---------------------------------------------------------------------------
// replacement

struct ReplaceOutcome {
    std::size_t slot = 0;
    bool offspring_survived = true;
};

/// Picks a victim uniformly. Only an exact fitness tie under parsimony can keep
/// the victim: the one with fewer active gates stays, equal counts by coin.
template <typename VictimOf>
ReplaceOutcome replacement_pick(std::size_t size, double fitness, std::size_t gates, VictimOf&& victim_of,
                                bool parsimony, Rng& rng)
{
    ReplaceOutcome out{rng.below(size), true};
    const Individual& victim = victim_of(out.slot);
    if (parsimony && fitness == victim.fitness) {
        if (gates != victim.active_gate_count)
            out.offspring_survived = gates < victim.active_gate_count;
        else
            out.offspring_survived = rng.coin();
    }
    return out;
}

inline ReplaceOutcome choose_replacement(const Population& pop, const Individual& offspring, bool parsimony, Rng& rng)
{
    return replacement_pick(pop.size(), offspring.fitness, offspring.active_gate_count,
                            [&](std::size_t i) -> const Individual& { return pop[i]; }, parsimony, rng);
}

inline ReplaceOutcome replace(Population& pop, Individual offspring, bool parsimony, Rng& rng)
{
    auto out = choose_replacement(pop, offspring, parsimony, rng);
    if (out.offspring_survived)
        pop[out.slot] = std::move(offspring);
    return out;
}

// ---------------------------------------------------------------------------
// full run

struct GenerationRecord {
    std::size_t generation = 0;
    double best_train_mse = 0.0;
    double best_test_mse = 0.0;
    double best_gate_fraction = 0.0;
    double mean_gate_fraction = 0.0;

    bool operator==(const GenerationRecord&) const = default;
};

struct RunTrace {
    std::vector<GenerationRecord> records;
    Network final_network{1, 1}; ///< best-by-training member after the last generation
    double final_train_mse = 0.0;
    double final_test_mse = 0.0;
    GateCounts final_gates{};
};

/// Index of the lowest training error; first index wins ties.
inline std::size_t best_index(const Population& pop)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < pop.size(); ++i)
        if (pop[i].fitness < pop[best].fitness)
            best = i;
    return best;
}

namespace detail {

struct Slot {
    Individual ind;
    HiddenCache cache;
    std::uint64_t id = 0;
};

} // namespace detail

/// Runs one evolutionary experiment. `landscape` is only consulted when the
/// configuration asks for a resampled training set.
inline RunTrace run_evolution(const EvoConfig& config, const Dataset& train, const Dataset& test, Rng& rng,
                              const NKLandscape* landscape = nullptr)
{
    config.validate();
    if (train.empty() || test.empty())
        throw InvalidInput("training and test sets must be nonempty");
    if (train.n() != test.n())
        throw InvalidInput("training and test feature lengths differ");
    if (landscape && landscape->n() != train.n())
        throw InvalidInput("landscape gene count does not match dataset features");
    if (config.resample_train && !landscape)
        throw InvalidInput("resampled training sets need the landscape");

    const std::size_t n = train.n();
    const double drop_p = config.drop_probability;
    Rng eval_rng(rng());
    Rng test_rng(rng());
    Rng resample_rng(rng());
    CachedEvaluator evaluator(train, drop_p);

    std::vector<detail::Slot> pop;
    pop.reserve(config.p);
    std::uint64_t next_id = 0;
    for (std::size_t m = 0; m < config.p; ++m) {
        detail::Slot s{{Network::random(n, config.h, rng), 0.0, 0}, {}, next_id++};
        s.cache = evaluator.build(s.ind.network, eval_rng);
        s.ind.fitness = evaluator.error(s.ind.network, s.cache, eval_rng);
        pop.push_back(std::move(s));
    }

    RunTrace trace;
    trace.records.reserve(config.generations + 1);
    std::uint64_t memo_id = ~std::uint64_t{0};
    double memo_test = 0.0;

    auto record = [&](std::size_t generation) {
        std::size_t best = 0;
        double mean_fraction = 0.0;
        const double gateable = static_cast<double>(pop[0].ind.network.gateable_count());
        for (std::size_t i = 0; i < pop.size(); ++i) {
            if (pop[i].ind.fitness < pop[best].ind.fitness)
                best = i;
            mean_fraction += static_cast<double>(pop[i].ind.active_gate_count) / gateable;
        }
        const auto& b = pop[best];
        if (b.id != memo_id) {
            memo_test = mse(b.ind.network, test, test_rng, drop_p);
            memo_id = b.id;
        }
        trace.records.push_back({generation, b.ind.fitness, memo_test,
                                 static_cast<double>(b.ind.active_gate_count) / gateable,
                                 mean_fraction / static_cast<double>(pop.size())});
        return best;
    };

    std::size_t best = record(0);

    for (std::size_t g = 1; g <= config.generations; ++g) {
        for (std::size_t step = 0; step < config.steps_per_generation(); ++step) {
            const std::size_t parent =
                tournament_pick(pop.size(), [&](std::size_t i) { return pop[i].ind.fitness; }, rng);

            detail::Slot child{{pop[parent].ind.network, 0.0, 0}, {}, next_id++};
            const Mutation mut = mutate_in_place(child.ind.network, config, rng);
            if (mut.kind == Mutation::Kind::Weight)
                child.ind.active_gate_count = pop[parent].ind.active_gate_count;
            else
                child.ind.active_gate_count = count_active_gates(child.ind.network).total();

            if (config.resample_train) {
                Dataset fresh = generate_dataset(*landscape, train.size(), train.encoding(), resample_rng);
                child.ind.fitness = mse(child.ind.network, fresh, eval_rng, drop_p);
            } else {
                child.cache = pop[parent].cache;
                child.ind.fitness = evaluator.evaluate_after(child.ind.network, child.cache, mut.site, eval_rng);
            }

            const auto out = replacement_pick(
                pop.size(), child.ind.fitness, child.ind.active_gate_count,
                [&](std::size_t i) -> const Individual& { return pop[i].ind; }, config.parsimony, rng);
            if (out.offspring_survived)
                pop[out.slot] = std::move(child);
        }
        best = record(g);
    }

    const auto& b = pop[best].ind;
    trace.final_network = b.network;
    trace.final_train_mse = b.fitness;
    trace.final_test_mse = trace.records.back().best_test_mse;
    trace.final_gates = count_active_gates(b.network);
    return trace;
}

inline RunTrace run_evolution(const EvoConfig& config, const NKLandscape& landscape, const Dataset& train,
                              const Dataset& test, Rng& rng)
{
    return run_evolution(config, train, test, rng, &landscape);
}

} // namespace dendrevo

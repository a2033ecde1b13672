#include <gtest/gtest.h>

#include <sstream>

#include "dendrevo/evolution.hpp"
#include "dendrevo/experiment.hpp"

using namespace dendrevo;

namespace {

Dataset small_task(std::size_t samples, std::uint64_t seed, const NKLandscape** keep = nullptr)
{
    static const auto l = build_landscape(20, 3, 77);
    Rng rng(seed);
    if (keep)
        *keep = &l;
    return generate_dataset(l, samples, Encoding::SignSplit, rng);
}

Individual with(double fitness, std::size_t gates)
{
    return {Network(1, 1), fitness, gates};
}

Population population_of(std::initializer_list<double> fitness)
{
    Population pop;
    for (double f : fitness)
        pop.members.push_back(with(f, 0));
    return pop;
}

// Number of weights/biases and gates that differ.
std::pair<std::size_t, std::size_t> differences(const Network& a, const Network& b)
{
    std::size_t weights = 0, gates = 0;
    for (std::size_t j = 0; j < a.h(); ++j) {
        for (std::size_t i = 0; i < a.n(); ++i)
            weights += a.in_weight(j, i) != b.in_weight(j, i);
        weights += a.out_weight(j) != b.out_weight(j);
        weights += a.hidden_bias(j) != b.hidden_bias(j);
    }
    weights += a.output_bias() != b.output_bias();
    for (std::size_t c = 0; c < a.gateable_count(); ++c)
        gates += !(a.gate_at(c) == b.gate_at(c));
    return {weights, gates};
}

double max_weight_change(const Network& a, const Network& b)
{
    double m = std::abs(a.output_bias() - b.output_bias());
    for (std::size_t j = 0; j < a.h(); ++j) {
        for (std::size_t i = 0; i < a.n(); ++i)
            m = std::max(m, std::abs(a.in_weight(j, i) - b.in_weight(j, i)));
        m = std::max(m, std::abs(a.out_weight(j) - b.out_weight(j)));
        m = std::max(m, std::abs(a.hidden_bias(j) - b.hidden_bias(j)));
    }
    return m;
}

} // namespace

TEST(Config, Defaults)
{
    const EvoConfig c;
    EXPECT_EQ(c.p, 50u);
    EXPECT_EQ(c.h, 10u);
    EXPECT_EQ(c.r, 0.1);
    EXPECT_EQ(c.generations, 1000u);
    EXPECT_EQ(c.steps_per_generation(), 50u);
    EXPECT_EQ(c.dendrite_mutation_prob, 0.5);
    EXPECT_TRUE(c.parsimony);
}

TEST(Config, Validation)
{
    EvoConfig c;
    c.p = 1;
    EXPECT_THROW(c.validate(), InvalidParameters);
    c = {};
    c.r = 0.0;
    EXPECT_THROW(c.validate(), InvalidParameters);
    c = {};
    c.dendrite_mutation_prob = 1.5;
    EXPECT_THROW(c.validate(), InvalidParameters);
    c = {};
    c.variant = Variant::Standard;
    EXPECT_EQ(c.effective_dendrite_prob(), 0.0);
}

TEST(Variant, Names)
{
    for (Variant v : {Variant::Standard, Variant::DendriteThreshold, Variant::DendriteRange, Variant::RandomDropout})
        EXPECT_EQ(parse_variant(to_string(v)), v);
    EXPECT_THROW(parse_variant("dendrites"), InvalidParameters);
}

TEST(Seeding, PopulationOfFifty)
{
    const auto d = small_task(30, 1);
    EvoConfig cfg;
    Rng rng(1);
    const auto pop = seed_population(cfg, 20, d, rng);
    ASSERT_EQ(pop.size(), 50u);
    Rng eval(0);
    for (const auto& ind : pop.members) {
        EXPECT_EQ(ind.active_gate_count, 0u);
        EXPECT_EQ(count_active_gates(ind.network).total(), 0u);
        EXPECT_EQ(ind.fitness, mse(ind.network, d, eval));
    }
}

TEST(Seeding, MinimalPopulation)
{
    const auto d = small_task(10, 2);
    EvoConfig cfg;
    cfg.p = 2;
    Rng rng(2);
    EXPECT_EQ(seed_population(cfg, 20, d, rng).size(), 2u);
}

TEST(Seeding, WeightsWithinUnitBox)
{
    Rng rng(3);
    std::size_t seen = 0;
    double lo = 1.0, hi = -1.0;
    while (seen < 10000) {
        const Network net = Network::random(100, 10, rng);
        for (std::size_t j = 0; j < 10; ++j) {
            for (std::size_t i = 0; i < 100; ++i) {
                lo = std::min(lo, net.in_weight(j, i));
                hi = std::max(hi, net.in_weight(j, i));
            }
            lo = std::min({lo, net.out_weight(j), net.hidden_bias(j)});
            hi = std::max({hi, net.out_weight(j), net.hidden_bias(j)});
        }
        seen += net.parameter_count();
    }
    EXPECT_GE(lo, -1.0);
    EXPECT_LE(hi, 1.0);
    EXPECT_LT(lo, -0.99);
    EXPECT_GT(hi, 0.99);
}

TEST(Tournament, LowerErrorWins)
{
    const auto pop = population_of({0.1, 0.9});
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        Rng replay = rng;
        const std::size_t a = replay.below(2), b = replay.below(2);
        const std::size_t got = tournament_select(pop, rng);
        if (a != b)
            ASSERT_EQ(got, 0u);
        else
            ASSERT_EQ(got, a);
    }
}

TEST(Tournament, WorstSelectedOnlyWhenDrawnTwice)
{
    const auto pop = population_of({0.1, 0.2, 0.9});
    Rng rng(2);
    int worst = 0;
    for (int i = 0; i < 10000; ++i)
        worst += tournament_select(pop, rng) == 2;
    EXPECT_NEAR(worst / 10000.0, 1.0 / 9.0, 0.02);
}

TEST(Tournament, TiesAreCoinFlips)
{
    const auto pop = population_of({0.5, 0.5});
    Rng rng(3);
    int first = 0;
    for (int i = 0; i < 10000; ++i)
        first += tournament_select(pop, rng) == 0;
    EXPECT_NEAR(first, 5000, 200);
}

TEST(Mutation, StandardChangesOneWeightWithinR)
{
    EvoConfig cfg;
    cfg.variant = Variant::Standard;
    cfg.h = 4;
    Rng rng(5);
    const Network parent = Network::random(10, 4, rng);
    for (int i = 0; i < 2000; ++i) {
        const Network child = mutate(parent, cfg, rng);
        const auto [w, g] = differences(parent, child);
        ASSERT_EQ(w, 1u);
        ASSERT_EQ(g, 0u);
        ASSERT_LE(max_weight_change(parent, child), 0.1 + 1e-15);
    }
}

TEST(Mutation, SingleGeneProperty)
{
    Rng rng(7);
    for (int trial = 0; trial < 10000; ++trial) {
        EvoConfig cfg;
        cfg.h = 1 + rng.below(4);
        cfg.variant = rng.coin() ? Variant::DendriteThreshold : Variant::DendriteRange;
        if (rng.below(4) == 0)
            cfg.variant = Variant::Standard;
        Network parent = Network::random(1 + rng.below(8), cfg.h, rng);
        for (std::size_t c = 0; c < parent.gateable_count(); ++c)
            if (rng.below(3) == 0)
                parent.gate_at(c) = cfg.variant == Variant::DendriteRange ? Gate::range(-0.2, 0.4)
                                                                          : Gate::lower(rng.uniform_closed(-1, 1));
        const Network child = mutate(parent, cfg, rng);
        const auto [w, g] = differences(parent, child);
        ASSERT_EQ(w + g, 1u) << "trial " << trial;
    }
}

TEST(Mutation, DropoutChangesAtMostOneGate)
{
    EvoConfig cfg;
    cfg.h = 3;
    cfg.variant = Variant::RandomDropout;
    Rng rng(8);
    Network parent = Network::random(6, 3, rng);
    parent.gate_at(4) = Gate::random_drop();
    int unchanged = 0;
    for (int i = 0; i < 10000; ++i) {
        Network child = parent;
        const auto m = mutate_in_place(child, cfg, rng);
        const auto [w, g] = differences(parent, child);
        if (m.kind == Mutation::Kind::GateUnchanged) {
            ++unchanged;
            ASSERT_EQ(w + g, 0u);
        } else {
            ASSERT_EQ(w + g, 1u);
        }
    }
    EXPECT_GT(unchanged, 0);
}

TEST(Mutation, ActivationOnFreshParent)
{
    EvoConfig cfg;
    cfg.h = 3;
    cfg.dendrite_mutation_prob = 1.0;
    Rng rng(9);
    const Network parent = Network::random(5, 3, rng);
    for (int i = 0; i < 500; ++i) {
        const Network child = mutate(parent, cfg, rng);
        const auto counts = count_active_gates(child);
        ASSERT_EQ(counts.total(), 1u);
        for (std::size_t c = 0; c < child.gateable_count(); ++c) {
            const Gate& g = child.gate_at(c);
            if (!g.active())
                continue;
            ASSERT_TRUE(g.kind == GateKind::Lower || g.kind == GateKind::Upper);
            ASSERT_GE(g.threshold(), -1.0);
            ASSERT_LE(g.threshold(), 1.0);
        }
    }
}

TEST(Mutation, DisableBranchDropsOneGate)
{
    EvoConfig cfg;
    cfg.h = 1;
    cfg.dendrite_mutation_prob = 1.0;
    Network parent(1, 1); // two gateable connections
    parent.gate_at(0) = Gate::lower(0.2);
    Rng rng(10);
    int disabled = 0;
    for (int i = 0; i < 3000; ++i) {
        Network child = parent;
        const auto m = mutate_in_place(child, cfg, rng);
        if (m.kind == Mutation::Kind::GateDisabled) {
            ++disabled;
            ASSERT_EQ(m.index, 0u);
            ASSERT_EQ(count_active_gates(child).total(), 0u);
        }
    }
    // half the draws hit gate 0, a third of those disable it
    EXPECT_NEAR(disabled / 3000.0, 1.0 / 6.0, 0.03);
}

TEST(Mutation, RangeActivationIsOrdered)
{
    EvoConfig cfg;
    cfg.h = 2;
    cfg.variant = Variant::DendriteRange;
    cfg.dendrite_mutation_prob = 1.0;
    Rng rng(12);
    Network net = Network::random(3, 2, rng);
    for (int i = 0; i < 5000; ++i)
        mutate_in_place(net, cfg, rng);
    for (std::size_t c = 0; c < net.gateable_count(); ++c) {
        const Gate& g = net.gate_at(c);
        ASSERT_TRUE(g.kind == GateKind::Inactive || g.kind == GateKind::Range);
        ASSERT_LE(g.lo, g.hi);
    }
}

TEST(Replace, OffspringAlwaysReplacesOnDifferentFitness)
{
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        Population pop;
        pop.members = {with(0.20, 0), with(0.20, 0), with(0.20, 0)};
        const auto out = replace(pop, with(0.30, 9), true, rng);
        ASSERT_TRUE(out.offspring_survived);
        ASSERT_EQ(pop[out.slot].fitness, 0.30);
        ASSERT_EQ(pop.size(), 3u);
    }
}

TEST(Replace, FewerGatesWinTies)
{
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        Population pop;
        pop.members = {with(0.5, 5), with(0.5, 5)};
        auto out = replace(pop, with(0.5, 3), true, rng);
        ASSERT_TRUE(out.offspring_survived);
        ASSERT_EQ(pop[out.slot].active_gate_count, 3u);

        pop.members = {with(0.5, 3), with(0.5, 3)};
        out = replace(pop, with(0.5, 5), true, rng);
        ASSERT_FALSE(out.offspring_survived);
        ASSERT_EQ(pop[out.slot].active_gate_count, 3u);
    }
}

TEST(Replace, EqualCountsCoin)
{
    Rng rng(3);
    int survived = 0;
    for (int i = 0; i < 10000; ++i) {
        Population pop;
        pop.members = {with(0.5, 2)};
        pop.members.push_back(with(0.5, 2));
        survived += replace(pop, with(0.5, 2), true, rng).offspring_survived;
    }
    EXPECT_NEAR(survived, 5000, 200);
}

TEST(Replace, NoParsimonyIsUnconditional)
{
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        Population pop;
        pop.members = {with(0.5, 0), with(0.5, 0)};
        ASSERT_TRUE(replace(pop, with(0.5, 7), false, rng).offspring_survived);
    }
}

TEST(Replace, AtMostOneSlotChanges)
{
    Rng rng(5);
    Population pop;
    for (int i = 0; i < 10; ++i)
        pop.members.push_back(with(rng.unit_open(), rng.below(4)));
    for (int step = 0; step < 2000; ++step) {
        const auto before = pop;
        Individual off = with(rng.coin() ? pop[rng.below(10)].fitness : rng.unit_open(), rng.below(4));
        replace(pop, off, true, rng);
        std::size_t changed = 0;
        for (std::size_t i = 0; i < 10; ++i)
            changed += pop[i].fitness != before[i].fitness || pop[i].active_gate_count != before[i].active_gate_count;
        ASSERT_LE(changed, 1u);
        ASSERT_EQ(pop.size(), 10u);
    }
}

TEST(RunEvolution, ZeroGenerationsGivesSeedRecord)
{
    const auto train = small_task(20, 3), test = small_task(20, 4);
    EvoConfig cfg;
    cfg.p = 5;
    cfg.h = 3;
    cfg.generations = 0;
    Rng rng(1);
    const auto t = run_evolution(cfg, train, test, rng);
    ASSERT_EQ(t.records.size(), 1u);
    EXPECT_EQ(t.records[0].generation, 0u);
    EXPECT_EQ(t.records[0].best_gate_fraction, 0.0);
}

TEST(RunEvolution, StandardNeverGates)
{
    const auto train = small_task(30, 5), test = small_task(30, 6);
    EvoConfig cfg;
    cfg.p = 8;
    cfg.h = 3;
    cfg.generations = 40;
    cfg.variant = Variant::Standard;
    Rng rng(2);
    const auto t = run_evolution(cfg, train, test, rng);
    ASSERT_EQ(t.records.size(), 41u);
    for (const auto& r : t.records) {
        ASSERT_EQ(r.best_gate_fraction, 0.0);
        ASSERT_EQ(r.mean_gate_fraction, 0.0);
    }
    EXPECT_EQ(t.final_gates.total(), 0u);
}

TEST(RunEvolution, TraceIsConsistentWithFinalNetwork)
{
    const auto train = small_task(30, 7), test = small_task(30, 8);
    EvoConfig cfg;
    cfg.p = 10;
    cfg.h = 4;
    cfg.generations = 30;
    cfg.dendrite_mutation_prob = 0.8;
    Rng rng(3);
    const auto t = run_evolution(cfg, train, test, rng);
    Rng eval(0);
    EXPECT_EQ(t.final_train_mse, mse(t.final_network, train, eval));
    EXPECT_EQ(t.final_test_mse, mse(t.final_network, test, eval));
    EXPECT_EQ(t.final_gates.total(), count_active_gates(t.final_network).total());
    EXPECT_EQ(t.records.back().best_gate_fraction, t.final_gates.fraction());
    for (const auto& r : t.records) {
        ASSERT_GE(r.best_gate_fraction, 0.0);
        ASSERT_LE(r.best_gate_fraction, 1.0);
        ASSERT_GE(r.mean_gate_fraction, 0.0);
        ASSERT_LE(r.mean_gate_fraction, 1.0);
    }
}

TEST(RunEvolution, Deterministic)
{
    const auto train = small_task(25, 9), test = small_task(25, 10);
    for (Variant v : {Variant::DendriteThreshold, Variant::RandomDropout}) {
        EvoConfig cfg;
        cfg.p = 6;
        cfg.h = 3;
        cfg.generations = 20;
        cfg.variant = v;
        std::string first, second;
        for (auto* out : {&first, &second}) {
            Rng rng(44);
            std::ostringstream os;
            write_trace_rows(os, v, 0, run_evolution(cfg, train, test, rng));
            *out = os.str();
        }
        EXPECT_EQ(first, second);
    }
}

TEST(RunEvolution, ImprovesOnSeedPopulation)
{
    const auto train = small_task(60, 11), test = small_task(60, 12);
    EvoConfig cfg;
    cfg.p = 10;
    cfg.h = 4;
    cfg.generations = 100;
    Rng rng(4);
    const auto t = run_evolution(cfg, train, test, rng);
    EXPECT_LT(t.records.back().best_train_mse, t.records.front().best_train_mse);
}

TEST(RunEvolution, ResampledTraining)
{
    const NKLandscape* l = nullptr;
    const auto train = small_task(20, 13, &l), test = small_task(20, 14);
    EvoConfig cfg;
    cfg.p = 4;
    cfg.h = 2;
    cfg.generations = 5;
    cfg.resample_train = true;
    Rng rng(5);
    EXPECT_THROW(run_evolution(cfg, train, test, rng), InvalidInput);
    Rng rng2(5);
    EXPECT_EQ(run_evolution(cfg, *l, train, test, rng2).records.size(), 6u);
}

TEST(RunEvolution, DimensionMismatch)
{
    const auto train = small_task(10, 15);
    const auto other = build_landscape(7, 1, 1);
    Rng drng(1);
    const auto test = generate_dataset(other, 10, Encoding::SignSplit, drng);
    EvoConfig cfg;
    cfg.p = 2;
    Rng rng(6);
    EXPECT_THROW(run_evolution(cfg, train, test, rng), InvalidInput);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dendrevo/experiment.hpp"

using namespace dendrevo;
namespace fs = std::filesystem;

namespace {

ExperimentSpec small_spec()
{
    ExperimentSpec s;
    s.n = 20;
    s.k = 3;
    s.runs = 3;
    s.train_size = 40;
    s.test_size = 40;
    s.base.p = 6;
    s.base.h = 3;
    s.base.generations = 15;
    s.master_seed = 5;
    return s;
}

std::string serialize(const ExperimentResult& r)
{
    std::ostringstream os;
    for (std::size_t vi = 0; vi < r.variants.size(); ++vi)
        for (std::size_t run = 0; run < r.traces[vi].size(); ++run) {
            write_trace_rows(os, r.variants[vi], run, r.traces[vi][run]);
            write_network(os, r.traces[vi][run].final_network);
        }
    return os.str();
}

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("dendrevo_test_" + name);
    fs::remove_all(p);
    return p;
}

} // namespace

TEST(Experiment, SingleRunSingleVariant)
{
    auto s = small_spec();
    s.runs = 1;
    s.variants = {Variant::Standard};
    const auto r = run_experiment(s);
    ASSERT_EQ(r.traces.size(), 1u);
    ASSERT_EQ(r.traces[0].size(), 1u);
    EXPECT_EQ(r.traces[0][0].records.size(), s.base.generations + 1);
}

TEST(Experiment, TraceCountIsVariantsTimesRuns)
{
    auto s = small_spec();
    s.variants = {Variant::Standard, Variant::DendriteThreshold, Variant::RandomDropout};
    const auto r = run_experiment(s);
    std::size_t total = 0;
    for (const auto& v : r.traces)
        total += v.size();
    EXPECT_EQ(total, 9u);
}

TEST(Experiment, DeterministicAndOrderIndependent)
{
    auto s = small_spec();
    const auto a = serialize(run_experiment(s));
    EXPECT_EQ(a, serialize(run_experiment(s)));

    s.workers = 3;
    EXPECT_EQ(a, serialize(run_experiment(s)));

    // reversing variant order yields the same per-cell results
    auto rev = small_spec();
    rev.variants = {Variant::DendriteThreshold, Variant::Standard};
    const auto r1 = run_experiment(small_spec()), r2 = run_experiment(rev);
    for (Variant v : {Variant::Standard, Variant::DendriteThreshold})
        for (std::size_t run = 0; run < 3; ++run)
            EXPECT_EQ(r1.of(v)[run].records, r2.of(v)[run].records);
}

TEST(Experiment, VariantsShareTheRunTask)
{
    const auto s = small_spec();
    const auto a = make_task(s, 1), b = make_task(s, 1), c = make_task(s, 2);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    EXPECT_FALSE(a.train == c.train);
    EXPECT_FALSE(a.train == a.test);
}

TEST(Experiment, SharedLandscape)
{
    auto s = small_spec();
    s.shared_landscape = true;
    EXPECT_EQ(seeds::landscape(s, 0), seeds::landscape(s, 7));
    s.shared_landscape = false;
    EXPECT_NE(seeds::landscape(s, 0), seeds::landscape(s, 7));
}

TEST(Experiment, FailureNamesTheCell)
{
    auto s = small_spec();
    s.runs = 1;
    s.variants = {Variant::Standard};
    s.base.generations = 1;
    // a regular file where the checkpoint directory should go
    const auto blocker = scratch("blocker");
    std::ofstream(blocker) << "x";
    s.checkpoint_dir = blocker / "cells";
    try {
        run_experiment(s);
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_EQ(std::string(e.what()).rfind("variant standard, run 0: ", 0), 0u) << e.what();
    }
    fs::remove_all(blocker);

    s.checkpoint_dir.reset();
    s.k = 25; // k > n - 1
    EXPECT_THROW(run_experiment(s), InvalidParameters);
}

TEST(Experiment, AggregatesMatchNaivePass)
{
    auto s = small_spec();
    s.runs = 4;
    const auto r = run_experiment(s);
    const auto rep = compare(r);
    for (Variant v : s.variants) {
        const auto& runs = r.of(v);
        double sum = 0.0, lo = 1e300, hi = -1e300;
        for (const auto& t : runs) {
            const double x = t.records.back().best_test_mse;
            sum += x;
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        const auto& summary = rep.of(v).test;
        EXPECT_NEAR(summary.mean, sum / runs.size(), 1e-15);
        EXPECT_EQ(summary.min, lo);
        EXPECT_EQ(summary.max, hi);
        EXPECT_LE(summary.min, summary.mean);
        EXPECT_LE(summary.mean, summary.max);
    }
    ASSERT_EQ(rep.pairs.size(), 1u);
    ASSERT_TRUE(rep.pairs[0].welch.has_value());
    EXPECT_GT(rep.pairs[0].welch->p, 0.0);
    EXPECT_LE(rep.pairs[0].welch->p, 1.0);
}

TEST(Experiment, ThreeVariantsGiveThreePairs)
{
    auto s = small_spec();
    s.variants = {Variant::Standard, Variant::DendriteThreshold, Variant::RandomDropout};
    const auto rep = compare(run_experiment(s));
    EXPECT_EQ(rep.pairs.size(), 3u);
    EXPECT_NO_THROW(rep.pair(Variant::RandomDropout, Variant::Standard));
}

TEST(Experiment, ResumeSkipsCompletedCells)
{
    auto s = small_spec();
    s.checkpoint_dir = scratch("resume");
    const auto first = run_experiment(s);
    std::size_t traces = 0;
    for (const auto& e : fs::directory_iterator(*s.checkpoint_dir))
        traces += e.path().string().ends_with(".trace.csv");
    EXPECT_EQ(traces, 6u);

    std::vector<std::string> log;
    s.progress = [&](const std::string& m) { log.push_back(m); };
    const auto second = run_experiment(s);
    EXPECT_EQ(serialize(first), serialize(second));
    EXPECT_EQ(std::count_if(log.begin(), log.end(), [](const std::string& m) { return m.starts_with("resumed"); }), 6);

    // a changed setting must not reuse the cells
    log.clear();
    s.base.generations = 16;
    run_experiment(s);
    EXPECT_EQ(std::count_if(log.begin(), log.end(), [](const std::string& m) { return m.starts_with("resumed"); }), 0);
    fs::remove_all(*s.checkpoint_dir);
}

TEST(Experiment, InterruptedCellIsRecomputed)
{
    auto s = small_spec();
    s.runs = 1;
    s.checkpoint_dir = scratch("partial");
    const auto first = run_experiment(s);
    // a leftover temporary file is not a completion marker
    for (const auto& e : fs::directory_iterator(*s.checkpoint_dir))
        if (e.path().string().ends_with(".trace.csv"))
            fs::rename(e.path(), e.path().string() + ".tmp");
    std::vector<std::string> log;
    s.progress = [&](const std::string& m) { log.push_back(m); };
    EXPECT_EQ(serialize(run_experiment(s)), serialize(first));
    EXPECT_EQ(std::count_if(log.begin(), log.end(), [](const std::string& m) { return m.starts_with("finished"); }), 2);
    fs::remove_all(*s.checkpoint_dir);
}

TEST(Histogram, EmptyGenome)
{
    const auto h = gate_location_histogram(Network(5, 3));
    EXPECT_EQ(h.total(), 0u);
    EXPECT_EQ(h.input_layer, std::vector<std::size_t>(3, 0));
    EXPECT_EQ(h.output_layer, std::vector<std::size_t>(3, 0));
}

TEST(Histogram, AllOutputGates)
{
    Network net(8, 10);
    for (std::size_t j = 0; j < 10; ++j)
        net.out_gate(j) = Gate::lower(0.3);
    const auto h = gate_location_histogram(net);
    EXPECT_EQ(h.output_total(), 10u);
    EXPECT_EQ(h.input_total(), 0u);
}

TEST(Histogram, PartitionsActiveGates)
{
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        Network net(6, 4);
        for (std::size_t c = 0; c < net.gateable_count(); ++c)
            if (rng.below(4) == 0)
                net.gate_at(c) = Gate::upper(0.0);
        const auto h = gate_location_histogram(net);
        const auto counts = count_active_gates(net);
        ASSERT_EQ(h.total(), counts.total());
        ASSERT_EQ(h.input_total(), counts.input_layer);
        ASSERT_EQ(h.output_total(), counts.output_layer);
    }
}

TEST(Ablation, NoOutputGatesIsIdentity)
{
    auto s = small_spec();
    s.base.generations = 5;
    auto r = run_experiment(s);
    for (auto& t : r.traces[1])
        for (std::size_t j = 0; j < t.final_network.h(); ++j)
            t.final_network.out_gate(j) = Gate::inactive();
    // recompute the intact scores for the modified genomes
    for (std::size_t run = 0; run < s.runs; ++run) {
        const auto task = make_task(s, run);
        Rng rng(0);
        r.traces[1][run].final_test_mse = mse(r.traces[1][run].final_network, task.test, rng);
    }
    const auto rep = ablation_study(s, r);
    for (const auto& row : rep.rows) {
        EXPECT_EQ(row.ablated_test_mse, row.test_mse);
        EXPECT_EQ(row.output_gates_removed, 0u);
    }
    ASSERT_TRUE(rep.ablated_vs_standard.has_value());
}

TEST(Ablation, InputLayerUntouched)
{
    Rng rng(2);
    Network net = Network::random(6, 3, rng);
    net.in_gate(1, 2) = Gate::lower(0.1);
    net.out_gate(0) = Gate::upper(0.9);
    const auto before = gate_location_histogram(net), after = gate_location_histogram(ablate_output_gates(net));
    EXPECT_EQ(before.input_layer, after.input_layer);
    EXPECT_EQ(after.output_total(), 0u);
}

TEST(Ablation, RequiresDendriteRuns)
{
    auto s = small_spec();
    s.variants = {Variant::Standard};
    s.runs = 1;
    EXPECT_THROW(ablation_study(s, run_experiment(s)), InvalidInput);
    EXPECT_EQ(ablation_study(s).rows.size(), 1u);
}

TEST(Sweep, TwoSummariesPerN)
{
    auto s = small_spec();
    s.runs = 1;
    const auto pts = sweep_n(s, {10, 12});
    ASSERT_EQ(pts.size(), 2u);
    for (const auto& pt : pts) {
        EXPECT_EQ(pt.report.variants.size(), 2u);
        EXPECT_EQ(pt.report.variants[0].test.min, pt.report.variants[0].test.max);
    }
    EXPECT_THROW(sweep_n(s, {}), InvalidParameters);
}

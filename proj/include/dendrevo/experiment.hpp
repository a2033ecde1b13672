#pragma once

// Multi-run experiments: per-cell seeding, a bounded worker pool, per-run
// checkpoint files, cross-variant statistics, gate-location analysis, output
// layer ablation and the feature-count sweep.
//
// Seeds are positional. For run r the landscape and both datasets depend only
// on (master_seed, r), so every variant is scored on the same task; the
// evolutionary stream depends on (master_seed, r, variant).

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dendrevo/csv.hpp"
#include "dendrevo/error.hpp"
#include "dendrevo/evolution.hpp"
#include "dendrevo/network.hpp"
#include "dendrevo/nk_landscape.hpp"
#include "dendrevo/random.hpp"
#include "dendrevo/stats.hpp"

namespace dendrevo {

struct ExperimentSpec {
    EvoConfig base{};
    std::size_t n = 1000;
    std::size_t k = 15;
    std::size_t runs = 20;
    std::size_t train_size = 1000;
    std::size_t test_size = 1000;
    Encoding encoding = Encoding::SignSplit;
    std::vector<Variant> variants{Variant::Standard, Variant::DendriteThreshold};
    std::uint64_t master_seed = 1;
    bool shared_landscape = false; ///< one landscape for all runs (datasets still differ per run)
    std::size_t workers = 1;
    std::optional<std::filesystem::path> checkpoint_dir; ///< per-run files; completed cells are skipped
    std::function<void(const std::string&)> progress;    ///< optional log sink, called from workers

    void validate() const
    {
        base.validate();
        NKLandscape::check_shape(n, k);
        if (runs < 1)
            throw InvalidParameters("runs must be at least 1");
        if (train_size < 1 || test_size < 1)
            throw InvalidParameters("dataset sizes must be at least 1");
        if (variants.empty())
            throw InvalidParameters("no variants requested");
    }
};

namespace seeds {

enum : std::uint64_t { landscape_key = 1, data_key = 2, evolution_key = 3, ablation_key = 4 };

inline std::uint64_t landscape(const ExperimentSpec& s, std::size_t run)
{
    return s.shared_landscape ? derive_seed(s.master_seed, {landscape_key})
                              : derive_seed(s.master_seed, {landscape_key, run});
}
inline std::uint64_t data(const ExperimentSpec& s, std::size_t run)
{
    return derive_seed(s.master_seed, {data_key, run});
}
inline std::uint64_t evolution(const ExperimentSpec& s, std::size_t run, Variant v)
{
    return derive_seed(s.master_seed, {evolution_key, run, static_cast<std::uint64_t>(v)});
}

} // namespace seeds

/// The regression task of one run. The landscape is kept only when asked for.
struct RunTask {
    std::optional<NKLandscape> landscape;
    Dataset train;
    Dataset test;
};

inline RunTask make_task(const ExperimentSpec& spec, std::size_t run, bool keep_landscape = false)
{
    NKLandscape landscape = build_landscape(spec.n, spec.k, seeds::landscape(spec, run));
    Rng data_rng(seeds::data(spec, run));
    Dataset train = generate_dataset(landscape, spec.train_size, spec.encoding, data_rng);
    Dataset test = generate_dataset(landscape, spec.test_size, spec.encoding, data_rng);
    RunTask task{std::nullopt, std::move(train), std::move(test)};
    if (keep_landscape)
        task.landscape = std::move(landscape);
    return task;
}

/// Traces indexed [variant position][run].
struct ExperimentResult {
    std::vector<Variant> variants;
    std::vector<std::vector<RunTrace>> traces;

    const std::vector<RunTrace>& of(Variant v) const
    {
        for (std::size_t i = 0; i < variants.size(); ++i)
            if (variants[i] == v)
                return traces[i];
        throw InvalidInput("variant '" + to_string(v) + "' was not part of the experiment");
    }

    bool has(Variant v) const { return std::find(variants.begin(), variants.end(), v) != variants.end(); }
};

// ---------------------------------------------------------------------------
// trace files

inline void write_trace_rows(std::ostream& os, Variant v, std::size_t run, const RunTrace& trace)
{
    csv::Writer w(os);
    const auto name = to_string(v);
    for (const auto& r : trace.records)
        w.row(name, run, r.generation, r.best_train_mse, r.best_test_mse, r.best_gate_fraction, r.mean_gate_fraction);
}

/// Records for one (variant, run) cell from a trace table.
inline std::vector<GenerationRecord> trace_records(const csv::Table& t, Variant v, std::size_t run)
{
    const auto cv = t.column("variant"), cr = t.column("run"), cg = t.column("generation"),
               ctr = t.column("best_train_mse"), cte = t.column("best_test_mse"),
               cbf = t.column("best_gate_fraction"), cmf = t.column("mean_gate_fraction");
    const auto name = to_string(v);
    std::vector<GenerationRecord> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        if (t.rows[i][cv] != name || static_cast<std::size_t>(t.number(i, cr)) != run)
            continue;
        out.push_back({static_cast<std::size_t>(t.number(i, cg)), t.number(i, ctr), t.number(i, cte),
                       t.number(i, cbf), t.number(i, cmf)});
    }
    return out;
}

namespace detail {

/// Hash of every setting that influences a cell's result.
inline std::string fingerprint(const ExperimentSpec& s)
{
    const auto bits = [](double d) {
        std::uint64_t u;
        std::memcpy(&u, &d, sizeof u);
        return u;
    };
    const std::uint64_t h = derive_seed(
        s.master_seed,
        {s.n, s.k, s.train_size, s.test_size, static_cast<std::uint64_t>(s.encoding), s.shared_landscape ? 1u : 0u,
         s.base.p, s.base.h, bits(s.base.r), s.base.generations, s.base.steps_per_generation(),
         bits(s.base.dendrite_mutation_prob), s.base.parsimony ? 1u : 0u, bits(s.base.drop_probability),
         s.base.resample_train ? 1u : 0u});
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::filesystem::path cell_stem(const ExperimentSpec& spec, Variant v, std::size_t run)
{
    return *spec.checkpoint_dir / (to_string(v) + "_run" + std::to_string(run) + "_" + fingerprint(spec));
}

inline void save_cell(const ExperimentSpec& spec, Variant v, std::size_t run, const RunTrace& trace)
{
    std::filesystem::create_directories(*spec.checkpoint_dir);
    const auto stem = cell_stem(spec, v, run);
    {
        std::ofstream g(stem.string() + ".dnet");
        write_network(g, trace.final_network);
    }
    // the trace file is the completion marker, so it is renamed into place last
    const auto tmp = stem.string() + ".trace.csv.tmp";
    {
        std::ofstream os(tmp);
        os << csv::trace_header << '\n';
        write_trace_rows(os, v, run, trace);
    }
    std::filesystem::rename(tmp, stem.string() + ".trace.csv");
}

inline std::optional<RunTrace> load_cell(const ExperimentSpec& spec, Variant v, std::size_t run)
{
    const auto stem = cell_stem(spec, v, run);
    std::ifstream ts(stem.string() + ".trace.csv");
    std::ifstream gs(stem.string() + ".dnet");
    if (!ts || !gs)
        return std::nullopt;
    RunTrace trace;
    trace.records = trace_records(csv::read(ts), v, run);
    if (trace.records.size() != spec.base.generations + 1)
        return std::nullopt;
    trace.final_network = read_network(gs);
    trace.final_train_mse = trace.records.back().best_train_mse;
    trace.final_test_mse = trace.records.back().best_test_mse;
    trace.final_gates = count_active_gates(trace.final_network);
    return trace;
}

} // namespace detail

inline RunTrace run_cell(const ExperimentSpec& spec, Variant v, std::size_t run)
{
    EvoConfig cfg = spec.base;
    cfg.variant = v;
    cfg.seed = seeds::evolution(spec, run, v);
    RunTask task = make_task(spec, run, cfg.resample_train);
    Rng rng(cfg.seed);
    return run_evolution(cfg, task.train, task.test, rng, task.landscape ? &*task.landscape : nullptr);
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    const std::size_t V = spec.variants.size();
    const std::size_t cells = V * spec.runs;
    ExperimentResult result{spec.variants, std::vector<std::vector<RunTrace>>(V, std::vector<RunTrace>(spec.runs))};

    std::atomic<std::size_t> next{0};
    std::mutex fail_mutex;
    std::exception_ptr failure;
    std::string failure_where;

    auto worker = [&] {
        for (;;) {
            const std::size_t cell = next.fetch_add(1);
            if (cell >= cells)
                return;
            const std::size_t vi = cell / spec.runs;
            const std::size_t run = cell % spec.runs;
            const Variant v = spec.variants[vi];
            try {
                {
                    std::lock_guard lock(fail_mutex);
                    if (failure)
                        return;
                }
                std::optional<RunTrace> done;
                if (spec.checkpoint_dir)
                    done = detail::load_cell(spec, v, run);
                if (done) {
                    result.traces[vi][run] = std::move(*done);
                    if (spec.progress)
                        spec.progress("resumed " + to_string(v) + " run " + std::to_string(run));
                    continue;
                }
                RunTrace trace = run_cell(spec, v, run);
                if (spec.checkpoint_dir)
                    detail::save_cell(spec, v, run, trace);
                if (spec.progress)
                    spec.progress("finished " + to_string(v) + " run " + std::to_string(run) +
                                  ": test mse " + text::real(trace.final_test_mse));
                result.traces[vi][run] = std::move(trace);
            } catch (...) {
                std::lock_guard lock(fail_mutex);
                if (!failure) {
                    failure = std::current_exception();
                    failure_where = "variant " + to_string(v) + ", run " + std::to_string(run);
                }
                return;
            }
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(spec.workers, 1, cells);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    if (failure) {
        try {
            std::rethrow_exception(failure);
        } catch (const std::exception& e) {
            throw std::runtime_error(failure_where + ": " + e.what());
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// statistics across runs

struct VariantSummary {
    Variant variant{};
    Summary test{};
    Summary train{};
    Summary gate_fraction{}; ///< final best-member gate fraction
    Summary gate_count{};    ///< final best-member active gates
};

struct PairwiseTest {
    Variant a{};
    Variant b{};
    double mean_a = 0.0;
    double mean_b = 0.0;
    std::optional<WelchResult> welch; ///< empty when fewer than two runs or both variances vanish
};

struct ComparisonReport {
    std::vector<VariantSummary> variants;
    std::vector<PairwiseTest> pairs;

    const VariantSummary& of(Variant v) const
    {
        for (const auto& s : variants)
            if (s.variant == v)
                return s;
        throw InvalidInput("variant '" + to_string(v) + "' missing from report");
    }

    const PairwiseTest& pair(Variant a, Variant b) const
    {
        for (const auto& p : pairs)
            if ((p.a == a && p.b == b) || (p.a == b && p.b == a))
                return p;
        throw InvalidInput("no comparison between " + to_string(a) + " and " + to_string(b));
    }
};

inline std::vector<double> final_test_errors(const std::vector<RunTrace>& runs)
{
    std::vector<double> out;
    for (const auto& t : runs)
        out.push_back(t.final_test_mse);
    return out;
}

inline std::vector<double> final_train_errors(const std::vector<RunTrace>& runs)
{
    std::vector<double> out;
    for (const auto& t : runs)
        out.push_back(t.final_train_mse);
    return out;
}

inline PairwiseTest compare_samples(Variant a, Variant b, const std::vector<double>& xa, const std::vector<double>& xb)
{
    PairwiseTest p{a, b, mean_of(xa), mean_of(xb), std::nullopt};
    if (xa.size() >= 2 && xb.size() >= 2) {
        try {
            p.welch = welch_t_test(xa, xb);
        } catch (const DegenerateSample&) {
        }
    }
    return p;
}

inline ComparisonReport compare(const ExperimentResult& result)
{
    ComparisonReport rep;
    for (std::size_t vi = 0; vi < result.variants.size(); ++vi) {
        const auto& runs = result.traces[vi];
        std::vector<double> frac, count;
        for (const auto& t : runs) {
            frac.push_back(t.final_gates.fraction());
            count.push_back(static_cast<double>(t.final_gates.total()));
        }
        rep.variants.push_back({result.variants[vi], summarize(final_test_errors(runs)),
                                summarize(final_train_errors(runs)), summarize(frac), summarize(count)});
    }
    for (std::size_t i = 0; i < result.variants.size(); ++i)
        for (std::size_t j = i + 1; j < result.variants.size(); ++j)
            rep.pairs.push_back(compare_samples(result.variants[i], result.variants[j],
                                                final_test_errors(result.traces[i]),
                                                final_test_errors(result.traces[j])));
    return rep;
}

// ---------------------------------------------------------------------------
// where do the gates sit?

struct GateHistogram {
    std::vector<std::size_t> input_layer;  ///< active input->hidden gates per hidden node
    std::vector<std::size_t> output_layer; ///< 0/1 per hidden->output connection

    std::size_t input_total() const
    {
        std::size_t s = 0;
        for (auto c : input_layer)
            s += c;
        return s;
    }
    std::size_t output_total() const
    {
        std::size_t s = 0;
        for (auto c : output_layer)
            s += c;
        return s;
    }
    std::size_t total() const { return input_total() + output_total(); }
};

inline GateHistogram gate_location_histogram(const Network& net)
{
    GateHistogram hist{std::vector<std::size_t>(net.h(), 0), std::vector<std::size_t>(net.h(), 0)};
    for (std::size_t j = 0; j < net.h(); ++j) {
        for (const auto& g : net.row_gates(j))
            hist.input_layer[j] += g.active() ? 1 : 0;
        hist.output_layer[j] = net.out_gate(j).active() ? 1 : 0;
    }
    return hist;
}

inline GateHistogram gate_location_histogram(const RunTrace& trace)
{
    return gate_location_histogram(trace.final_network);
}

// ---------------------------------------------------------------------------
// output-layer ablation

struct AblationRow {
    std::size_t run = 0;
    double test_mse = 0.0;
    double ablated_test_mse = 0.0;
    std::size_t input_layer_gates = 0;
    std::size_t output_gates_removed = 0;
};

struct AblationReport {
    std::vector<AblationRow> rows;
    std::vector<double> standard_test; ///< Standard finals on the same runs
    std::optional<PairwiseTest> ablated_vs_standard; ///< present when Standard runs exist
    PairwiseTest intact_vs_ablated;
};

/// Ablates every evolved DendriteThreshold genome and re-scores it on its run's test set.
inline AblationReport ablation_study(const ExperimentSpec& spec, const ExperimentResult& result)
{
    if (!result.has(Variant::DendriteThreshold))
        throw InvalidInput("ablation needs DendriteThreshold runs");
    const auto& dendrite = result.of(Variant::DendriteThreshold);
    AblationReport rep;
    std::vector<double> intact, ablated;
    for (std::size_t run = 0; run < dendrite.size(); ++run) {
        const auto& trace = dendrite[run];
        const RunTask task = make_task(spec, run);
        Rng rng(derive_seed(spec.master_seed, {seeds::ablation_key, run}));
        const Network cut = ablate_output_gates(trace.final_network);
        const auto before = count_active_gates(trace.final_network);
        AblationRow row{run, trace.final_test_mse, mse(cut, task.test, rng, spec.base.drop_probability),
                        before.input_layer, before.output_layer};
        intact.push_back(row.test_mse);
        ablated.push_back(row.ablated_test_mse);
        rep.rows.push_back(row);
    }
    if (result.has(Variant::Standard)) {
        rep.standard_test = final_test_errors(result.of(Variant::Standard));
        rep.ablated_vs_standard =
            compare_samples(Variant::DendriteThreshold, Variant::Standard, ablated, rep.standard_test);
    }
    rep.intact_vs_ablated = compare_samples(Variant::DendriteThreshold, Variant::DendriteThreshold, intact, ablated);
    return rep;
}

inline AblationReport ablation_study(const ExperimentSpec& spec)
{
    ExperimentSpec s = spec;
    if (std::find(s.variants.begin(), s.variants.end(), Variant::Standard) == s.variants.end())
        s.variants.push_back(Variant::Standard);
    if (std::find(s.variants.begin(), s.variants.end(), Variant::DendriteThreshold) == s.variants.end())
        s.variants.push_back(Variant::DendriteThreshold);
    return ablation_study(s, run_experiment(s));
}

// ---------------------------------------------------------------------------
// feature-count sweep

struct SweepPoint {
    std::size_t n = 0;
    ComparisonReport report;
};

/// Standard vs DendriteThreshold at each n, k fixed by the template.
inline std::vector<SweepPoint> sweep_n(const ExperimentSpec& tmpl, const std::vector<std::size_t>& n_values)
{
    if (n_values.empty())
        throw InvalidParameters("sweep needs at least one n value");
    for (auto n : n_values)
        if (n < 1)
            throw InvalidParameters("sweep n values must be positive");
    std::vector<SweepPoint> out;
    for (auto n : n_values) {
        ExperimentSpec s = tmpl;
        s.n = n;
        s.variants = {Variant::Standard, Variant::DendriteThreshold};
        // checkpoint cells are per n
        if (s.checkpoint_dir)
            s.checkpoint_dir = *s.checkpoint_dir / ("n" + std::to_string(n));
        out.push_back({n, compare(run_experiment(s))});
    }
    return out;
}

} // namespace dendrevo

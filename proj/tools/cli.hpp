#pragma once

// Command-line front end. Kept in a header so the test suites can drive the
// commands in-process through run_cli().
//
// Every experiment setting resolves as: command-line flag, then the --config
// file, then (for the seed only) DENDREVO_SEED, then the built-in default.

#include <algorithm>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "dendrevo/dendrevo.hpp"

namespace dendrevo::cli {

namespace fs = std::filesystem;

enum ExitCode { ok = 0, runtime_failure = 1, usage_error = 2 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Settings shared by run / compare / sweep, with the documented defaults.
inline const std::map<std::string, std::string>& setting_defaults()
{
    static const std::map<std::string, std::string> d{
        {"n", "1000"},
        {"k", "15"},
        {"p", "50"},
        {"h", "10"},
        {"r", "0.1"},
        {"generations", "1000"},
        {"offspring_per_generation", "0"},
        {"runs", "20"},
        {"train_size", "1000"},
        {"test_size", "1000"},
        {"encoding", "signsplit"},
        {"seed", "1"},
        {"out", "."},
        {"workers", "1"},
        {"dendrite_prob", "0.5"},
        {"drop_prob", "0.5"},
        {"parsimony", "true"},
        {"shared_landscape", "false"},
        {"resample_train", "false"},
        {"plot", "true"},
        {"variant", "dendrite"},
        {"variants", "standard,dendrite"},
        {"n_values", "25,50,100,250,500,1000"},
    };
    return d;
}

inline std::string normalize_key(std::string key)
{
    std::replace(key.begin(), key.end(), '-', '_');
    return key;
}

/// Flag values seen on the command line plus the config file, resolved on demand.
class Settings {
public:
    std::map<std::string, std::string> flags;
    KeyValues file;
    std::string env_seed;

    std::string get(const std::string& key) const
    {
        if (auto it = flags.find(key); it != flags.end())
            return it->second;
        if (auto it = file.find(key); it != file.end())
            return it->second;
        if (key == "seed" && !env_seed.empty())
            return env_seed;
        return setting_defaults().at(key);
    }

    std::size_t count(const std::string& key) const
    {
        const auto v = get(key);
        try {
            return text::parse_int<std::size_t>(v);
        } catch (const InvalidInput&) {
            throw UsageError("--" + key + ": expected a non-negative integer, got '" + v + "'");
        }
    }

    std::uint64_t u64(const std::string& key) const
    {
        const auto v = get(key);
        try {
            return text::parse_int<std::uint64_t>(v);
        } catch (const InvalidInput&) {
            throw UsageError("--" + key + ": expected an unsigned 64-bit integer, got '" + v + "'");
        }
    }

    double real(const std::string& key) const
    {
        const auto v = get(key);
        try {
            return text::parse_real(v);
        } catch (const InvalidInput&) {
            throw UsageError("--" + key + ": expected a number, got '" + v + "'");
        }
    }

    bool boolean(const std::string& key) const
    {
        const auto v = get(key);
        if (v == "true" || v == "1" || v == "yes" || v == "on")
            return true;
        if (v == "false" || v == "0" || v == "no" || v == "off")
            return false;
        throw UsageError("--" + key + ": expected true/false, got '" + v + "'");
    }

    std::vector<Variant> variant_list(const std::string& key) const
    {
        std::vector<Variant> out;
        const auto value = get(key);
        for (auto name : text::split(value, ',')) {
            auto t = text::trim(name);
            if (t.empty())
                continue;
            try {
                out.push_back(parse_variant(t));
            } catch (const InvalidParameters& e) {
                throw UsageError(e.what());
            }
        }
        return out;
    }

    std::vector<std::size_t> count_list(const std::string& key) const
    {
        std::vector<std::size_t> out;
        const auto value = get(key);
        for (auto item : text::split(value, ',')) {
            auto t = text::trim(item);
            if (t.empty())
                continue;
            try {
                out.push_back(text::parse_int<std::size_t>(t));
            } catch (const InvalidInput&) {
                throw UsageError("--" + key + ": bad entry '" + std::string(t) + "'");
            }
        }
        return out;
    }
};

inline ExperimentSpec build_spec(const Settings& s)
{
    ExperimentSpec spec;
    spec.n = s.count("n");
    spec.k = s.count("k");
    spec.runs = s.count("runs");
    spec.train_size = s.count("train_size");
    spec.test_size = s.count("test_size");
    try {
        spec.encoding = parse_encoding(s.get("encoding"));
    } catch (const InvalidParameters& e) {
        throw UsageError(e.what());
    }
    spec.master_seed = s.u64("seed");
    spec.workers = std::max<std::size_t>(1, s.count("workers"));
    spec.shared_landscape = s.boolean("shared_landscape");
    spec.base.p = s.count("p");
    spec.base.h = s.count("h");
    spec.base.r = s.real("r");
    spec.base.generations = s.count("generations");
    spec.base.offspring_per_generation = s.count("offspring_per_generation");
    spec.base.dendrite_mutation_prob = s.real("dendrite_prob");
    spec.base.drop_probability = s.real("drop_prob");
    spec.base.parsimony = s.boolean("parsimony");
    spec.base.resample_train = s.boolean("resample_train");
    try {
        spec.validate();
    } catch (const InvalidParameters& e) {
        throw UsageError(e.what());
    }
    return spec;
}

// ---------------------------------------------------------------------------
// output files

inline void write_file(const fs::path& path, const std::string& body)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot write " + path.string());
    os << body;
}

inline std::string trace_csv(const ExperimentResult& r)
{
    std::ostringstream os;
    os << csv::trace_header << '\n';
    for (std::size_t vi = 0; vi < r.variants.size(); ++vi)
        for (std::size_t run = 0; run < r.traces[vi].size(); ++run)
            write_trace_rows(os, r.variants[vi], run, r.traces[vi][run]);
    return os.str();
}

inline std::string summary_csv(const ExperimentSpec& spec, const ComparisonReport& rep)
{
    std::ostringstream os;
    csv::Writer w(os);
    w.header(csv::summary_header);
    for (const auto& v : rep.variants)
        w.row(to_string(v.variant), spec.n, spec.k, v.test.count, v.test.mean, v.test.std, v.test.min, v.test.max,
              v.gate_fraction.mean);
    return os.str();
}

inline void write_compare_rows(csv::Writer& w, const PairwiseTest& p)
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    w.row(to_string(p.a), to_string(p.b), p.mean_a, p.mean_b, p.welch ? p.welch->t : nan, p.welch ? p.welch->p : nan);
}

inline std::string compare_csv(const ComparisonReport& rep)
{
    std::ostringstream os;
    csv::Writer w(os);
    w.header(csv::compare_header);
    for (const auto& p : rep.pairs)
        write_compare_rows(w, p);
    return os.str();
}

inline std::string sweep_csv(const std::vector<SweepPoint>& points)
{
    std::ostringstream os;
    csv::Writer w(os);
    w.header(csv::sweep_header);
    for (const auto& pt : points)
        for (const auto& v : pt.report.variants) {
            w.row(pt.n, to_string(v.variant), "train", v.train.mean, v.train.min, v.train.max);
            w.row(pt.n, to_string(v.variant), "test", v.test.mean, v.test.min, v.test.max);
        }
    return os.str();
}

inline std::string ablation_csv(const AblationReport& rep)
{
    std::ostringstream os;
    csv::Writer w(os);
    w.header("run,test_mse,ablated_test_mse,input_layer_gates,output_gates_removed");
    for (const auto& r : rep.rows)
        w.row(r.run, r.test_mse, r.ablated_test_mse, r.input_layer_gates, r.output_gates_removed);
    return os.str();
}

// ---------------------------------------------------------------------------
// plotting from CSV

inline svg::LineChart trace_chart(const csv::Table& t)
{
    const auto cv = t.column("variant"), cg = t.column("generation"), cte = t.column("best_test_mse"),
               cbf = t.column("best_gate_fraction");
    // per variant, per generation: sums over runs
    std::vector<std::string> order;
    std::map<std::string, std::map<double, std::array<double, 3>>> acc;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& name = t.rows[i][cv];
        if (std::find(order.begin(), order.end(), name) == order.end())
            order.push_back(name);
        auto& cell = acc[name][t.number(i, cg)];
        cell[0] += t.number(i, cte);
        cell[1] += t.number(i, cbf);
        cell[2] += 1.0;
    }
    svg::LineChart chart;
    chart.title = "Best-member test error";
    chart.x_label = "generation";
    chart.y_label = "test MSE (mean over runs)";
    chart.y2_label = "gate fraction (dashed)";
    chart.log_y = true;
    for (const auto& name : order) {
        svg::Series err{name + " test MSE", {}}, frac{name + " gate fraction", {}};
        for (const auto& [g, cell] : acc[name]) {
            err.points.emplace_back(g, cell[0] / cell[2]);
            frac.points.emplace_back(g, cell[1] / cell[2]);
        }
        chart.primary.push_back(std::move(err));
        chart.secondary.push_back(std::move(frac));
    }
    return chart;
}

inline svg::ErrorBarChart sweep_chart(const csv::Table& t)
{
    const auto cn = t.column("n"), cv = t.column("variant"), cs = t.column("split"), cm = t.column("mean"),
               clo = t.column("min"), chi = t.column("max");
    std::vector<double> ns;
    std::vector<std::string> series_names;
    std::map<std::string, std::map<double, svg::Bar>> bars;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double n = t.number(i, cn);
        if (std::find(ns.begin(), ns.end(), n) == ns.end())
            ns.push_back(n);
        const auto name = t.rows[i][cv] + " " + t.rows[i][cs];
        if (std::find(series_names.begin(), series_names.end(), name) == series_names.end())
            series_names.push_back(name);
        bars[name][n] = {t.number(i, cm), t.number(i, clo), t.number(i, chi)};
    }
    std::sort(ns.begin(), ns.end());
    svg::ErrorBarChart chart;
    chart.title = "Final error against feature count";
    chart.x_label = "n (features)";
    chart.y_label = "MSE (min / mean / max)";
    chart.log_y = true;
    for (double n : ns)
        chart.categories.push_back(text::real(n));
    for (const auto& name : series_names) {
        svg::BarSeries s{name, {}};
        for (double n : ns) {
            auto it = bars[name].find(n);
            s.bars.push_back(it == bars[name].end() ? svg::Bar{} : it->second);
        }
        chart.series.push_back(std::move(s));
    }
    return chart;
}

inline void require_numbers(const csv::Table& t, std::initializer_list<std::string_view> text_columns)
{
    for (std::size_t col = 0; col < t.header.size(); ++col) {
        if (std::find(text_columns.begin(), text_columns.end(), t.header[col]) != text_columns.end())
            continue;
        for (std::size_t i = 0; i < t.rows.size(); ++i)
            t.number(i, col);
    }
}

/// Renders a trace.csv or sweep.csv table; anything else is rejected.
inline std::string plot_table(const csv::Table& t)
{
    if (t.rows.empty())
        throw InvalidInput("CSV has a header but no data rows");
    const auto header = t.joined_header();
    if (header == csv::trace_header) {
        require_numbers(t, {"variant"});
        return svg::render(trace_chart(t));
    }
    if (header == csv::sweep_header) {
        require_numbers(t, {"variant", "split"});
        return svg::render(sweep_chart(t));
    }
    throw InvalidInput("unrecognized CSV header: " + header);
}

inline std::string plot_file(const fs::path& in)
{
    std::ifstream is(in);
    if (!is)
        throw InvalidInput("cannot open " + in.string());
    return plot_table(csv::read(is));
}

// ---------------------------------------------------------------------------
// commands

struct Context {
    std::ostream& out;
    std::ostream& err;
};

inline void attach_progress(ExperimentSpec& spec, Context& ctx)
{
    auto mutex = std::make_shared<std::mutex>();
    std::ostream* err = &ctx.err;
    spec.progress = [mutex, err](const std::string& msg) {
        std::lock_guard lock(*mutex);
        *err << msg << '\n';
    };
}

inline void save_genomes(const fs::path& out, const ExperimentResult& r)
{
    const auto dir = out / "genomes";
    fs::create_directories(dir);
    for (std::size_t vi = 0; vi < r.variants.size(); ++vi)
        for (std::size_t run = 0; run < r.traces[vi].size(); ++run) {
            std::ofstream os(dir / (to_string(r.variants[vi]) + "_run" + std::to_string(run) + ".dnet"));
            write_network(os, r.traces[vi][run].final_network);
        }
}

inline int cmd_experiment(const Settings& s, std::vector<Variant> variants, bool comparison, Context& ctx)
{
    ExperimentSpec spec = build_spec(s);
    spec.variants = std::move(variants);
    const fs::path out = s.get("out");
    fs::create_directories(out);
    spec.checkpoint_dir = out / "cells";
    attach_progress(spec, ctx);

    const auto result = run_experiment(spec);
    const auto report = compare(result);
    write_file(out / "trace.csv", trace_csv(result));
    write_file(out / "summary.csv", summary_csv(spec, report));
    save_genomes(out, result);
    if (comparison) {
        write_file(out / "compare.csv", compare_csv(report));
        if (result.has(Variant::DendriteThreshold)) {
            const auto abl = ablation_study(spec, result);
            write_file(out / "ablation.csv", ablation_csv(abl));
            if (abl.ablated_vs_standard && abl.ablated_vs_standard->welch)
                ctx.out << "ablated_vs_standard_p=" << text::real(abl.ablated_vs_standard->welch->p) << '\n';
        }
    }
    if (s.boolean("plot"))
        write_file(out / "trace.svg", plot_file(out / "trace.csv"));

    for (const auto& v : report.variants)
        ctx.out << to_string(v.variant) << " mean_test_mse=" << text::real(v.test.mean)
                << " mean_gate_fraction=" << text::real(v.gate_fraction.mean) << '\n';
    if (comparison)
        for (const auto& p : report.pairs)
            ctx.out << to_string(p.a) << "_vs_" << to_string(p.b)
                    << "_p=" << (p.welch ? text::real(p.welch->p) : std::string("nan")) << '\n';
    return ok;
}

inline int cmd_sweep(const Settings& s, Context& ctx)
{
    ExperimentSpec spec = build_spec(s);
    const auto n_values = s.count_list("n_values");
    if (n_values.empty())
        throw UsageError("--n-values: at least one value is required");
    for (auto n : n_values)
        if (n < 1 || spec.k > n - 1)
            throw UsageError("--n-values: every n must be positive and exceed k=" + std::to_string(spec.k));
    const fs::path out = s.get("out");
    fs::create_directories(out);
    spec.checkpoint_dir = out / "cells";
    attach_progress(spec, ctx);
    const auto points = sweep_n(spec, n_values);
    write_file(out / "sweep.csv", sweep_csv(points));
    if (s.boolean("plot"))
        write_file(out / "sweep.svg", plot_file(out / "sweep.csv"));
    for (const auto& pt : points) {
        const auto& pair = pt.report.pairs.front();
        ctx.out << "n=" << pt.n << " p=" << (pair.welch ? text::real(pair.welch->p) : std::string("nan")) << '\n';
    }
    return ok;
}

inline int cmd_plot(const std::string& input, std::string output, Context& ctx)
{
    if (output.empty())
        output = fs::path(input).replace_extension(".svg").string();
    write_file(output, plot_file(input));
    ctx.out << "wrote " << output << '\n';
    return ok;
}

inline int cmd_inspect(const std::string& genome, Context& ctx)
{
    std::ifstream is(genome);
    if (!is)
        throw InvalidInput("cannot open " + genome);
    const Network net = read_network(is);
    const auto counts = count_active_gates(net);
    const auto hist = gate_location_histogram(net);
    ctx.out << "n=" << net.n() << '\n'
            << "h=" << net.h() << '\n'
            << "total=" << counts.total() << '\n'
            << "gateable=" << counts.gateable << '\n'
            << "fraction=" << text::real(counts.fraction()) << '\n'
            << "input_layer=" << counts.input_layer << '\n'
            << "output_layer=" << counts.output_layer << '\n';
    for (std::size_t j = 0; j < net.h(); ++j)
        ctx.out << "input_layer_node_" << j << '=' << hist.input_layer[j] << '\n';
    for (std::size_t j = 0; j < net.h(); ++j)
        ctx.out << "output_layer_node_" << j << '=' << hist.output_layer[j] << '\n';
    return ok;
}

inline int cmd_landscape(const Settings& s, const std::string& path, Context& ctx)
{
    const auto l = build_landscape(s.count("n"), s.count("k"), s.u64("seed"));
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot write " + path);
    write_landscape(os, l);
    ctx.out << "wrote " << path << '\n';
    return ok;
}

// ---------------------------------------------------------------------------
// argument parsing

inline void add_setting_options(CLI::App& sub, Settings& s, std::string& config_path,
                                 const std::vector<std::string>& keys, bool evolves = true)
{
    sub.add_option("--config", config_path, "key = value configuration file (flags override it)");
    for (const auto& key : keys) {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        const auto desc = "default: " + setting_defaults().at(key);
        if (key == "shared_landscape" || key == "resample_train") {
            sub.add_flag_callback(flag, [&s, key] { s.flags[key] = "true"; }, "enable (" + desc + ")");
        } else {
            sub.add_option_function<std::string>(flag, [&s, key](const std::string& v) { s.flags[key] = v; }, desc);
        }
    }
    if (!evolves)
        return;
    sub.add_flag_callback("--no-parsimony", [&s] { s.flags["parsimony"] = "false"; }, "disable the gate-count tie-break");
    sub.add_flag_callback("--no-plot", [&s] { s.flags["plot"] = "false"; }, "skip SVG output");
}

inline void load_config(Settings& s, const std::string& config_path, const std::vector<std::string>& keys)
{
    if (config_path.empty())
        return;
    std::ifstream is(config_path);
    if (!is)
        throw UsageError("cannot open config file " + config_path);
    KeyValues raw;
    try {
        raw = read_key_values(is);
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
    for (const auto& [k, v] : raw) {
        const auto key = normalize_key(k);
        if (std::find(keys.begin(), keys.end(), key) == keys.end() && key != "parsimony" && key != "plot")
            throw UsageError("unknown config key '" + k + "'");
        s.file[key] = v;
    }
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    Context ctx{out, err};
    CLI::App app{"Neuroevolution of perceptrons with dendrite-style connection gates on NK regression tasks",
                 "dendrevo"};
    app.require_subcommand(1);
    // -h stays free for the hidden-layer size
    app.set_help_flag("--help", "print this help and exit");

    Settings settings;
    if (const char* env = std::getenv("DENDREVO_SEED"))
        settings.env_seed = env;
    std::string config_path;

    const std::vector<std::string> common{"n", "k", "p", "h", "r", "generations", "offspring_per_generation",
                                          "runs", "train_size", "test_size", "encoding", "seed", "out", "workers",
                                          "dendrite_prob", "drop_prob", "shared_landscape", "resample_train"};
    auto with = [&](std::vector<std::string> extra) {
        auto keys = common;
        keys.insert(keys.end(), extra.begin(), extra.end());
        return keys;
    };
    const auto run_keys = with({"variant"});
    const auto compare_keys = with({"variants"});
    const auto sweep_keys = with({"n_values"});

    auto* run = app.add_subcommand("run", "evolve one variant over several runs; writes trace.csv and summary.csv");
    add_setting_options(*run, settings, config_path, run_keys);
    auto* cmp = app.add_subcommand("compare", "evolve several variants and t-test them; writes compare.csv");
    add_setting_options(*cmp, settings, config_path, compare_keys);
    auto* sweep = app.add_subcommand("sweep", "standard vs dendrite across feature counts; writes sweep.csv");
    add_setting_options(*sweep, settings, config_path, sweep_keys);

    std::string plot_in, plot_out;
    auto* plot = app.add_subcommand("plot", "render trace.csv or sweep.csv as SVG");
    plot->add_option("input", plot_in, "CSV file")->required();
    plot->add_option("-o,--output", plot_out, "SVG path (default: input with .svg)");

    std::string genome;
    auto* inspect = app.add_subcommand("inspect", "print gate locations of a DNET genome file");
    inspect->add_option("genome", genome, "genome file")->required();

    std::string landscape_out;
    auto* land = app.add_subcommand("landscape", "export an NK landscape in text form");
    land->add_option("output", landscape_out, "output path")->required();
    add_setting_options(*land, settings, config_path, {"n", "k", "seed"}, false);

    std::vector<std::string> argv_store{"dendrevo"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store)
        argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return usage_error;
    }

    try {
        if (*run) {
            load_config(settings, config_path, run_keys);
            const auto v = settings.variant_list("variant");
            if (v.size() != 1)
                throw UsageError("--variant takes exactly one variant name");
            return cmd_experiment(settings, v, false, ctx);
        }
        if (*cmp) {
            load_config(settings, config_path, compare_keys);
            auto v = settings.variant_list("variants");
            std::set<Variant> unique(v.begin(), v.end());
            if (v.size() < 2 || unique.size() != v.size())
                throw UsageError("--variants needs at least two distinct variant names");
            return cmd_experiment(settings, v, true, ctx);
        }
        if (*sweep) {
            load_config(settings, config_path, sweep_keys);
            return cmd_sweep(settings, ctx);
        }
        if (*plot)
            return cmd_plot(plot_in, plot_out, ctx);
        if (*inspect)
            return cmd_inspect(genome, ctx);
        if (*land) {
            load_config(settings, config_path, {"n", "k", "seed"});
            return cmd_landscape(settings, landscape_out, ctx);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return usage_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return runtime_failure;
    }
    return usage_error;
}

} // namespace dendrevo::cli

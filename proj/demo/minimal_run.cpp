// Evolves a standard and a dendrite-gated perceptron on one small NK task and
// prints the final errors.

#include <chrono>
#include <cstdio>

#include "dendrevo/dendrevo.hpp"

int main()
{
    using namespace dendrevo;
    const NKLandscape landscape = build_landscape(100, 5, 42);
    Rng data_rng(7);
    const Dataset train = generate_dataset(landscape, 1000, Encoding::SignSplit, data_rng);
    const Dataset test = generate_dataset(landscape, 1000, Encoding::SignSplit, data_rng);

    for (Variant v : {Variant::Standard, Variant::DendriteThreshold}) {
        EvoConfig cfg;
        cfg.variant = v;
        cfg.generations = 100;
        Rng rng(2024);
        const auto t0 = std::chrono::steady_clock::now();
        const RunTrace trace = run_evolution(cfg, landscape, train, test, rng);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%-9s train %.6f  test %.6f  gates %zu  (%.1fs)\n", to_string(v).c_str(), trace.final_train_mse,
                    trace.final_test_mse, trace.final_gates.total(), secs);
    }
}

#pragma once

// NK fitness landscapes and the regression datasets drawn from them.
//
// Each of the n genes owns a table of 2^(k+1) contributions in [0, 1]. The row
// for gene i packs its own bit into position 0 and the bits of its k neighbours,
// in neighbour-list order, into positions 1..k. Fitness is the mean contribution.
//
// Memory: n * 2^(k+1) doubles. At n = 1000, k = 15 that is 65.5M values (~524 MB).

#include <cstddef>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dendrevo/error.hpp"
#include "dendrevo/random.hpp"
#include "dendrevo/text.hpp"

namespace dendrevo {

using Genome = std::vector<std::uint8_t>;

class NKLandscape {
public:
    static constexpr int max_k = 28;

    /// Adopts explicit neighbour lists and tables; validates every invariant.
    NKLandscape(std::size_t n, std::size_t k, std::vector<std::size_t> neighbors,
                std::vector<double> tables, std::uint64_t seed = 0)
        : n_(n), k_(k), seed_(seed), neighbors_(std::move(neighbors)), tables_(std::move(tables))
    {
        check_shape(n_, k_);
        if (neighbors_.size() != n_ * k_)
            throw InvalidParameters("neighbour list size does not match n*k");
        if (tables_.size() != n_ * table_size())
            throw InvalidParameters("table storage does not match n*2^(k+1)");
        for (std::size_t i = 0; i < n_; ++i) {
            auto nb = this->neighbors(i);
            for (std::size_t a = 0; a < k_; ++a) {
                if (nb[a] >= n_ || nb[a] == i)
                    throw InvalidParameters("neighbour index out of range or self for gene " + std::to_string(i));
                for (std::size_t b = 0; b < a; ++b)
                    if (nb[a] == nb[b])
                        throw InvalidParameters("duplicate neighbour for gene " + std::to_string(i));
            }
        }
        for (double v : tables_)
            if (!(v >= 0.0 && v <= 1.0))
                throw InvalidParameters("table entry outside [0, 1]");
    }

    static void check_shape(std::size_t n, std::size_t k)
    {
        if (n == 0)
            throw InvalidParameters("n must be positive");
        if (k > n - 1)
            throw InvalidParameters("k must satisfy k <= n-1 (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
        if (k > static_cast<std::size_t>(max_k))
            throw InvalidParameters("k too large for tabulated landscape");
    }

    std::size_t n() const noexcept { return n_; }
    std::size_t k() const noexcept { return k_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t table_size() const noexcept { return std::size_t{1} << (k_ + 1); }

    std::span<const std::size_t> neighbors(std::size_t gene) const
    {
        return {neighbors_.data() + gene * k_, k_};
    }

    std::span<const double> table(std::size_t gene) const
    {
        return {tables_.data() + gene * table_size(), table_size()};
    }

    std::size_t row_index(std::size_t gene, std::span<const std::uint8_t> bits) const
    {
        std::size_t idx = bits[gene] ? 1u : 0u;
        auto nb = neighbors(gene);
        for (std::size_t a = 0; a < k_; ++a)
            if (bits[nb[a]])
                idx |= std::size_t{1} << (a + 1);
        return idx;
    }

    double contribution(std::size_t gene, std::span<const std::uint8_t> bits) const
    {
        return tables_[gene * table_size() + row_index(gene, bits)];
    }

    /// Mean of the per-gene contributions, in [0, 1].
    double evaluate(std::span<const std::uint8_t> bits) const
    {
        if (bits.size() != n_)
            throw InvalidInput("genome length " + std::to_string(bits.size()) + " does not match n=" + std::to_string(n_));
        double sum = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            sum += contribution(i, bits);
        return sum / static_cast<double>(n_);
    }

    bool operator==(const NKLandscape&) const = default;

private:
    std::size_t n_;
    std::size_t k_;
    std::uint64_t seed_;
    std::vector<std::size_t> neighbors_;
    std::vector<double> tables_;
};

/// Draws a landscape: k distinct non-self neighbours per gene, table entries uniform on [0, 1].
inline NKLandscape build_landscape(std::size_t n, std::size_t k, std::uint64_t seed)
{
    NKLandscape::check_shape(n, k);
    Rng rng(seed);
    std::vector<std::size_t> neighbors;
    neighbors.reserve(n * k);
    std::vector<std::size_t> others(n > 0 ? n - 1 : 0);
    for (std::size_t i = 0; i < n; ++i) {
        // candidate pool: every gene except i, reset each time so draws are
        // independent of previous genes
        for (std::size_t j = 0, c = 0; j < n; ++j)
            if (j != i)
                others[c++] = j;
        for (std::size_t a = 0; a < k; ++a) {
            std::size_t pick = a + rng.below(others.size() - a);
            std::swap(others[a], others[pick]);
            neighbors.push_back(others[a]);
        }
    }
    const std::size_t rows = std::size_t{1} << (k + 1);
    std::vector<double> tables(n * rows);
    for (auto& v : tables)
        v = rng.unit_closed();
    return NKLandscape(n, k, std::move(neighbors), std::move(tables), seed);
}

inline double evaluate_genome(const NKLandscape& landscape, std::span<const std::uint8_t> bits)
{
    return landscape.evaluate(bits);
}

// ---------------------------------------------------------------------------
// feature encodings

enum class Encoding {
    SignSplit,  ///< 0 -> [-1, 0), 1 -> [0, 1]
    CenterBand, ///< 1 -> [-0.5, 0.5], 0 -> [-1, -0.5] or (0.5, 1] by fair coin
};

inline std::string to_string(Encoding e)
{
    return e == Encoding::SignSplit ? "signsplit" : "centerband";
}

inline Encoding parse_encoding(std::string_view s)
{
    if (s == "signsplit" || s == "SignSplit" || s == "sign")
        return Encoding::SignSplit;
    if (s == "centerband" || s == "CenterBand" || s == "center")
        return Encoding::CenterBand;
    throw InvalidParameters("unknown encoding '" + std::string(s) + "'");
}

inline double encode_bit(bool bit, Encoding encoding, Rng& rng)
{
    switch (encoding) {
    case Encoding::SignSplit:
        return bit ? rng.unit_closed() : rng.uniform_open(-1.0, 0.0);
    case Encoding::CenterBand:
        if (bit)
            return rng.uniform_closed(-0.5, 0.5);
        if (rng.coin())
            return rng.uniform_closed(-1.0, -0.5);
        return 1.0 - 0.5 * rng.unit_open(); // (0.5, 1.0]
    }
    return 0.0;
}

inline std::vector<double> encode_features(std::span<const std::uint8_t> bits, Encoding encoding, Rng& rng)
{
    std::vector<double> out(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i)
        out[i] = encode_bit(bits[i] != 0, encoding, rng);
    return out;
}

/// Inverse of SignSplit.
inline Genome decode_sign(std::span<const double> features)
{
    Genome g(features.size());
    for (std::size_t i = 0; i < features.size(); ++i)
        g[i] = features[i] >= 0.0 ? 1 : 0;
    return g;
}

// ---------------------------------------------------------------------------
// datasets

struct Sample {
    std::span<const double> features;
    double target;
};

/// Row-major feature matrix plus targets; immutable once generated.
class Dataset {
public:
    Dataset(std::size_t n, Encoding encoding, std::vector<double> features, std::vector<double> targets)
        : n_(n), encoding_(encoding), features_(std::move(features)), targets_(std::move(targets))
    {
        if (features_.size() != n_ * targets_.size())
            throw InvalidInput("feature matrix does not match n * sample count");
    }

    std::size_t n() const noexcept { return n_; }
    std::size_t size() const noexcept { return targets_.size(); }
    bool empty() const noexcept { return targets_.empty(); }
    Encoding encoding() const noexcept { return encoding_; }

    std::span<const double> features(std::size_t i) const { return {features_.data() + i * n_, n_}; }
    double target(std::size_t i) const { return targets_[i]; }
    Sample sample(std::size_t i) const { return {features(i), targets_[i]}; }
    std::span<const double> targets() const { return targets_; }

    bool operator==(const Dataset&) const = default;

private:
    std::size_t n_;
    Encoding encoding_;
    std::vector<double> features_;
    std::vector<double> targets_;
};

inline Dataset generate_dataset(const NKLandscape& landscape, std::size_t size, Encoding encoding, Rng& rng)
{
    if (size == 0)
        throw InvalidParameters("dataset size must be at least 1");
    const std::size_t n = landscape.n();
    std::vector<double> features;
    features.reserve(n * size);
    std::vector<double> targets;
    targets.reserve(size);
    Genome bits(n);
    for (std::size_t s = 0; s < size; ++s) {
        for (auto& b : bits)
            b = rng.coin() ? 1 : 0;
        targets.push_back(landscape.evaluate(bits));
        for (std::size_t i = 0; i < n; ++i)
            features.push_back(encode_bit(bits[i] != 0, encoding, rng));
    }
    return Dataset(n, encoding, std::move(features), std::move(targets));
}

// ---------------------------------------------------------------------------
// text export: "NKL 1 <n> <k> <seed>" then "<gene> <neighbours...> | <values...>"

inline void write_landscape(std::ostream& os, const NKLandscape& l)
{
    os << "NKL 1 " << l.n() << ' ' << l.k() << ' ' << l.seed() << '\n';
    for (std::size_t i = 0; i < l.n(); ++i) {
        os << i;
        for (auto nb : l.neighbors(i))
            os << ' ' << nb;
        os << " |";
        for (double v : l.table(i))
            os << ' ' << text::real(v);
        os << '\n';
    }
}

inline NKLandscape read_landscape(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line))
        throw InvalidInput("empty landscape file");
    auto head = text::tokens(line);
    if (head.size() != 5 || head[0] != "NKL" || head[1] != "1")
        throw InvalidInput("bad landscape header: " + line);
    const auto n = text::parse_int<std::size_t>(head[2]);
    const auto k = text::parse_int<std::size_t>(head[3]);
    const auto seed = text::parse_int<std::uint64_t>(head[4]);
    NKLandscape::check_shape(n, k);
    const std::size_t rows = std::size_t{1} << (k + 1);
    std::vector<std::size_t> neighbors;
    std::vector<double> tables;
    neighbors.reserve(n * k);
    tables.reserve(n * rows);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(is, line))
            throw InvalidInput("landscape file truncated at gene " + std::to_string(i));
        auto bar = line.find('|');
        if (bar == std::string::npos)
            throw InvalidInput("missing '|' on gene line " + std::to_string(i));
        auto left = text::tokens(std::string_view(line).substr(0, bar));
        auto right = text::tokens(std::string_view(line).substr(bar + 1));
        if (left.size() != k + 1 || text::parse_int<std::size_t>(left[0]) != i)
            throw InvalidInput("bad neighbour list on gene line " + std::to_string(i));
        if (right.size() != rows)
            throw InvalidInput("wrong table length on gene line " + std::to_string(i));
        for (std::size_t a = 1; a < left.size(); ++a)
            neighbors.push_back(text::parse_int<std::size_t>(left[a]));
        for (auto tok : right)
            tables.push_back(text::parse_real(tok));
    }
    return NKLandscape(n, k, std::move(neighbors), std::move(tables), seed);
}

} // namespace dendrevo

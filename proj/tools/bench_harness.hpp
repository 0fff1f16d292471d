#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <vector>

#include "fastvol/batch.hpp"

namespace vol::bench {

/// Deterministic synthetic Black-Scholes chain: flag, S, K, t, r, sigma.
inline fastvol::ChainTable synthetic_chain(std::size_t rows, std::uint64_t seed = 20240601) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<fastvol::OptionFlag> flags(rows, fastvol::OptionFlag::call());
    std::vector<double> strike(rows), t(rows), r(rows), sigma(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        if (unit(rng) < 0.5) flags[i] = fastvol::OptionFlag::put();
        strike[i] = 100.0 * std::exp(-0.4 + 0.8 * unit(rng));
        t[i] = 0.05 + 2.95 * unit(rng);
        r[i] = -0.01 + 0.07 * unit(rng);
        sigma[i] = 0.05 + 0.95 * unit(rng);
    }
    fastvol::ChainTable table;
    table.set_flags(std::move(flags));
    table.set(fastvol::columns::spot, 100.0);
    table.set(fastvol::columns::strike, std::move(strike));
    table.set(fastvol::columns::t, std::move(t));
    table.set(fastvol::columns::r, std::move(r));
    table.set(fastvol::columns::sigma, std::move(sigma));
    return table;
}

struct Timing {
    std::size_t rows = 0;
    double seconds = 0.0;

    double rows_per_second() const { return seconds > 0.0 ? static_cast<double>(rows) / seconds : 0.0; }
};

template <class Fn>
Timing time_rows(std::size_t rows, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    return Timing{rows, std::chrono::duration<double>(stop - start).count()};
}

inline void report(const char* label, const Timing& timing) {
    std::printf("%-24s %10zu rows  %9.3f s  %12.0f rows/sec\n", label, timing.rows, timing.seconds,
                timing.rows_per_second());
}

} // namespace vol::bench

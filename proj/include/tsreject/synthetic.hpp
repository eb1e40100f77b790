#ifndef TSREJECT_SYNTHETIC_HPP
#define TSREJECT_SYNTHETIC_HPP

#include <cstdint>
#include <string>

#include "tsreject/common.hpp"
#include "tsreject/tsio.hpp"

namespace tsreject::synthetic {

/**
 * Benchmark series used when no real dataset is supplied: a smooth
 * multivariate AR signal whose observation-noise level follows a slowly
 * drifting, window-observable level component, plus one contiguous
 * mean-shifted out-of-distribution segment placed in the late span so
 * chronological splits keep train/validation clean.
 */
struct SyntheticSpec {
    Index length = 3000;
    Index variables = 3;
    double ood_fraction = 0.02;   // fraction of rows covered by the OOD segment;
                                  // 2% of the series is about a tenth of the
                                  // default test span once windows overlap it
    double ood_start = 0.92;      // segment start as a fraction of the series
    double ood_shift = 5.0;       // mean shift in units of the clean signal std
    double noise_base = 0.05;
    double noise_scale = 0.60;
    std::uint64_t seed = 1;
};

tsio::RawSeries generate(const SyntheticSpec& spec);

/// Write the generated series as an ETT-style CSV (header + time column).
void write_csv(const tsio::RawSeries& series, const std::string& path);

}  // namespace tsreject::synthetic

#endif  // TSREJECT_SYNTHETIC_HPP

#include "tsreject/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "tsreject/serialize.hpp"

namespace tsreject::synthetic {

tsio::RawSeries generate(const SyntheticSpec& spec) {
    if (spec.length < 10 || spec.variables < 1) {
        throw std::invalid_argument("synthetic: length must be >= 10 and variables >= 1");
    }
    if (!(spec.ood_fraction >= 0.0 && spec.ood_fraction < 1.0) ||
        !(spec.ood_start >= 0.0 && spec.ood_start <= 1.0)) {
        throw std::invalid_argument("synthetic: ood_fraction in [0,1) and ood_start in [0,1]");
    }

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 2.0 * M_PI);

    const Index T = spec.length;
    const Index N = spec.variables;
    Matrix values(T, N);

    std::vector<double> phase(static_cast<size_t>(N));
    std::vector<double> period(static_cast<size_t>(N));
    for (Index c = 0; c < N; ++c) {
        phase[static_cast<size_t>(c)] = uniform(rng);
        period[static_cast<size_t>(c)] = 90.0 + 40.0 * static_cast<double>(c);
    }
    const double level_phase = uniform(rng);

    Vector ar = Vector::Zero(N);
    for (Index t = 0; t < T; ++t) {
        // Drifting level shared by all channels; it is visible in any input
        // window and drives the observation-noise scale, so estimated error
        // variance is learnable from the window itself. The cycle is short
        // enough that every chronological split sees its full range.
        const double level =
            0.5 + 0.45 * std::sin(2.0 * M_PI * static_cast<double>(t) / 130.0 + level_phase);
        const double noise_std = spec.noise_base + spec.noise_scale * level * level;
        for (Index c = 0; c < N; ++c) {
            ar(c) = 0.9 * ar(c) + 0.25 * gauss(rng);
            const double season = 0.8 * std::sin(2.0 * M_PI * static_cast<double>(t) /
                                                     period[static_cast<size_t>(c)] +
                                                 phase[static_cast<size_t>(c)]);
            values(t, c) = season + ar(c) + level + noise_std * gauss(rng);
        }
    }

    // Clean-signal scale, used to size the mean shift of the OOD segment.
    const double clean_std = std::sqrt(
        (values.array() - values.mean()).square().sum() / static_cast<double>(values.size() - 1));

    const auto ood_begin = static_cast<Index>(std::floor(spec.ood_start * static_cast<double>(T)));
    const auto ood_len = static_cast<Index>(std::floor(spec.ood_fraction * static_cast<double>(T)));
    const Index ood_end = std::min<Index>(T, ood_begin + ood_len);
    for (Index t = ood_begin; t < ood_end; ++t) {
        for (Index c = 0; c < N; ++c) {
            values(t, c) += spec.ood_shift * clean_std;
        }
    }

    tsio::RawSeries series;
    series.values = std::move(values);
    series.timestamps.reserve(static_cast<size_t>(T));
    for (Index t = 0; t < T; ++t) {
        series.timestamps.push_back("t" + std::to_string(t));
    }
    for (Index c = 0; c < N; ++c) {
        series.variable_names.push_back("ch" + std::to_string(c));
    }
    return series;
}

void write_csv(const tsio::RawSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "date";
    for (const auto& name : series.variable_names) out << "," << name;
    out << "\n";
    for (Index t = 0; t < series.rows(); ++t) {
        out << series.timestamps[static_cast<size_t>(t)];
        for (Index c = 0; c < series.cols(); ++c) {
            out << "," << serialize::format_double(series.values(t, c));
        }
        out << "\n";
    }
}

}  // namespace tsreject::synthetic

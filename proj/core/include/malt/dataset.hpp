#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "malt/linalg.hpp"

namespace malt {

/// Per-coordinate box the perturbed inputs must stay inside.
struct ClipBox {
    double lo;
    double hi;
};

struct Splits {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

struct Dataset {
    Matrix X; // n x d
    Matrix Y; // n x m, entries in {-1, +1}
    Splits splits;
    std::optional<ClipBox> clipBox;

    std::size_t instances() const { return X.rows; }
    std::size_t features() const { return X.cols; }
    std::size_t labels() const { return Y.cols; }

    const std::vector<std::size_t>& split(const std::string& name) const;
};

struct SynthSpec {
    std::size_t n = 1000;
    std::size_t d = 20;
    std::size_t m = 4;
    double rho = 0.5;        // target pairwise cosine of ground-truth directions
    double margin = 0.1;     // enforced |w_j . x| before label noise
    double labelNoise = 0.05;
    std::uint64_t seed = 0;
};

struct Generated {
    Dataset dataset;
    Matrix groundTruthW; // m x d unit rows
};

/// Correlated-label synthetic task. Ground-truth directions have pairwise
/// cosine exactly rho; labels are margin-separated signs with independent
/// flip noise; split 50/30/20 by a seeded shuffle.
Generated generate(const SynthSpec& spec);

// CSV with header f0,..,f{d-1},l0,..,l{m-1}; features printed with 17
// significant digits, labels as -1/1. Carries no split information.
void saveCsv(const Dataset& dataset, const std::string& path);
Dataset loadCsv(const std::string& path);

/// Metadata stored next to the CSV (same stem, .meta.json) so datasets
/// reload with their splits, clip box and provenance intact.
struct DatasetMeta {
    std::uint64_t seed = 0;
    double rho = 0.0;
    double margin = 0.0;
    double labelNoise = 0.0;
};

std::string metaPathFor(const std::string& csvPath);
void saveDatasetFiles(const Dataset& dataset, const DatasetMeta& meta,
                      const std::string& csvPath);
Dataset loadDatasetFiles(const std::string& csvPath);

} // namespace malt

#pragma once

#include <string>
#include <vector>

#include "mixloss/landscape.hpp"
#include "mixloss/linalg.hpp"
#include "mixloss/rng.hpp"

namespace mixloss {

// N samples of I features with integer labels in [0, C). Raw labels are
// remapped to contiguous integers at load time; the remap table survives
// for reporting.
struct Dataset {
    Matrix features;           // N x I
    std::vector<int> labels;   // length N
    int classes = 0;
    std::string name;
    std::vector<std::string> raw_label_names;  // index = contiguous label

    std::size_t size() const { return features.rows; }
    int input_dim() const { return static_cast<int>(features.cols); }
    Vec row(std::size_t n) const;
    void validate() const;
};

struct SplitSpec {
    double train_fraction = 0.6;
    double val_fraction = 0.2;
    double test_fraction = 0.2;
    bool stratified = true;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SplitResult {
    Dataset train;
    Dataset val;
    Dataset test;
    bool stratified_applied = true;  // false when a small class forced the fallback
};

Dataset load_csv(const std::string& path, int label_column = -1, char delimiter = ',');
void write_csv(const Dataset& d, const std::string& path, int label_column = -1, char delimiter = ',');

// Deterministic disjoint split. Stratified by default; classes with fewer
// than 3 samples force an unstratified fallback (flagged in the result).
// Per-split counts use largest-remainder rounding, per class when
// stratified.
SplitResult split(const Dataset& d, const SplitSpec& spec);

struct NormStats {
    Vec mean;
    Vec std_dev;  // 0 marks a constant feature (centered only)
};

// Per-feature z-score using train statistics only, applied in place to
// every dataset passed.
NormStats zscore_normalize(Dataset& train, std::vector<Dataset*> others = {});

// Gaussian blobs with unit covariance centered at +-1 hypercube vertices
// scaled by `separation` (vertex of class c = binary pattern of c; classes
// beyond 2^I reuse vertices at growing radius).
Dataset make_blobs(int classes, int per_class, int input_dim, double separation,
                   std::uint64_t seed);

// Two-basin quartic whose minima curvatures differ by `sharpness_ratio`.
DoubleWellLandscape make_double_well(double sharpness_ratio, double scale = 1.0);

}  // namespace mixloss

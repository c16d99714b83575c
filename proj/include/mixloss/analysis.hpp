#pragma once

#include <array>
#include <string>
#include <vector>

#include "mixloss/linalg.hpp"

namespace mixloss {

// Per-sample view of one evaluation pass: was the sample classified
// correctly, and with what true-class probability.
struct SampleRecord {
    int sample_id;
    bool correct;
    double p_y;
};

struct BucketSnapshot {
    int epoch = 0;
    std::vector<SampleRecord> records;
    double threshold = 0.2;

    void validate() const;
};

// {correct}, {incorrect with p_y > threshold}, {incorrect with
// p_y <= threshold}. The boundary p_y == threshold goes to the low bucket.
struct BucketPartition {
    std::vector<int> correct;
    std::vector<int> incorrect_high;
    std::vector<int> incorrect_low;
};
BucketPartition bucket_partition(const BucketSnapshot& snap);

// For each early bucket, how many of its samples are correct/incorrect in
// the late snapshot. Rates are percentages rounded to 2 decimals.
struct BucketTransition {
    std::array<std::array<std::size_t, 2>, 3> counts;  // [bucket][correct=0 / incorrect=1]
    std::array<double, 3> correct_rate_pct;
};
BucketTransition bucket_transition(const BucketSnapshot& early, const BucketSnapshot& late);

// Final accuracies: one row per method, one column per experiment
// (dataset x seed or dataset, depending on aggregation). Failed runs keep
// their cell at 0 with a flag so the block design stays complete.
struct AccuracyTable {
    std::vector<std::string> methods;
    std::vector<std::string> experiments;
    Matrix values;                            // methods x experiments
    std::vector<std::vector<bool>> failed;    // same shape; empty means none

    std::size_t method_count() const { return methods.size(); }
    std::size_t experiment_count() const { return experiments.size(); }
    void validate() const;
    bool is_failed(std::size_t m, std::size_t e) const;
};

// rho_m(tau) = fraction of experiments where method m reaches at least
// tau times the best accuracy of that experiment.
struct DolanMoreProfile {
    std::vector<double> taus;
    Matrix rho;  // methods x taus
};
DolanMoreProfile dolan_more_profile(const AccuracyTable& tab, const std::vector<double>& taus);

struct MethodSummary {
    std::string method;
    std::size_t wins;      // experiments where the method ties or beats all others
    double delta_acc;      // mean accuracy difference vs the baseline method
    double mean_rank;      // average rank, 1 = best, ties share the mean position
};
std::vector<MethodSummary> summary_stats(const AccuracyTable& tab, const std::string& baseline);

// Friedman chi-square over the rank table (methods ranked per experiment,
// average ranks for ties, standard tie correction in the denominator):
//   chi2 = 12 * sum_j (R_j - N(k+1)/2)^2 / (N k (k+1) - T/(k-1)),
// with T = sum over experiments of sum(t^3 - t) for each tie group.
struct FriedmanResult {
    double chi_square;
    int degrees_of_freedom;
};
FriedmanResult friedman_statistic(const AccuracyTable& tab);

// Average ranks (1 = best accuracy) for one experiment column.
Vec rank_column(const AccuracyTable& tab, std::size_t experiment);

}  // namespace mixloss

#include "mixloss/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace mixloss {

void BucketSnapshot::validate() const {
    std::set<int> ids;
    for (const auto& r : records) {
        if (!(r.p_y >= 0.0) || !(r.p_y <= 1.0))
            throw std::invalid_argument("BucketSnapshot: p_y outside [0,1] for sample " +
                                        std::to_string(r.sample_id));
        if (!ids.insert(r.sample_id).second)
            throw std::invalid_argument("BucketSnapshot: duplicate sample id " +
                                        std::to_string(r.sample_id));
    }
}

BucketPartition bucket_partition(const BucketSnapshot& snap) {
    snap.validate();
    BucketPartition out;
    for (const auto& r : snap.records) {
        if (r.correct)
            out.correct.push_back(r.sample_id);
        else if (r.p_y > snap.threshold)
            out.incorrect_high.push_back(r.sample_id);
        else
            out.incorrect_low.push_back(r.sample_id);
    }
    return out;
}

BucketTransition bucket_transition(const BucketSnapshot& early, const BucketSnapshot& late) {
    const BucketPartition part = bucket_partition(early);
    late.validate();

    std::map<int, bool> late_correct;
    for (const auto& r : late.records) late_correct[r.sample_id] = r.correct;
    if (late.records.size() != early.records.size())
        throw std::invalid_argument("bucket_transition: snapshots cover different sample sets");

    BucketTransition out{};
    const std::vector<int>* buckets[3] = {&part.correct, &part.incorrect_high, &part.incorrect_low};
    for (int b = 0; b < 3; ++b) {
        for (int id : *buckets[b]) {
            auto it = late_correct.find(id);
            if (it == late_correct.end())
                throw std::invalid_argument("bucket_transition: sample " + std::to_string(id) +
                                            " missing from late snapshot");
            ++out.counts[static_cast<std::size_t>(b)][it->second ? 0 : 1];
        }
        const std::size_t total = buckets[b]->size();
        const std::size_t correct = out.counts[static_cast<std::size_t>(b)][0];
        const double pct =
            total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(total);
        out.correct_rate_pct[static_cast<std::size_t>(b)] = std::round(pct * 100.0) / 100.0;
    }
    return out;
}

void AccuracyTable::validate() const {
    if (methods.empty() || experiments.empty())
        throw std::invalid_argument("AccuracyTable: empty table");
    if (values.rows != methods.size() || values.cols != experiments.size())
        throw std::invalid_argument("AccuracyTable: shape mismatch");
    for (double v : values.a)
        if (!(v >= 0.0) || !(v <= 1.0))
            throw std::invalid_argument("AccuracyTable: accuracy outside [0,1]");
    if (!failed.empty()) {
        if (failed.size() != methods.size())
            throw std::invalid_argument("AccuracyTable: failure-flag shape mismatch");
        for (const auto& row : failed)
            if (row.size() != experiments.size())
                throw std::invalid_argument("AccuracyTable: failure-flag shape mismatch");
    }
}

bool AccuracyTable::is_failed(std::size_t m, std::size_t e) const {
    return !failed.empty() && failed[m][e];
}

DolanMoreProfile dolan_more_profile(const AccuracyTable& tab, const std::vector<double>& taus) {
    tab.validate();
    if (taus.empty()) throw std::invalid_argument("dolan_more_profile: empty tau grid");
    for (double t : taus)
        if (!(t > 0.0) || !(t <= 1.0))
            throw std::invalid_argument("dolan_more_profile: tau must lie in (0,1]");

    const std::size_t k = tab.method_count();
    const std::size_t n = tab.experiment_count();

    Vec best(n, 0.0);
    for (std::size_t e = 0; e < n; ++e) {
        for (std::size_t m = 0; m < k; ++m) best[e] = std::max(best[e], tab.values(m, e));
        if (!(best[e] > 0.0))
            throw std::invalid_argument("dolan_more_profile: experiment " + tab.experiments[e] +
                                        " has max accuracy 0");
    }

    DolanMoreProfile out;
    out.taus = taus;
    out.rho = Matrix(k, taus.size());
    for (std::size_t m = 0; m < k; ++m)
        for (std::size_t t = 0; t < taus.size(); ++t) {
            std::size_t hits = 0;
            for (std::size_t e = 0; e < n; ++e) {
                // Relative slack absorbs representation noise in tau * best
                // so exact ties count as hits.
                if (tab.values(m, e) >= taus[t] * best[e] - 1e-12 * best[e]) ++hits;
            }
            out.rho(m, t) = static_cast<double>(hits) / static_cast<double>(n);
        }
    return out;
}

Vec rank_column(const AccuracyTable& tab, std::size_t experiment) {
    const std::size_t k = tab.method_count();
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return tab.values(a, experiment) > tab.values(b, experiment);
    });

    Vec ranks(k, 0.0);
    std::size_t i = 0;
    while (i < k) {
        std::size_t j = i;
        while (j + 1 < k &&
               tab.values(order[j + 1], experiment) == tab.values(order[i], experiment))
            ++j;
        // Positions i..j (0-based) share the mean rank of positions i+1..j+1.
        const double shared = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = shared;
        i = j + 1;
    }
    return ranks;
}

std::vector<MethodSummary> summary_stats(const AccuracyTable& tab, const std::string& baseline) {
    tab.validate();
    const std::size_t k = tab.method_count();
    const std::size_t n = tab.experiment_count();

    std::size_t base = k;
    for (std::size_t m = 0; m < k; ++m)
        if (tab.methods[m] == baseline) base = m;
    if (base == k)
        throw std::invalid_argument("summary_stats: baseline method '" + baseline + "' not in table");

    std::vector<MethodSummary> out(k);
    for (std::size_t m = 0; m < k; ++m) {
        out[m].method = tab.methods[m];
        out[m].wins = 0;
        out[m].delta_acc = 0.0;
        out[m].mean_rank = 0.0;
    }

    for (std::size_t e = 0; e < n; ++e) {
        double best = 0.0;
        for (std::size_t m = 0; m < k; ++m) best = std::max(best, tab.values(m, e));
        const Vec ranks = rank_column(tab, e);
        for (std::size_t m = 0; m < k; ++m) {
            if (tab.values(m, e) >= best) ++out[m].wins;  // ties credited to all
            out[m].delta_acc += tab.values(m, e) - tab.values(base, e);
            out[m].mean_rank += ranks[m];
        }
    }
    for (std::size_t m = 0; m < k; ++m) {
        out[m].delta_acc /= static_cast<double>(n);
        out[m].mean_rank /= static_cast<double>(n);
    }
    return out;
}

FriedmanResult friedman_statistic(const AccuracyTable& tab) {
    tab.validate();
    const std::size_t k = tab.method_count();
    const std::size_t n = tab.experiment_count();
    if (k < 2) throw std::invalid_argument("friedman_statistic: need at least 2 methods");
    if (n < 2) throw std::invalid_argument("friedman_statistic: need at least 2 experiments");

    Vec rank_sums(k, 0.0);
    double tie_term = 0.0;  // sum over experiments of sum(t^3 - t)
    for (std::size_t e = 0; e < n; ++e) {
        const Vec ranks = rank_column(tab, e);
        for (std::size_t m = 0; m < k; ++m) rank_sums[m] += ranks[m];

        std::map<double, std::size_t> groups;
        for (std::size_t m = 0; m < k; ++m) ++groups[tab.values(m, e)];
        for (const auto& [value, t] : groups) {
            (void)value;
            const double td = static_cast<double>(t);
            tie_term += td * td * td - td;
        }
    }

    const double N = static_cast<double>(n), K = static_cast<double>(k);
    double numerator = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
        const double d = rank_sums[m] - N * (K + 1.0) / 2.0;
        numerator += d * d;
    }
    const double denominator = N * K * (K + 1.0) - tie_term / (K - 1.0);

    FriedmanResult out;
    out.degrees_of_freedom = static_cast<int>(k) - 1;
    out.chi_square = (denominator <= 0.0 || numerator == 0.0) ? 0.0 : 12.0 * numerator / denominator;
    return out;
}

}  // namespace mixloss

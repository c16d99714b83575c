#include "mixloss/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mixloss {

Vec Dataset::row(std::size_t n) const {
    Vec x(features.cols);
    for (std::size_t j = 0; j < features.cols; ++j) x[j] = features(n, j);
    return x;
}

void Dataset::validate() const {
    if (size() == 0) throw std::invalid_argument("Dataset: empty");
    if (labels.size() != size()) throw std::invalid_argument("Dataset: label/feature count mismatch");
    if (classes < 2) throw std::invalid_argument("Dataset: needs at least 2 classes");
    if (!all_finite(features.a)) throw std::invalid_argument("Dataset: non-finite feature");
    for (int y : labels)
        if (y < 0 || y >= classes)
            throw std::invalid_argument("Dataset: label " + std::to_string(y) + " out of range");
}

void SplitSpec::validate() const {
    if (!(train_fraction > 0.0) || !(val_fraction > 0.0) || !(test_fraction > 0.0))
        throw std::invalid_argument("SplitSpec: every fraction must be positive");
    if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9)
        throw std::invalid_argument("SplitSpec: fractions must sum to 1");
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, delim)) out.push_back(cell);
    if (!line.empty() && line.back() == delim) out.push_back("");
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Dataset load_csv(const std::string& path, int label_column, char delimiter) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_csv: cannot open " + path);

    std::vector<std::vector<double>> feature_rows;
    std::vector<std::string> raw_labels;
    std::size_t columns = 0;
    std::size_t line_no = 0;
    std::string line;

    while (std::getline(f, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line, delimiter);
        if (columns == 0) {
            columns = cells.size();
            if (columns < 2)
                throw std::runtime_error("load_csv: " + path + " row " + std::to_string(line_no) +
                                         ": need at least 2 columns");
        } else if (cells.size() != columns) {
            throw std::runtime_error("load_csv: " + path + " row " + std::to_string(line_no) +
                                     ": ragged row (" + std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(columns) + ")");
        }
        const std::size_t label_idx =
            label_column < 0 ? columns - 1 : static_cast<std::size_t>(label_column);
        if (label_idx >= columns)
            throw std::runtime_error("load_csv: label column " + std::to_string(label_column) +
                                     " out of range");

        std::vector<double> row;
        row.reserve(columns - 1);
        for (std::size_t c = 0; c < columns; ++c) {
            const std::string cell = trim(cells[c]);
            if (c == label_idx) {
                if (cell.empty())
                    throw std::runtime_error("load_csv: " + path + " row " + std::to_string(line_no) +
                                             ": empty label cell");
                raw_labels.push_back(cell);
                continue;
            }
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
                if (!std::isfinite(v))
                    throw std::runtime_error("load_csv: " + path + " row " + std::to_string(line_no) +
                                             " col " + std::to_string(c + 1) + ": non-finite value '" +
                                             cell + "'");
                row.push_back(v);
            } catch (const std::runtime_error&) {
                throw;
            } catch (const std::exception&) {
                throw std::runtime_error("load_csv: " + path + " row " + std::to_string(line_no) +
                                         " col " + std::to_string(c + 1) + ": unparsable cell '" + cell +
                                         "'");
            }
        }
        feature_rows.push_back(std::move(row));
    }

    if (feature_rows.empty()) throw std::runtime_error("load_csv: " + path + " holds no data rows");

    // Sorted distinct raw labels -> 0..C-1.
    std::vector<std::string> distinct = raw_labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2)
        throw std::runtime_error("load_csv: " + path + " holds a single class ('" + distinct.front() +
                                 "')");
    std::map<std::string, int> remap;
    for (std::size_t i = 0; i < distinct.size(); ++i) remap[distinct[i]] = static_cast<int>(i);

    Dataset d;
    d.name = path;
    d.classes = static_cast<int>(distinct.size());
    d.raw_label_names = distinct;
    d.features = Matrix(feature_rows.size(), feature_rows.front().size());
    d.labels.resize(feature_rows.size());
    for (std::size_t n = 0; n < feature_rows.size(); ++n) {
        for (std::size_t j = 0; j < d.features.cols; ++j) d.features(n, j) = feature_rows[n][j];
        d.labels[n] = remap[raw_labels[n]];
    }
    d.validate();
    return d;
}

void write_csv(const Dataset& d, const std::string& path, int label_column, char delimiter) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_csv: cannot open " + path);
    const std::size_t cols = d.features.cols + 1;
    const std::size_t label_idx = label_column < 0 ? cols - 1 : static_cast<std::size_t>(label_column);
    char buf[64];
    for (std::size_t n = 0; n < d.size(); ++n) {
        std::size_t fi = 0;
        for (std::size_t c = 0; c < cols; ++c) {
            if (c) f << delimiter;
            if (c == label_idx) {
                const int y = d.labels[n];
                if (!d.raw_label_names.empty())
                    f << d.raw_label_names[static_cast<std::size_t>(y)];
                else
                    f << y;
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", d.features(n, fi++));
                f << buf;
            }
        }
        f << "\n";
    }
}

namespace {

Dataset take_rows(const Dataset& d, const std::vector<std::size_t>& idx, const std::string& suffix) {
    Dataset out;
    out.name = d.name.empty() ? suffix : d.name + "/" + suffix;
    out.classes = d.classes;
    out.raw_label_names = d.raw_label_names;
    out.features = Matrix(idx.size(), d.features.cols);
    out.labels.resize(idx.size());
    for (std::size_t n = 0; n < idx.size(); ++n) {
        for (std::size_t j = 0; j < d.features.cols; ++j) out.features(n, j) = d.features(idx[n], j);
        out.labels[n] = d.labels[idx[n]];
    }
    return out;
}

// Largest-remainder apportionment of n into three parts; ties favor the
// earlier split (train, val, test).
std::array<std::size_t, 3> apportion(std::size_t n, const SplitSpec& spec) {
    const double fr[3] = {spec.train_fraction, spec.val_fraction, spec.test_fraction};
    std::array<std::size_t, 3> counts{};
    double rem[3];
    std::size_t assigned = 0;
    for (int k = 0; k < 3; ++k) {
        const double ideal = fr[k] * static_cast<double>(n);
        counts[static_cast<std::size_t>(k)] = static_cast<std::size_t>(std::floor(ideal + 1e-12));
        rem[k] = ideal - std::floor(ideal + 1e-12);
        assigned += counts[static_cast<std::size_t>(k)];
    }
    std::size_t leftover = n - assigned;
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; leftover > 0; ++k, --leftover)
        ++counts[static_cast<std::size_t>(order[k % 3])];
    return counts;
}

}  // namespace

SplitResult split(const Dataset& d, const SplitSpec& spec) {
    d.validate();
    spec.validate();
    if (d.size() < 3) throw std::invalid_argument("split: need at least 3 samples");

    bool stratified = spec.stratified;
    if (stratified) {
        std::vector<std::size_t> class_counts(static_cast<std::size_t>(d.classes), 0);
        for (int y : d.labels) ++class_counts[static_cast<std::size_t>(y)];
        for (std::size_t c = 0; c < class_counts.size(); ++c) {
            if (class_counts[c] < 3) {
                stratified = false;  // fallback, flagged below
                break;
            }
        }
    }

    RandomSource rng(spec.seed);
    std::vector<std::size_t> train_idx, val_idx, test_idx;

    auto scatter = [&](std::vector<std::size_t> pool) {
        rng.shuffle(pool);
        const auto counts = apportion(pool.size(), spec);
        std::size_t at = 0;
        for (std::size_t k = 0; k < counts[0]; ++k) train_idx.push_back(pool[at++]);
        for (std::size_t k = 0; k < counts[1]; ++k) val_idx.push_back(pool[at++]);
        for (std::size_t k = 0; k < counts[2]; ++k) test_idx.push_back(pool[at++]);
    };

    if (stratified) {
        for (int c = 0; c < d.classes; ++c) {
            std::vector<std::size_t> pool;
            for (std::size_t n = 0; n < d.size(); ++n)
                if (d.labels[n] == c) pool.push_back(n);
            scatter(std::move(pool));
        }
    } else {
        std::vector<std::size_t> pool(d.size());
        for (std::size_t n = 0; n < d.size(); ++n) pool[n] = n;
        scatter(std::move(pool));
    }

    if (train_idx.empty() || val_idx.empty() || test_idx.empty())
        throw std::invalid_argument("split: fractions leave an empty split for " +
                                    std::to_string(d.size()) + " samples");

    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    SplitResult out;
    out.train = take_rows(d, train_idx, "train");
    out.val = take_rows(d, val_idx, "val");
    out.test = take_rows(d, test_idx, "test");
    out.stratified_applied = stratified;
    return out;
}

NormStats zscore_normalize(Dataset& train, std::vector<Dataset*> others) {
    train.validate();
    const std::size_t cols = train.features.cols;
    const double n = static_cast<double>(train.size());

    NormStats stats;
    stats.mean.assign(cols, 0.0);
    stats.std_dev.assign(cols, 0.0);
    for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < train.size(); ++i) s += train.features(i, j);
        stats.mean[j] = s / n;
        double ss = 0.0;
        for (std::size_t i = 0; i < train.size(); ++i) {
            const double dlt = train.features(i, j) - stats.mean[j];
            ss += dlt * dlt;
        }
        stats.std_dev[j] = std::sqrt(ss / n);
    }

    auto apply = [&](Dataset& d) {
        if (static_cast<std::size_t>(d.input_dim()) != cols)
            throw std::invalid_argument("zscore_normalize: feature dimension mismatch");
        for (std::size_t i = 0; i < d.size(); ++i)
            for (std::size_t j = 0; j < cols; ++j) {
                double v = d.features(i, j) - stats.mean[j];
                if (stats.std_dev[j] > 0.0) v /= stats.std_dev[j];
                d.features(i, j) = v;
            }
    };
    apply(train);
    for (Dataset* d : others)
        if (d) apply(*d);
    return stats;
}

Dataset make_blobs(int classes, int per_class, int input_dim, double separation,
                   std::uint64_t seed) {
    if (classes < 2) throw std::invalid_argument("make_blobs: classes must be >= 2");
    if (per_class < 1) throw std::invalid_argument("make_blobs: per_class must be >= 1");
    if (input_dim < 1) throw std::invalid_argument("make_blobs: input_dim must be >= 1");
    if (!(separation >= 0.0)) throw std::invalid_argument("make_blobs: separation must be >= 0");

    RandomSource rng(seed);
    const std::size_t n = static_cast<std::size_t>(classes) * static_cast<std::size_t>(per_class);
    Dataset d;
    d.name = "blobs";
    d.classes = classes;
    d.features = Matrix(n, static_cast<std::size_t>(input_dim));
    d.labels.resize(n);

    const int bits = std::min(input_dim, 20);
    const int vertices = 1 << bits;
    std::size_t at = 0;
    for (int c = 0; c < classes; ++c) {
        Vec center(static_cast<std::size_t>(input_dim), 0.0);
        const int v = c % vertices;
        const double radius = separation * (1.0 + static_cast<double>(c / vertices));
        for (int j = 0; j < input_dim; ++j)
            center[static_cast<std::size_t>(j)] = ((v >> (j % bits)) & 1) ? radius : -radius;
        for (int k = 0; k < per_class; ++k, ++at) {
            for (int j = 0; j < input_dim; ++j)
                d.features(at, static_cast<std::size_t>(j)) =
                    center[static_cast<std::size_t>(j)] + rng.normal();
            d.labels[at] = c;
        }
    }
    return d;
}

DoubleWellLandscape make_double_well(double sharpness_ratio, double scale) {
    return DoubleWellLandscape(sharpness_ratio, scale);
}

}  // namespace mixloss

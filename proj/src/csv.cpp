#include "mixloss/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mixloss {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_accuracy_table(const AccuracyTable& tab, const std::string& path) {
    tab.validate();
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_accuracy_table: cannot open " + path);
    f << "experiment";
    for (const auto& m : tab.methods) f << "," << m;
    f << "\n";
    for (std::size_t e = 0; e < tab.experiment_count(); ++e) {
        f << tab.experiments[e];
        for (std::size_t m = 0; m < tab.method_count(); ++m) {
            f << "," << format_double(tab.values(m, e));
            if (tab.is_failed(m, e)) f << "!";
        }
        f << "\n";
    }
}

AccuracyTable read_accuracy_table(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_accuracy_table: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("read_accuracy_table: empty file " + path);

    auto cells_of = [](const std::string& l) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(l);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };

    const auto header = cells_of(line);
    if (header.size() < 2 || header[0] != "experiment")
        throw std::runtime_error("read_accuracy_table: bad header in " + path);

    AccuracyTable tab;
    tab.methods.assign(header.begin() + 1, header.end());

    std::vector<std::vector<double>> rows;
    std::vector<std::vector<bool>> failed_rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto cells = cells_of(line);
        if (cells.size() != header.size())
            throw std::runtime_error("read_accuracy_table: ragged row in " + path);
        tab.experiments.push_back(cells[0]);
        std::vector<double> vals;
        std::vector<bool> fails;
        for (std::size_t i = 1; i < cells.size(); ++i) {
            std::string c = cells[i];
            bool fail = false;
            if (!c.empty() && c.back() == '!') {
                fail = true;
                c.pop_back();
            }
            vals.push_back(std::stod(c));
            fails.push_back(fail);
        }
        rows.push_back(std::move(vals));
        failed_rows.push_back(std::move(fails));
    }
    if (rows.empty()) throw std::runtime_error("read_accuracy_table: no data rows in " + path);

    tab.values = Matrix(tab.methods.size(), tab.experiments.size());
    tab.failed.assign(tab.methods.size(), std::vector<bool>(tab.experiments.size(), false));
    for (std::size_t e = 0; e < rows.size(); ++e)
        for (std::size_t m = 0; m < tab.methods.size(); ++m) {
            tab.values(m, e) = rows[e][m];
            tab.failed[m][e] = failed_rows[e][m];
        }
    tab.validate();
    return tab;
}

void write_dolan_more(const DolanMoreProfile& profile, const std::vector<std::string>& methods,
                      const std::string& path) {
    if (profile.rho.rows != methods.size())
        throw std::invalid_argument("write_dolan_more: method count mismatch");
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_dolan_more: cannot open " + path);
    f << "tau";
    for (const auto& m : methods) f << ",rho_" << m;
    f << "\n";
    for (std::size_t t = 0; t < profile.taus.size(); ++t) {
        f << format_double(profile.taus[t]);
        for (std::size_t m = 0; m < methods.size(); ++m) f << "," << format_double(profile.rho(m, t));
        f << "\n";
    }
}

void write_summary_stats(const std::vector<MethodSummary>& stats, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_summary_stats: cannot open " + path);
    f << "method,wins,delta_acc,mean_rank\n";
    for (const auto& s : stats)
        f << s.method << "," << s.wins << "," << format_double(s.delta_acc) << ","
          << format_double(s.mean_rank) << "\n";
}

}  // namespace mixloss

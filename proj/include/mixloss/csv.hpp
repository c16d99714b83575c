#pragma once

#include <string>
#include <vector>

#include "mixloss/analysis.hpp"

namespace mixloss {

std::string format_double(double v);  // %.17g, round-trips bitwise

// Header row of method names, one row per experiment:
//   experiment,<method1>,...,<methodk>
// Failed cells carry a trailing '!' marker on the value.
void write_accuracy_table(const AccuracyTable& tab, const std::string& path);
AccuracyTable read_accuracy_table(const std::string& path);

// tau,<rho per method>
void write_dolan_more(const DolanMoreProfile& profile, const std::vector<std::string>& methods,
                      const std::string& path);

// method,wins,delta_acc,mean_rank
void write_summary_stats(const std::vector<MethodSummary>& stats, const std::string& path);

}  // namespace mixloss

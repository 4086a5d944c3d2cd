#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "testsift/core.hpp"

namespace testsift {

/// (truth, predicted); nullopt prediction marks an unclassified scenario.
using Prediction = std::pair<ScenarioClass, std::optional<ScenarioClass>>;

/// 3x3 counts indexed [truth][predicted] plus per-truth unclassified counts.
struct ConfusionMatrix {
    std::array<std::array<std::size_t, 3>, 3> counts{};
    std::array<std::size_t, 3> unclassified{};

    std::size_t total() const;
};

ConfusionMatrix tally(std::span<const Prediction> predictions);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    std::array<ClassMetrics, 3> per_class{};  // indexed by class_priority order
    double not_yet_tested_avg_f1 = 0.0;       // mean of need-test and error-prone F1
    double total_avg_f1 = 0.0;                // mean of all three F1
    int runs = 1;

    const ClassMetrics& for_class(ScenarioClass c) const {
        return per_class[static_cast<std::size_t>(class_priority(c))];
    }
};

/// One-vs-rest precision/recall/F1 per class. Unclassified scenarios count
/// as false negatives for their truth class and never as false positives.
/// Zero denominators yield 0. Throws InputError on an empty list.
MetricsReport score(std::span<const Prediction> predictions);

/// Element-wise mean of reports; runs = reports.size().
MetricsReport average_reports(std::span<const MetricsReport> reports);

/// Uniform random predictions over the three classes for a corpus with the
/// given per-class counts (already-tested, need-test, error-prone order);
/// final metrics averaged over runs. Seeded and reproducible.
MetricsReport random_baseline(std::array<std::size_t, 3> class_counts, int runs,
                              std::uint64_t seed);

struct SweepRow {
    double temperature = 0.0;
    double mean_f1 = 0.0;
    double stddev_f1 = 0.0;
    int runs = 0;  // completed cells
};

/// Runs one classification pass per (temperature, repetition) cell via
/// run_cell, which reports the pass's total average F1 or nullopt when the
/// backend failed; rows follow the input temperature order.
std::vector<SweepRow> sweep(std::span<const double> temperatures, int repetitions,
                            const std::function<std::optional<double>(double temperature,
                                                                      int repetition)>& run_cell);

// ---------------------------------------------------------------------------
// Token / latency accounting over the analyzer's audit log
// ---------------------------------------------------------------------------

struct AuditRecord {
    std::string scenario_id;
    std::string model;
    std::string mode;
    bool rag = false;
    double latency_ms = 0.0;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

std::vector<AuditRecord> parse_audit_log(std::string_view text);

struct FiveNumberSummary {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

/// Linear-interpolation quantile over a sample (p in [0,1]).
double quantile(std::vector<double> values, double p);
FiveNumberSummary five_number_summary(std::vector<double> values);

/// Per-scenario sums of latency and token counts, summarized per
/// (model, mode, rag) group. Groups are ordered by key; empty input yields
/// an empty summary.
struct AccountingGroup {
    std::string model;
    std::string mode;
    bool rag = false;
    std::size_t scenarios = 0;
    FiveNumberSummary latency_ms;
    FiveNumberSummary prompt_tokens;
    FiveNumberSummary completion_tokens;
};

std::vector<AccountingGroup> accounting(std::span<const AuditRecord> records);

// CSV / table rendering.
std::string metrics_csv(const MetricsReport& report);
std::string metrics_table(const MetricsReport& report);
std::string sweep_csv(std::span<const SweepRow> rows);
std::string accounting_csv(std::span<const AccountingGroup> groups);

}  // namespace testsift

#include "testsift/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

namespace testsift {

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (const auto& row : counts) {
        for (std::size_t c : row) n += c;
    }
    for (std::size_t c : unclassified) n += c;
    return n;
}

ConfusionMatrix tally(std::span<const Prediction> predictions) {
    ConfusionMatrix m;
    for (const auto& [truth, predicted] : predictions) {
        auto t = static_cast<std::size_t>(class_priority(truth));
        if (predicted) {
            m.counts[t][static_cast<std::size_t>(class_priority(*predicted))]++;
        } else {
            m.unclassified[t]++;
        }
    }
    return m;
}

namespace {

double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_of(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

MetricsReport report_from(const ConfusionMatrix& m) {
    MetricsReport report;
    for (std::size_t c = 0; c < 3; ++c) {
        double tp = static_cast<double>(m.counts[c][c]);
        double fp = 0.0, fn = static_cast<double>(m.unclassified[c]);
        for (std::size_t other = 0; other < 3; ++other) {
            if (other == c) continue;
            fp += static_cast<double>(m.counts[other][c]);
            fn += static_cast<double>(m.counts[c][other]);
        }
        ClassMetrics& cm = report.per_class[c];
        cm.precision = safe_ratio(tp, tp + fp);
        cm.recall = safe_ratio(tp, tp + fn);
        cm.f1 = f1_of(cm.precision, cm.recall);
    }
    report.not_yet_tested_avg_f1 = (report.per_class[1].f1 + report.per_class[2].f1) / 2.0;
    report.total_avg_f1 =
        (report.per_class[0].f1 + report.per_class[1].f1 + report.per_class[2].f1) / 3.0;
    return report;
}

}  // namespace

MetricsReport score(std::span<const Prediction> predictions) {
    if (predictions.empty()) throw InputError("cannot score an empty prediction list");
    return report_from(tally(predictions));
}

MetricsReport average_reports(std::span<const MetricsReport> reports) {
    if (reports.empty()) throw InputError("cannot average zero reports");
    MetricsReport avg;
    for (const auto& r : reports) {
        for (std::size_t c = 0; c < 3; ++c) {
            avg.per_class[c].precision += r.per_class[c].precision;
            avg.per_class[c].recall += r.per_class[c].recall;
            avg.per_class[c].f1 += r.per_class[c].f1;
        }
        avg.not_yet_tested_avg_f1 += r.not_yet_tested_avg_f1;
        avg.total_avg_f1 += r.total_avg_f1;
    }
    double n = static_cast<double>(reports.size());
    for (std::size_t c = 0; c < 3; ++c) {
        avg.per_class[c].precision /= n;
        avg.per_class[c].recall /= n;
        avg.per_class[c].f1 /= n;
    }
    avg.not_yet_tested_avg_f1 /= n;
    avg.total_avg_f1 /= n;
    avg.runs = static_cast<int>(reports.size());
    return avg;
}

MetricsReport random_baseline(std::array<std::size_t, 3> class_counts, int runs,
                              std::uint64_t seed) {
    if (runs < 1) throw ConfigError("random baseline needs at least one run");
    std::size_t total = class_counts[0] + class_counts[1] + class_counts[2];
    if (total == 0) throw InputError("random baseline needs a non-empty corpus");

    std::vector<ScenarioClass> truths;
    truths.reserve(total);
    for (std::size_t c = 0; c < 3; ++c) {
        truths.insert(truths.end(), class_counts[c], kAllClasses[c]);
    }

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> uniform(0, 2);
    std::vector<MetricsReport> reports;
    reports.reserve(static_cast<std::size_t>(runs));
    std::vector<Prediction> predictions(total);
    for (int run = 0; run < runs; ++run) {
        for (std::size_t i = 0; i < total; ++i) {
            predictions[i] = {truths[i], kAllClasses[static_cast<std::size_t>(uniform(rng))]};
        }
        reports.push_back(score(predictions));
    }
    return average_reports(reports);
}

std::vector<SweepRow> sweep(std::span<const double> temperatures, int repetitions,
                            const std::function<std::optional<double>(double, int)>& run_cell) {
    if (repetitions < 1) throw ConfigError("sweep needs at least one repetition");
    std::vector<SweepRow> rows;
    rows.reserve(temperatures.size());
    for (double temperature : temperatures) {
        std::vector<double> f1s;
        for (int rep = 0; rep < repetitions; ++rep) {
            if (auto f1 = run_cell(temperature, rep)) f1s.push_back(*f1);
        }
        SweepRow row;
        row.temperature = temperature;
        row.runs = static_cast<int>(f1s.size());
        if (!f1s.empty()) {
            double mean = 0.0;
            for (double x : f1s) mean += x;
            mean /= static_cast<double>(f1s.size());
            double var = 0.0;
            for (double x : f1s) var += (x - mean) * (x - mean);
            var /= static_cast<double>(f1s.size());
            row.mean_f1 = mean;
            row.stddev_f1 = std::sqrt(var);
        }
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Accounting
// ---------------------------------------------------------------------------

std::vector<AuditRecord> parse_audit_log(std::string_view text) {
    std::vector<AuditRecord> records;
    for (const auto& line : split_lines(text)) {
        if (line.empty()) continue;
        nlohmann::json rec = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (rec.is_discarded() || !rec.is_object()) continue;
        AuditRecord r;
        r.scenario_id = rec.value("scenario_id", "");
        r.model = rec.value("model", "");
        r.mode = rec.value("mode", "");
        r.rag = rec.value("rag", false);
        r.latency_ms = rec.value("latency_ms", 0.0);
        r.prompt_tokens = rec.value("prompt_tokens", std::size_t{0});
        r.completion_tokens = rec.value("completion_tokens", std::size_t{0});
        records.push_back(std::move(r));
    }
    return records;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    if (values.size() == 1) return values[0];
    double pos = p * static_cast<double>(values.size() - 1);
    auto lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

FiveNumberSummary five_number_summary(std::vector<double> values) {
    FiveNumberSummary s;
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    s.q1 = quantile(values, 0.25);
    s.median = quantile(values, 0.5);
    s.q3 = quantile(values, 0.75);
    return s;
}

std::vector<AccountingGroup> accounting(std::span<const AuditRecord> records) {
    struct PerScenario {
        double latency = 0.0;
        double prompt = 0.0;
        double completion = 0.0;
    };
    std::map<std::tuple<std::string, std::string, bool>, std::map<std::string, PerScenario>>
        groups;
    for (const auto& r : records) {
        PerScenario& s = groups[{r.model, r.mode, r.rag}][r.scenario_id];
        s.latency += r.latency_ms;
        s.prompt += static_cast<double>(r.prompt_tokens);
        s.completion += static_cast<double>(r.completion_tokens);
    }
    std::vector<AccountingGroup> out;
    for (const auto& [key, scenarios] : groups) {
        AccountingGroup g;
        g.model = std::get<0>(key);
        g.mode = std::get<1>(key);
        g.rag = std::get<2>(key);
        g.scenarios = scenarios.size();
        std::vector<double> latency, prompt, completion;
        for (const auto& [id, s] : scenarios) {
            latency.push_back(s.latency);
            prompt.push_back(s.prompt);
            completion.push_back(s.completion);
        }
        g.latency_ms = five_number_summary(std::move(latency));
        g.prompt_tokens = five_number_summary(std::move(prompt));
        g.completion_tokens = five_number_summary(std::move(completion));
        out.push_back(std::move(g));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string metrics_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << "label,metric,value\n";
    for (ScenarioClass c : kAllClasses) {
        const ClassMetrics& m = report.for_class(c);
        out << to_string(c) << ",precision," << fmt(m.precision) << '\n';
        out << to_string(c) << ",recall," << fmt(m.recall) << '\n';
        out << to_string(c) << ",f1," << fmt(m.f1) << '\n';
    }
    out << "not-yet-tested,avg_f1," << fmt(report.not_yet_tested_avg_f1) << '\n';
    out << "total,avg_f1," << fmt(report.total_avg_f1) << '\n';
    out << "total,runs," << report.runs << '\n';
    return out.str();
}

std::string metrics_table(const MetricsReport& report) {
    std::ostringstream out;
    char line[128];
    out << "class             precision  recall     f1\n";
    for (ScenarioClass c : kAllClasses) {
        const ClassMetrics& m = report.for_class(c);
        std::snprintf(line, sizeof(line), "%-17s %9.3f %7.3f %8.3f\n",
                      std::string(to_string(c)).c_str(), m.precision, m.recall, m.f1);
        out << line;
    }
    std::snprintf(line, sizeof(line), "not-yet-tested avg F1: %.3f\n",
                  report.not_yet_tested_avg_f1);
    out << line;
    std::snprintf(line, sizeof(line), "total avg F1:          %.3f (over %d run%s)\n",
                  report.total_avg_f1, report.runs, report.runs == 1 ? "" : "s");
    out << line;
    return out.str();
}

std::string sweep_csv(std::span<const SweepRow> rows) {
    std::ostringstream out;
    out << "temperature,mean_f1,stddev_f1,runs\n";
    for (const auto& row : rows) {
        out << fmt(row.temperature) << ',' << fmt(row.mean_f1) << ',' << fmt(row.stddev_f1)
            << ',' << row.runs << '\n';
    }
    return out.str();
}

std::string accounting_csv(std::span<const AccountingGroup> groups) {
    std::ostringstream out;
    out << "model,mode,rag,metric,min,q1,median,q3,max,scenarios\n";
    auto row = [&](const AccountingGroup& g, const char* metric, const FiveNumberSummary& s) {
        out << g.model << ',' << g.mode << ',' << (g.rag ? "true" : "false") << ',' << metric
            << ',' << fmt(s.min) << ',' << fmt(s.q1) << ',' << fmt(s.median) << ',' << fmt(s.q3)
            << ',' << fmt(s.max) << ',' << g.scenarios << '\n';
    };
    for (const auto& g : groups) {
        row(g, "latency_ms", g.latency_ms);
        row(g, "prompt_tokens", g.prompt_tokens);
        row(g, "completion_tokens", g.completion_tokens);
    }
    return out.str();
}

}  // namespace testsift

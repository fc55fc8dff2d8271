#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ctseg/gmm.hpp" // log_warn
#include "ctseg/mask.hpp"

namespace ctseg {

namespace detail {

inline size_t mask_intersection(const BinaryMask& a, const BinaryMask& b) {
    if (a.width != b.width || a.height != b.height)
        throw ParamError("metrics: mask dimension mismatch");
    size_t n = 0;
    for (size_t i = 0; i < a.data.size(); ++i) n += (a.data[i] && b.data[i]);
    return n;
}

} // namespace detail

// 2|P∩G| / (|P|+|G|); both masks empty counts as perfect agreement.
inline double dice(const BinaryMask& pred, const BinaryMask& gt) {
    const size_t inter = detail::mask_intersection(pred, gt);
    const size_t total = pred.count() + gt.count();
    if (total == 0) {
        log_warn("dice: both masks empty, reporting 1.0 by convention");
        return 1.0;
    }
    return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

inline double precision(const BinaryMask& pred, const BinaryMask& gt) {
    const size_t inter = detail::mask_intersection(pred, gt);
    const size_t p = pred.count();
    if (p == 0) {
        log_warn("precision: empty prediction, reporting 1.0 by convention");
        return 1.0;
    }
    return static_cast<double>(inter) / static_cast<double>(p);
}

inline double recall(const BinaryMask& pred, const BinaryMask& gt) {
    const size_t inter = detail::mask_intersection(pred, gt);
    const size_t g = gt.count();
    if (g == 0) {
        log_warn("recall: empty ground truth, reporting 1.0 by convention");
        return 1.0;
    }
    return static_cast<double>(inter) / static_cast<double>(g);
}

// 10*log10(1/MSE) with peak 1.0; identical images report +infinity.
inline double psnr(const GrayImage& a, const GrayImage& b) {
    if (a.width != b.width || a.height != b.height)
        throw ParamError("psnr: dimension mismatch");
    double mse = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

struct SegResult {
    std::string id;
    std::string category;
    double dice = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

struct AggregateRow {
    std::string group;
    size_t n = 0;
    double dice_mean = 0.0, dice_std = 0.0;
    double precision_mean = 0.0, precision_std = 0.0;
    double recall_mean = 0.0, recall_std = 0.0;
};

enum class GroupBy { All, Category };

namespace detail {

inline AggregateRow aggregate_one(const std::string& label, const std::vector<const SegResult*>& rs) {
    AggregateRow row;
    row.group = label;
    row.n = rs.size();
    auto stats = [&](auto field, double& mean, double& stddev) {
        double m = 0.0;
        for (const SegResult* r : rs) m += field(*r);
        m /= static_cast<double>(rs.size());
        double v = 0.0;
        for (const SegResult* r : rs) v += (field(*r) - m) * (field(*r) - m);
        v /= static_cast<double>(rs.size()); // population standard deviation
        mean = m;
        stddev = std::sqrt(v);
    };
    stats([](const SegResult& r) { return r.dice; }, row.dice_mean, row.dice_std);
    stats([](const SegResult& r) { return r.precision; }, row.precision_mean, row.precision_std);
    stats([](const SegResult& r) { return r.recall; }, row.recall_mean, row.recall_std);
    return row;
}

} // namespace detail

// Mean and population std per group, rows sorted by group label.
// GroupBy::All yields the single overall row.
inline std::vector<AggregateRow> aggregate(const std::vector<SegResult>& results, GroupBy group_by) {
    if (results.empty()) throw ParamError("aggregate: no results");
    std::vector<AggregateRow> rows;
    if (group_by == GroupBy::All) {
        std::vector<const SegResult*> all;
        for (const SegResult& r : results) all.push_back(&r);
        rows.push_back(detail::aggregate_one("all", all));
        return rows;
    }
    std::map<std::string, std::vector<const SegResult*>> groups;
    for (const SegResult& r : results) groups[r.category].push_back(&r);
    for (const auto& [label, rs] : groups) rows.push_back(detail::aggregate_one(label, rs));
    std::vector<const SegResult*> all;
    for (const SegResult& r : results) all.push_back(&r);
    rows.push_back(detail::aggregate_one("all", all));
    return rows;
}

// ---------------------------------------------------------------------------
// CSV I/O (6-decimal fixed, header rows)

inline void write_results_csv(const std::vector<SegResult>& results, const std::string& path) {
    std::ostringstream out;
    out << "id,category,dice,precision,recall\n";
    out.setf(std::ios::fixed);
    out.precision(6);
    for (const SegResult& r : results)
        out << r.id << "," << r.category << "," << r.dice << "," << r.precision << ","
            << r.recall << "\n";
    const std::string tmp = path + ".tmp";
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw IoError("results: cannot write " + tmp);
    f << out.str();
    f.close();
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("results: cannot rename " + tmp);
}

inline std::vector<SegResult> read_results_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("results: cannot open " + path);
    std::vector<SegResult> results;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("id,", 0) == 0) continue;
        }
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 5) throw FormatError("results: expected 5 fields in " + path);
        SegResult r;
        r.id = fields[0];
        r.category = fields[1];
        try {
            r.dice = std::stod(fields[2]);
            r.precision = std::stod(fields[3]);
            r.recall = std::stod(fields[4]);
        } catch (const std::exception&) {
            throw FormatError("results: unparsable metric in " + path);
        }
        results.push_back(std::move(r));
    }
    return results;
}

inline void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path) {
    std::ostringstream out;
    out << "group,n,dice_mean,dice_std,precision_mean,precision_std,recall_mean,recall_std\n";
    out.setf(std::ios::fixed);
    out.precision(6);
    for (const AggregateRow& r : rows)
        out << r.group << "," << r.n << "," << r.dice_mean << "," << r.dice_std << ","
            << r.precision_mean << "," << r.precision_std << "," << r.recall_mean << ","
            << r.recall_std << "\n";
    const std::string tmp = path + ".tmp";
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw IoError("aggregate: cannot write " + tmp);
    f << out.str();
    f.close();
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("aggregate: cannot rename " + tmp);
}

// ---------------------------------------------------------------------------
// run-to-run comparison (the first run is the baseline)

struct NamedRun {
    std::string name;
    std::vector<SegResult> results;
};

struct PairedDelta {
    std::string run;
    std::string id;
    double dice_delta;
    double precision_delta;
    double recall_delta;
};

struct PipelineReport {
    std::vector<AggregateRow> summary;        // one row per run, group = run name
    std::vector<PairedDelta> paired;          // per-id deltas vs the baseline
    std::map<std::string, double> mean_dice_delta; // per run vs baseline
};

inline PipelineReport compare_pipelines(const std::vector<NamedRun>& runs) {
    if (runs.size() < 2) throw ParamError("compare_pipelines: need at least two runs");
    std::map<std::string, const SegResult*> base;
    for (const SegResult& r : runs[0].results) base[r.id] = &r;
    for (const NamedRun& run : runs) {
        if (run.results.size() != base.size())
            throw ParamError("compare_pipelines: id set mismatch for run " + run.name);
        for (const SegResult& r : run.results)
            if (!base.contains(r.id))
                throw ParamError("compare_pipelines: id " + r.id + " missing from baseline");
    }

    PipelineReport report;
    for (const NamedRun& run : runs) {
        std::vector<const SegResult*> rs;
        for (const SegResult& r : run.results) rs.push_back(&r);
        AggregateRow row = detail::aggregate_one(run.name, rs);
        report.summary.push_back(row);

        double delta_sum = 0.0;
        for (const SegResult& r : run.results) {
            const SegResult& b = *base.at(r.id);
            report.paired.push_back({run.name, r.id, r.dice - b.dice, r.precision - b.precision,
                                     r.recall - b.recall});
            delta_sum += r.dice - b.dice;
        }
        report.mean_dice_delta[run.name] = delta_sum / static_cast<double>(run.results.size());
    }
    return report;
}

inline void write_report_csv(const PipelineReport& report, const std::string& path) {
    {
        std::ostringstream out;
        out << "run,n,recall_mean,recall_std,precision_mean,precision_std,dice_mean,dice_std,"
               "dice_delta_vs_baseline\n";
        out.setf(std::ios::fixed);
        out.precision(6);
        for (const AggregateRow& r : report.summary)
            out << r.group << "," << r.n << "," << r.recall_mean << "," << r.recall_std << ","
                << r.precision_mean << "," << r.precision_std << "," << r.dice_mean << ","
                << r.dice_std << "," << report.mean_dice_delta.at(r.group) << "\n";
        const std::string tmp = path + ".tmp";
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw IoError("report: cannot write " + tmp);
        f << out.str();
        f.close();
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        if (ec) throw IoError("report: cannot rename " + tmp);
    }
    {
        std::string paired_path = path;
        const size_t dot = paired_path.rfind('.');
        paired_path = (dot == std::string::npos ? paired_path : paired_path.substr(0, dot)) +
                      "_paired.csv";
        std::ostringstream out;
        out << "run,id,dice_delta,precision_delta,recall_delta\n";
        out.setf(std::ios::fixed);
        out.precision(6);
        for (const PairedDelta& d : report.paired)
            out << d.run << "," << d.id << "," << d.dice_delta << "," << d.precision_delta << ","
                << d.recall_delta << "\n";
        const std::string tmp = paired_path + ".tmp";
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw IoError("report: cannot write " + tmp);
        f << out.str();
        f.close();
        std::error_code ec;
        std::filesystem::rename(tmp, paired_path, ec);
        if (ec) throw IoError("report: cannot rename " + tmp);
    }
}

} // namespace ctseg

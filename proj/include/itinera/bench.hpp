#pragma once

// Corpus evaluation: validates every plan against its query, aggregates
// pass rates and correlates each constraint with final pass.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "itinera/core.hpp"
#include "itinera/json_io.hpp"
#include "itinera/kb.hpp"
#include "itinera/plan.hpp"
#include "itinera/slots.hpp"
#include "itinera/validator.hpp"

namespace itinera {

struct BenchItem {
    std::string id;
    IntentSlots slots;
    std::optional<Plan> plan;
    std::string problem;  // why the plan could not be read, if it could not
};

struct BenchResult {
    BenchmarkReport report;
    std::map<ConstraintId, Correlation> correlations;
    std::vector<PlanReport> plan_reports;
    std::vector<std::string> evaluated_ids;
};

inline BenchResult bench_run(const std::vector<BenchItem>& items, const KnowledgeBase& kb,
                             const ValidatorConfig& cfg = {}) {
    if (items.empty()) throw ArgumentError("empty corpus");
    BenchResult out;
    std::vector<std::string> diags;
    for (const auto& it : items) {
        if (!it.plan) {
            diags.push_back(it.id + ": " + (it.problem.empty() ? "no plan" : it.problem));
            continue;
        }
        if (it.plan->query_id != it.id) {
            diags.push_back(it.id + ": plan belongs to query '" + it.plan->query_id + "'");
            continue;
        }
        out.plan_reports.push_back(evaluate_plan(*it.plan, it.slots, kb, cfg));
        out.evaluated_ids.push_back(it.id);
    }
    if (out.plan_reports.empty()) throw ArgumentError("no item in the corpus could be evaluated");
    out.report = aggregate(out.plan_reports);
    out.report.skipped = static_cast<std::int64_t>(diags.size());
    out.report.diagnostics = std::move(diags);
    if (out.plan_reports.size() >= 2) out.correlations = correlate(out.plan_reports);
    else
        for (auto id : kAllConstraints) out.correlations[id] = {std::nullopt, "fewer than two observations"};
    return out;
}

inline Json to_json(const BenchResult& b) {
    Json j = to_json(b.report);
    Json corr = Json::object();
    for (const auto& [id, c] : b.correlations) corr[std::string(to_string(id))] = to_json(c);
    j["correlations"] = corr;
    return j;
}

namespace detail {

inline std::string fmt(double v, const char* f = "%.4f") {
    char buf[32];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace detail

// Human-readable summary: pass rates by category, then one row per
// constraint.
inline std::string bench_table(const BenchResult& b) {
    const auto& r = b.report;
    std::ostringstream os;
    os << "Plans evaluated: " << r.plans << "   skipped: " << r.skipped << "\n\n";
    os << "Commonsense micro  Commonsense macro  Preference micro  Preference macro  Final pass\n";
    auto pct = [](double v) { return detail::fmt(100 * v, "%.2f%%"); };
    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 1, ' '); };
    os << pad(pct(r.commonsense.micro), 19) << pad(pct(r.commonsense.macro), 19) << pad(pct(r.preference.micro), 18)
       << pad(pct(r.preference.macro), 18) << pct(r.final_pr) << "\n\n";
    os << pad("Constraint", 20) << pad("Category", 13) << pad("Pass rate", 11) << "Pearson r\n";
    for (auto id : kAllConstraints) {
        const auto& c = b.correlations.at(id);
        os << pad(std::string(to_string(id)), 20) << pad(std::string(to_string(category_of(id))), 13)
           << pad(pct(r.pass_rate(id)), 11) << (c.r ? detail::fmt(*c.r) : "undefined") << "\n";
    }
    return os.str();
}

inline std::string bench_csv(const BenchResult& b) {
    std::string out = "constraint,pass_rate,pearson_r\n";
    for (auto id : kAllConstraints) {
        const auto& c = b.correlations.at(id);
        out += std::string(to_string(id)) + "," + detail::fmt(b.report.pass_rate(id), "%.6f") + "," +
               (c.r ? detail::fmt(*c.r, "%.6f") : "") + "\n";
    }
    return out;
}

// Reads queries.jsonl and the matching plans/<id>.json files. Unreadable
// plans become skipped items; a malformed query line is a ParseError.
inline std::vector<BenchItem> load_bench_items(const std::filesystem::path& queries,
                                               const std::filesystem::path& plans_dir) {
    std::ifstream in(queries, std::ios::binary);
    if (!in) throw NotFoundError("cannot open " + queries.string());
    std::vector<BenchItem> items;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const Json j = parse_json(line);
        const JsonReader r(j, "/line" + std::to_string(lineno));
        BenchItem it;
        it.id = r.at("id").str();
        it.slots = slots_from_json(r.at("slots"));
        const auto path = plans_dir / (it.id + ".json");
        std::ifstream pf(path, std::ios::binary);
        if (!pf) {
            it.problem = "missing plan file " + path.filename().string();
        } else {
            std::stringstream ss;
            ss << pf.rdbuf();
            try {
                it.plan = parse_plan(ss.str());
            } catch (const Error& e) {
                it.problem = std::string("unreadable plan: ") + e.what();
            }
        }
        items.push_back(std::move(it));
    }
    return items;
}

}  // namespace itinera

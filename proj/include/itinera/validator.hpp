#pragma once

// Constraint checkers over (plan, slots, kb), per-plan reports and corpus
// statistics. Checkers never throw on a structurally valid plan: dangling
// references become diagnostics.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "itinera/core.hpp"
#include "itinera/json_io.hpp"
#include "itinera/kb.hpp"
#include "itinera/plan.hpp"
#include "itinera/slots.hpp"

namespace itinera {

enum class ConstraintId {
    CityCoverage,
    ActivityRepetition,
    TimeInterval,
    Accommodation,
    DailySchedule,
    ReturnJourney,
    PoiValidation,
    LocationLogic,
    ActivityCount,
    Budget,
    HotelType,
    RequiredSites,
    ExcludedSites,
};

inline constexpr std::size_t kConstraintCount = 13;
inline constexpr std::size_t kCommonsenseCount = 9;

inline constexpr std::array<std::string_view, kConstraintCount> kConstraintNames{
    "CityCoverage",  "ActivityRepetition", "TimeInterval", "Accommodation", "DailySchedule",
    "ReturnJourney", "PoiValidation",      "LocationLogic", "ActivityCount", "Budget",
    "HotelType",     "RequiredSites",      "ExcludedSites"};

inline constexpr std::array<ConstraintId, kConstraintCount> kAllConstraints{
    ConstraintId::CityCoverage,  ConstraintId::ActivityRepetition, ConstraintId::TimeInterval,
    ConstraintId::Accommodation, ConstraintId::DailySchedule,      ConstraintId::ReturnJourney,
    ConstraintId::PoiValidation, ConstraintId::LocationLogic,      ConstraintId::ActivityCount,
    ConstraintId::Budget,        ConstraintId::HotelType,          ConstraintId::RequiredSites,
    ConstraintId::ExcludedSites};

enum class ConstraintCategory { commonsense, preference };

inline std::string_view to_string(ConstraintId c) { return kConstraintNames[static_cast<std::size_t>(c)]; }

inline std::optional<ConstraintId> parse_constraint(std::string_view s) {
    for (std::size_t i = 0; i < kConstraintNames.size(); ++i)
        if (kConstraintNames[i] == s) return static_cast<ConstraintId>(i);
    return std::nullopt;
}

inline ConstraintCategory category_of(ConstraintId c) {
    return static_cast<std::size_t>(c) < kCommonsenseCount ? ConstraintCategory::commonsense
                                                           : ConstraintCategory::preference;
}

inline std::string_view to_string(ConstraintCategory c) {
    return c == ConstraintCategory::commonsense ? "commonsense" : "preference";
}

// day/activity are 0-based; -1 marks a plan-level (or day-level) finding.
struct Diagnostic {
    int day = -1;
    int activity = -1;
    std::string message;
    friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

struct ConstraintResult {
    ConstraintId id = ConstraintId::CityCoverage;
    bool passed = true;
    std::vector<Diagnostic> diagnostics;
    friend bool operator==(const ConstraintResult&, const ConstraintResult&) = default;
};

struct PlanReport {
    std::array<ConstraintResult, kConstraintCount> results;
    bool commonsense_pass = false;
    bool preference_pass = false;
    bool final_pass = false;

    const ConstraintResult& operator[](ConstraintId c) const { return results[static_cast<std::size_t>(c)]; }
    bool passed(ConstraintId c) const { return (*this)[c].passed; }
    int failures() const {
        int n = 0;
        for (const auto& r : results) n += !r.passed;
        return n;
    }
    std::vector<ConstraintId> failing() const {
        std::vector<ConstraintId> out;
        for (const auto& r : results)
            if (!r.passed) out.push_back(r.id);
        return out;
    }
    friend bool operator==(const PlanReport&, const PlanReport&) = default;
};

struct ValidatorConfig {
    Minutes min_gap = 30;
    int min_activities = 4;
    Minutes min_day_span = 8 * 60;
};

namespace detail {

class CheckContext {
public:
    CheckContext(const Plan& p, const IntentSlots& s, const KnowledgeBase& k, const ValidatorConfig& c)
        : plan(p), slots(s), kb(k), cfg(c) {}

    const Plan& plan;
    const IntentSlots& slots;
    const KnowledgeBase& kb;
    const ValidatorConfig& cfg;
    std::vector<Diagnostic> out;

    void flag(int day, int act, std::string msg) { out.push_back({day, act, std::move(msg)}); }

    const Poi* poi(const Activity& a) const {
        return a.kind == ActivityKind::transport ? nullptr : kb.find_poi(a.poi());
    }
    const TransportLink* link(const Activity& a) const {
        return a.kind == ActivityKind::transport ? kb.find_link(a.link()) : nullptr;
    }
};

inline bool counts_as_visit(const Activity& a) {
    return a.kind == ActivityKind::attraction || a.kind == ActivityKind::meal;
}

inline void check_city_coverage(CheckContext& c) {
    if (!c.slots.destination_cities) return;
    std::set<CityId> seen;
    for (const auto& day : c.plan.days)
        for (const auto& a : day.activities)
            if (counts_as_visit(a)) seen.insert(a.city_id);
    for (const auto& city : *c.slots.destination_cities)
        if (!seen.count(city)) c.flag(-1, -1, "destination " + city.str() + " is never visited");
}

inline void check_activity_repetition(CheckContext& c) {
    std::map<std::string, std::pair<int, int>> first_use;
    std::optional<std::pair<std::string, int>> prev_night;  // (hotel, day)
    for (int d = 0; d < static_cast<int>(c.plan.days.size()); ++d) {
        const auto& acts = c.plan.days[d].activities;
        for (int i = 0; i < static_cast<int>(acts.size()); ++i) {
            const auto& a = acts[i];
            if (counts_as_visit(a)) {
                auto [it, fresh] = first_use.emplace(a.ref, std::make_pair(d, i));
                if (!fresh)
                    c.flag(d, i, a.ref + " already used on day " + std::to_string(it->second.first + 1));
            } else if (a.is_lodging()) {
                const bool seen_before = first_use.count("lodging:" + a.ref) > 0;
                const bool continues = prev_night && prev_night->first == a.ref && prev_night->second == d - 1;
                if (seen_before && !continues) c.flag(d, i, "hotel " + a.ref + " revisited on a non-consecutive night");
                first_use.emplace("lodging:" + a.ref, std::make_pair(d, i));
                prev_night = std::make_pair(a.ref, d);
            }
        }
    }
}

inline void check_time_interval(CheckContext& c) {
    for (int d = 0; d < static_cast<int>(c.plan.days.size()); ++d) {
        const auto& acts = c.plan.days[d].activities;
        int prev = -1;
        for (int i = 0; i < static_cast<int>(acts.size()); ++i) {
            if (acts[i].is_lodging()) continue;
            if (prev >= 0) {
                const Minutes gap = acts[i].start - acts[prev].end;
                if (gap < c.cfg.min_gap)
                    c.flag(d, i,
                           "gap of " + std::to_string(gap) + " min after activity " + std::to_string(prev + 1));
            }
            prev = i;
        }
    }
}

inline void check_accommodation(CheckContext& c) {
    const int n = static_cast<int>(c.plan.days.size());
    for (int d = 0; d < n; ++d) {
        int nights = 0;
        for (const auto& a : c.plan.days[d].activities) nights += a.is_lodging();
        const int want = d + 1 < n ? 1 : 0;
        if (nights != want)
            c.flag(d, -1, std::to_string(nights) + " lodging entries, expected " + std::to_string(want));
    }
}

inline void check_daily_schedule(CheckContext& c) {
    for (int d = 0; d < static_cast<int>(c.plan.days.size()); ++d) {
        std::optional<Minutes> first, last;
        for (const auto& a : c.plan.days[d].activities) {
            if (a.is_lodging()) continue;
            first = first ? std::min(*first, a.start) : a.start;
            last = last ? std::max(*last, a.end) : a.end;
        }
        if (!first) {
            c.flag(d, -1, "no activities planned");
        } else if (*last - *first < c.cfg.min_day_span) {
            c.flag(d, -1, "day covers only " + std::to_string(*last - *first) + " min");
        }
    }
}

inline void check_return_journey(CheckContext& c) {
    if (!c.slots.departure_city) {
        c.flag(-1, -1, "departure city unknown");
        return;
    }
    if (c.plan.days.empty()) {
        c.flag(-1, -1, "plan has no days");
        return;
    }
    const int d = static_cast<int>(c.plan.days.size()) - 1;
    for (const auto& a : c.plan.days[d].activities)
        if (const auto* l = c.link(a); l && l->to_city == *c.slots.departure_city) return;
    c.flag(d, -1, "no return to " + c.slots.departure_city->str() + " on the final day");
}

inline void check_poi_validation(CheckContext& c) {
    for (int d = 0; d < static_cast<int>(c.plan.days.size()); ++d) {
        const auto& acts = c.plan.days[d].activities;
        for (int i = 0; i < static_cast<int>(acts.size()); ++i)
            if (!resolves(acts[i], c.kb))
                c.flag(d, i, std::string(to_string(acts[i].kind)) + " " + acts[i].ref + " not in knowledge base");
    }
}

inline void check_location_logic(CheckContext& c) {
    std::optional<CityId> current = c.slots.departure_city;
    for (int d = 0; d < static_cast<int>(c.plan.days.size()); ++d) {
        const auto& acts = c.plan.days[d].activities;
        for (int i = 0; i < static_cast<int>(acts.size()); ++i) {
            const auto& a = acts[i];
            if (a.kind == ActivityKind::transport) {
                const auto* l = c.link(a);
                if (!l) {
                    current = a.city_id;
                    continue;
                }
                if (current && l->from_city != *current)
                    c.flag(d, i, "leaves from " + l->from_city.str() + " while in " + current->str());
                if (a.city_id != l->to_city) c.flag(d, i, "arrival city does not match the link");
                current = l->to_city;
                continue;
            }
            const auto* p = c.poi(a);
            if (!current) current = p ? p->city_id : a.city_id;
            if (p && p->city_id != *current) c.flag(d, i, a.ref + " lies in " + p->city_id.str() + ", not " + current->str());
            if (a.city_id != *current) c.flag(d, i, "activity labelled " + a.city_id.str() + " while in " + current->str());
        }
    }
}

inline void check_activity_count(CheckContext& c) {
    for (int d = 0; d < static_cast<int>(c.plan.days.size()); ++d) {
        std::map<CityId, std::array<int, 5>> tally;  // breakfast, lunch, dinner, snack, total
        for (const auto& a : c.plan.days[d].activities) {
            if (!counts_as_visit(a)) continue;
            auto& t = tally[a.city_id];
            ++t[4];
            if (a.meal) ++t[static_cast<std::size_t>(*a.meal)];
        }
        for (const auto& [city, t] : tally) {
            const std::string where = " in " + city.str();
            if (t[4] < c.cfg.min_activities)
                c.flag(d, -1, std::to_string(t[4]) + " activities" + where);
            for (auto m : {MealSlot::breakfast, MealSlot::lunch, MealSlot::dinner}) {
                const int k = t[static_cast<std::size_t>(m)];
                if (k != 1) c.flag(d, -1, std::to_string(k) + " " + std::string(to_string(m)) + where);
            }
        }
    }
}

inline void check_budget(CheckContext& c) {
    if (!c.slots.budget_total) return;
    const Money total = tally_costs(c.plan).total;
    if (total > *c.slots.budget_total)
        c.flag(-1, -1, "total " + total.str() + " exceeds budget " + c.slots.budget_total->str());
}

inline void check_hotel_type(CheckContext& c) {
    const auto pref = c.slots.hotel();
    if (pref == HotelPreference::any) return;
    const HotelType want = pref == HotelPreference::chain ? HotelType::chain : HotelType::upscale;
    for (int d = 0; d < static_cast<int>(c.plan.days.size()); ++d) {
        const auto& acts = c.plan.days[d].activities;
        for (int i = 0; i < static_cast<int>(acts.size()); ++i) {
            if (!acts[i].is_lodging()) continue;
            const auto* p = c.poi(acts[i]);
            if (!p || !p->hotel) c.flag(d, i, "lodging " + acts[i].ref + " is not a known hotel");
            else if (p->hotel->hotel_type != want)
                c.flag(d, i, acts[i].ref + " is " + std::string(to_string(p->hotel->hotel_type)));
        }
    }
}

inline std::set<std::string> visited_attractions(const Plan& plan) {
    std::set<std::string> out;
    for (const auto& day : plan.days)
        for (const auto& a : day.activities)
            if (a.kind == ActivityKind::attraction) out.insert(a.ref);
    return out;
}

inline void check_required_sites(CheckContext& c) {
    if (!c.slots.required_sites) return;
    const auto seen = visited_attractions(c.plan);
    for (const auto& id : *c.slots.required_sites)
        if (!seen.count(id.str())) c.flag(-1, -1, "required site " + id.str() + " not visited");
}

inline void check_excluded_sites(CheckContext& c) {
    if (!c.slots.excluded_sites) return;
    for (int d = 0; d < static_cast<int>(c.plan.days.size()); ++d) {
        const auto& acts = c.plan.days[d].activities;
        for (int i = 0; i < static_cast<int>(acts.size()); ++i)
            if (acts[i].kind == ActivityKind::attraction && c.slots.excludes_site(acts[i].poi()))
                c.flag(d, i, "excluded site " + acts[i].ref + " visited");
    }
}

}  // namespace detail

inline ConstraintResult check(const Plan& plan, const IntentSlots& slots, const KnowledgeBase& kb, ConstraintId id,
                              const ValidatorConfig& cfg = {}) {
    detail::CheckContext c(plan, slots, kb, cfg);
    switch (id) {
        case ConstraintId::CityCoverage: detail::check_city_coverage(c); break;
        case ConstraintId::ActivityRepetition: detail::check_activity_repetition(c); break;
        case ConstraintId::TimeInterval: detail::check_time_interval(c); break;
        case ConstraintId::Accommodation: detail::check_accommodation(c); break;
        case ConstraintId::DailySchedule: detail::check_daily_schedule(c); break;
        case ConstraintId::ReturnJourney: detail::check_return_journey(c); break;
        case ConstraintId::PoiValidation: detail::check_poi_validation(c); break;
        case ConstraintId::LocationLogic: detail::check_location_logic(c); break;
        case ConstraintId::ActivityCount: detail::check_activity_count(c); break;
        case ConstraintId::Budget: detail::check_budget(c); break;
        case ConstraintId::HotelType: detail::check_hotel_type(c); break;
        case ConstraintId::RequiredSites: detail::check_required_sites(c); break;
        case ConstraintId::ExcludedSites: detail::check_excluded_sites(c); break;
    }
    return ConstraintResult{id, c.out.empty(), std::move(c.out)};
}

inline PlanReport evaluate_plan(const Plan& plan, const IntentSlots& slots, const KnowledgeBase& kb,
                                const ValidatorConfig& cfg = {}) {
    PlanReport r;
    r.commonsense_pass = r.preference_pass = true;
    for (auto id : kAllConstraints) {
        auto res = check(plan, slots, kb, id, cfg);
        bool& flag = category_of(id) == ConstraintCategory::commonsense ? r.commonsense_pass : r.preference_pass;
        flag = flag && res.passed;
        r.results[static_cast<std::size_t>(id)] = std::move(res);
    }
    r.final_pass = r.commonsense_pass && r.preference_pass;
    return r;
}

// ---------------------------------------------------------------------------
// Corpus statistics
// ---------------------------------------------------------------------------

struct CategoryRates {
    std::int64_t passed_checks = 0;
    std::int64_t total_checks = 0;
    std::int64_t plans_passing = 0;
    double micro = 0;
    double macro = 0;
    friend bool operator==(const CategoryRates&, const CategoryRates&) = default;
};

struct BenchmarkReport {
    std::int64_t plans = 0;
    CategoryRates commonsense;
    CategoryRates preference;
    std::int64_t final_passes = 0;
    double final_pr = 0;
    std::array<std::int64_t, kConstraintCount> pass_counts{};
    std::int64_t skipped = 0;  // items that could not be evaluated
    std::vector<std::string> diagnostics;

    double pass_rate(ConstraintId c) const {
        return plans ? static_cast<double>(pass_counts[static_cast<std::size_t>(c)]) / static_cast<double>(plans) : 0;
    }
    friend bool operator==(const BenchmarkReport&, const BenchmarkReport&) = default;
};

inline BenchmarkReport aggregate(const std::vector<PlanReport>& reports) {
    if (reports.empty()) throw ArgumentError("cannot aggregate an empty corpus");
    BenchmarkReport b;
    b.plans = static_cast<std::int64_t>(reports.size());
    for (const auto& r : reports) {
        for (auto id : kAllConstraints) {
            auto& cat = category_of(id) == ConstraintCategory::commonsense ? b.commonsense : b.preference;
            ++cat.total_checks;
            if (r.passed(id)) {
                ++cat.passed_checks;
                ++b.pass_counts[static_cast<std::size_t>(id)];
            }
        }
        b.commonsense.plans_passing += r.commonsense_pass;
        b.preference.plans_passing += r.preference_pass;
        b.final_passes += r.final_pass;
    }
    for (auto* cat : {&b.commonsense, &b.preference}) {
        cat->micro = static_cast<double>(cat->passed_checks) / static_cast<double>(cat->total_checks);
        cat->macro = static_cast<double>(cat->plans_passing) / static_cast<double>(b.plans);
    }
    b.final_pr = static_cast<double>(b.final_passes) / static_cast<double>(b.plans);
    return b;
}

struct Correlation {
    std::optional<double> r;
    std::string undefined_reason;  // set when r is empty
    friend bool operator==(const Correlation&, const Correlation&) = default;
};

// Pearson r of two 0/1 vectors from integer sums, so identical and
// complementary inputs give exactly +1 and -1.
inline Correlation pearson_binary(const std::vector<int>& x, const std::vector<int>& y) {
    if (x.size() != y.size()) throw ArgumentError("indicator vectors differ in length");
    if (x.size() < 2) return {std::nullopt, "fewer than two observations"};
    std::int64_t n = static_cast<std::int64_t>(x.size()), sx = 0, sy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if ((x[i] != 0 && x[i] != 1) || (y[i] != 0 && y[i] != 1)) throw ArgumentError("indicator values must be 0 or 1");
        sx += x[i];
        sy += y[i];
        sxy += x[i] * y[i];
    }
    const std::int64_t vx = n * sx - sx * sx;
    const std::int64_t vy = n * sy - sy * sy;
    if (vx == 0) return {std::nullopt, "constraint indicator is constant"};
    if (vy == 0) return {std::nullopt, "final-pass indicator is constant"};
    const std::int64_t cov = n * sxy - sx * sy;
    if (vx == vy) return {static_cast<double>(cov) / static_cast<double>(vx), {}};
    const double r = static_cast<double>(cov) / std::sqrt(static_cast<double>(vx) * static_cast<double>(vy));
    return {std::clamp(r, -1.0, 1.0), {}};
}

inline std::map<ConstraintId, Correlation> correlate(const std::vector<PlanReport>& reports) {
    if (reports.size() < 2) throw ArgumentError("correlation needs at least two reports");
    std::vector<int> fin;
    for (const auto& r : reports) fin.push_back(r.final_pass ? 1 : 0);
    std::map<ConstraintId, Correlation> out;
    for (auto id : kAllConstraints) {
        std::vector<int> x;
        for (const auto& r : reports) x.push_back(r.passed(id) ? 1 : 0);
        out[id] = pearson_binary(x, fin);
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline Json to_json(const Diagnostic& d) {
    return Json{{"day", d.day < 0 ? Json(nullptr) : Json(d.day)},
                {"activity", d.activity < 0 ? Json(nullptr) : Json(d.activity)},
                {"message", d.message}};
}

inline Json to_json(const ConstraintResult& r) {
    Json diags = Json::array();
    for (const auto& d : r.diagnostics) diags.push_back(to_json(d));
    return Json{{"id", to_string(r.id)},
                {"category", to_string(category_of(r.id))},
                {"passed", r.passed},
                {"diagnostics", diags}};
}

inline Json to_json(const PlanReport& r) {
    Json results = Json::array();
    for (const auto& c : r.results) results.push_back(to_json(c));
    return Json{{"results", results},
                {"commonsense_pass", r.commonsense_pass},
                {"preference_pass", r.preference_pass},
                {"final_pass", r.final_pass}};
}

inline Json to_json(const CategoryRates& c) {
    return Json{{"micro", c.micro},
                {"macro", c.macro},
                {"passed_checks", c.passed_checks},
                {"total_checks", c.total_checks},
                {"plans_passing", c.plans_passing}};
}

inline Json to_json(const Correlation& c) {
    if (c.r) return Json{{"r", *c.r}};
    return Json{{"r", nullptr}, {"undefined", c.undefined_reason}};
}

inline Json to_json(const BenchmarkReport& b) {
    Json counts = Json::object();
    for (auto id : kAllConstraints) counts[std::string(to_string(id))] = b.pass_counts[static_cast<std::size_t>(id)];
    return Json{{"plans", b.plans},
                {"commonsense", to_json(b.commonsense)},
                {"preference", to_json(b.preference)},
                {"final_passes", b.final_passes},
                {"final_pr", b.final_pr},
                {"pass_counts", counts},
                {"skipped", b.skipped},
                {"diagnostics", b.diagnostics}};
}

}  // namespace itinera

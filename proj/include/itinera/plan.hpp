#pragma once

// Itinerary data model shared by the planner, validator and service, plus
// its canonical JSON form. Money is integer fen throughout; party-level
// costs are fixed when an activity is created.

#include <array>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "itinera/core.hpp"
#include "itinera/json_io.hpp"
#include "itinera/kb.hpp"

namespace itinera {

enum class ActivityKind { transport, attraction, meal, lodging };
enum class MealSlot { breakfast, lunch, dinner, snack };

inline constexpr std::array<std::string_view, 4> kActivityKindNames{"transport", "attraction", "meal", "lodging"};
inline constexpr std::array<std::string_view, 4> kMealSlotNames{"breakfast", "lunch", "dinner", "snack"};

inline std::string_view to_string(ActivityKind k) { return kActivityKindNames[static_cast<std::size_t>(k)]; }
inline std::string_view to_string(MealSlot m) { return kMealSlotNames[static_cast<std::size_t>(m)]; }

inline std::optional<ActivityKind> parse_activity_kind(std::string_view s) {
    for (std::size_t i = 0; i < kActivityKindNames.size(); ++i)
        if (kActivityKindNames[i] == s) return static_cast<ActivityKind>(i);
    return std::nullopt;
}

inline std::optional<MealSlot> parse_meal_slot(std::string_view s) {
    for (std::size_t i = 0; i < kMealSlotNames.size(); ++i)
        if (kMealSlotNames[i] == s) return static_cast<MealSlot>(i);
    return std::nullopt;
}

struct Activity {
    ActivityKind kind = ActivityKind::attraction;
    std::optional<MealSlot> meal;  // present iff kind == meal
    std::string ref;               // POI id, or link id for transport
    CityId city_id;                // where it happens; destination for transport
    Minutes start = 0;
    Minutes end = 0;  // lodging: next-morning checkout, so end < start is allowed
    Money cost;       // whole party
    std::string detail;  // ticket label, room name or train number

    PoiId poi() const { return PoiId(ref); }
    LinkId link() const { return LinkId(ref); }
    bool is_lodging() const { return kind == ActivityKind::lodging; }
    bool is_meal(MealSlot m) const { return kind == ActivityKind::meal && meal == m; }

    friend bool operator==(const Activity&, const Activity&) = default;
};

struct DayPlan {
    Date date;
    std::vector<Activity> activities;
    friend bool operator==(const DayPlan&, const DayPlan&) = default;
};

struct Plan {
    std::string query_id;
    int party_size = 1;
    std::vector<DayPlan> days;
    friend bool operator==(const Plan&, const Plan&) = default;
};

struct CostLedger {
    Money transport;
    Money tickets;
    Money meals;
    Money lodging;
    Money total;
    friend bool operator==(const CostLedger&, const CostLedger&) = default;
};

// Partition of activity costs by kind; never throws.
inline CostLedger tally_costs(const Plan& plan) {
    CostLedger l;
    for (const auto& day : plan.days)
        for (const auto& a : day.activities) {
            switch (a.kind) {
                case ActivityKind::transport: l.transport += a.cost; break;
                case ActivityKind::attraction: l.tickets += a.cost; break;
                case ActivityKind::meal: l.meals += a.cost; break;
                case ActivityKind::lodging: l.lodging += a.cost; break;
            }
        }
    l.total = l.transport + l.tickets + l.meals + l.lodging;
    return l;
}

// True when the activity's reference names a KB entity of the right kind.
inline bool resolves(const Activity& a, const KnowledgeBase& kb) {
    if (a.kind == ActivityKind::transport) return kb.find_link(a.link()) != nullptr;
    const Poi* p = kb.find_poi(a.poi());
    if (!p) return false;
    switch (a.kind) {
        case ActivityKind::attraction: return p->kind == PoiKind::attraction;
        case ActivityKind::meal: return p->kind == PoiKind::restaurant;
        case ActivityKind::lodging: return p->kind == PoiKind::hotel;
        default: return false;
    }
}

inline CostLedger total_cost(const Plan& plan, const KnowledgeBase& kb) {
    for (std::size_t d = 0; d < plan.days.size(); ++d)
        for (std::size_t i = 0; i < plan.days[d].activities.size(); ++i) {
            const auto& a = plan.days[d].activities[i];
            if (!resolves(a, kb))
                throw ValidationError("day " + std::to_string(d + 1) + " activity " + std::to_string(i + 1) + " (" +
                                      std::string(to_string(a.kind)) + " " + a.ref + ") does not resolve");
        }
    return tally_costs(plan);
}

inline Json to_json(const CostLedger& l) {
    return Json{{"transport_fen", l.transport.fen}, {"tickets_fen", l.tickets.fen}, {"meals_fen", l.meals.fen},
                {"lodging_fen", l.lodging.fen},     {"total_fen", l.total.fen}};
}

// ---------------------------------------------------------------------------
// Canonical JSON
// ---------------------------------------------------------------------------

inline Json to_json(const Activity& a) {
    Json j{{"kind", to_string(a.kind)}, {"ref", a.ref},   {"city_id", a.city_id.str()}, {"start", a.start},
           {"end", a.end},              {"cost_fen", a.cost.fen}, {"detail", a.detail}};
    if (a.meal) j["meal"] = to_string(*a.meal);
    return j;
}

inline Json to_json(const Plan& p) {
    Json days = Json::array();
    for (const auto& d : p.days) {
        Json acts = Json::array();
        for (const auto& a : d.activities) acts.push_back(to_json(a));
        days.push_back(Json{{"date", d.date.str()}, {"activities", acts}});
    }
    return Json{{"query_id", p.query_id}, {"party_size", p.party_size}, {"days", days}};
}

inline Activity activity_from_json(const JsonReader& r) {
    Activity a;
    const auto kind = r.at("kind");
    auto k = parse_activity_kind(kind.str());
    if (!k) kind.fail("unknown activity kind");
    a.kind = *k;
    if (auto m = r.maybe("meal")) {
        auto slot = parse_meal_slot(m->str());
        if (!slot) m->fail("unknown meal slot");
        a.meal = slot;
    }
    if (a.kind == ActivityKind::meal && !a.meal) r.at("meal");
    if (a.kind != ActivityKind::meal && a.meal) r.at("meal").fail("meal slot on a non-meal activity");
    a.ref = r.at("ref").str();
    if (a.ref.empty()) r.at("ref").fail("empty reference");
    a.city_id = r.at("city_id").id<CityTag>();
    a.start = r.at("start").int32();
    a.end = r.at("end").int32();
    a.cost = r.at("cost_fen").fen();
    if (auto d = r.maybe("detail")) a.detail = d->str();

    if (a.start < 0 || a.start >= kMinutesPerDay) r.at("start").fail("time outside the day");
    if (a.end < 0 || a.end > kMinutesPerDay) r.at("end").fail("time outside the day");
    if (!a.is_lodging() && a.start >= a.end) r.at("end").fail("activity ends before it starts");
    if (a.cost < Money{}) r.at("cost_fen").fail("negative cost");
    return a;
}

inline Plan plan_from_json(const JsonReader& r) {
    Plan p;
    p.query_id = r.at("query_id").str();
    p.party_size = r.at("party_size").int32();
    if (p.party_size < 1) r.at("party_size").fail("party size must be positive");
    const auto days = r.at("days");
    const auto items = days.items();
    if (items.empty()) days.fail("plan has no days");
    for (const auto& dr : items) {
        DayPlan d;
        d.date = dr.at("date").date();
        if (!p.days.empty() && d.date <= p.days.back().date) dr.at("date").fail("days out of order");
        for (const auto& ar : dr.at("activities").items()) {
            Activity a = activity_from_json(ar);
            if (!d.activities.empty() && a.start < d.activities.back().start)
                ar.at("start").fail("activities out of order");
            d.activities.push_back(std::move(a));
        }
        p.days.push_back(std::move(d));
    }
    return p;
}

inline std::string serialize_plan(const Plan& p) { return canonical(to_json(p)); }

inline Plan parse_plan(std::string_view bytes) {
    const Json j = parse_json(bytes);
    return plan_from_json(JsonReader(j));
}

// Fixed-width timetable for terminals.
inline std::string render_plan(const Plan& p, const KnowledgeBase& kb) {
    std::ostringstream os;
    for (std::size_t d = 0; d < p.days.size(); ++d) {
        const auto& day = p.days[d];
        os << "Day " << d + 1 << "  " << day.date.str() << "\n";
        for (const auto& a : day.activities) {
            std::string name = a.ref;
            if (a.kind == ActivityKind::transport) {
                if (const auto* l = kb.find_link(a.link()))
                    name = l->number + " " + l->from_station + " -> " + l->to_station;
            } else if (const auto* poi = kb.find_poi(a.poi())) {
                name = poi->name;
            }
            std::string what = a.meal ? std::string(to_string(*a.meal)) : std::string(to_string(a.kind));
            os << "  " << format_hhmm(a.start) << "-" << format_hhmm(a.end) << "  " << what;
            os << std::string(what.size() < 11 ? 11 - what.size() : 1, ' ') << name;
            if (!a.detail.empty()) os << " [" << a.detail << "]";
            os << "  " << a.cost.str() << " CNY\n";
        }
    }
    const auto l = tally_costs(p);
    os << "Total " << l.total.str() << " CNY (transport " << l.transport.str() << ", tickets " << l.tickets.str()
       << ", meals " << l.meals.str() << ", lodging " << l.lodging.str() << ")\n";
    return os.str();
}

}  // namespace itinera

#pragma once

// Seeded generators for property tests: random slots, random plans and
// mutations of planner output. Every plan produced here is structurally
// valid (it would survive parse_plan), but may break any rule.

#include <algorithm>
#include <string>
#include <vector>

#include "itinera/itinera.hpp"

namespace gen {

using namespace itinera;

struct Pools {
    std::vector<std::string> attractions, restaurants, hotels, links;
    std::vector<CityId> cities;

    explicit Pools(const KnowledgeBase& kb) {
        for (const auto& [id, p] : kb.pois()) {
            auto& v = p.kind == PoiKind::attraction ? attractions : p.kind == PoiKind::restaurant ? restaurants : hotels;
            v.push_back(id.str());
        }
        for (const auto& [id, l] : kb.links()) links.push_back(id.str());
        for (const auto& [id, c] : kb.cities()) cities.push_back(id);
    }

    const std::vector<std::string>& of(ActivityKind k) const {
        switch (k) {
            case ActivityKind::transport: return links;
            case ActivityKind::attraction: return attractions;
            case ActivityKind::meal: return restaurants;
            case ActivityKind::lodging: return hotels;
        }
        return links;
    }
};

inline ActivityKind any_kind(Rng& r) { return static_cast<ActivityKind>(r.uniform(0, 3)); }

// Mostly a reference of the right kind; sometimes another kind's id or a
// name that resolves to nothing.
inline std::string any_ref(Rng& r, const Pools& p, ActivityKind k) {
    const double u = r.unit();
    if (u < 0.85) return r.pick(p.of(k));
    if (u < 0.95) return r.pick(p.of(any_kind(r)));
    return "ghost-" + std::to_string(r.uniform(0, 9));
}

inline CityId home_of(const Activity& a, const KnowledgeBase& kb) {
    if (a.kind == ActivityKind::transport) {
        if (const auto* l = kb.find_link(a.link())) return l->to_city;
    } else if (const auto* p = kb.find_poi(a.poi())) {
        return p->city_id;
    }
    return a.city_id;
}

inline void normalise(Activity& a) {
    a.start = std::clamp(a.start, 0, kMinutesPerDay - 1);
    a.end = std::clamp(a.end, 0, kMinutesPerDay);
    if (a.kind != ActivityKind::lodging && a.end <= a.start) a.end = std::min(kMinutesPerDay, a.start + 1 + (a.end % 7));
    if (a.kind != ActivityKind::lodging && a.end <= a.start) a.start = a.end - 1;
    if (a.kind == ActivityKind::meal && !a.meal) a.meal = MealSlot::lunch;
    if (a.kind != ActivityKind::meal) a.meal.reset();
    if (a.cost < Money{}) a.cost = Money{};
}

inline void normalise(Plan& p) {
    for (auto& d : p.days) {
        for (auto& a : d.activities) normalise(a);
        std::stable_sort(d.activities.begin(), d.activities.end(),
                         [](const Activity& x, const Activity& y) { return x.start < y.start; });
    }
}

inline Activity random_activity(Rng& r, const Pools& p, const KnowledgeBase& kb) {
    Activity a;
    a.kind = any_kind(r);
    a.ref = any_ref(r, p, a.kind);
    a.city_id = r.pick(p.cities);
    if (r.chance(0.7)) a.city_id = home_of(a, kb);
    if (a.kind == ActivityKind::meal) a.meal = static_cast<MealSlot>(r.uniform(0, 3));
    if (a.kind == ActivityKind::lodging) {
        a.start = static_cast<Minutes>(r.uniform(hhmm(19, 0), kMinutesPerDay - 1));
        a.end = static_cast<Minutes>(r.uniform(hhmm(6, 0), hhmm(9, 0)));
    } else {
        a.start = static_cast<Minutes>(r.uniform(hhmm(5, 0), hhmm(22, 0)));
        a.end = a.start + static_cast<Minutes>(r.uniform(5, 240));
    }
    a.cost = Money::from_fen(r.uniform(0, 80000));
    normalise(a);
    return a;
}

inline Plan random_plan(Rng& r, const Pools& p, const KnowledgeBase& kb) {
    Plan plan;
    plan.query_id = "fuzz";
    plan.party_size = static_cast<int>(r.uniform(1, 4));
    const int days = static_cast<int>(r.uniform(1, 4));
    for (int d = 0; d < days; ++d) {
        DayPlan day;
        day.date = Date(2024, 5, 1).plus_days(d);
        const int n = static_cast<int>(r.uniform(0, 10));
        for (int i = 0; i < n; ++i) day.activities.push_back(random_activity(r, p, kb));
        plan.days.push_back(std::move(day));
    }
    normalise(plan);
    return plan;
}

inline Activity* pick_activity(Rng& r, Plan& p) {
    std::vector<Activity*> all;
    for (auto& d : p.days)
        for (auto& a : d.activities) all.push_back(&a);
    return all.empty() ? nullptr : r.pick(all);
}

// Applies 1..4 small edits of the kinds a planner bug or a careless user
// edit would produce.
inline Plan mutate(Plan p, Rng& r, const Pools& pools, const KnowledgeBase& kb) {
    const int edits = static_cast<int>(r.uniform(1, 4));
    for (int e = 0; e < edits; ++e) {
        auto& day = p.days[static_cast<std::size_t>(r.uniform(0, static_cast<std::int64_t>(p.days.size()) - 1))];
        Activity* a = pick_activity(r, p);
        switch (r.uniform(0, 10)) {
            case 0:
                if (a) a->ref = any_ref(r, pools, a->kind);
                break;
            case 1:
                if (a) {
                    const auto shift = static_cast<Minutes>(r.uniform(-60, 60));
                    a->start += shift;
                    if (r.chance(0.5)) a->end += shift;
                }
                break;
            case 2:
                if (!day.activities.empty())
                    day.activities.erase(day.activities.begin() +
                                         r.uniform(0, static_cast<std::int64_t>(day.activities.size()) - 1));
                break;
            case 3:
                if (a) day.activities.push_back(*a);
                break;
            case 4:
                if (a) a->city_id = r.pick(pools.cities);
                break;
            case 5:
                if (a && a->kind == ActivityKind::meal) a->meal = static_cast<MealSlot>(r.uniform(0, 3));
                break;
            case 6: {
                auto it = std::find_if(day.activities.begin(), day.activities.end(),
                                       [](const Activity& x) { return x.is_lodging(); });
                if (it != day.activities.end()) {
                    day.activities.erase(it);
                } else {
                    Activity h;
                    h.kind = ActivityKind::lodging;
                    h.ref = r.pick(pools.hotels);
                    h.city_id = home_of(h, kb);
                    h.start = hhmm(22, 30);
                    h.end = hhmm(7, 0);
                    h.cost = Money::yuan(r.uniform(100, 900));
                    day.activities.push_back(h);
                }
                break;
            }
            case 7:
                if (a) a->cost = Money::from_fen(r.uniform(0, 500000));
                break;
            case 8:
                if (p.days.size() > 1) p.days.pop_back();
                break;
            case 9:
                if (a && a->kind == ActivityKind::attraction) {
                    a->kind = ActivityKind::meal;
                    a->meal = static_cast<MealSlot>(r.uniform(0, 2));
                } else if (a && a->kind == ActivityKind::meal) {
                    a->kind = ActivityKind::attraction;
                }
                break;
            default:
                day.activities.push_back(random_activity(r, pools, kb));
                break;
        }
    }
    normalise(p);
    return p;
}

inline std::vector<CityId> some_cities(Rng& r, const Pools& p, const CityId& not_this) {
    std::vector<CityId> pool;
    for (const auto& c : p.cities)
        if (!(c == not_this)) pool.push_back(c);
    r.shuffle(pool);
    const auto n = static_cast<std::size_t>(r.uniform(2, std::min<std::int64_t>(4, static_cast<std::int64_t>(pool.size()))));
    pool.resize(n);
    return pool;
}

inline std::set<PoiId> some_sites(Rng& r, const Pools& p, int max) {
    std::set<PoiId> out;
    const auto n = r.uniform(0, max);
    for (std::int64_t i = 0; i < n; ++i) out.insert(PoiId(r.chance(0.9) ? r.pick(p.attractions) : "ghost-site"));
    return out;
}

// Well-formed slots (check_slots accepts them) with a random fill pattern.
inline IntentSlots random_slots(Rng& r, const Pools& p) {
    IntentSlots s;
    const CityId dep = r.pick(p.cities);
    if (r.chance(0.9)) s.departure_city = dep;
    if (r.chance(0.85)) s.destination_cities = some_cities(r, p, dep);
    if (r.chance(0.85)) s.start_date = Date(2024, 5, 1);
    if (r.chance(0.85)) s.num_days = static_cast<int>(r.uniform(4, 6));
    if (r.chance(0.85)) s.party_size = static_cast<int>(r.uniform(1, 4));
    if (r.chance(0.85)) s.budget_total = Money::yuan(r.uniform(0, 12000));
    if (r.chance(0.85)) s.hotel_type = static_cast<HotelPreference>(r.uniform(0, 2));
    if (r.chance(0.85)) s.required_sites = some_sites(r, p, 3);
    if (r.chance(0.85)) s.excluded_sites = some_sites(r, p, 2);
    if (r.chance(0.85)) s.cuisine_prefs = std::vector<std::string>{};
    if (r.chance(0.85)) s.transport_pref = static_cast<TransportPreference>(r.uniform(0, 2));
    if (r.chance(0.85)) s.pace = static_cast<int>(r.uniform(1, 4));
    check_slots(s);
    return s;
}

// Perturbs one preference of otherwise matching slots.
inline IntentSlots nudge_slots(IntentSlots s, Rng& r, const Pools& p) {
    switch (r.uniform(0, 5)) {
        case 0: s.budget_total = Money::yuan(r.uniform(0, 12000)); break;
        case 1: s.hotel_type = static_cast<HotelPreference>(r.uniform(0, 2)); break;
        case 2: s.required_sites = some_sites(r, p, 3); break;
        case 3: s.excluded_sites = some_sites(r, p, 2); break;
        case 4: s.departure_city = r.pick(p.cities); break;
        default: s.destination_cities.reset(); break;
    }
    if (s.departure_city && s.destination_cities &&
        std::count(s.destination_cities->begin(), s.destination_cities->end(), *s.departure_city))
        s.destination_cities.reset();
    return s;
}

struct Pair {
    Plan plan;
    IntentSlots slots;
};

// Half planner output (as is, mutated, or under nudged slots), half random.
inline Pair fuzz_pair(Rng& r, const Pools& p, const KnowledgeBase& kb, const std::vector<Pair>& seeds) {
    if (!seeds.empty() && r.chance(0.5)) {
        const auto& s = r.pick(seeds);
        Pair out{s.plan, s.slots};
        if (r.chance(0.7)) out.plan = mutate(out.plan, r, p, kb);
        if (r.chance(0.3)) out.slots = nudge_slots(out.slots, r, p);
        return out;
    }
    return {random_plan(r, p, kb), random_slots(r, p)};
}

// A persona built around a plannable query: a random subset of slots
// stated up front, a few liked and disliked attractions and, sometimes,
// one scripted revision.
inline Persona random_persona(const KnowledgeBase& kb, std::uint64_t seed) {
    Rng r(seed);
    const auto q = sample_explicit_query(kb, seed, "persona");
    Persona p;
    p.values = q.slots;
    for (auto f : kAllSlots)
        if (r.chance(0.4)) p.reveal.push_back(f);
    r.shuffle(p.reveal);
    const Pools pools(kb);
    for (int i = 0; i < 3; ++i) {
        p.likes.insert(PoiId(r.pick(pools.attractions)));
        p.dislikes.insert(PoiId(r.pick(pools.attractions)));
    }
    for (const auto& id : p.likes) p.dislikes.erase(id);
    if (r.chance(0.5)) {
        const auto cat = static_cast<RevisionCategory>(r.uniform(0, 3));
        p.revisions.push_back(script_revision(q.plan, q.slots, kb, cat, r));
    }
    return p;
}

}  // namespace gen

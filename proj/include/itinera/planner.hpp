#pragma once

// Deterministic itinerary construction: city ordering and day split,
// attraction selection, transit choice, timetable rendering, a repair loop
// driven by the validator, and local plan revisions.

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "itinera/core.hpp"
#include "itinera/json_io.hpp"
#include "itinera/kb.hpp"
#include "itinera/plan.hpp"
#include "itinera/slots.hpp"
#include "itinera/validator.hpp"

namespace itinera {

struct RevisionInfeasibleError : InfeasibleError {
    using InfeasibleError::InfeasibleError;
};

struct SearchBudget {
    int max_candidates = 200;
    int beam_width = 4;
    int repair_rounds = 8;

    void check() const {
        if (max_candidates < 1 || beam_width < 1 || repair_rounds < 1)
            throw ArgumentError("search budget values must be positive");
    }
};

// Day template
inline constexpr Minutes kGap = 30;
inline constexpr Minutes kBreakfastFrom = hhmm(7, 30);
inline constexpr Minutes kLunchFrom = hhmm(11, 0);
inline constexpr Minutes kLunchBy = hhmm(13, 30);
inline constexpr Minutes kDinnerFrom = hhmm(17, 0);
inline constexpr Minutes kLatestAttractionEnd = hhmm(18, 30);
inline constexpr Minutes kCheckout = hhmm(7, 0);
inline constexpr Minutes kMorningEarliest = hhmm(6, 0);
inline constexpr Minutes kMorningLatestArrival = hhmm(10, 30);
inline constexpr Minutes kEveningReady = hhmm(19, 15);
inline constexpr Minutes kLastMinute = kMinutesPerDay - 1;

inline Minutes meal_minutes(MealSlot m) {
    switch (m) {
        case MealSlot::breakfast: return 45;
        case MealSlot::lunch: return 60;
        case MealSlot::dinner: return 75;
        case MealSlot::snack: return 30;
    }
    return 60;
}

inline Minutes meal_earliest(MealSlot m) {
    switch (m) {
        case MealSlot::breakfast: return kBreakfastFrom;
        case MealSlot::lunch: return kLunchFrom;
        case MealSlot::dinner: return kDinnerFrom;
        case MealSlot::snack: return 0;
    }
    return 0;
}

inline bool is_snack_bar(const Poi& p) { return std::find(p.tags.begin(), p.tags.end(), "snack") != p.tags.end(); }

inline bool link_usable(const TransportLink& l, TransportPreference pref) {
    if (l.day_offset != 0) return false;
    switch (pref) {
        case TransportPreference::high_speed_only: return l.mode == TransportMode::high_speed_rail;
        case TransportPreference::rail_any: return l.mode != TransportMode::transfer_chain;
        case TransportPreference::any: return true;
    }
    return false;
}

inline bool link_cheaper(const TransportLink* a, const TransportLink* b) {
    return std::tie(a->price, a->depart, a->id) < std::tie(b->price, b->depart, b->id);
}

// Cheapest usable same-day link departing at or after `earliest` and
// arriving by `latest`; ties by departure time then id.
inline const TransportLink* select_link(const KnowledgeBase& kb, const CityId& from, const CityId& to,
                                       Minutes earliest, Minutes latest, TransportPreference pref) {
    const TransportLink* best = nullptr;
    for (const auto* l : find_transport(kb, from, to, earliest)) {
        if (!link_usable(*l, pref) || l->arrive > latest) continue;
        if (!best || link_cheaper(l, best)) best = l;
    }
    return best;
}

inline std::optional<Money> leg_price(const KnowledgeBase& kb, const CityId& from, const CityId& to,
                                      TransportPreference pref) {
    std::optional<Money> best;
    for (const auto& id : kb.links_between(from, to)) {
        const auto& l = kb.link(id);
        if (link_usable(l, pref) && (!best || l.price < *best)) best = l.price;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Day allocation
// ---------------------------------------------------------------------------

struct CityStay {
    CityId city;
    Date first;
    int days = 1;
    Date last() const { return first.plus_days(days - 1); }
    friend bool operator==(const CityStay&, const CityStay&) = default;
};

struct Allocation {
    std::vector<CityStay> stays;
    std::vector<Date> move_dates;  // evening moves between consecutive stays
    Money leg_cost;                // cheapest usable price summed over every leg, home to home

    std::vector<CityId> order() const {
        std::vector<CityId> out;
        for (const auto& s : stays) out.push_back(s.city);
        return out;
    }
    friend bool operator==(const Allocation&, const Allocation&) = default;
};

struct RankedOrder {
    std::vector<CityId> order;
    Money cost;
};

inline void require_basics(const IntentSlots& s) {
    for (auto f : {SlotField::departure_city, SlotField::destination_cities, SlotField::start_date, SlotField::num_days})
        if (!s.filled(f)) throw ArgumentError("planning needs slot " + std::string(to_string(f)));
    check_slots(s);
}

// Price of visiting `order` from the departure city and back, or the first
// leg without a usable link.
inline std::variant<Money, std::string> order_cost(const std::vector<CityId>& order, const IntentSlots& s,
                                                   const KnowledgeBase& kb) {
    std::vector<CityId> path{*s.departure_city};
    path.insert(path.end(), order.begin(), order.end());
    path.push_back(*s.departure_city);
    Money total;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        auto p = leg_price(kb, path[i], path[i + 1], s.transport());
        if (!p) return path[i].str() + " -> " + path[i + 1].str();
        total += *p;
    }
    return total;
}

// Every feasible visiting order, cheapest first; ties broken by the city-id
// sequence.
inline std::vector<RankedOrder> rank_city_orders(const IntentSlots& s, const KnowledgeBase& kb) {
    require_basics(s);
    kb.city(*s.departure_city);
    std::vector<CityId> perm = *s.destination_cities;
    for (const auto& c : perm) kb.city(c);
    std::sort(perm.begin(), perm.end());
    std::vector<RankedOrder> out;
    std::vector<std::string> missing;
    do {
        auto c = order_cost(perm, s, kb);
        if (auto* m = std::get_if<Money>(&c)) out.push_back({perm, *m});
        else missing.push_back(std::get<std::string>(c));
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (out.empty()) throw InfeasibleError("no usable transport for leg " + missing.front());
    std::stable_sort(out.begin(), out.end(), [](const RankedOrder& a, const RankedOrder& b) { return a.cost < b.cost; });
    return out;
}

inline int attraction_supply(const CityId& city, const IntentSlots& s, const KnowledgeBase& kb) {
    int n = 0;
    for (const auto& id : kb.pois_in(city, PoiKind::attraction)) n += !s.excludes_site(id);
    return n;
}

// One day each, the rest split by largest remainder on attraction supply.
inline std::vector<int> split_days(const std::vector<CityId>& order, int num_days, const IntentSlots& s,
                                   const KnowledgeBase& kb) {
    const int n = static_cast<int>(order.size());
    const int extra = num_days - n;
    if (extra < 0) throw ArgumentError("fewer days than destination cities");
    std::vector<std::int64_t> supply;
    std::int64_t total = 0;
    for (const auto& c : order) {
        supply.push_back(attraction_supply(c, s, kb));
        total += supply.back();
    }
    std::vector<int> days(static_cast<std::size_t>(n), 1);
    if (extra == 0) return days;
    if (total == 0) {
        supply.assign(static_cast<std::size_t>(n), 1);
        total = n;
    }
    std::vector<std::pair<std::int64_t, std::size_t>> rem;
    int given = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::int64_t q = extra * supply[i];
        days[i] += static_cast<int>(q / total);
        given += static_cast<int>(q / total);
        rem.push_back({q % total, i});
    }
    std::sort(rem.begin(), rem.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return order[a.second] < order[b.second];
    });
    for (int k = 0; k < extra - given; ++k) ++days[rem[static_cast<std::size_t>(k)].second];
    return days;
}

inline Allocation make_allocation(const std::vector<CityId>& order, Money cost, const IntentSlots& s,
                                  const KnowledgeBase& kb) {
    Allocation a;
    a.leg_cost = cost;
    const auto days = split_days(order, *s.num_days, s, kb);
    Date cursor = *s.start_date;
    for (std::size_t i = 0; i < order.size(); ++i) {
        a.stays.push_back({order[i], cursor, days[i]});
        cursor = cursor.plus_days(days[i]);
        if (i + 1 < order.size()) a.move_dates.push_back(a.stays.back().last());
    }
    return a;
}

inline Allocation allocate_days(const IntentSlots& s, const KnowledgeBase& kb) {
    const auto ranked = rank_city_orders(s, kb);
    return make_allocation(ranked.front().order, ranked.front().cost, s, kb);
}

// ---------------------------------------------------------------------------
// Attraction planning
// ---------------------------------------------------------------------------

struct OutlineDay {
    Date date;
    CityId city;
    std::vector<PoiId> attractions;
    std::optional<LinkId> inbound;   // morning arrival from the departure city
    std::optional<LinkId> outbound;  // evening departure to the next city or home
    friend bool operator==(const OutlineDay&, const OutlineDay&) = default;
};

struct Outline {
    std::vector<OutlineDay> days;
    std::vector<std::string> notes;  // required sites that could not be placed
    friend bool operator==(const Outline&, const Outline&) = default;
};

inline constexpr double kRainPenalty = 6.0;

inline bool rain_on(const KnowledgeBase& kb, const CityId& city, Date d) {
    return weather_on(kb, city, d).condition == WeatherCondition::rain;
}

inline double attraction_score(const Poi& p, bool rainy) {
    return p.rating - (rainy && !p.indoor ? kRainPenalty : 0.0);
}

// Attractions per day: the arrival day loses one slot to the morning train.
inline int day_capacity(std::size_t day_index, const IntentSlots& s) {
    const int pace = s.attractions_per_day();
    return day_index == 0 ? std::max(1, pace - 1) : pace;
}

inline void order_attractions(std::vector<PoiId>& ids, const KnowledgeBase& kb) {
    std::sort(ids.begin(), ids.end(), [&](const PoiId& a, const PoiId& b) {
        return std::tie(kb.poi(a).open_window.open, a) < std::tie(kb.poi(b).open_window.open, b);
    });
}

// strict: unplaceable required sites throw; otherwise they are noted.
inline Outline plan_attractions(const Allocation& alloc, const IntentSlots& s, const KnowledgeBase& kb,
                                bool strict = true) {
    Outline o;
    for (const auto& st : alloc.stays)
        for (int k = 0; k < st.days; ++k) o.days.push_back({st.first.plus_days(k), st.city, {}, {}, {}});

    std::vector<bool> rainy;
    for (const auto& d : o.days) rainy.push_back(rain_on(kb, d.city, d.date));
    std::set<PoiId> used;

    auto fail = [&](const std::string& msg) {
        if (strict) throw InfeasibleError(msg);
        o.notes.push_back(msg);
    };

    if (s.required_sites) {
        for (const auto& id : *s.required_sites) {
            const Poi* p = kb.find_poi(id);
            if (!p || p->kind != PoiKind::attraction) {
                fail("required site " + id.str() + " is not a known attraction");
                continue;
            }
            if (s.excludes_site(id)) {
                fail("required site " + id.str() + " is also excluded");
                continue;
            }
            // Days with spare pace capacity first; a required site may
            // overflow the pace on the least-loaded day of its city.
            std::vector<std::size_t> candidates, city_days;
            for (std::size_t d = 0; d < o.days.size(); ++d) {
                if (o.days[d].city != p->city_id) continue;
                city_days.push_back(d);
                if (static_cast<int>(o.days[d].attractions.size()) < day_capacity(d, s)) candidates.push_back(d);
            }
            if (city_days.empty()) {
                fail("required site " + id.str() + " lies in " + p->city_id.str() + ", which is not visited");
                continue;
            }
            if (candidates.empty()) {
                const auto least = *std::min_element(city_days.begin(), city_days.end(), [&](std::size_t a, std::size_t b) {
                    return o.days[a].attractions.size() < o.days[b].attractions.size();
                });
                candidates.push_back(least);
            }
            std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
                const bool wet_a = rainy[a] && !p->indoor, wet_b = rainy[b] && !p->indoor;
                return std::tie(wet_a, o.days[a].date) < std::tie(wet_b, o.days[b].date);
            });
            o.days[candidates.front()].attractions.push_back(id);
            used.insert(id);
        }
    }

    // Rainy days take indoor sites first, dry days take the best of the
    // rest, and rainy days fill any remaining room last.
    auto fill = [&](std::size_t d, bool indoor_only) {
        auto& day = o.days[d];
        std::vector<const Poi*> pool;
        for (const auto& id : kb.pois_in(day.city, PoiKind::attraction))
            if (!used.count(id) && !s.excludes_site(id) && (!indoor_only || kb.poi(id).indoor))
                pool.push_back(&kb.poi(id));
        std::sort(pool.begin(), pool.end(), [&](const Poi* a, const Poi* b) {
            const double sa = attraction_score(*a, rainy[d]), sb = attraction_score(*b, rainy[d]);
            if (sa != sb) return sa > sb;
            return a->id < b->id;
        });
        for (const Poi* p : pool) {
            if (static_cast<int>(day.attractions.size()) >= day_capacity(d, s)) break;
            day.attractions.push_back(p->id);
            used.insert(p->id);
        }
    };
    for (std::size_t d = 0; d < o.days.size(); ++d)
        if (rainy[d]) fill(d, true);
    for (std::size_t d = 0; d < o.days.size(); ++d)
        if (!rainy[d]) fill(d, false);
    for (std::size_t d = 0; d < o.days.size(); ++d)
        if (rainy[d]) fill(d, false);
    for (auto& d : o.days) order_attractions(d.attractions, kb);
    return o;
}

// ---------------------------------------------------------------------------
// Transit arrangement
// ---------------------------------------------------------------------------

struct TransitLeg {
    CityId from;
    CityId to;
    Date date;
    Minutes earliest_depart = 0;
    Minutes latest_arrive = kLastMinute;
    LinkId link;
    Money price;
    friend bool operator==(const TransitLeg&, const TransitLeg&) = default;
};

struct Transit {
    std::vector<TransitLeg> legs;  // inbound, moves in order, return
    friend bool operator==(const Transit&, const Transit&) = default;
};

inline Transit arrange_transit(const Allocation& alloc, const IntentSlots& s, const KnowledgeBase& kb,
                               Minutes evening_ready = kEveningReady) {
    require_basics(s);
    Transit t;
    auto add = [&](const CityId& from, const CityId& to, Date date, Minutes earliest, Minutes latest) {
        const auto* l = select_link(kb, from, to, earliest, latest, s.transport());
        if (!l)
            throw InfeasibleError("no " + std::string(to_string(s.transport())) + " link from " + from.str() + " to " +
                                  to.str() + " on " + date.str() + " between " + format_hhmm(earliest) + " and " +
                                  format_hhmm(latest));
        t.legs.push_back({from, to, date, earliest, latest, l->id, l->price});
    };
    const auto& st = alloc.stays;
    add(*s.departure_city, st.front().city, st.front().first, kMorningEarliest, kMorningLatestArrival);
    for (std::size_t i = 0; i + 1 < st.size(); ++i)
        add(st[i].city, st[i + 1].city, st[i].last(), evening_ready, kLastMinute);
    add(st.back().city, *s.departure_city, st.back().last(), evening_ready, kLastMinute);
    return t;
}

inline void apply_transit(Outline& o, const Transit& t) {
    if (o.days.empty() || t.legs.size() < 2) throw ArgumentError("transit does not match outline");
    o.days.front().inbound = t.legs.front().link;
    std::size_t leg = 1;
    for (std::size_t d = 0; d < o.days.size(); ++d) {
        const bool last = d + 1 == o.days.size();
        if (last || o.days[d + 1].city != o.days[d].city) {
            if (leg >= t.legs.size()) throw ArgumentError("transit does not match outline");
            o.days[d].outbound = t.legs[leg++].link;
        }
    }
}

// ---------------------------------------------------------------------------
// Detailed rendering
// ---------------------------------------------------------------------------

struct DayChoice {
    Date date;
    CityId city;
    std::optional<LinkId> inbound;
    std::optional<LinkId> outbound;
    std::vector<PoiId> attractions;
    std::map<MealSlot, PoiId> meals;  // preferred restaurants; chosen at render when absent or unusable
    bool want_snack = false;
    friend bool operator==(const DayChoice&, const DayChoice&) = default;
};

struct Blueprint {
    std::vector<DayChoice> days;
    std::map<CityId, PoiId> hotels;  // one hotel per city stay
    friend bool operator==(const Blueprint&, const Blueprint&) = default;
};

inline int rooms_for(int party) { return (party + 1) / 2; }

inline const Room& cheapest_room(const Poi& hotel) {
    const Room* best = &hotel.hotel->rooms.front();
    for (const auto& r : hotel.hotel->rooms)
        if (r.nightly_price < best->nightly_price) best = &r;
    return *best;
}

inline Money night_cost(const Poi& hotel, int party) { return cheapest_room(hotel).nightly_price * rooms_for(party); }

inline bool hotel_matches(const Poi& h, HotelPreference pref) {
    if (pref == HotelPreference::any) return true;
    return h.hotel && h.hotel->hotel_type == (pref == HotelPreference::chain ? HotelType::chain : HotelType::upscale);
}

inline Activity make_transport(const TransportLink& l, int party) {
    Activity a;
    a.kind = ActivityKind::transport;
    a.ref = l.id.str();
    a.city_id = l.to_city;
    a.start = l.depart;
    a.end = l.arrive;
    a.cost = l.price * party;
    a.detail = l.number;
    return a;
}

inline Activity make_attraction(const Poi& p, Minutes start, int party) {
    Activity a;
    a.kind = ActivityKind::attraction;
    a.ref = p.id.str();
    a.city_id = p.city_id;
    a.start = start;
    a.end = start + p.attraction->visit_minutes;
    if (!p.attraction->tickets.empty()) {
        a.cost = p.attraction->tickets.front().price * party;
        a.detail = p.attraction->tickets.front().label;
    }
    return a;
}

inline Activity make_meal(const Poi& p, MealSlot slot, Minutes start, int party) {
    Activity a;
    a.kind = ActivityKind::meal;
    a.meal = slot;
    a.ref = p.id.str();
    a.city_id = p.city_id;
    a.start = start;
    a.end = start + meal_minutes(slot);
    a.cost = p.avg_cost * party;
    a.detail = p.tags.empty() ? "" : p.tags.front();
    return a;
}

inline Activity make_lodging(const Poi& h, Minutes start, int party) {
    Activity a;
    a.kind = ActivityKind::lodging;
    a.ref = h.id.str();
    a.city_id = h.city_id;
    a.start = start;
    a.end = kCheckout;
    a.cost = night_cost(h, party);
    a.detail = cheapest_room(h).room_name;
    return a;
}

// Hotels linked from the given attractions, nearest-first order discarded:
// ranked by nightly cost, then rating, then id.
inline std::vector<const Poi*> hotel_candidates(const KnowledgeBase& kb, const CityId& city,
                                                const std::vector<PoiId>& attractions, HotelPreference pref,
                                                bool whole_city) {
    std::set<PoiId> ids;
    if (whole_city) {
        for (const auto& id : kb.pois_in(city, PoiKind::hotel)) ids.insert(id);
    } else {
        for (const auto& a : attractions)
            if (const Poi* p = kb.find_poi(a); p && p->attraction)
                for (const auto& n : p->attraction->nearby_hotels) ids.insert(n.poi);
    }
    std::vector<const Poi*> out;
    for (const auto& id : ids) {
        const Poi* h = kb.find_poi(id);
        if (h && h->hotel && !h->hotel->rooms.empty() && h->city_id == city && hotel_matches(*h, pref)) out.push_back(h);
    }
    std::sort(out.begin(), out.end(), [](const Poi* a, const Poi* b) {
        const Money ca = cheapest_room(*a).nightly_price, cb = cheapest_room(*b).nightly_price;
        if (ca != cb) return ca < cb;
        if (a->rating != b->rating) return a->rating > b->rating;
        return a->id < b->id;
    });
    return out;
}

inline std::vector<PoiId> city_attractions(const Blueprint& bp, const CityId& city) {
    std::vector<PoiId> out;
    for (const auto& d : bp.days)
        if (d.city == city) out.insert(out.end(), d.attractions.begin(), d.attractions.end());
    return out;
}

// Hotel choice for every city slept in. relax_type drops the hotel-type
// filter when nothing suitable is linked (the repair loop swaps later).
inline Blueprint make_blueprint(const Outline& o, const IntentSlots& s, const KnowledgeBase& kb,
                                bool relax_type = false) {
    Blueprint bp;
    for (const auto& d : o.days) bp.days.push_back({d.date, d.city, d.inbound, d.outbound, d.attractions, {}, false});
    for (std::size_t d = 0; d + 1 < bp.days.size(); ++d) {
        const CityId& city = bp.days[d + 1].city;
        if (bp.hotels.count(city)) continue;
        const auto near = city_attractions(bp, city);
        auto pick = hotel_candidates(kb, city, near, s.hotel(), near.empty());
        if (pick.empty() && relax_type) pick = hotel_candidates(kb, city, near, HotelPreference::any, near.empty());
        if (pick.empty() && relax_type) pick = hotel_candidates(kb, city, near, HotelPreference::any, true);
        if (pick.empty())
            throw InfeasibleError("no " + std::string(to_string(s.hotel())) + " hotel near chosen attractions in " +
                                  kb.city(city).name);
        bp.hotels[city] = pick.front()->id;
    }
    return bp;
}

class Renderer {
public:
    Renderer(const KnowledgeBase& kb, const IntentSlots& s) : kb_(kb), s_(s), party_(s.party()) {}

    // Renders every day in order, writing back the restaurants, links and
    // attractions actually used.
    Plan render(Blueprint& bp, const std::string& query_id = "") const {
        Plan p;
        p.query_id = query_id;
        p.party_size = party_;
        for (std::size_t d = 0; d < bp.days.size(); ++d) p.days.push_back(render_day(bp, d));
        return p;
    }

    DayPlan render_day(Blueprint& bp, std::size_t d) const {
        DayChoice& c = bp.days[d];
        std::set<PoiId> taken;
        for (std::size_t o = 0; o < bp.days.size(); ++o)
            if (o != d)
                for (const auto& [slot, id] : bp.days[o].meals) taken.insert(id);

        const Poi* prev_hotel = nullptr;
        if (d > 0) {
            auto it = bp.hotels.find(c.city);
            if (it != bp.hotels.end()) prev_hotel = kb_.find_poi(it->second);
        }
        const Poi* tonight = nullptr;
        if (d + 1 < bp.days.size()) tonight = &kb_.poi(bp.hotels.at(bp.days[d + 1].city));

        // Required sites must fit until no optional attraction is left to
        // drop; after that they may be skipped too.
        bool keep_required = true;
        while (true) {
            auto out = try_day(c, taken, prev_hotel, tonight, keep_required);
            if (out) return DayPlan{c.date, std::move(*out)};
            auto victim = c.attractions.end();
            for (auto it = c.attractions.rbegin(); it != c.attractions.rend(); ++it)
                if (!s_.requires_site(*it)) {
                    victim = std::next(it).base();
                    break;
                }
            if (victim != c.attractions.end()) {
                c.attractions.erase(victim);
                continue;
            }
            if (keep_required) {
                keep_required = false;
                continue;
            }
            if (c.attractions.empty())
                throw InfeasibleError("cannot fit the evening departure on " + c.date.str());
            c.attractions.pop_back();
        }
    }

private:
    struct Cursor {
        Minutes t = 0;
        std::vector<Activity> acts;
        void push(Activity a) {
            t = a.end + kGap;
            acts.push_back(std::move(a));
        }
    };

    std::optional<Activity> try_meal(const Poi& r, MealSlot slot, Minutes from, const std::set<PoiId>& taken) const {
        if (r.kind != PoiKind::restaurant || taken.count(r.id)) return std::nullopt;
        if ((slot == MealSlot::snack) != is_snack_bar(r)) return std::nullopt;
        const Minutes start = std::max({from, meal_earliest(slot), r.open_window.open});
        if (!r.open_window.covers(start, start + meal_minutes(slot))) return std::nullopt;
        return make_meal(r, slot, start, party_);
    }

    bool cuisine_ok(const Poi& r, MealSlot slot) const {
        if (!s_.cuisine_prefs || s_.cuisine_prefs->empty()) return true;
        if (slot != MealSlot::lunch && slot != MealSlot::dinner) return true;
        for (const auto& t : r.tags)
            if (std::find(s_.cuisine_prefs->begin(), s_.cuisine_prefs->end(), t) != s_.cuisine_prefs->end()) return true;
        return false;
    }

    std::optional<Activity> choose_meal(const DayChoice& c, MealSlot slot, Minutes from, const Poi* anchor_attraction,
                                        GeoPoint anchor, const std::set<PoiId>& taken) const {
        if (auto it = c.meals.find(slot); it != c.meals.end())
            if (const Poi* r = kb_.find_poi(it->second); r && r->city_id == c.city)
                if (auto a = try_meal(*r, slot, from, taken)) return a;

        std::vector<const Poi*> near;
        if (anchor_attraction)
            for (const auto& n : anchor_attraction->attraction->nearby_restaurants)
                if (const Poi* r = kb_.find_poi(n.poi); r && r->city_id == c.city) near.push_back(r);
        std::vector<std::pair<double, const Poi*>> wide;
        for (const auto& id : kb_.pois_in(c.city, PoiKind::restaurant)) {
            const Poi& r = kb_.poi(id);
            wide.push_back({round_km(haversine_km(anchor, r.coords)), &r});
        }
        std::sort(wide.begin(), wide.end(), [](const auto& a, const auto& b) {
            return std::tie(a.first, a.second->id) < std::tie(b.first, b.second->id);
        });
        for (int pass = 0; pass < 4; ++pass) {
            const bool want_cuisine = pass % 2 == 0;
            auto consider = [&](const Poi* r) -> std::optional<Activity> {
                if (want_cuisine && !cuisine_ok(*r, slot)) return std::nullopt;
                return try_meal(*r, slot, from, taken);
            };
            if (pass < 2) {
                for (const Poi* r : near)
                    if (auto a = consider(r)) return a;
            } else {
                for (const auto& [dist, r] : wide)
                    if (auto a = consider(r)) return a;
            }
        }
        return std::nullopt;
    }

    std::optional<std::vector<Activity>> try_day(DayChoice& c, const std::set<PoiId>& taken_other,
                                                 const Poi* prev_hotel, const Poi* tonight,
                                                 bool keep_required = false) const {
        std::set<PoiId> taken = taken_other;
        Cursor cur;
        cur.t = kBreakfastFrom;
        std::map<MealSlot, PoiId> chosen;

        auto meal = [&](MealSlot slot, const Poi* anchor_attraction, GeoPoint anchor) {
            auto a = choose_meal(c, slot, cur.t, anchor_attraction, anchor, taken);
            if (!a) {
                if (slot == MealSlot::snack) return;
                throw InfeasibleError("no open restaurant for " + std::string(to_string(slot)) + " in " +
                                      kb_.city(c.city).name + " on " + c.date.str());
            }
            taken.insert(a->poi());
            chosen[slot] = a->poi();
            cur.push(std::move(*a));
        };

        if (c.inbound) {
            const auto& l = kb_.link(*c.inbound);
            cur.t = l.depart;
            cur.push(make_transport(l, party_));
        }

        std::vector<const Poi*> attractions;
        for (const auto& id : c.attractions) attractions.push_back(&kb_.poi(id));
        const GeoPoint centre = kb_.city(c.city).coords;

        {
            const Poi* anchor_attr = prev_hotel ? nullptr : (attractions.empty() ? nullptr : attractions.front());
            const GeoPoint at = prev_hotel ? prev_hotel->coords : anchor_attr ? anchor_attr->coords : centre;
            meal(MealSlot::breakfast, anchor_attr, at);
        }

        bool lunch = false;
        const Poi* last_attr = nullptr;
        std::vector<PoiId> placed;
        for (const Poi* p : attractions) {
            const Minutes visit = p->attraction->visit_minutes;
            if (!lunch && (cur.t >= kLunchFrom || std::max(cur.t, p->open_window.open) + visit > kLunchBy)) {
                const Poi* anchor = last_attr ? last_attr : p;
                meal(MealSlot::lunch, anchor, anchor->coords);
                lunch = true;
            }
            const Minutes start = std::max(cur.t, p->open_window.open);
            if (start + visit > std::min(p->open_window.close, kLatestAttractionEnd)) {
                if (keep_required && s_.requires_site(p->id)) return std::nullopt;
                continue;
            }
            cur.push(make_attraction(*p, start, party_));
            placed.push_back(p->id);
            last_attr = p;
        }
        const Poi* anchor = last_attr ? last_attr : (attractions.empty() ? nullptr : attractions.front());
        const GeoPoint anchor_pt = anchor ? anchor->coords : centre;
        if (!lunch) meal(MealSlot::lunch, anchor, anchor_pt);
        if (c.want_snack || placed.empty()) meal(MealSlot::snack, anchor, anchor_pt);
        meal(MealSlot::dinner, anchor, anchor_pt);

        std::optional<LinkId> outbound = c.outbound;
        if (outbound) {
            const TransportLink* l = &kb_.link(*outbound);
            if (l->depart < cur.t) {
                l = select_link(kb_, l->from_city, l->to_city, cur.t, kLastMinute, s_.transport());
                if (!l) return std::nullopt;
                outbound = l->id;
            }
            cur.push(make_transport(*l, party_));
        }
        if (tonight) {
            const Minutes start = std::min(cur.acts.back().end + kGap, kLastMinute);
            cur.acts.push_back(make_lodging(*tonight, start, party_));
        }
        c.outbound = outbound;
        c.attractions = placed;
        c.meals = chosen;
        return std::move(cur.acts);
    }

    const KnowledgeBase& kb_;
    const IntentSlots& s_;
    int party_;
};

inline Plan detail_plan(const Outline& o, const IntentSlots& s, const KnowledgeBase& kb,
                        const std::string& query_id = "", bool relax_hotel_type = false) {
    Blueprint bp = make_blueprint(o, s, kb, relax_hotel_type);
    return Renderer(kb, s).render(bp, query_id);
}

// ---------------------------------------------------------------------------
// Re-timing and cost cutting on finished plans
// ---------------------------------------------------------------------------

// Recomputes start/end times of one day in its current order using the
// rendering rules; transport keeps its timetable. False when something no
// longer fits.
inline bool retime_day(DayPlan& day, const KnowledgeBase& kb) {
    std::optional<Minutes> prev_end;
    for (auto& a : day.activities) {
        const Minutes from = prev_end ? *prev_end + kGap : 0;
        switch (a.kind) {
            case ActivityKind::transport: {
                const auto* l = kb.find_link(a.link());
                if (!l) return false;
                a.start = l->depart;
                a.end = l->arrive;
                if (prev_end && a.start < from) return false;
                break;
            }
            case ActivityKind::lodging:
                a.start = std::min(prev_end ? from : 0, kLastMinute);
                break;
            case ActivityKind::meal: {
                const Poi* r = kb.find_poi(a.poi());
                if (!r || !a.meal) return false;
                a.start = std::max({from, meal_earliest(*a.meal), r->open_window.open});
                a.end = a.start + meal_minutes(*a.meal);
                if (!r->open_window.covers(a.start, a.end)) return false;
                break;
            }
            case ActivityKind::attraction: {
                const Poi* p = kb.find_poi(a.poi());
                if (!p || !p->attraction) return false;
                a.start = std::max(from, p->open_window.open);
                a.end = a.start + p->attraction->visit_minutes;
                if (a.end > std::min(p->open_window.close, kLatestAttractionEnd)) return false;
                break;
            }
        }
        if (a.kind != ActivityKind::lodging) prev_end = a.end;
    }
    return true;
}

inline std::set<std::string> used_refs(const Plan& p, ActivityKind kind) {
    std::set<std::string> out;
    for (const auto& d : p.days)
        for (const auto& a : d.activities)
            if (a.kind == kind) out.insert(a.ref);
    return out;
}

// Same-leg alternatives for the transport activity at (d, i) that keep the
// day feasible, each paired with the day it would produce.
inline std::vector<std::pair<const TransportLink*, DayPlan>> link_alternatives(const Plan& plan, std::size_t d,
                                                                               std::size_t i, const IntentSlots& s,
                                                                               const KnowledgeBase& kb) {
    std::vector<std::pair<const TransportLink*, DayPlan>> out;
    const auto& act = plan.days[d].activities[i];
    const auto* cur = kb.find_link(act.link());
    if (!cur) return out;
    for (const auto& id : kb.links_between(cur->from_city, cur->to_city)) {
        const auto& l = kb.link(id);
        if (l.id == cur->id || !link_usable(l, s.transport())) continue;
        DayPlan day = plan.days[d];
        day.activities[i] = make_transport(l, plan.party_size);
        if (!retime_day(day, kb)) continue;
        out.push_back({&l, std::move(day)});
    }
    return out;
}

// Restaurants that could replace the meal at (d, i) without moving it.
inline std::vector<const Poi*> meal_alternatives(const Plan& plan, std::size_t d, std::size_t i,
                                                 const std::vector<const Poi*>& pool) {
    const auto& a = plan.days[d].activities[i];
    const auto taken = used_refs(plan, ActivityKind::meal);
    std::vector<const Poi*> out;
    for (const Poi* r : pool) {
        if (r->kind != PoiKind::restaurant || r->city_id != a.city_id || taken.count(r->id.str())) continue;
        if ((a.meal == MealSlot::snack) != is_snack_bar(*r)) continue;
        if (!r->open_window.covers(a.start, a.end)) continue;
        out.push_back(r);
    }
    return out;
}

inline std::vector<const Poi*> city_pool(const KnowledgeBase& kb, const CityId& city, PoiKind kind) {
    std::vector<const Poi*> out;
    for (const auto& id : kb.pois_in(city, kind)) out.push_back(&kb.poi(id));
    return out;
}

// Lodging runs: consecutive nights at one hotel.
struct Stay {
    std::string hotel;
    std::vector<std::pair<std::size_t, std::size_t>> nights;  // (day, activity)
};

inline std::vector<Stay> lodging_stays(const Plan& p) {
    std::vector<Stay> out;
    std::optional<std::size_t> prev_day;
    for (std::size_t d = 0; d < p.days.size(); ++d)
        for (std::size_t i = 0; i < p.days[d].activities.size(); ++i) {
            const auto& a = p.days[d].activities[i];
            if (!a.is_lodging()) continue;
            if (out.empty() || out.back().hotel != a.ref || !prev_day || *prev_day + 1 != d) out.push_back({a.ref, {}});
            out.back().nights.push_back({d, i});
            prev_day = d;
        }
    return out;
}

// Greedy largest-saving swaps of hotels, restaurants and links until the
// total fits `target`. Returns true when it does.
inline bool cut_costs(Plan& plan, const IntentSlots& s, const KnowledgeBase& kb, Money target) {
    for (int step = 0; step < 500; ++step) {
        if (tally_costs(plan).total <= target) return true;
        Money best_saving;
        std::function<void(Plan&)> best_edit;
        auto offer = [&](Money saving, std::function<void(Plan&)> edit) {
            if (saving > best_saving) {
                best_saving = saving;
                best_edit = std::move(edit);
            }
        };

        const auto stays = lodging_stays(plan);
        std::set<std::string> hotels_in_use;
        for (const auto& st : stays) hotels_in_use.insert(st.hotel);
        for (const auto& st : stays) {
            const auto& first = plan.days[st.nights.front().first].activities[st.nights.front().second];
            Money old_cost;
            for (auto [d, i] : st.nights) old_cost += plan.days[d].activities[i].cost;
            for (const Poi* h : hotel_candidates(kb, first.city_id, {}, s.hotel(), true)) {
                if (hotels_in_use.count(h->id.str())) continue;
                const Money new_cost = night_cost(*h, plan.party_size) * static_cast<std::int64_t>(st.nights.size());
                offer(old_cost - new_cost, [st, h](Plan& p) {
                    for (auto [d, i] : st.nights) {
                        auto& a = p.days[d].activities[i];
                        a = make_lodging(*h, a.start, p.party_size);
                    }
                });
                break;  // candidates are cheapest first
            }
        }

        for (std::size_t d = 0; d < plan.days.size(); ++d)
            for (std::size_t i = 0; i < plan.days[d].activities.size(); ++i) {
                const auto& a = plan.days[d].activities[i];
                if (a.kind == ActivityKind::meal) {
                    const Poi* cheapest = nullptr;
                    for (const Poi* r : meal_alternatives(plan, d, i, city_pool(kb, a.city_id, PoiKind::restaurant)))
                        if (!cheapest || std::tie(r->avg_cost, r->id) < std::tie(cheapest->avg_cost, cheapest->id))
                            cheapest = r;
                    if (cheapest)
                        offer(a.cost - cheapest->avg_cost * plan.party_size, [d, i, cheapest](Plan& p) {
                            auto& m = p.days[d].activities[i];
                            m = make_meal(*cheapest, *m.meal, m.start, p.party_size);
                        });
                } else if (a.kind == ActivityKind::transport) {
                    auto alts = link_alternatives(plan, d, i, s, kb);
                    const std::pair<const TransportLink*, DayPlan>* cheapest = nullptr;
                    for (const auto& alt : alts)
                        if (!cheapest || link_cheaper(alt.first, cheapest->first)) cheapest = &alt;
                    if (cheapest)
                        offer(a.cost - cheapest->first->price * plan.party_size,
                              [d, day = cheapest->second](Plan& p) { p.days[d] = day; });
                }
            }
        if (!best_edit) return false;
        best_edit(plan);
    }
    return tally_costs(plan).total <= target;
}

// ---------------------------------------------------------------------------
// Plan generation
// ---------------------------------------------------------------------------

struct PlanResult {
    Plan plan;
    PlanReport report;
    std::vector<std::string> notes;
    int candidates = 0;
};

namespace detail {

struct Scored {
    Plan plan;
    PlanReport report;
    Money cost;
    Blueprint bp;
};

inline bool better(const Scored& a, const Scored& b) {
    if (a.report.final_pass != b.report.final_pass) return a.report.final_pass;
    if (a.report.failures() != b.report.failures()) return a.report.failures() < b.report.failures();
    return a.cost < b.cost;
}

inline bool day_has_count_failure(const PlanReport& r, std::size_t day) {
    for (auto id : {ConstraintId::ActivityCount, ConstraintId::TimeInterval, ConstraintId::DailySchedule})
        for (const auto& dg : r[id].diagnostics)
            if (dg.day == static_cast<int>(day)) return true;
    return false;
}

// Targeted blueprint edits, one constraint at a time. Returns false when
// the repair has nothing to change.
inline bool repair_blueprint(ConstraintId id, Blueprint& bp, const Scored& cur, const IntentSlots& s,
                             const KnowledgeBase& kb) {
    switch (id) {
        case ConstraintId::RequiredSites: {
            if (!s.required_sites) return false;
            const auto visited = visited_attractions(cur.plan);
            for (const auto& rid : *s.required_sites) {
                if (visited.count(rid.str())) continue;
                const Poi* p = kb.find_poi(rid);
                if (!p || !p->attraction || s.excludes_site(rid)) continue;
                std::vector<std::size_t> days;
                for (std::size_t d = 0; d < bp.days.size(); ++d)
                    if (bp.days[d].city == p->city_id) days.push_back(d);
                if (days.empty()) continue;
                std::stable_sort(days.begin(), days.end(), [&](std::size_t a, std::size_t b) {
                    const bool wa = rain_on(kb, bp.days[a].city, bp.days[a].date) && !p->indoor;
                    const bool wb = rain_on(kb, bp.days[b].city, bp.days[b].date) && !p->indoor;
                    return std::tuple(a == 0, wa, bp.days[a].attractions.size()) <
                           std::tuple(b == 0, wb, bp.days[b].attractions.size());
                });
                for (auto d : days) {
                    auto& day = bp.days[d];
                    if (std::find(day.attractions.begin(), day.attractions.end(), rid) != day.attractions.end()) continue;
                    // swap out the lowest-rated optional attraction, or the whole day's optional set
                    auto victim = day.attractions.end();
                    for (auto it = day.attractions.begin(); it != day.attractions.end(); ++it)
                        if (!s.requires_site(*it) &&
                            (victim == day.attractions.end() || kb.poi(*it).rating < kb.poi(*victim).rating))
                            victim = it;
                    if (static_cast<int>(day.attractions.size()) >= day_capacity(d, s) || d == 0) {
                        if (victim == day.attractions.end()) continue;
                        day.attractions.erase(victim);
                    }
                    day.attractions.push_back(rid);
                    order_attractions(day.attractions, kb);
                    return true;
                }
            }
            return false;
        }
        case ConstraintId::ExcludedSites: {
            bool changed = false;
            for (auto& day : bp.days) {
                const auto before = day.attractions.size();
                std::erase_if(day.attractions, [&](const PoiId& a) { return s.excludes_site(a); });
                changed |= day.attractions.size() != before;
            }
            return changed;
        }
        case ConstraintId::HotelType: {
            bool changed = false;
            for (auto& [city, hotel] : bp.hotels) {
                if (hotel_matches(kb.poi(hotel), s.hotel())) continue;
                auto pick = hotel_candidates(kb, city, city_attractions(bp, city), s.hotel(), false);
                if (pick.empty()) pick = hotel_candidates(kb, city, {}, s.hotel(), true);
                if (pick.empty()) continue;
                hotel = pick.front()->id;
                changed = true;
            }
            return changed;
        }
        case ConstraintId::ActivityCount:
        case ConstraintId::TimeInterval:
        case ConstraintId::DailySchedule: {
            bool changed = false;
            for (std::size_t d = 0; d < bp.days.size(); ++d) {
                if (!day_has_count_failure(cur.report, d)) continue;
                auto& day = bp.days[d];
                if (!day.want_snack) {
                    day.want_snack = true;
                    changed = true;
                }
                if (!day.meals.empty()) {
                    day.meals.clear();
                    changed = true;
                }
            }
            return changed;
        }
        case ConstraintId::Budget: {
            if (!s.budget_total) return false;
            // cheapest acceptable hotel per city
            Money best_saving;
            std::optional<std::pair<CityId, PoiId>> best;
            for (const auto& [city, hotel] : bp.hotels) {
                auto pick = hotel_candidates(kb, city, {}, s.hotel(), true);
                std::set<PoiId> others;
                for (const auto& [c2, h2] : bp.hotels)
                    if (c2 != city) others.insert(h2);
                for (const Poi* h : pick) {
                    if (others.count(h->id)) continue;
                    const Money saving =
                        cheapest_room(kb.poi(hotel)).nightly_price - cheapest_room(*h).nightly_price;
                    if (saving > best_saving) {
                        best_saving = saving;
                        best = {city, h->id};
                    }
                    break;
                }
            }
            if (!best) return false;
            bp.hotels[best->first] = best->second;
            return true;
        }
        default: return false;
    }
}

inline constexpr std::array<ConstraintId, 7> kRepairOrder{
    ConstraintId::RequiredSites, ConstraintId::ExcludedSites, ConstraintId::HotelType, ConstraintId::ActivityCount,
    ConstraintId::TimeInterval,  ConstraintId::DailySchedule, ConstraintId::Budget};

}  // namespace detail

inline PlanResult generate_plan(const IntentSlots& s, const KnowledgeBase& kb, const SearchBudget& budget = {},
                                const std::string& query_id = "") {
    budget.check();
    require_basics(s);
    const auto ranked = rank_city_orders(s, kb);
    const Renderer renderer(kb, s);
    PlanResult result;
    std::optional<detail::Scored> best;

    auto score = [&](Blueprint bp) {
        Plan p = renderer.render(bp, query_id);
        ++result.candidates;
        PlanReport r = evaluate_plan(p, s, kb);
        const Money cost = tally_costs(p).total;
        return detail::Scored{std::move(p), std::move(r), cost, std::move(bp)};
    };

    const std::size_t beam = std::min(ranked.size(), static_cast<std::size_t>(budget.beam_width));
    for (std::size_t oi = 0; oi < beam && result.candidates < budget.max_candidates; ++oi) {
        std::optional<detail::Scored> cur;
        try {
            const Allocation alloc = make_allocation(ranked[oi].order, ranked[oi].cost, s, kb);
            Outline outline;
            try {
                outline = plan_attractions(alloc, s, kb, true);
            } catch (const InfeasibleError& e) {
                result.notes.push_back(e.what());
                outline = plan_attractions(alloc, s, kb, false);
            }
            apply_transit(outline, arrange_transit(alloc, s, kb));
            Blueprint bp;
            try {
                bp = make_blueprint(outline, s, kb, false);
            } catch (const InfeasibleError& e) {
                result.notes.push_back(e.what());
                bp = make_blueprint(outline, s, kb, true);
            }
            cur = score(std::move(bp));
        } catch (const InfeasibleError& e) {
            result.notes.push_back(e.what());
            continue;
        }

        for (int round = 0; round < budget.repair_rounds && !cur->report.final_pass; ++round) {
            bool improved = false;
            std::set<ConstraintId> tried;
            for (auto id : detail::kRepairOrder) {
                if (cur->report.passed(id) || tried.count(id) || result.candidates >= budget.max_candidates) continue;
                tried.insert(id);
                Blueprint bp = cur->bp;
                if (!detail::repair_blueprint(id, bp, *cur, s, kb)) continue;
                try {
                    auto next = score(std::move(bp));
                    const int before = cur->report.failures(), after = next.report.failures();
                    if (after < before || (after == before && next.cost < cur->cost)) {
                        cur = std::move(next);
                        improved = true;
                        break;
                    }
                } catch (const InfeasibleError& e) {
                    result.notes.push_back(e.what());
                }
            }
            if (!improved) break;
        }

        if (!cur->report.passed(ConstraintId::Budget) && s.budget_total) {
            Plan p = cur->plan;
            cut_costs(p, s, kb, *s.budget_total);
            PlanReport r = evaluate_plan(p, s, kb);
            ++result.candidates;
            const Money cost = tally_costs(p).total;
            if (r.failures() <= cur->report.failures() && cost < cur->cost)
                cur = detail::Scored{std::move(p), std::move(r), cost, cur->bp};
        }

        if (!best || detail::better(*cur, *best)) best = std::move(cur);
    }
    if (!best) {
        std::string why = "no plan could be built";
        if (!result.notes.empty()) why += ": " + result.notes.back();
        throw InfeasibleError(why);
    }
    result.plan = std::move(best->plan);
    result.report = std::move(best->report);
    return result;
}

inline Json to_json(const PlanResult& r) { return Json{{"plan", to_json(r.plan)}, {"report", to_json(r.report)}}; }

// ---------------------------------------------------------------------------
// Revision
// ---------------------------------------------------------------------------

enum class RevisionCategory { dining, transportation, budget, weather };

inline constexpr std::array<std::string_view, 4> kRevisionCategoryNames{"dining", "transportation", "budget",
                                                                        "weather"};

inline std::string_view to_string(RevisionCategory c) { return kRevisionCategoryNames[static_cast<std::size_t>(c)]; }

inline std::optional<RevisionCategory> parse_revision_category(std::string_view s) {
    for (std::size_t i = 0; i < kRevisionCategoryNames.size(); ++i)
        if (kRevisionCategoryNames[i] == s) return static_cast<RevisionCategory>(i);
    return std::nullopt;
}

// Target: a day plus either an activity index or, for meals, a meal slot.
// A bare day means the first eligible activity on it.
struct RevisionTarget {
    std::optional<int> day;
    std::optional<int> activity;
    std::optional<MealSlot> meal;
    friend bool operator==(const RevisionTarget&, const RevisionTarget&) = default;
};

// type: replace_poi (dining), change_link (transportation),
// cap_budget (budget), swap_indoor / swap_outdoor (weather).
struct RevisionDirective {
    std::string type;
    std::optional<PoiId> poi;
    std::optional<std::string> cuisine;
    std::optional<LinkId> link;
    std::string prefer = "cheapest";  // cheapest | earliest | latest
    std::optional<Money> amount;
    friend bool operator==(const RevisionDirective&, const RevisionDirective&) = default;
};

struct RevisionRequest {
    RevisionCategory category = RevisionCategory::dining;
    RevisionTarget target;
    RevisionDirective directive;
    friend bool operator==(const RevisionRequest&, const RevisionRequest&) = default;
};

inline std::string_view default_directive(RevisionCategory c) {
    switch (c) {
        case RevisionCategory::dining: return "replace_poi";
        case RevisionCategory::transportation: return "change_link";
        case RevisionCategory::budget: return "cap_budget";
        case RevisionCategory::weather: return "swap_indoor";
    }
    return "";
}

inline Json to_json(const RevisionRequest& r) {
    Json t = Json::object();
    if (r.target.day) t["day"] = *r.target.day;
    if (r.target.activity) t["activity"] = *r.target.activity;
    if (r.target.meal) t["meal"] = to_string(*r.target.meal);
    Json d{{"type", r.directive.type}};
    if (r.directive.poi) d["poi"] = r.directive.poi->str();
    if (r.directive.cuisine) d["cuisine"] = *r.directive.cuisine;
    if (r.directive.link) d["link"] = r.directive.link->str();
    if (r.category == RevisionCategory::transportation) d["prefer"] = r.directive.prefer;
    if (r.directive.amount) d["amount"] = r.directive.amount->as_yuan();
    return Json{{"category", to_string(r.category)}, {"target", t}, {"directive", d}};
}

inline RevisionRequest revision_from_json(const JsonReader& r) {
    RevisionRequest q;
    const auto cat = r.at("category");
    auto c = parse_revision_category(cat.str());
    if (!c) cat.fail("unknown revision category");
    q.category = *c;
    if (auto t = r.maybe("target")) {
        if (auto d = t->maybe("day")) q.target.day = d->int32();
        if (auto a = t->maybe("activity")) q.target.activity = a->int32();
        if (auto m = t->maybe("meal")) {
            auto slot = parse_meal_slot(m->str());
            if (!slot) m->fail("unknown meal slot");
            q.target.meal = slot;
        }
    }
    q.directive.type = std::string(default_directive(q.category));
    if (auto d = r.maybe("directive")) {
        if (auto t = d->maybe("type")) q.directive.type = t->str();
        if (auto p = d->maybe("poi")) q.directive.poi = p->id<PoiTag>();
        if (auto cu = d->maybe("cuisine")) q.directive.cuisine = cu->str();
        if (auto l = d->maybe("link")) q.directive.link = l->id<LinkTag>();
        if (auto p = d->maybe("prefer")) {
            q.directive.prefer = p->str();
            if (q.directive.prefer != "cheapest" && q.directive.prefer != "earliest" && q.directive.prefer != "latest")
                p->fail("prefer must be cheapest, earliest or latest");
        }
        if (auto a = d->maybe("amount")) q.directive.amount = a->yuan();
    }
    const auto& type = q.directive.type;
    const bool ok = (q.category == RevisionCategory::dining && type == "replace_poi") ||
                    (q.category == RevisionCategory::transportation && type == "change_link") ||
                    (q.category == RevisionCategory::budget && type == "cap_budget") ||
                    (q.category == RevisionCategory::weather && (type == "swap_indoor" || type == "swap_outdoor"));
    if (!ok) JsonReader(r.raw(), r.path() + "/directive/type").fail("directive does not fit the category");
    if (q.category == RevisionCategory::budget && !q.directive.amount)
        JsonReader(r.raw(), r.path() + "/directive/amount").fail("missing required field");
    if (q.category != RevisionCategory::budget && !q.target.day)
        JsonReader(r.raw(), r.path() + "/target/day").fail("missing required field");
    return q;
}

struct RevisionResult {
    Plan plan;
    PlanReport report;
    IntentSlots slots;                 // budget revisions replace budget_total
    std::set<int> dependency_days;     // 0-based days allowed to change
};

inline Json to_json(const RevisionResult& r) {
    Json days = Json::array();
    for (int d : r.dependency_days) days.push_back(d);
    return Json{{"plan", to_json(r.plan)}, {"report", to_json(r.report)}, {"changed_days", days}};
}

// Index of the activity the request points at; ArgumentError when the
// target does not resolve to an activity of the right kind.
inline std::size_t resolve_target(const Plan& plan, const RevisionRequest& req, const IntentSlots& s,
                                  const KnowledgeBase& kb) {
    const int d = *req.target.day;
    if (d < 0 || d >= static_cast<int>(plan.days.size()))
        throw ArgumentError("revision target day " + std::to_string(d) + " is outside the plan");
    const auto& acts = plan.days[static_cast<std::size_t>(d)].activities;
    auto eligible = [&](const Activity& a) {
        switch (req.category) {
            case RevisionCategory::dining: return a.kind == ActivityKind::meal && (!req.target.meal || a.meal == req.target.meal);
            case RevisionCategory::transportation: return a.kind == ActivityKind::transport;
            case RevisionCategory::weather: {
                if (a.kind != ActivityKind::attraction || s.requires_site(a.poi())) return false;
                const Poi* p = kb.find_poi(a.poi());
                return p && p->indoor == (req.directive.type == "swap_outdoor");
            }
            case RevisionCategory::budget: return true;
        }
        return false;
    };
    if (req.target.activity) {
        const int i = *req.target.activity;
        if (i < 0 || i >= static_cast<int>(acts.size()) || !eligible(acts[static_cast<std::size_t>(i)]))
            throw ArgumentError("revision target does not name a suitable activity on day " + std::to_string(d));
        return static_cast<std::size_t>(i);
    }
    for (std::size_t i = 0; i < acts.size(); ++i)
        if (eligible(acts[i])) return i;
    throw ArgumentError("no suitable activity to revise on day " + std::to_string(d));
}

inline RevisionResult revise_plan(const Plan& plan, const RevisionRequest& req, const IntentSlots& slots,
                                  const KnowledgeBase& kb) {
    RevisionResult out{plan, {}, slots, {}};
    Plan& p = out.plan;

    if (req.category == RevisionCategory::budget) {
        if (!req.directive.amount || *req.directive.amount < Money{})
            throw ArgumentError("budget revision needs a non-negative amount");
        out.slots.budget_total = *req.directive.amount;
        for (int d = 0; d < static_cast<int>(p.days.size()); ++d) out.dependency_days.insert(d);
        if (!cut_costs(p, out.slots, kb, *req.directive.amount))
            throw RevisionInfeasibleError("cannot bring the plan under " + req.directive.amount->str() + " CNY");
        out.report = evaluate_plan(p, out.slots, kb);
        return out;
    }

    const std::size_t d = static_cast<std::size_t>(*req.target.day);
    const std::size_t i = resolve_target(plan, req, slots, kb);
    out.dependency_days.insert(static_cast<int>(d));
    const Activity& target = plan.days[d].activities[i];

    switch (req.category) {
        case RevisionCategory::dining: {
            // the nearby set of the adjacent attraction, then the closest few to it
            const auto& acts = plan.days[d].activities;
            const Poi* anchor = nullptr;
            for (std::size_t k = i; k-- > 0;)
                if (acts[k].kind == ActivityKind::attraction) {
                    anchor = kb.find_poi(acts[k].poi());
                    break;
                }
            if (!anchor)
                for (std::size_t k = i + 1; k < acts.size(); ++k)
                    if (acts[k].kind == ActivityKind::attraction) {
                        anchor = kb.find_poi(acts[k].poi());
                        break;
                    }
            const Poi* current = kb.find_poi(target.poi());
            const GeoPoint at = anchor ? anchor->coords : current ? current->coords : kb.city(target.city_id).coords;
            std::vector<const Poi*> pool;
            std::set<PoiId> seen;
            if (anchor && anchor->attraction)
                for (const auto& n : anchor->attraction->nearby_restaurants)
                    if (const Poi* r = kb.find_poi(n.poi); r && seen.insert(r->id).second) pool.push_back(r);
            std::vector<std::pair<double, const Poi*>> near;
            for (const Poi* r : city_pool(kb, target.city_id, PoiKind::restaurant))
                near.push_back({round_km(haversine_km(at, r->coords)), r});
            std::sort(near.begin(), near.end(), [](const auto& a, const auto& b) {
                return std::tie(a.first, a.second->id) < std::tie(b.first, b.second->id);
            });
            for (std::size_t k = 0; k < near.size() && k < 6; ++k)
                if (seen.insert(near[k].second->id).second) pool.push_back(near[k].second);

            const Poi* pick = nullptr;
            for (const Poi* r : meal_alternatives(plan, d, i, pool)) {
                if (req.directive.poi && r->id != *req.directive.poi) continue;
                if (req.directive.cuisine &&
                    std::find(r->tags.begin(), r->tags.end(), *req.directive.cuisine) == r->tags.end())
                    continue;
                pick = r;
                break;
            }
            if (!pick) throw RevisionInfeasibleError("no alternative restaurant for day " + std::to_string(d + 1));
            auto& m = p.days[d].activities[i];
            m = make_meal(*pick, *m.meal, m.start, p.party_size);
            break;
        }
        case RevisionCategory::transportation: {
            auto alts = link_alternatives(plan, d, i, slots, kb);
            if (req.directive.link)
                std::erase_if(alts, [&](const auto& a) { return a.first->id != *req.directive.link; });
            if (alts.empty()) throw RevisionInfeasibleError("no alternative link for day " + std::to_string(d + 1));
            auto key = [&](const TransportLink* l) {
                if (req.directive.prefer == "earliest") return std::tuple(l->depart, l->price, l->id);
                if (req.directive.prefer == "latest") return std::tuple(-l->depart, l->price, l->id);
                return std::tuple(static_cast<Minutes>(0), l->price, l->id);
            };
            auto& best = *std::min_element(alts.begin(), alts.end(), [&](const auto& a, const auto& b) {
                if (req.directive.prefer == "cheapest") return link_cheaper(a.first, b.first);
                return key(a.first) < key(b.first);
            });
            p.days[d] = best.second;
            break;
        }
        case RevisionCategory::weather: {
            const bool want_indoor = req.directive.type == "swap_indoor";
            const bool rainy = rain_on(kb, target.city_id, plan.days[d].date);
            const auto taken = used_refs(plan, ActivityKind::attraction);
            std::vector<const Poi*> pool;
            for (const Poi* a : city_pool(kb, target.city_id, PoiKind::attraction))
                if (a->indoor == want_indoor && !taken.count(a->id.str()) && !slots.excludes_site(a->id))
                    pool.push_back(a);
            std::sort(pool.begin(), pool.end(), [&](const Poi* a, const Poi* b) {
                const double sa = attraction_score(*a, rainy), sb = attraction_score(*b, rainy);
                if (sa != sb) return sa > sb;
                return a->id < b->id;
            });
            bool done = false;
            for (const Poi* a : pool) {
                DayPlan day = plan.days[d];
                day.activities[i] = make_attraction(*a, day.activities[i].start, p.party_size);
                if (!retime_day(day, kb)) continue;
                p.days[d] = std::move(day);
                done = true;
                break;
            }
            if (!done)
                throw RevisionInfeasibleError(std::string("no ") + (want_indoor ? "indoor" : "outdoor") +
                                              " attraction fits day " + std::to_string(d + 1));
            break;
        }
        case RevisionCategory::budget: break;
    }
    out.report = evaluate_plan(p, out.slots, kb);
    return out;
}

}  // namespace itinera

#pragma once

// The 12-field travel requirement. Every field is either filled or not;
// implicit queries are explicit ones with some fields cleared.

#include <array>
#include <bitset>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "itinera/core.hpp"
#include "itinera/json_io.hpp"

namespace itinera {

enum class SlotField {
    departure_city,
    destination_cities,
    start_date,
    num_days,
    party_size,
    budget_total,
    hotel_type,
    required_sites,
    excluded_sites,
    cuisine_prefs,
    transport_pref,
    pace,
};

inline constexpr std::size_t kSlotCount = 12;
using SlotMask = std::bitset<kSlotCount>;

inline constexpr std::array<std::string_view, kSlotCount> kSlotNames{
    "departure_city", "destination_cities", "start_date",     "num_days",      "party_size",     "budget_total",
    "hotel_type",     "required_sites",     "excluded_sites", "cuisine_prefs", "transport_pref", "pace"};

inline constexpr std::array<SlotField, kSlotCount> kAllSlots{
    SlotField::departure_city, SlotField::destination_cities, SlotField::start_date,     SlotField::num_days,
    SlotField::party_size,     SlotField::budget_total,       SlotField::hotel_type,     SlotField::required_sites,
    SlotField::excluded_sites, SlotField::cuisine_prefs,      SlotField::transport_pref, SlotField::pace};

inline std::string_view to_string(SlotField f) { return kSlotNames[static_cast<std::size_t>(f)]; }

inline std::optional<SlotField> parse_slot_field(std::string_view s) {
    for (std::size_t i = 0; i < kSlotNames.size(); ++i)
        if (kSlotNames[i] == s) return static_cast<SlotField>(i);
    return std::nullopt;
}

enum class HotelPreference { chain, upscale, any };
enum class TransportPreference { rail_any, high_speed_only, any };

inline constexpr std::array<std::string_view, 3> kHotelPreferenceNames{"chain", "upscale", "any"};
inline constexpr std::array<std::string_view, 3> kTransportPreferenceNames{"rail_any", "high_speed_only", "any"};

inline std::string_view to_string(HotelPreference h) { return kHotelPreferenceNames[static_cast<std::size_t>(h)]; }
inline std::string_view to_string(TransportPreference t) {
    return kTransportPreferenceNames[static_cast<std::size_t>(t)];
}

struct IntentSlots {
    std::optional<CityId> departure_city;
    std::optional<std::vector<CityId>> destination_cities;
    std::optional<Date> start_date;
    std::optional<int> num_days;
    std::optional<int> party_size;
    std::optional<Money> budget_total;
    std::optional<HotelPreference> hotel_type;
    std::optional<std::set<PoiId>> required_sites;
    std::optional<std::set<PoiId>> excluded_sites;
    std::optional<std::vector<std::string>> cuisine_prefs;
    std::optional<TransportPreference> transport_pref;
    std::optional<int> pace;  // attractions per day

    bool filled(SlotField f) const {
        switch (f) {
            case SlotField::departure_city: return departure_city.has_value();
            case SlotField::destination_cities: return destination_cities.has_value();
            case SlotField::start_date: return start_date.has_value();
            case SlotField::num_days: return num_days.has_value();
            case SlotField::party_size: return party_size.has_value();
            case SlotField::budget_total: return budget_total.has_value();
            case SlotField::hotel_type: return hotel_type.has_value();
            case SlotField::required_sites: return required_sites.has_value();
            case SlotField::excluded_sites: return excluded_sites.has_value();
            case SlotField::cuisine_prefs: return cuisine_prefs.has_value();
            case SlotField::transport_pref: return transport_pref.has_value();
            case SlotField::pace: return pace.has_value();
        }
        return false;
    }

    void clear(SlotField f) {
        switch (f) {
            case SlotField::departure_city: departure_city.reset(); break;
            case SlotField::destination_cities: destination_cities.reset(); break;
            case SlotField::start_date: start_date.reset(); break;
            case SlotField::num_days: num_days.reset(); break;
            case SlotField::party_size: party_size.reset(); break;
            case SlotField::budget_total: budget_total.reset(); break;
            case SlotField::hotel_type: hotel_type.reset(); break;
            case SlotField::required_sites: required_sites.reset(); break;
            case SlotField::excluded_sites: excluded_sites.reset(); break;
            case SlotField::cuisine_prefs: cuisine_prefs.reset(); break;
            case SlotField::transport_pref: transport_pref.reset(); break;
            case SlotField::pace: pace.reset(); break;
        }
    }

    SlotMask mask() const {
        SlotMask m;
        for (auto f : kAllSlots) m[static_cast<std::size_t>(f)] = filled(f);
        return m;
    }

    // Planner-facing accessors with defaults for unfilled preference slots.
    int party() const { return party_size.value_or(2); }
    int attractions_per_day() const { return pace.value_or(2); }
    HotelPreference hotel() const { return hotel_type.value_or(HotelPreference::any); }
    TransportPreference transport() const { return transport_pref.value_or(TransportPreference::any); }
    bool requires_site(const PoiId& id) const { return required_sites && required_sites->count(id); }
    bool excludes_site(const PoiId& id) const { return excluded_sites && excluded_sites->count(id); }

    friend bool operator==(const IntentSlots&, const IntentSlots&) = default;
};

// Invariants over filled fields; throws ArgumentError.
inline void check_slots(const IntentSlots& s) {
    if (s.destination_cities) {
        const auto n = s.destination_cities->size();
        if (n < 2 || n > 4) throw ArgumentError("destination_cities must list 2 to 4 cities");
        std::set<CityId> uniq(s.destination_cities->begin(), s.destination_cities->end());
        if (uniq.size() != n) throw ArgumentError("destination_cities repeats a city");
        if (s.departure_city && uniq.count(*s.departure_city))
            throw ArgumentError("departure city cannot also be a destination");
    }
    if (s.num_days && *s.num_days < 1) throw ArgumentError("num_days must be positive");
    if (s.num_days && s.destination_cities && *s.num_days < static_cast<int>(s.destination_cities->size()))
        throw ArgumentError("num_days must be at least the number of destination cities");
    if (s.party_size && *s.party_size < 1) throw ArgumentError("party_size must be positive");
    if (s.pace && (*s.pace < 1 || *s.pace > 4)) throw ArgumentError("pace must be between 1 and 4");
    if (s.budget_total && *s.budget_total < Money{}) throw ArgumentError("budget_total must be non-negative");
}

// ---------------------------------------------------------------------------
// JSON: one key per filled field; unfilled fields are omitted.
// ---------------------------------------------------------------------------

inline Json slot_value_json(const IntentSlots& s, SlotField f) {
    switch (f) {
        case SlotField::departure_city: return s.departure_city->str();
        case SlotField::destination_cities: {
            Json a = Json::array();
            for (const auto& c : *s.destination_cities) a.push_back(c.str());
            return a;
        }
        case SlotField::start_date: return s.start_date->str();
        case SlotField::num_days: return *s.num_days;
        case SlotField::party_size: return *s.party_size;
        case SlotField::budget_total: return s.budget_total->as_yuan();
        case SlotField::hotel_type: return to_string(*s.hotel_type);
        case SlotField::required_sites: {
            Json a = Json::array();
            for (const auto& p : *s.required_sites) a.push_back(p.str());
            return a;
        }
        case SlotField::excluded_sites: {
            Json a = Json::array();
            for (const auto& p : *s.excluded_sites) a.push_back(p.str());
            return a;
        }
        case SlotField::cuisine_prefs: return *s.cuisine_prefs;
        case SlotField::transport_pref: return to_string(*s.transport_pref);
        case SlotField::pace: return *s.pace;
    }
    return nullptr;
}

// Parses one slot value into `s`, replacing what was there.
inline void assign_slot(IntentSlots& s, SlotField f, const JsonReader& r) {
    auto enum_of = [&](const auto& names) {
        const auto v = r.str();
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == v) return i;
        r.fail("unknown value '" + v + "'");
    };
    switch (f) {
        case SlotField::departure_city: s.departure_city = r.id<CityTag>(); break;
        case SlotField::destination_cities: {
            std::vector<CityId> v;
            for (const auto& it : r.items()) v.push_back(it.id<CityTag>());
            s.destination_cities = std::move(v);
            break;
        }
        case SlotField::start_date: s.start_date = r.date(); break;
        case SlotField::num_days: s.num_days = r.int32(); break;
        case SlotField::party_size: s.party_size = r.int32(); break;
        case SlotField::budget_total: s.budget_total = r.yuan(); break;
        case SlotField::hotel_type: s.hotel_type = static_cast<HotelPreference>(enum_of(kHotelPreferenceNames)); break;
        case SlotField::required_sites:
        case SlotField::excluded_sites: {
            std::set<PoiId> v;
            for (const auto& it : r.items()) v.insert(it.id<PoiTag>());
            (f == SlotField::required_sites ? s.required_sites : s.excluded_sites) = std::move(v);
            break;
        }
        case SlotField::cuisine_prefs: s.cuisine_prefs = r.strings(); break;
        case SlotField::transport_pref:
            s.transport_pref = static_cast<TransportPreference>(enum_of(kTransportPreferenceNames));
            break;
        case SlotField::pace: s.pace = r.int32(); break;
    }
}

inline Json to_json(const IntentSlots& s) {
    Json j = Json::object();
    for (auto f : kAllSlots)
        if (s.filled(f)) j[std::string(to_string(f))] = slot_value_json(s, f);
    return j;
}

inline IntentSlots slots_from_json(const JsonReader& r) {
    IntentSlots s;
    if (!r.raw().is_object()) r.fail("expected object");
    for (const auto& [key, value] : r.raw().items()) {
        auto f = parse_slot_field(key);
        if (!f) JsonReader(value, r.path() + "/" + key).fail("unknown slot field");
        if (value.is_null()) continue;
        assign_slot(s, *f, r.at(key));
    }
    try {
        check_slots(s);
    } catch (const ArgumentError& e) {
        r.fail(e.what());
    }
    return s;
}

// A query as exchanged in files: identifier plus slots.
struct Query {
    std::string id;
    IntentSlots slots;
    friend bool operator==(const Query&, const Query&) = default;
};

inline Json to_json(const Query& q) { return Json{{"id", q.id}, {"slots", to_json(q.slots)}}; }

inline Query query_from_json(const JsonReader& r) { return Query{r.at("id").str(), slots_from_json(r.at("slots"))}; }

}  // namespace itinera

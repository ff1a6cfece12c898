#pragma once

// Tourism knowledge base: cities, POIs (attractions, restaurants, hotels),
// rail links and daily weather, with the attraction -> nearby POI linkage.
// A KnowledgeBase is immutable once assembled and may be shared freely
// between reader threads.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "itinera/core.hpp"
#include "itinera/json_io.hpp"

namespace itinera {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct GeoPoint {
    double lon = 0;  // degrees east
    double lat = 0;  // degrees north
    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline constexpr double kEarthRadiusKm = 6371.0;

inline double haversine_km(GeoPoint a, GeoPoint b) {
    constexpr double rad = 3.14159265358979323846 / 180.0;
    const double dlat = (b.lat - a.lat) * rad;
    const double dlon = (b.lon - a.lon) * rad;
    const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

// Distances are stored at metre resolution so serialized KBs are stable
// across libm implementations.
inline double round_km(double km) { return std::round(km * 1000.0) / 1000.0; }

struct City {
    CityId id;
    std::string name;
    GeoPoint coords;
    friend bool operator==(const City&, const City&) = default;
};

enum class PoiKind { attraction, restaurant, hotel };

inline constexpr std::array<std::string_view, 3> kPoiKindNames{"attraction", "restaurant", "hotel"};

inline std::string_view to_string(PoiKind k) { return kPoiKindNames[static_cast<std::size_t>(k)]; }

inline std::optional<PoiKind> parse_poi_kind(std::string_view s) {
    for (std::size_t i = 0; i < kPoiKindNames.size(); ++i)
        if (kPoiKindNames[i] == s) return static_cast<PoiKind>(i);
    return std::nullopt;
}

struct TimeWindow {
    Minutes open = 0;
    Minutes close = kMinutesPerDay;
    bool covers(Minutes start, Minutes end) const { return open <= start && end <= close; }
    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

struct Ticket {
    std::string label;
    Money price;
    friend bool operator==(const Ticket&, const Ticket&) = default;
};

struct NearbyRef {
    PoiId poi;
    double distance_km = 0;
    friend bool operator==(const NearbyRef&, const NearbyRef&) = default;
};

struct AttractionInfo {
    std::vector<Ticket> tickets;  // first entry is the standard admission
    Minutes visit_minutes = 120;
    std::vector<NearbyRef> nearby_restaurants;
    std::vector<NearbyRef> nearby_hotels;
    std::optional<int> must_visit_rank;
    friend bool operator==(const AttractionInfo&, const AttractionInfo&) = default;
};

enum class HotelType { chain, upscale, other };

inline constexpr std::array<std::string_view, 3> kHotelTypeNames{"chain", "upscale", "other"};

inline std::string_view to_string(HotelType t) { return kHotelTypeNames[static_cast<std::size_t>(t)]; }

inline std::optional<HotelType> parse_hotel_type(std::string_view s) {
    for (std::size_t i = 0; i < kHotelTypeNames.size(); ++i)
        if (kHotelTypeNames[i] == s) return static_cast<HotelType>(i);
    return std::nullopt;
}

struct Room {
    std::string room_name;
    Money nightly_price;
    friend bool operator==(const Room&, const Room&) = default;
};

struct HotelInfo {
    HotelType hotel_type = HotelType::other;
    std::vector<Room> rooms;

    Money cheapest_room() const {
        Money best = rooms.front().nightly_price;
        for (const auto& r : rooms) best = std::min(best, r.nightly_price);
        return best;
    }
    friend bool operator==(const HotelInfo&, const HotelInfo&) = default;
};

struct Poi {
    PoiId id;
    CityId city_id;
    PoiKind kind = PoiKind::attraction;
    std::string name;
    GeoPoint coords;
    TimeWindow open_window;
    double rating = 0;
    Money avg_cost;
    bool indoor = false;
    std::vector<std::string> reviews;
    std::vector<std::string> image_refs;
    std::vector<std::string> tags;  // category / cuisine labels
    std::string address;
    std::string phone;  // kept verbatim, never consulted
    std::optional<AttractionInfo> attraction;
    std::optional<HotelInfo> hotel;

    friend bool operator==(const Poi&, const Poi&) = default;
};

enum class TransportMode { high_speed_rail, rail, transfer_chain };

inline constexpr std::array<std::string_view, 3> kTransportModeNames{"high_speed_rail", "rail", "transfer_chain"};

inline std::string_view to_string(TransportMode m) { return kTransportModeNames[static_cast<std::size_t>(m)]; }

inline std::optional<TransportMode> parse_transport_mode(std::string_view s) {
    for (std::size_t i = 0; i < kTransportModeNames.size(); ++i)
        if (kTransportModeNames[i] == s) return static_cast<TransportMode>(i);
    return std::nullopt;
}

struct TransportLink {
    LinkId id;
    CityId from_city;
    CityId to_city;
    std::string from_station;
    std::string to_station;
    std::string number;
    TransportMode mode = TransportMode::high_speed_rail;
    Minutes depart = 0;
    Minutes arrive = 0;
    int duration_min = 0;
    Money price;
    int day_offset = 0;  // whole days between departure and arrival
    friend bool operator==(const TransportLink&, const TransportLink&) = default;
};

enum class WeatherCondition { sunny, cloudy, rain, snow, other, unknown };

inline constexpr std::array<std::string_view, 6> kWeatherNames{"sunny", "cloudy", "rain", "snow", "other", "unknown"};

inline std::string_view to_string(WeatherCondition c) { return kWeatherNames[static_cast<std::size_t>(c)]; }

inline std::optional<WeatherCondition> parse_weather_condition(std::string_view s) {
    for (std::size_t i = 0; i < kWeatherNames.size(); ++i)
        if (kWeatherNames[i] == s) return static_cast<WeatherCondition>(i);
    return std::nullopt;
}

struct WeatherRecord {
    CityId city_id;
    Date date;
    int high_c = 0;
    int low_c = 0;
    WeatherCondition condition = WeatherCondition::unknown;
    std::string wind;
    int aqi = 0;

    bool known() const { return condition != WeatherCondition::unknown; }
    friend bool operator==(const WeatherRecord&, const WeatherRecord&) = default;
};

// ---------------------------------------------------------------------------
// KnowledgeBase
// ---------------------------------------------------------------------------

class KnowledgeBase {
public:
    using WeatherKey = std::pair<CityId, Date>;

    KnowledgeBase() = default;

    // Builds indexes and verifies referential integrity; throws
    // ValidationError on the first dangling reference.
    static KnowledgeBase assemble(std::vector<City> cities, std::vector<Poi> pois,
                                  std::vector<TransportLink> links, std::vector<WeatherRecord> weather) {
        KnowledgeBase kb;
        for (auto& c : cities) {
            auto id = c.id;
            if (!kb.cities_.emplace(id, std::move(c)).second) throw ValidationError("duplicate city id " + id.str());
        }
        for (auto& p : pois) {
            if (!kb.cities_.count(p.city_id))
                throw ValidationError("poi " + p.id.str() + " references unknown city " + p.city_id.str());
            auto id = p.id;
            if (!kb.pois_.emplace(id, std::move(p)).second) throw ValidationError("duplicate poi id " + id.str());
        }
        for (const auto& [id, p] : kb.pois_) {
            if (!p.attraction) continue;
            for (const auto* list : {&p.attraction->nearby_restaurants, &p.attraction->nearby_hotels})
                for (const auto& n : *list)
                    if (!kb.pois_.count(n.poi))
                        throw ValidationError("attraction " + id.str() + " links unknown poi " + n.poi.str());
        }
        for (auto& l : links) {
            if (!kb.cities_.count(l.from_city) || !kb.cities_.count(l.to_city))
                throw ValidationError("link " + l.id.str() + " references an unknown city");
            auto id = l.id;
            if (!kb.links_.emplace(id, std::move(l)).second) throw ValidationError("duplicate link id " + id.str());
        }
        for (auto& w : weather) {
            if (!kb.cities_.count(w.city_id)) throw ValidationError("weather references unknown city " + w.city_id.str());
            WeatherKey key{w.city_id, w.date};
            kb.weather_.insert_or_assign(std::move(key), std::move(w));
        }
        kb.index();
        return kb;
    }

    const std::map<CityId, City>& cities() const { return cities_; }
    const std::map<PoiId, Poi>& pois() const { return pois_; }
    const std::map<LinkId, TransportLink>& links() const { return links_; }
    const std::map<WeatherKey, WeatherRecord>& weather() const { return weather_; }

    const City* find_city(const CityId& id) const { return lookup(cities_, id); }
    const Poi* find_poi(const PoiId& id) const { return lookup(pois_, id); }
    const TransportLink* find_link(const LinkId& id) const { return lookup(links_, id); }

    const City& city(const CityId& id) const {
        if (auto* c = find_city(id)) return *c;
        throw NotFoundError("unknown city " + id.str());
    }
    const Poi& poi(const PoiId& id) const {
        if (auto* p = find_poi(id)) return *p;
        throw NotFoundError("unknown poi " + id.str());
    }
    const TransportLink& link(const LinkId& id) const {
        if (auto* l = find_link(id)) return *l;
        throw NotFoundError("unknown link " + id.str());
    }

    // POIs of one kind in one city, ordered by id.
    const std::vector<PoiId>& pois_in(const CityId& city, PoiKind kind) const {
        static const std::vector<PoiId> empty;
        auto it = by_city_kind_.find({city, kind});
        return it == by_city_kind_.end() ? empty : it->second;
    }

    // Links for one ordered city pair, ordered by (depart, price, id).
    const std::vector<LinkId>& links_between(const CityId& from, const CityId& to) const {
        static const std::vector<LinkId> empty;
        auto it = by_pair_.find({from, to});
        return it == by_pair_.end() ? empty : it->second;
    }

    const Poi* find_poi_by_name(std::string_view name) const {
        for (const auto& [id, p] : pois_)
            if (p.name == name) return &p;
        return nullptr;
    }

    const City* find_city_by_name(std::string_view name) const {
        for (const auto& [id, c] : cities_)
            if (c.name == name) return &c;
        return nullptr;
    }

    friend bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
        return a.cities_ == b.cities_ && a.pois_ == b.pois_ && a.links_ == b.links_ && a.weather_ == b.weather_;
    }

private:
    template <class M, class K>
    static const typename M::mapped_type* lookup(const M& m, const K& k) {
        auto it = m.find(k);
        return it == m.end() ? nullptr : &it->second;
    }

    void index() {
        for (const auto& [id, p] : pois_) by_city_kind_[{p.city_id, p.kind}].push_back(id);
        for (const auto& [id, l] : links_) by_pair_[{l.from_city, l.to_city}].push_back(id);
        for (auto& [pair, ids] : by_pair_) {
            std::sort(ids.begin(), ids.end(), [&](const LinkId& a, const LinkId& b) {
                const auto& la = links_.at(a);
                const auto& lb = links_.at(b);
                return std::tie(la.depart, la.price, la.id) < std::tie(lb.depart, lb.price, lb.id);
            });
        }
    }

    std::map<CityId, City> cities_;
    std::map<PoiId, Poi> pois_;
    std::map<LinkId, TransportLink> links_;
    std::map<WeatherKey, WeatherRecord> weather_;
    std::map<std::pair<CityId, PoiKind>, std::vector<PoiId>> by_city_kind_;
    std::map<std::pair<CityId, CityId>, std::vector<LinkId>> by_pair_;
};

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

// Linked POIs of `kind` around an attraction, nearest first, ties by id.
inline std::vector<NearbyRef> nearby_pois(const KnowledgeBase& kb, const PoiId& attraction, PoiKind kind,
                                          std::size_t limit) {
    const Poi& a = kb.poi(attraction);
    if (!a.attraction) throw NotFoundError(attraction.str() + " is not an attraction");
    if (kind == PoiKind::attraction) throw ArgumentError("attractions do not link other attractions");
    std::vector<NearbyRef> out =
        kind == PoiKind::restaurant ? a.attraction->nearby_restaurants : a.attraction->nearby_hotels;
    std::sort(out.begin(), out.end(), [](const NearbyRef& x, const NearbyRef& y) {
        return std::tie(x.distance_km, x.poi) < std::tie(y.distance_km, y.poi);
    });
    if (out.size() > limit) out.resize(limit);
    return out;
}

inline std::vector<const TransportLink*> find_transport(const KnowledgeBase& kb, const CityId& from,
                                                        const CityId& to, Minutes earliest_depart) {
    kb.city(from);
    kb.city(to);
    std::vector<const TransportLink*> out;
    for (const auto& id : kb.links_between(from, to)) {
        const auto& l = kb.link(id);
        if (l.depart >= earliest_depart) out.push_back(&l);
    }
    return out;
}

// Absent records come back with condition == unknown.
inline WeatherRecord weather_on(const KnowledgeBase& kb, const CityId& city, Date date) {
    auto it = kb.weather().find({city, date});
    if (it != kb.weather().end()) return it->second;
    WeatherRecord w;
    w.city_id = city;
    w.date = date;
    return w;
}

// ---------------------------------------------------------------------------
// Record format (one JSON object per line, one file per domain)
// ---------------------------------------------------------------------------

enum class KbDomain { cities, attractions, restaurants, hotels, transport, weather };

inline constexpr std::array<std::string_view, 6> kKbDomainNames{"cities",  "attractions", "restaurants",
                                                                  "hotels",  "transport",   "weather"};

inline std::string_view to_string(KbDomain d) { return kKbDomainNames[static_cast<std::size_t>(d)]; }

inline Json to_json(const GeoPoint& g) { return Json{{"lon", g.lon}, {"lat", g.lat}}; }

inline Json to_json(const City& c) { return Json{{"id", c.id.str()}, {"name", c.name}, {"coords", to_json(c.coords)}}; }

inline Json to_json(const std::vector<NearbyRef>& refs) {
    Json a = Json::array();
    for (const auto& n : refs) a.push_back(Json{{"poi", n.poi.str()}, {"distance_km", n.distance_km}});
    return a;
}

inline Json to_json(const Poi& p) {
    Json j{{"id", p.id.str()},
           {"city_id", p.city_id.str()},
           {"kind", to_string(p.kind)},
           {"name", p.name},
           {"coords", to_json(p.coords)},
           {"open_window", Json{{"open", p.open_window.open}, {"close", p.open_window.close}}},
           {"rating", p.rating},
           {"avg_cost", p.avg_cost.as_yuan()},
           {"indoor", p.indoor},
           {"reviews", p.reviews},
           {"image_refs", p.image_refs},
           {"tags", p.tags},
           {"address", p.address},
           {"phone", p.phone}};
    if (p.attraction) {
        Json tickets = Json::array();
        for (const auto& t : p.attraction->tickets) tickets.push_back(Json{{"label", t.label}, {"price", t.price.as_yuan()}});
        j["tickets"] = tickets;
        j["visit_minutes"] = p.attraction->visit_minutes;
        j["nearby_restaurants"] = to_json(p.attraction->nearby_restaurants);
        j["nearby_hotels"] = to_json(p.attraction->nearby_hotels);
        if (p.attraction->must_visit_rank) j["must_visit_rank"] = *p.attraction->must_visit_rank;
    }
    if (p.hotel) {
        j["hotel_type"] = to_string(p.hotel->hotel_type);
        Json rooms = Json::array();
        for (const auto& r : p.hotel->rooms)
            rooms.push_back(Json{{"room_name", r.room_name}, {"nightly_price", r.nightly_price.as_yuan()}});
        j["rooms"] = rooms;
    }
    return j;
}

inline Json to_json(const TransportLink& l) {
    return Json{{"id", l.id.str()},
                {"from_city", l.from_city.str()},
                {"to_city", l.to_city.str()},
                {"from_station", l.from_station},
                {"to_station", l.to_station},
                {"number", l.number},
                {"mode", to_string(l.mode)},
                {"depart", l.depart},
                {"arrive", l.arrive},
                {"duration_min", l.duration_min},
                {"price", l.price.as_yuan()},
                {"day_offset", l.day_offset}};
}

inline Json to_json(const WeatherRecord& w) {
    return Json{{"city_id", w.city_id.str()}, {"date", w.date.str()}, {"high_c", w.high_c},
                {"low_c", w.low_c},           {"condition", to_string(w.condition)},
                {"wind", w.wind},             {"aqi", w.aqi}};
}

// Raw text per domain. Missing domains are treated as empty streams.
struct KbSources {
    std::map<KbDomain, std::string> text;
};

struct Rejection {
    KbDomain domain;
    std::size_t line = 0;  // 1-based
    std::string id;        // may be empty when the id itself is missing
    std::string reason;
    friend bool operator==(const Rejection&, const Rejection&) = default;
};

struct RejectionReport {
    std::vector<Rejection> rejected;
    std::vector<std::string> repairs;  // accepted records that were adjusted

    bool empty() const { return rejected.empty() && repairs.empty(); }

    std::string render() const {
        std::ostringstream os;
        os << rejected.size() << " record(s) rejected, " << repairs.size() << " repair(s)\n";
        for (const auto& r : rejected)
            os << "  reject " << to_string(r.domain) << ":" << r.line << (r.id.empty() ? "" : " [" + r.id + "]") << " "
               << r.reason << "\n";
        for (const auto& r : repairs) os << "  repair " << r << "\n";
        return os.str();
    }
};

struct KbLoadResult {
    KnowledgeBase kb;
    RejectionReport report;
};

namespace detail {

struct RecordDropped {
    std::string reason;
};

[[noreturn]] inline void drop(std::string reason) { throw RecordDropped{std::move(reason)}; }

inline std::string key_string(const JsonReader& r, std::string_view key) {
    if (!r.has(key)) drop("missing key field: " + std::string(key));
    const auto& v = r.raw()[std::string(key)];
    if (!v.is_string() || v.get<std::string>().empty()) drop("missing key field: " + std::string(key));
    return v.get<std::string>();
}

inline GeoPoint key_coords(const JsonReader& r) {
    if (!r.has("coords")) drop("missing key field: coords");
    const auto& c = r.raw()["coords"];
    if (!c.is_object() || !c.contains("lon") || !c.contains("lat") || !c["lon"].is_number() || !c["lat"].is_number())
        drop("missing key field: coords");
    GeoPoint g{c["lon"].get<double>(), c["lat"].get<double>()};
    if (g.lon < -180 || g.lon > 180 || g.lat < -90 || g.lat > 90) drop("invalid field: coords");
    return g;
}

// Field readers that turn schema problems into record rejections.
template <class F>
auto guarded(const std::string& field, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ParseError&) {
        drop("invalid field: " + field);
    } catch (const ArgumentError&) {
        drop("invalid field: " + field);
    }
}

inline std::vector<std::string> opt_strings(const JsonReader& r, std::string_view key) {
    if (!r.has(key)) return {};
    return guarded(std::string(key), [&] { return r.at(key).strings(); });
}

inline std::string opt_string(const JsonReader& r, std::string_view key) {
    if (!r.has(key)) return {};
    return guarded(std::string(key), [&] { return r.at(key).str(); });
}

inline std::vector<NearbyRef> read_nearby(const JsonReader& r, std::string_view key) {
    std::vector<NearbyRef> out;
    if (!r.has(key)) return out;
    return guarded(std::string(key), [&] {
        for (const auto& it : r.at(key).items()) {
            NearbyRef n{it.at("poi").id<PoiTag>(), it.at("distance_km").number()};
            if (n.distance_km < 0) throw ArgumentError("negative distance");
            out.push_back(std::move(n));
        }
        return out;
    });
}

inline City read_city(const JsonReader& r) {
    City c;
    c.id = CityId(key_string(r, "id"));
    c.name = key_string(r, "name");
    c.coords = key_coords(r);
    return c;
}

inline Poi read_poi(const JsonReader& r, PoiKind kind) {
    Poi p;
    p.id = PoiId(key_string(r, "id"));
    p.city_id = CityId(key_string(r, "city_id"));
    p.kind = kind;
    if (r.has("kind")) {
        auto k = guarded("kind", [&] { return r.at("kind").str(); });
        if (parse_poi_kind(k) != kind) drop("invalid field: kind");
    }
    p.name = key_string(r, "name");
    p.coords = key_coords(r);
    if (!r.has("open_window")) drop("missing key field: open_window");
    p.open_window = guarded("open_window", [&] {
        auto w = r.at("open_window");
        return TimeWindow{w.at("open").int32(), w.at("close").int32()};
    });
    if (p.open_window.open < 0 || p.open_window.open >= p.open_window.close || p.open_window.close > kMinutesPerDay)
        drop("invalid field: open_window");
    if (r.has("rating")) p.rating = guarded("rating", [&] { return r.at("rating").number(); });
    if (p.rating < 0 || p.rating > 5) drop("invalid field: rating");
    if (r.has("avg_cost")) p.avg_cost = guarded("avg_cost", [&] { return r.at("avg_cost").yuan(); });
    if (p.avg_cost < Money{}) drop("invalid field: avg_cost");
    if (r.has("indoor")) p.indoor = guarded("indoor", [&] { return r.at("indoor").boolean(); });
    p.reviews = opt_strings(r, "reviews");
    p.image_refs = opt_strings(r, "image_refs");
    p.tags = opt_strings(r, "tags");
    p.address = opt_string(r, "address");
    p.phone = opt_string(r, "phone");

    if (kind == PoiKind::attraction) {
        AttractionInfo a;
        if (!r.has("tickets")) drop("invalid field: tickets");
        a.tickets = guarded("tickets", [&] {
            std::vector<Ticket> ts;
            for (const auto& t : r.at("tickets").items()) ts.push_back(Ticket{t.at("label").str(), t.at("price").yuan()});
            return ts;
        });
        if (a.tickets.empty()) drop("invalid field: tickets");
        for (const auto& t : a.tickets)
            if (t.price < Money{}) drop("invalid field: tickets");
        if (r.has("visit_minutes")) a.visit_minutes = guarded("visit_minutes", [&] { return r.at("visit_minutes").int32(); });
        if (a.visit_minutes <= 0 || a.visit_minutes >= kMinutesPerDay) drop("invalid field: visit_minutes");
        a.nearby_restaurants = read_nearby(r, "nearby_restaurants");
        a.nearby_hotels = read_nearby(r, "nearby_hotels");
        if (r.has("must_visit_rank")) a.must_visit_rank = guarded("must_visit_rank", [&] { return r.at("must_visit_rank").int32(); });
        p.attraction = std::move(a);
    } else if (kind == PoiKind::hotel) {
        HotelInfo h;
        if (r.has("hotel_type")) {
            auto t = parse_hotel_type(guarded("hotel_type", [&] { return r.at("hotel_type").str(); }));
            if (!t) drop("invalid field: hotel_type");
            h.hotel_type = *t;
        }
        if (!r.has("rooms")) drop("invalid field: rooms");
        h.rooms = guarded("rooms", [&] {
            std::vector<Room> rooms;
            for (const auto& it : r.at("rooms").items()) rooms.push_back(Room{it.at("room_name").str(), it.at("nightly_price").yuan()});
            return rooms;
        });
        if (h.rooms.empty()) drop("invalid field: rooms");
        for (const auto& room : h.rooms)
            if (room.nightly_price <= Money{}) drop("invalid field: rooms");
        p.hotel = std::move(h);
    }
    return p;
}

inline TransportLink read_link(const JsonReader& r) {
    TransportLink l;
    l.id = LinkId(key_string(r, "id"));
    l.from_city = CityId(key_string(r, "from_city"));
    l.to_city = CityId(key_string(r, "to_city"));
    l.from_station = opt_string(r, "from_station");
    l.to_station = opt_string(r, "to_station");
    l.number = opt_string(r, "number");
    if (r.has("mode")) {
        auto m = parse_transport_mode(guarded("mode", [&] { return r.at("mode").str(); }));
        if (!m) drop("invalid field: mode");
        l.mode = *m;
    }
    if (!r.has("depart")) drop("missing key field: depart");
    if (!r.has("duration_min")) drop("missing key field: duration_min");
    if (!r.has("price")) drop("missing key field: price");
    l.depart = guarded("depart", [&] { return r.at("depart").int32(); });
    l.duration_min = guarded("duration_min", [&] { return r.at("duration_min").int32(); });
    l.price = guarded("price", [&] { return r.at("price").yuan(); });
    if (l.depart < 0 || l.depart >= kMinutesPerDay) drop("invalid field: depart");
    if (l.duration_min <= 0) drop("invalid field: duration_min");
    if (l.price < Money{}) drop("invalid field: price");
    const int end = l.depart + l.duration_min;
    l.arrive = end % kMinutesPerDay;
    l.day_offset = end / kMinutesPerDay;
    if (r.has("arrive") && guarded("arrive", [&] { return r.at("arrive").int32(); }) != l.arrive)
        drop("invalid field: arrive");
    if (r.has("day_offset") && guarded("day_offset", [&] { return r.at("day_offset").int32(); }) != l.day_offset)
        drop("invalid field: day_offset");
    if (l.from_city == l.to_city) drop("invalid field: to_city");
    return l;
}

inline WeatherRecord read_weather(const JsonReader& r) {
    WeatherRecord w;
    w.city_id = CityId(key_string(r, "city_id"));
    if (!r.has("date")) drop("missing key field: date");
    w.date = guarded("date", [&] { return r.at("date").date(); });
    if (!r.has("condition")) drop("missing key field: condition");
    auto c = parse_weather_condition(guarded("condition", [&] { return r.at("condition").str(); }));
    if (!c || *c == WeatherCondition::unknown) drop("invalid field: condition");
    w.condition = *c;
    if (r.has("high_c")) w.high_c = guarded("high_c", [&] { return r.at("high_c").int32(); });
    if (r.has("low_c")) w.low_c = guarded("low_c", [&] { return r.at("low_c").int32(); });
    if (w.low_c > w.high_c) drop("invalid field: low_c");
    w.wind = opt_string(r, "wind");
    if (r.has("aqi")) w.aqi = guarded("aqi", [&] { return r.at("aqi").int32(); });
    if (w.aqi < 0) drop("invalid field: aqi");
    return w;
}

template <class F>
void for_each_record(const KbSources& src, KbDomain domain, RejectionReport& report, F&& accept) {
    auto it = src.text.find(domain);
    if (it == src.text.end()) return;
    std::istringstream in(it->second);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            report.rejected.push_back({domain, lineno, "", "malformed record"});
            continue;
        }
        std::string id;
        if (j.is_object()) {
            for (const char* k : {"id", "city_id"})
                if (j.contains(k) && j[k].is_string()) {
                    id = j[k].get<std::string>();
                    break;
                }
            if (domain == KbDomain::weather && j.contains("date") && j["date"].is_string())
                id += "@" + j["date"].get<std::string>();
        } else {
            report.rejected.push_back({domain, lineno, "", "malformed record"});
            continue;
        }
        try {
            accept(JsonReader(j), lineno, id);
        } catch (const RecordDropped& d) {
            report.rejected.push_back({domain, lineno, id, d.reason});
        }
    }
}

// Keeps the 3..5 nearest valid links of one kind; tops up from the city's
// POIs by straight-line distance when the source lists fewer than three.
inline bool repair_nearby(std::vector<NearbyRef>& refs, const Poi& attraction, PoiKind kind,
                          const std::map<PoiId, Poi>& pois, RejectionReport& report) {
    const std::string what = std::string(to_string(kind)) + "s";
    std::vector<NearbyRef> kept;
    std::set<PoiId> seen;
    for (const auto& n : refs) {
        auto it = pois.find(n.poi);
        if (it == pois.end() || it->second.kind != kind || it->second.city_id != attraction.city_id ||
            !seen.insert(n.poi).second) {
            report.repairs.push_back(attraction.id.str() + ": dropped nearby " + what + " link " + n.poi.str());
            continue;
        }
        kept.push_back(n);
    }
    auto by_distance = [](const NearbyRef& x, const NearbyRef& y) {
        return std::tie(x.distance_km, x.poi) < std::tie(y.distance_km, y.poi);
    };
    std::sort(kept.begin(), kept.end(), by_distance);
    if (kept.size() > 5) {
        report.repairs.push_back(attraction.id.str() + ": truncated nearby " + what + " from " +
                                 std::to_string(kept.size()) + " to 5");
        kept.resize(5);
    }
    if (kept.size() < 3) {
        std::vector<NearbyRef> pool;
        for (const auto& [id, p] : pois)
            if (p.kind == kind && p.city_id == attraction.city_id && !seen.count(id))
                pool.push_back({id, round_km(haversine_km(attraction.coords, p.coords))});
        std::sort(pool.begin(), pool.end(), by_distance);
        const std::size_t before = kept.size();
        for (std::size_t i = 0; i < pool.size() && kept.size() < 3; ++i) kept.push_back(pool[i]);
        if (kept.size() > before)
            report.repairs.push_back(attraction.id.str() + ": added " + std::to_string(kept.size() - before) +
                                     " nearby " + what + " by straight-line distance");
        std::sort(kept.begin(), kept.end(), by_distance);
    }
    refs = std::move(kept);
    return refs.size() >= 3;
}

}  // namespace detail

// Parses and cleans per-domain record streams. Incomplete or inconsistent
// records are dropped and listed in the report, never fatal.
inline KbLoadResult load_kb(const KbSources& src) {
    KbLoadResult result;
    auto& report = result.report;
    std::map<CityId, City> cities;
    std::map<PoiId, Poi> pois;
    std::vector<TransportLink> links;
    std::set<LinkId> link_ids;
    std::map<KnowledgeBase::WeatherKey, WeatherRecord> weather;

    detail::for_each_record(src, KbDomain::cities, report, [&](const JsonReader& r, std::size_t, const std::string&) {
        City c = detail::read_city(r);
        if (cities.count(c.id)) detail::drop("duplicate id");
        cities.emplace(c.id, std::move(c));
    });

    std::vector<std::pair<std::size_t, PoiId>> attraction_lines;
    auto poi_reader = [&](KbDomain domain, PoiKind kind) {
        detail::for_each_record(src, domain, report, [&](const JsonReader& r, std::size_t line, const std::string&) {
            Poi p = detail::read_poi(r, kind);
            if (!cities.count(p.city_id)) detail::drop("dangling reference: city_id");
            if (pois.count(p.id)) detail::drop("duplicate id");
            if (kind == PoiKind::attraction) attraction_lines.emplace_back(line, p.id);
            pois.emplace(p.id, std::move(p));
        });
    };
    poi_reader(KbDomain::restaurants, PoiKind::restaurant);
    poi_reader(KbDomain::hotels, PoiKind::hotel);
    poi_reader(KbDomain::attractions, PoiKind::attraction);

    for (const auto& [line, id] : attraction_lines) {
        auto& a = pois.at(id);
        const bool ok_r = detail::repair_nearby(a.attraction->nearby_restaurants, a, PoiKind::restaurant, pois, report);
        const bool ok_h = detail::repair_nearby(a.attraction->nearby_hotels, a, PoiKind::hotel, pois, report);
        if (!ok_r || !ok_h) {
            report.rejected.push_back({KbDomain::attractions, line, id.str(),
                                       ok_r ? "insufficient nearby hotels" : "insufficient nearby restaurants"});
            pois.erase(id);
        }
    }

    detail::for_each_record(src, KbDomain::transport, report, [&](const JsonReader& r, std::size_t, const std::string&) {
        TransportLink l = detail::read_link(r);
        if (!cities.count(l.from_city)) detail::drop("dangling reference: from_city");
        if (!cities.count(l.to_city)) detail::drop("dangling reference: to_city");
        if (!link_ids.insert(l.id).second) detail::drop("duplicate id");
        links.push_back(std::move(l));
    });

    detail::for_each_record(src, KbDomain::weather, report, [&](const JsonReader& r, std::size_t, const std::string&) {
        WeatherRecord w = detail::read_weather(r);
        if (!cities.count(w.city_id)) detail::drop("dangling reference: city_id");
        KnowledgeBase::WeatherKey key{w.city_id, w.date};
        if (weather.count(key)) detail::drop("duplicate id");
        weather.emplace(std::move(key), std::move(w));
    });

    std::vector<City> cv;
    for (auto& [id, c] : cities) cv.push_back(std::move(c));
    std::vector<Poi> pv;
    for (auto& [id, p] : pois) pv.push_back(std::move(p));
    std::vector<WeatherRecord> wv;
    for (auto& [k, w] : weather) wv.push_back(std::move(w));
    result.kb = KnowledgeBase::assemble(std::move(cv), std::move(pv), std::move(links), std::move(wv));
    return result;
}

inline std::string kb_file_name(KbDomain d) { return std::string(to_string(d)) + ".jsonl"; }

// Unreadable or missing domain files are fatal.
inline KbLoadResult load_kb_dir(const std::filesystem::path& dir) {
    KbSources src;
    for (std::size_t i = 0; i < kKbDomainNames.size(); ++i) {
        const auto d = static_cast<KbDomain>(i);
        const auto path = dir / kb_file_name(d);
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot read knowledge-base file " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        src.text[d] = ss.str();
    }
    return load_kb(src);
}

inline KbSources write_kb(const KnowledgeBase& kb) {
    KbSources out;
    auto append = [&](KbDomain d, const Json& j) { out.text[d] += j.dump() + "\n"; };
    for (std::size_t i = 0; i < kKbDomainNames.size(); ++i) out.text[static_cast<KbDomain>(i)];
    for (const auto& [id, c] : kb.cities()) append(KbDomain::cities, to_json(c));
    for (const auto& [id, p] : kb.pois()) {
        const KbDomain d = p.kind == PoiKind::attraction   ? KbDomain::attractions
                           : p.kind == PoiKind::restaurant ? KbDomain::restaurants
                                                           : KbDomain::hotels;
        append(d, to_json(p));
    }
    for (const auto& [id, l] : kb.links()) append(KbDomain::transport, to_json(l));
    for (const auto& [k, w] : kb.weather()) append(KbDomain::weather, to_json(w));
    return out;
}

inline void write_kb_dir(const KnowledgeBase& kb, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [d, text] : write_kb(kb).text) {
        std::ofstream out(dir / kb_file_name(d), std::ios::binary);
        if (!out) throw Error("cannot write " + (dir / kb_file_name(d)).string());
        out << text;
    }
}

}  // namespace itinera

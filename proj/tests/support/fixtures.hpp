#pragma once

// Hand-built knowledge base and plans with known verdicts.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "itinera/itinera.hpp"

#ifndef ITINERA_TEST_DATA
#error "ITINERA_TEST_DATA must point at the tests directory"
#endif

namespace fixture {

using namespace itinera;

inline std::filesystem::path data_dir() { return ITINERA_TEST_DATA; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw NotFoundError("missing test file " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Poi restaurant(const std::string& id, const std::string& city, const std::string& name, int avg,
                      const std::string& cuisine, GeoPoint at) {
    Poi p;
    p.id = PoiId(id);
    p.city_id = CityId(city);
    p.kind = PoiKind::restaurant;
    p.name = name;
    p.coords = at;
    p.open_window = {hhmm(6, 30), hhmm(22, 0)};
    p.rating = 4.0;
    p.avg_cost = Money::yuan(avg);
    p.tags = {cuisine};
    return p;
}

inline Poi hotel(const std::string& id, const std::string& city, const std::string& name, HotelType t, int price,
                 GeoPoint at) {
    Poi p;
    p.id = PoiId(id);
    p.city_id = CityId(city);
    p.kind = PoiKind::hotel;
    p.name = name;
    p.coords = at;
    p.rating = 4.2;
    p.hotel = HotelInfo{t, {Room{"Standard Twin Room", Money::yuan(price)}}};
    return p;
}

inline Poi attraction(const std::string& id, const std::string& city, const std::string& name, int ticket,
                      int minutes, bool indoor, double rating, GeoPoint at, const std::vector<std::string>& rests,
                      const std::vector<std::string>& hotels) {
    Poi p;
    p.id = PoiId(id);
    p.city_id = CityId(city);
    p.kind = PoiKind::attraction;
    p.name = name;
    p.coords = at;
    p.open_window = {hhmm(8, 0), hhmm(18, 0)};
    p.rating = rating;
    p.avg_cost = Money::yuan(ticket);
    p.indoor = indoor;
    p.reviews = {"Worth a morning.", "Crowded on holidays."};
    AttractionInfo a;
    a.tickets = {Ticket{"Adult Ticket", Money::yuan(ticket)}};
    a.visit_minutes = minutes;
    double km = 0.4;
    for (const auto& r : rests) a.nearby_restaurants.push_back({PoiId(r), km += 0.3});
    km = 0.5;
    for (const auto& h : hotels) a.nearby_hotels.push_back({PoiId(h), km += 0.4});
    p.attraction = a;
    return p;
}

inline TransportLink link(const std::string& id, const std::string& from, const std::string& to,
                          const std::string& number, Minutes dep, Minutes arr, int price) {
    TransportLink l;
    l.id = LinkId(id);
    l.from_city = CityId(from);
    l.to_city = CityId(to);
    l.from_station = from + " East";
    l.to_station = to + " Station";
    l.number = number;
    l.mode = number[0] == 'G' ? TransportMode::high_speed_rail : TransportMode::rail;
    l.depart = dep;
    l.arrive = arr;
    l.duration_min = arr - dep;
    l.price = Money::yuan(price);
    return l;
}

// Three cities: hz (home), sh and wh, three attractions each, enough
// restaurants for three meals, one chain and one upscale hotel per city,
// and a round trip in either direction.
inline KnowledgeBase mini_kb() {
    std::vector<City> cities{{CityId("hz"), "Hangzhou", {120.1551, 30.2741}},
                             {CityId("sh"), "Shanghai", {121.4737, 31.2304}},
                             {CityId("wh"), "Wuhan", {114.3054, 30.5931}}};
    std::vector<Poi> pois;
    for (const auto& [c, at] : std::vector<std::pair<std::string, GeoPoint>>{
             {"sh", {121.4737, 31.2304}}, {"wh", {114.3054, 30.5931}}, {"hz", {120.1551, 30.2741}}}) {
        const std::vector<std::string> rests{c + "-r1", c + "-r2", c + "-r3", c + "-r4"};
        const std::vector<std::string> hotels{c + "-h1", c + "-h2"};
        pois.push_back(restaurant(c + "-r1", c, c + " Morning Noodles", 30, "noodles", at));
        pois.push_back(restaurant(c + "-r2", c, c + " Riverside Kitchen", 80, "hunan", at));
        pois.push_back(restaurant(c + "-r3", c, c + " Hotpot House", 110, "hotpot", at));
        pois.push_back(restaurant(c + "-r4", c, c + " Garden Bistro", 95, "western", at));
        pois.push_back(hotel(c + "-h1", c, c + " Comfort Inn", HotelType::chain, 260, at));
        pois.push_back(hotel(c + "-h2", c, c + " Grand Hotel", HotelType::upscale, 720, at));
        pois.push_back(attraction(c + "-a1", c, c + " Old Town", 60, 120, false, 4.7, at, rests, hotels));
        pois.push_back(attraction(c + "-a2", c, c + " Museum", 0, 120, true, 4.5, at, rests, hotels));
        pois.push_back(attraction(c + "-a3", c, c + " Lake Park", 40, 90, false, 4.1, at, rests, hotels));
    }
    std::vector<TransportLink> links{
        link("L-hz-sh", "hz", "sh", "G7301", hhmm(7, 0), hhmm(8, 10), 73),
        link("L-sh-wh", "sh", "wh", "G1722", hhmm(19, 30), hhmm(22, 45), 300),
        link("L-wh-hz", "wh", "hz", "G1586", hhmm(19, 30), hhmm(22, 40), 280),
        link("L-hz-wh", "hz", "wh", "G1585", hhmm(7, 0), hhmm(10, 10), 280),
        link("L-wh-sh", "wh", "sh", "G1721", hhmm(19, 30), hhmm(22, 45), 300),
        link("L-sh-hz", "sh", "hz", "G7302", hhmm(19, 30), hhmm(20, 40), 73),
        link("L-sh-hz-k", "sh", "hz", "K8361", hhmm(20, 0), hhmm(22, 30), 25),
    };
    std::vector<WeatherRecord> weather;
    for (const auto& c : {"hz", "sh", "wh"})
        for (unsigned d = 1; d <= 3; ++d)
            weather.push_back({CityId(c), Date(2024, 5, d), 26, 17, WeatherCondition::sunny, "light breeze", 60});
    return KnowledgeBase::assemble(std::move(cities), std::move(pois), std::move(links), std::move(weather));
}

inline Activity act(ActivityKind k, const std::string& ref, const std::string& city, Minutes s, Minutes e, int yuan,
                    std::optional<MealSlot> meal = std::nullopt) {
    Activity a;
    a.kind = k;
    a.meal = meal;
    a.ref = ref;
    a.city_id = CityId(city);
    a.start = s;
    a.end = e;
    a.cost = Money::yuan(yuan);
    return a;
}

// Two days, hz -> sh -> wh -> hz, party of two. Satisfies every rule
// under all_pass_slots().
inline Plan all_pass_plan() {
    using K = ActivityKind;
    Plan p;
    p.query_id = "fixture";
    p.party_size = 2;
    p.days.push_back(DayPlan{Date(2024, 5, 1),
                             {act(K::transport, "L-hz-sh", "sh", hhmm(7, 0), hhmm(8, 10), 146),
                              act(K::meal, "sh-r1", "sh", hhmm(8, 40), hhmm(9, 20), 60, MealSlot::breakfast),
                              act(K::attraction, "sh-a1", "sh", hhmm(9, 50), hhmm(11, 50), 120),
                              act(K::meal, "sh-r2", "sh", hhmm(12, 20), hhmm(13, 20), 160, MealSlot::lunch),
                              act(K::attraction, "sh-a2", "sh", hhmm(13, 50), hhmm(15, 50), 0),
                              act(K::meal, "sh-r3", "sh", hhmm(17, 0), hhmm(18, 15), 220, MealSlot::dinner),
                              act(K::transport, "L-sh-wh", "wh", hhmm(19, 30), hhmm(22, 45), 600),
                              act(K::lodging, "wh-h1", "wh", hhmm(23, 15), hhmm(7, 0), 260)}});
    p.days.push_back(DayPlan{Date(2024, 5, 2),
                             {act(K::meal, "wh-r1", "wh", hhmm(7, 40), hhmm(8, 20), 60, MealSlot::breakfast),
                              act(K::attraction, "wh-a1", "wh", hhmm(8, 50), hhmm(10, 50), 120),
                              act(K::meal, "wh-r2", "wh", hhmm(11, 20), hhmm(12, 20), 160, MealSlot::lunch),
                              act(K::attraction, "wh-a2", "wh", hhmm(12, 50), hhmm(14, 50), 0),
                              act(K::meal, "wh-r3", "wh", hhmm(17, 0), hhmm(18, 15), 220, MealSlot::dinner),
                              act(K::transport, "L-wh-hz", "hz", hhmm(19, 30), hhmm(22, 40), 560)}});
    for (auto& d : p.days)
        for (auto& a : d.activities)
            if (a.kind == K::transport) a.detail = "G";
    return p;
}

inline IntentSlots all_pass_slots() {
    IntentSlots s;
    s.departure_city = CityId("hz");
    s.destination_cities = std::vector<CityId>{CityId("sh"), CityId("wh")};
    s.start_date = Date(2024, 5, 1);
    s.num_days = 2;
    s.party_size = 2;
    s.budget_total = Money::yuan(3000);  // plan total is 2686
    s.hotel_type = HotelPreference::chain;
    s.required_sites = std::set<PoiId>{PoiId("sh-a1")};
    s.excluded_sites = std::set<PoiId>{PoiId("wh-a3")};
    s.cuisine_prefs = std::vector<std::string>{};
    s.transport_pref = TransportPreference::any;
    s.pace = 2;
    return s;
}

// Shifts day 2's first attraction so it starts 10 minutes after breakfast.
inline Plan crowded_plan() {
    Plan p = all_pass_plan();
    auto& a = p.days[1].activities[1];
    a.start = hhmm(8, 30);
    a.end = hhmm(10, 30);
    return p;
}

struct Case {
    Plan plan;
    IntentSlots slots;
};

// Four plans with known verdicts:
//   0 passes everything
//   1 fails Budget only
//   2 fails TimeInterval only
//   3 fails TimeInterval and RequiredSites
inline std::vector<Case> four_plan_corpus() {
    std::vector<Case> out;
    out.push_back({all_pass_plan(), all_pass_slots()});
    auto tight = all_pass_slots();
    tight.budget_total = Money::yuan(2685);
    out.push_back({all_pass_plan(), tight});
    out.push_back({crowded_plan(), all_pass_slots()});
    auto wants_more = all_pass_slots();
    wants_more.required_sites->insert(PoiId("sh-a3"));
    out.push_back({crowded_plan(), wants_more});
    return out;
}

inline KnowledgeBase sample_kb() { return load_kb_dir(data_dir() / "fixtures" / "sample_kb").kb; }

}  // namespace fixture

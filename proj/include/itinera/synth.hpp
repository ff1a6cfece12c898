#pragma once

// Seeded generator for desk-scale knowledge bases. The output depends only
// on the seed and options: every draw goes through itinera::Rng and every
// stored real number is rounded before use.

#include <array>
#include <cctype>
#include <set>
#include <string>
#include <vector>

#include "itinera/kb.hpp"

namespace itinera {

struct SynthOptions {
    int restaurants_per_city = 0;  // 0: max(12, 3 * attractions)
    int hotels_per_city = 0;       // 0: max(9, attractions)
    Date weather_start{2024, 1, 1};
    int weather_days = 366;
};

namespace detail {

struct CitySeed {
    const char* name;
    double lon;
    double lat;
};

inline constexpr std::array<CitySeed, 24> kCitySeeds{{
    {"Beijing", 116.4074, 39.9042},   {"Shanghai", 121.4737, 31.2304}, {"Hangzhou", 120.1551, 30.2741},
    {"Wuhan", 114.3054, 30.5931},     {"Chengdu", 104.0665, 30.5723},  {"Xi'an", 108.9398, 34.3416},
    {"Nanjing", 118.7969, 32.0603},   {"Suzhou", 120.5853, 31.2989},   {"Guangzhou", 113.2644, 23.1291},
    {"Shenzhen", 114.0579, 22.5431},  {"Xiamen", 118.0894, 24.4798},   {"Chongqing", 106.5516, 29.5630},
    {"Tianjin", 117.2000, 39.0842},   {"Harbin", 126.5340, 45.8038},   {"Shenyang", 123.4315, 41.8057},
    {"Dalian", 121.6147, 38.9140},    {"Fuzhou", 119.2965, 26.0745},   {"Changsha", 112.9388, 28.2282},
    {"Nanchang", 115.8582, 28.6829},  {"Lanzhou", 103.8343, 36.0611},  {"Xining", 101.7782, 36.6171},
    {"Kunming", 102.8329, 24.8801},   {"Guiyang", 106.6302, 26.6477},  {"Qingdao", 120.3826, 36.0671},
}};

inline constexpr std::array<const char*, 16> kAttractionWords{
    "Jade", "Misty", "Golden", "Ancient", "Lotus", "Crane", "Dragon", "Pine",
    "River", "Lantern", "Peony", "Bamboo", "Silk", "Cloud", "Stone", "Phoenix"};

struct VenueNoun {
    const char* noun;
    bool indoor;
    const char* tag;
};

inline constexpr std::array<VenueNoun, 12> kVenueNouns{{
    {"Museum", true, "museum"},     {"Gallery", true, "gallery"},      {"Theater", true, "performance"},
    {"Aquarium", true, "aquarium"}, {"Palace Hall", true, "heritage"}, {"Science Center", true, "science"},
    {"Garden", false, "garden"},    {"Park", false, "park"},           {"Lake", false, "lake"},
    {"Forest Zoo", false, "zoo"},   {"Mountain", false, "mountain"},   {"Old Street", false, "street"},
}};

inline constexpr std::array<const char*, 8> kCuisines{"hotpot",  "hunan",   "sichuan", "cantonese",
                                                      "western", "noodles", "seafood", "dumplings"};

inline constexpr std::array<const char*, 10> kFamilyNames{"Wang", "Li", "Zhang", "Liu", "Chen",
                                                          "Yang", "Zhao", "Huang", "Zhou", "Wu"};

inline constexpr std::array<const char*, 8> kHotelBrands{"City Comfort Inn", "Fengyi", "Yishang", "Wyndham Garden",
                                                         "Hanting", "Atour", "Jinjiang", "Orange"};

inline constexpr std::array<const char*, 6> kAreas{"Riverside", "Old Town", "Station", "Lakeview", "Central",
                                                   "University"};

inline constexpr std::array<const char*, 6> kAttractionReviews{
    "Well kept grounds and plenty to see, worth a half day.",
    "Crowded at weekends, arrive early to avoid queues.",
    "Great for families, children loved the interactive areas.",
    "Easy to reach by metro and clearly signposted.",
    "Beautiful at sunset, bring a camera.",
    "Ticket is good value for what is on offer."};

inline constexpr std::array<const char*, 5> kRestaurantReviews{
    "Fresh ingredients and quick service.", "Portions are generous and prices fair.",
    "A bit noisy but the food makes up for it.", "Locals queue here, always a good sign.",
    "Comfortable for family dining."};

inline constexpr std::array<const char*, 4> kHotelReviews{
    "Clean, spacious rooms and attentive front desk.", "Convenient location near the metro.",
    "Breakfast selection could be better.", "Quiet at night, slept well."};

inline double jitter_coord(Rng& rng, double centre, double spread) {
    const double v = centre + (rng.unit() * 2 - 1) * spread;
    return std::round(v * 1e6) / 1e6;
}

inline Money half_yuan_steps(Rng& rng, int lo_yuan, int hi_yuan) {
    return Money::from_fen(rng.uniform(lo_yuan * 2, hi_yuan * 2) * 50);
}

template <std::size_t N>
std::vector<std::string> sample_reviews(Rng& rng, const std::array<const char*, N>& pool, int n) {
    std::vector<std::string> all(pool.begin(), pool.end());
    rng.shuffle(all);
    all.resize(static_cast<std::size_t>(n));
    return all;
}

inline std::vector<NearbyRef> nearest(const Poi& from, const std::vector<const Poi*>& pool, std::size_t k) {
    std::vector<NearbyRef> refs;
    for (const Poi* p : pool) refs.push_back({p->id, round_km(haversine_km(from.coords, p->coords))});
    std::sort(refs.begin(), refs.end(), [](const NearbyRef& a, const NearbyRef& b) {
        return std::tie(a.distance_km, a.poi) < std::tie(b.distance_km, b.poi);
    });
    if (refs.size() > k) refs.resize(k);
    return refs;
}

inline int seasonal_high(unsigned month) {
    static constexpr std::array<int, 12> kHigh{4, 7, 13, 20, 26, 30, 32, 31, 27, 21, 13, 6};
    return kHigh[month - 1];
}

}  // namespace detail

inline KnowledgeBase synth_kb(std::uint64_t seed, int n_cities, int attractions_per_city, SynthOptions opts = {}) {
    using namespace detail;
    if (n_cities < 2) throw ArgumentError("synth_kb needs at least 2 cities");
    if (attractions_per_city < 4) throw ArgumentError("synth_kb needs at least 4 attractions per city");
    if (opts.weather_days < 0) throw ArgumentError("weather_days must be non-negative");
    const int n_rest = opts.restaurants_per_city > 0 ? opts.restaurants_per_city : std::max(12, 3 * attractions_per_city);
    const int n_hotel = opts.hotels_per_city > 0 ? opts.hotels_per_city : std::max(9, attractions_per_city);
    if (n_rest < 5 || n_hotel < 5) throw ArgumentError("synth_kb needs at least 5 restaurants and hotels per city");

    Rng rng(seed);
    std::vector<City> cities;
    std::vector<Poi> pois;
    std::vector<TransportLink> links;
    std::vector<WeatherRecord> weather;

    auto two_digits = [](int i) {
        std::string s = std::to_string(i);
        return s.size() < 2 ? "0" + s : s;
    };

    for (int c = 0; c < n_cities; ++c) {
        City city;
        city.id = CityId("c" + two_digits(c));
        if (c < static_cast<int>(kCitySeeds.size())) {
            city.name = kCitySeeds[static_cast<std::size_t>(c)].name;
            city.coords = {kCitySeeds[static_cast<std::size_t>(c)].lon, kCitySeeds[static_cast<std::size_t>(c)].lat};
        } else {
            city.name = "City " + std::to_string(c + 1);
            city.coords = {jitter_coord(rng, 112, 8), jitter_coord(rng, 32, 6)};
        }
        cities.push_back(city);

        const std::size_t first = pois.size();
        std::set<std::string> names;
        auto unique_name = [&](auto make) {
            for (int attempt = 0;; ++attempt) {
                std::string n = make();
                if (attempt > 0 && names.count(n)) n += " " + std::to_string(attempt + 1);
                if (names.insert(n).second) return n;
            }
        };

        for (int i = 0; i < n_rest; ++i) {
            Poi p;
            p.id = PoiId(city.id.str() + "-r" + two_digits(i));
            p.city_id = city.id;
            p.kind = PoiKind::restaurant;
            const bool snack = i % 5 == 4;
            const std::string cuisine = kCuisines[static_cast<std::size_t>(rng.uniform(0, kCuisines.size() - 1))];
            const std::string family = kFamilyNames[static_cast<std::size_t>(rng.uniform(0, kFamilyNames.size() - 1))];
            p.name = unique_name([&] {
                return snack ? family + "'s Snack Bar (" + city.name + ")"
                             : family + "'s " + std::string(1, static_cast<char>(std::toupper(cuisine[0]))) +
                                   cuisine.substr(1) + " House (" + city.name + ")";
            });
            p.coords = {jitter_coord(rng, city.coords.lon, 0.12), jitter_coord(rng, city.coords.lat, 0.12)};
            if (snack) {
                p.open_window = {hhmm(9, 0) + 30 * static_cast<int>(rng.uniform(0, 2)), hhmm(21, 0) + 30 * static_cast<int>(rng.uniform(0, 2))};
                p.avg_cost = half_yuan_steps(rng, 12, 40);
                p.tags = {"snack"};
            } else {
                p.open_window = {hhmm(6, 0) + 30 * static_cast<int>(rng.uniform(0, 2)), hhmm(21, 0) + 30 * static_cast<int>(rng.uniform(0, 3))};
                p.avg_cost = Money::yuan(rng.uniform(35, 180));
                p.tags = {cuisine};
            }
            p.rating = static_cast<double>(rng.uniform(30, 50)) / 10.0;
            p.indoor = true;
            p.reviews = sample_reviews(rng, kRestaurantReviews, 2);
            p.image_refs = {"img://" + p.id.str() + "/1"};
            p.address = std::to_string(rng.uniform(1, 400)) + " " + kAreas[static_cast<std::size_t>(rng.uniform(0, kAreas.size() - 1))] + " Road, " + city.name;
            p.phone = "000-" + std::to_string(rng.uniform(10000000, 99999999));
            pois.push_back(std::move(p));
        }

        for (int i = 0; i < n_hotel; ++i) {
            Poi p;
            p.id = PoiId(city.id.str() + "-h" + two_digits(i));
            p.city_id = city.id;
            p.kind = PoiKind::hotel;
            HotelInfo h;
            h.hotel_type = static_cast<HotelType>(i % 3);
            const std::string brand = kHotelBrands[static_cast<std::size_t>(rng.uniform(0, kHotelBrands.size() - 1))];
            const std::string area = kAreas[static_cast<std::size_t>(rng.uniform(0, kAreas.size() - 1))];
            p.name = unique_name([&] { return brand + " Hotel (" + city.name + " " + area + " Branch)"; });
            p.coords = {jitter_coord(rng, city.coords.lon, 0.12), jitter_coord(rng, city.coords.lat, 0.12)};
            p.open_window = {0, kMinutesPerDay};
            const auto [lo, hi] = h.hotel_type == HotelType::chain     ? std::pair{150, 350}
                                  : h.hotel_type == HotelType::upscale ? std::pair{500, 1500}
                                                                       : std::pair{200, 600};
            const int n_rooms = static_cast<int>(rng.uniform(2, 4));
            static constexpr std::array<const char*, 4> kRoomNames{"Standard Queen Room", "Twin Room", "Deluxe King Room", "Family Suite"};
            Money price = Money::yuan(rng.uniform(lo, hi));
            for (int r = 0; r < n_rooms; ++r) {
                h.rooms.push_back({kRoomNames[static_cast<std::size_t>(r)], price});
                price += Money::yuan(rng.uniform(40, 300));
            }
            p.avg_cost = h.rooms.front().nightly_price;
            p.rating = static_cast<double>(rng.uniform(32, 50)) / 10.0;
            p.indoor = true;
            p.reviews = sample_reviews(rng, kHotelReviews, 2);
            p.image_refs = {"img://" + p.id.str() + "/1"};
            p.tags = {std::string(to_string(h.hotel_type))};
            p.phone = "000-" + std::to_string(rng.uniform(10000000, 99999999));
            p.hotel = std::move(h);
            pois.push_back(std::move(p));
        }

        std::vector<const Poi*> restaurants;
        std::vector<const Poi*> hotels;
        // pois may reallocate below, so nearby lists are built from copies
        std::vector<Poi> city_restaurants(pois.begin() + static_cast<std::ptrdiff_t>(first),
                                          pois.begin() + static_cast<std::ptrdiff_t>(first + static_cast<std::size_t>(n_rest)));
        std::vector<Poi> city_hotels(pois.begin() + static_cast<std::ptrdiff_t>(first + static_cast<std::size_t>(n_rest)), pois.end());
        for (const auto& p : city_restaurants) restaurants.push_back(&p);
        for (const auto& p : city_hotels) hotels.push_back(&p);

        std::vector<Poi> attractions;
        for (int i = 0; i < attractions_per_city; ++i) {
            Poi p;
            p.id = PoiId(city.id.str() + "-a" + two_digits(i));
            p.city_id = city.id;
            p.kind = PoiKind::attraction;
            // alternate halves of the noun table keep indoor/outdoor near 50/50
            const auto& venue = kVenueNouns[static_cast<std::size_t>((i % 2) * 6 + rng.uniform(0, 5))];
            const std::string word = kAttractionWords[static_cast<std::size_t>(rng.uniform(0, kAttractionWords.size() - 1))];
            p.name = unique_name([&] { return city.name + " " + word + " " + venue.noun; });
            p.coords = {jitter_coord(rng, city.coords.lon, 0.15), jitter_coord(rng, city.coords.lat, 0.15)};
            p.open_window = {hhmm(8, 0) + 30 * static_cast<int>(rng.uniform(0, 2)), hhmm(17, 0) + 30 * static_cast<int>(rng.uniform(0, 8))};
            p.rating = static_cast<double>(rng.uniform(30, 50)) / 10.0;
            p.indoor = venue.indoor;
            p.tags = {venue.tag};
            AttractionInfo a;
            const Money adult = rng.chance(0.15) ? Money{} : half_yuan_steps(rng, 10, 150);
            a.tickets.push_back({adult == Money{} ? "Free Admission" : "Adult Ticket", adult});
            if (adult > Money{}) a.tickets.push_back({"Student Ticket", Money::from_fen(adult.fen / 100 * 50)});
            a.visit_minutes = 60 + 30 * static_cast<int>(rng.uniform(0, 4));
            p.avg_cost = adult + Money::yuan(rng.uniform(0, 40));
            a.nearby_restaurants = nearest(p, restaurants, static_cast<std::size_t>(rng.uniform(3, 5)));
            a.nearby_hotels = nearest(p, hotels, static_cast<std::size_t>(rng.uniform(3, 5)));
            if (i < 3) a.must_visit_rank = i + 1;
            p.reviews = sample_reviews(rng, kAttractionReviews, 3);
            p.image_refs = {"img://" + p.id.str() + "/1", "img://" + p.id.str() + "/2"};
            p.address = std::to_string(rng.uniform(1, 400)) + " " + kAreas[static_cast<std::size_t>(rng.uniform(0, kAreas.size() - 1))] + " Avenue, " + city.name;
            p.attraction = std::move(a);
            attractions.push_back(std::move(p));
        }
        for (auto& a : attractions) pois.push_back(std::move(a));
    }

    int link_seq = 0;
    auto make_link = [&](const City& from, const City& to, TransportMode mode, Minutes depart, int duration, Money price) {
        TransportLink l;
        char id[32];
        std::snprintf(id, sizeof id, "L%05d", ++link_seq);
        l.id = LinkId(id);
        l.from_city = from.id;
        l.to_city = to.id;
        l.mode = mode;
        const bool fast = mode == TransportMode::high_speed_rail;
        l.from_station = from.name + (fast ? " South" : " Railway Station");
        l.to_station = to.name + (fast ? " South" : " Railway Station");
        l.number = (fast ? "G" : "K") + std::to_string(rng.uniform(fast ? 1000 : 100, fast ? 9999 : 999));
        l.depart = depart;
        l.duration_min = duration;
        l.arrive = (depart + duration) % kMinutesPerDay;
        l.day_offset = (depart + duration) / kMinutesPerDay;
        l.price = price;
        links.push_back(std::move(l));
    };
    auto slot = [&](Minutes lo, Minutes hi) { return lo + 5 * static_cast<int>(rng.uniform(0, (hi - lo) / 5)); };

    std::map<std::pair<int, int>, int> base_duration;
    for (int i = 0; i < n_cities; ++i)
        for (int j = i + 1; j < n_cities; ++j) base_duration[{i, j}] = static_cast<int>(rng.uniform(40, 120));

    for (int i = 0; i < n_cities; ++i) {
        for (int j = 0; j < n_cities; ++j) {
            if (i == j) continue;
            const int fast = base_duration.at({std::min(i, j), std::max(i, j)});
            const int slow = std::min(180, fast * 3 / 2);
            const auto& from = cities[static_cast<std::size_t>(i)];
            const auto& to = cities[static_cast<std::size_t>(j)];
            auto fast_price = [&] { return Money::from_fen(fast * 90 + rng.uniform(0, 40) * 50); };
            auto slow_price = [&] { return Money::from_fen((fast * 40 + rng.uniform(0, 20) * 50) / 50 * 50); };
            make_link(from, to, TransportMode::high_speed_rail, slot(hhmm(6, 30), hhmm(8, 0)), fast, fast_price());
            make_link(from, to, TransportMode::high_speed_rail, slot(hhmm(11, 0), hhmm(15, 0)), fast, fast_price());
            make_link(from, to, TransportMode::high_speed_rail, slot(hhmm(19, 30), hhmm(21, 0)), fast, fast_price());
            make_link(from, to, TransportMode::rail, slot(hhmm(18, 30), hhmm(19, 45)), slow, slow_price());
            make_link(from, to, TransportMode::high_speed_rail, slot(hhmm(6, 0), hhmm(7, 0)), fast, fast_price());
            make_link(from, to, TransportMode::high_speed_rail, slot(hhmm(21, 15), hhmm(22, 15)), fast, fast_price());
            if (rng.chance(0.5)) {
                const bool hs = rng.chance(0.5);
                make_link(from, to, hs ? TransportMode::high_speed_rail : TransportMode::rail, slot(0, hhmm(23, 55)),
                          hs ? fast : slow, hs ? fast_price() : slow_price());
            }
        }
    }

    static constexpr std::array<const char*, 4> kWinds{"North wind level 2", "East wind level 1", "South wind level 3",
                                                       "West wind level 1"};
    for (const auto& city : cities) {
        for (int d = 0; d < opts.weather_days; ++d) {
            WeatherRecord w;
            w.city_id = city.id;
            w.date = opts.weather_start.plus_days(d);
            const double u = rng.unit();
            w.condition = u < 0.35   ? WeatherCondition::sunny
                          : u < 0.65 ? WeatherCondition::cloudy
                          : u < 0.87 ? WeatherCondition::rain
                          : u < 0.92 ? WeatherCondition::snow
                                     : WeatherCondition::other;
            const std::chrono::year_month_day ymd{w.date.sys()};
            w.high_c = seasonal_high(static_cast<unsigned>(ymd.month())) + static_cast<int>(rng.uniform(-5, 5));
            w.low_c = w.high_c - static_cast<int>(rng.uniform(4, 10));
            w.wind = kWinds[static_cast<std::size_t>(rng.uniform(0, 3))];
            w.aqi = static_cast<int>(rng.uniform(20, 180));
            weather.push_back(std::move(w));
        }
    }

    return KnowledgeBase::assemble(std::move(cities), std::move(pois), std::move(links), std::move(weather));
}

}  // namespace itinera

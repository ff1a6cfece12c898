#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace itinera;

namespace {

const Poi& jiufeng(const KnowledgeBase& kb) { return kb.poi(PoiId("wh-a-jiufeng-zoo")); }

}  // namespace

// ---------------------------------------------------------------------------
// Core values
// ---------------------------------------------------------------------------

TEST(Money, ExactDecimalConversion) {
    EXPECT_EQ(Money::from_yuan(60.0).fen, 6000);
    EXPECT_EQ(Money::from_yuan(0.1).fen + Money::from_yuan(0.2).fen, 30);
    EXPECT_EQ(Money::from_yuan(1672).fen, 167200);
    EXPECT_EQ(Money::from_yuan(12.34).str(), "12.34");
    EXPECT_EQ(Money::from_fen(-5).str(), "-0.05");
    EXPECT_THROW(Money::from_yuan(0.001), ArgumentError);
    EXPECT_THROW(Money::from_yuan(std::nan("")), ArgumentError);
    EXPECT_EQ((Money::yuan(3) * 4 - Money::yuan(2)).fen, 1000);
}

TEST(Date, StrictParsingAndArithmetic) {
    EXPECT_EQ(Date::parse("2024-01-01").str(), "2024-01-01");
    EXPECT_EQ(Date::parse("2024-02-28").plus_days(1).str(), "2024-02-29");
    EXPECT_EQ(Date::parse("2023-12-31").plus_days(1), Date(2024, 1, 1));
    for (const char* bad : {"2024-1-01", "2024-02-30", "20240101", "2024-01-01x", ""})
        EXPECT_THROW(Date::parse(bad), Error) << bad;
}

TEST(Clock, FormatsMinutes) {
    EXPECT_EQ(format_hhmm(hhmm(22, 30)), "22:30");
    EXPECT_EQ(format_hhmm(0), "00:00");
}

TEST(Rng, SameSeedSameStream) {
    Rng a(7), b(7), c(8);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.uniform(-5, 5);
        EXPECT_EQ(x, b.uniform(-5, 5));
        EXPECT_GE(x, -5);
        EXPECT_LE(x, 5);
        differs = differs || c.uniform(-5, 5) != x;
    }
    EXPECT_TRUE(differs);
}

TEST(Json, CanonicalFormSortsKeys) {
    const Json j = parse_json(R"({"b":1,"a":{"d":2,"c":3}})");
    EXPECT_EQ(canonical(j), "{\n  \"a\": {\n    \"c\": 3,\n    \"d\": 2\n  },\n  \"b\": 1\n}\n");
    EXPECT_THROW(parse_json("{\"a\":"), ParseError);
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

TEST(KbLoad, AppendixAttractionAccepted) {
    const auto loaded = load_kb_dir(fixture::data_dir() / "fixtures" / "sample_kb");
    EXPECT_TRUE(loaded.report.rejected.empty()) << loaded.report.render();
    const Poi& z = jiufeng(loaded.kb);
    EXPECT_EQ(z.name, "Jiufeng Forest Zoo");
    EXPECT_DOUBLE_EQ(z.coords.lon, 114.49225);
    EXPECT_DOUBLE_EQ(z.coords.lat, 30.500436);
    EXPECT_DOUBLE_EQ(z.rating, 3.8);
    EXPECT_EQ(z.avg_cost, Money::yuan(83));
    ASSERT_TRUE(z.attraction);
    EXPECT_EQ(z.attraction->tickets.front().label, "Adult Ticket");
    EXPECT_EQ(z.attraction->tickets.front().price, Money::yuan(60));
    EXPECT_EQ(z.attraction->must_visit_rank, 1);
    EXPECT_EQ(z.attraction->nearby_restaurants.size(), 3u);
    // Six hotels listed, trimmed to the five nearest.
    EXPECT_EQ(z.attraction->nearby_hotels.size(), 5u);
    ASSERT_EQ(loaded.report.repairs.size(), 1u);
    EXPECT_NE(loaded.report.repairs[0].find("truncated nearby hotels from 6 to 5"), std::string::npos);
    for (const auto& n : z.attraction->nearby_hotels) EXPECT_NE(n.poi.str(), "wh-h-yishang-convention");
}

TEST(KbLoad, AppendixHotelRooms) {
    const auto kb = fixture::sample_kb();
    const Poi& h = kb.poi(PoiId("sh-h-zunmao"));
    ASSERT_TRUE(h.hotel);
    EXPECT_EQ(h.hotel->hotel_type, HotelType::upscale);
    EXPECT_EQ(h.hotel->rooms.size(), 5u);
    EXPECT_EQ(h.hotel->cheapest_room(), Money::yuan(608));
    EXPECT_EQ(h.hotel->rooms.back().nightly_price, Money::yuan(2888));
    const Poi& r = kb.poi(PoiId("bj-r-xiabu"));
    EXPECT_EQ(r.open_window.open, hhmm(10, 0));
    EXPECT_EQ(r.open_window.close, hhmm(21, 0));
    EXPECT_EQ(r.avg_cost, Money::yuan(64));
    EXPECT_DOUBLE_EQ(r.rating, 4.5);
}

TEST(KbLoad, TwoRecordsWithoutHoursAreDropped) {
    const auto loaded = load_kb_dir(fixture::data_dir() / "fixtures" / "load_10");
    EXPECT_EQ(loaded.kb.pois().size(), 8u);
    ASSERT_EQ(loaded.report.rejected.size(), 2u);
    for (const auto& r : loaded.report.rejected) {
        EXPECT_EQ(r.domain, KbDomain::restaurants);
        EXPECT_EQ(r.reason, "missing key field: open_window");
    }
    EXPECT_EQ(loaded.report.rejected[0].line, 4u);
    EXPECT_EQ(loaded.report.rejected[1].line, 8u);
    EXPECT_EQ(loaded.report.rejected[0].id, "wh-r04");
}

TEST(KbLoad, EmptyNameIsMissingKeyField) {
    KbSources src;
    src.text[KbDomain::cities] = R"({"id":"x","name":"X","coords":{"lon":1,"lat":2}})"
                                 "\n";
    src.text[KbDomain::restaurants] =
        R"({"id":"r1","city_id":"x","name":"","coords":{"lon":1,"lat":2},"open_window":{"open":0,"close":600}})"
        "\n";
    const auto loaded = load_kb(src);
    EXPECT_TRUE(loaded.kb.pois().empty());
    ASSERT_EQ(loaded.report.rejected.size(), 1u);
    EXPECT_EQ(loaded.report.rejected[0].reason.rfind("missing key field", 0), 0u);
}

TEST(KbLoad, MalformedAndDanglingRecords) {
    KbSources src;
    src.text[KbDomain::cities] = "{not json\n" R"({"id":"x","name":"X","coords":{"lon":1,"lat":2}})" "\n";
    src.text[KbDomain::restaurants] =
        R"({"id":"r1","city_id":"nowhere","name":"A","coords":{"lon":1,"lat":2},"open_window":{"open":0,"close":600}})"
        "\n";
    src.text[KbDomain::transport] =
        R"({"id":"t","from_city":"x","to_city":"x","number":"G1","mode":"high_speed_rail","depart":600,"arrive":500,"duration_min":60,"price":10})"
        "\n";
    const auto loaded = load_kb(src);
    EXPECT_EQ(loaded.kb.cities().size(), 1u);
    EXPECT_TRUE(loaded.kb.pois().empty());
    EXPECT_TRUE(loaded.kb.links().empty());
    ASSERT_EQ(loaded.report.rejected.size(), 3u);
    EXPECT_EQ(loaded.report.rejected[0].reason, "malformed record");
    EXPECT_EQ(loaded.report.rejected[1].reason, "dangling reference: city_id");
}

TEST(KbLoad, RoundTripIsIdempotent) {
    for (const auto& kb : {fixture::sample_kb(), synth_kb(4, 3, 5)}) {
        const auto again = load_kb(write_kb(kb));
        EXPECT_TRUE(again.report.empty()) << again.report.render();
        EXPECT_TRUE(again.kb == kb);
    }
}

TEST(KbLoad, MissingDirectoryIsAnError) {
    EXPECT_THROW(load_kb_dir(fixture::data_dir() / "fixtures" / "no_such_kb"), Error);
}

// ---------------------------------------------------------------------------
// Synthetic knowledge bases
// ---------------------------------------------------------------------------

TEST(Synth, Deterministic) {
    EXPECT_TRUE(synth_kb(1, 2, 4) == synth_kb(1, 2, 4));
    EXPECT_EQ(write_kb(synth_kb(1, 2, 4)).text, write_kb(synth_kb(1, 2, 4)).text);
}

TEST(Synth, SeedChangesNames) {
    auto names = [](const KnowledgeBase& kb) {
        std::set<std::string> out;
        for (const auto& [id, p] : kb.pois()) out.insert(p.name);
        return out;
    };
    EXPECT_NE(names(synth_kb(2, 2, 4)), names(synth_kb(3, 2, 4)));
}

TEST(Synth, ShapeAndLinkage) {
    const auto kb = synth_kb(1, 8, 10);
    EXPECT_EQ(kb.cities().size(), 8u);
    int attractions = 0;
    for (const auto& [id, p] : kb.pois()) {
        if (p.kind != PoiKind::attraction) continue;
        ++attractions;
        ASSERT_TRUE(p.attraction);
        EXPECT_GE(p.attraction->nearby_hotels.size(), 3u);
        EXPECT_LE(p.attraction->nearby_hotels.size(), 5u);
        EXPECT_GE(p.attraction->nearby_restaurants.size(), 3u);
        EXPECT_LE(p.attraction->nearby_restaurants.size(), 5u);
        EXPECT_FALSE(p.attraction->tickets.empty());
    }
    EXPECT_EQ(attractions, 80);
    for (const auto& [id, l] : kb.links()) EXPECT_FALSE(l.from_city == l.to_city);
}

TEST(Synth, ReferentialIntegrityByScan) {
    const auto kb = synth_kb(9, 6, 7);
    for (const auto& [id, p] : kb.pois()) {
        EXPECT_TRUE(kb.cities().count(p.city_id));
        if (!p.attraction) continue;
        for (const auto* list : {&p.attraction->nearby_restaurants, &p.attraction->nearby_hotels})
            for (const auto& n : *list) {
                ASSERT_TRUE(kb.pois().count(n.poi));
                EXPECT_EQ(kb.pois().at(n.poi).city_id, p.city_id);
            }
    }
    for (const auto& [id, l] : kb.links()) {
        EXPECT_TRUE(kb.cities().count(l.from_city));
        EXPECT_TRUE(kb.cities().count(l.to_city));
    }
    for (const auto& [key, w] : kb.weather()) EXPECT_TRUE(kb.cities().count(w.city_id));
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

TEST(Nearby, AppendixRestaurantsAtOneAndAHalfKm) {
    const auto kb = fixture::sample_kb();
    const auto r = nearby_pois(kb, PoiId("wh-a-jiufeng-zoo"), PoiKind::restaurant, 3);
    ASSERT_EQ(r.size(), 3u);
    EXPECT_DOUBLE_EQ(r.front().distance_km, 1.5);
    EXPECT_TRUE(nearby_pois(kb, PoiId("wh-a-jiufeng-zoo"), PoiKind::hotel, 0).empty());
    const auto h = nearby_pois(kb, PoiId("wh-a-jiufeng-zoo"), PoiKind::hotel, 2);
    EXPECT_DOUBLE_EQ(h[0].distance_km, 0.9);
    EXPECT_DOUBLE_EQ(h[1].distance_km, 0.9);
    EXPECT_THROW(nearby_pois(kb, PoiId("bj-r-xiabu"), PoiKind::hotel, 3), NotFoundError);
    EXPECT_THROW(nearby_pois(kb, PoiId("nope"), PoiKind::hotel, 3), NotFoundError);
}

TEST(Nearby, PrefixOfHaversineSort) {
    const auto kb = synth_kb(11, 5, 8);
    for (const auto& [id, a] : kb.pois()) {
        if (a.kind != PoiKind::attraction) continue;
        for (auto kind : {PoiKind::restaurant, PoiKind::hotel}) {
            std::vector<std::pair<double, std::string>> all;
            for (const auto& [pid, p] : kb.pois())
                if (p.kind == kind && p.city_id == a.city_id)
                    all.push_back({std::round(oracle::haversine(a.coords.lon, a.coords.lat, p.coords.lon, p.coords.lat) *
                                              1000.0) / 1000.0,
                                   pid.str()});
            std::sort(all.begin(), all.end());
            for (std::size_t limit = 0; limit <= 6; ++limit) {
                const auto got = nearby_pois(kb, id, kind, limit);
                const auto stored = kind == PoiKind::restaurant ? a.attraction->nearby_restaurants.size()
                                                                : a.attraction->nearby_hotels.size();
                ASSERT_EQ(got.size(), std::min(limit, stored));
                for (std::size_t i = 0; i < got.size(); ++i) {
                    EXPECT_EQ(got[i].poi.str(), all[i].second);
                    EXPECT_NEAR(got[i].distance_km, all[i].first, 1e-9);
                }
            }
        }
    }
}

TEST(Transport, AppendixLateTrain) {
    const auto kb = fixture::sample_kb();
    const auto links = find_transport(kb, CityId("hangzhou"), CityId("shanghai"), hhmm(22, 0));
    ASSERT_EQ(links.size(), 1u);
    EXPECT_EQ(links[0]->number, "G7382");
    EXPECT_EQ(links[0]->depart, hhmm(22, 30));
    EXPECT_EQ(links[0]->arrive, hhmm(23, 43));
    EXPECT_EQ(links[0]->duration_min, 73);
    EXPECT_EQ(links[0]->price, Money::from_yuan(60.0));
    EXPECT_TRUE(find_transport(kb, CityId("hangzhou"), CityId("shanghai"), hhmm(22, 31)).empty());
    EXPECT_TRUE(find_transport(kb, CityId("wuhan"), CityId("wuhan"), 0).empty());
    EXPECT_THROW(find_transport(kb, CityId("atlantis"), CityId("wuhan"), 0), NotFoundError);
}

TEST(Transport, MatchesLinearScan) {
    const auto kb = synth_kb(12, 6, 4);
    Rng rng(5);
    std::vector<CityId> cities;
    for (const auto& [id, c] : kb.cities()) cities.push_back(id);
    for (int i = 0; i < 200; ++i) {
        const auto& a = rng.pick(cities);
        const auto& b = rng.pick(cities);
        const auto t = static_cast<Minutes>(rng.uniform(0, kMinutesPerDay - 1));
        const auto got = find_transport(kb, a, b, t);
        auto want = oracle::scan_links(kb, a, b, t);
        std::set<std::string> g, w;
        for (const auto* l : got) g.insert(l->id.str());
        for (const auto* l : want) w.insert(l->id.str());
        EXPECT_EQ(g, w);
        for (std::size_t k = 1; k < got.size(); ++k) EXPECT_LE(got[k - 1]->depart, got[k]->depart);
    }
}

TEST(Weather, AppendixRecord) {
    const auto kb = fixture::sample_kb();
    const auto w = weather_on(kb, CityId("beijing"), Date(2024, 1, 1));
    EXPECT_EQ(w.high_c, 2);
    EXPECT_EQ(w.low_c, -7);
    EXPECT_EQ(w.condition, WeatherCondition::cloudy);
    EXPECT_EQ(w.wind, "West wind level 1");
    EXPECT_EQ(w.aqi, 103);
    const auto none = weather_on(kb, CityId("beijing"), Date(2030, 1, 1));
    EXPECT_FALSE(none.known());
    EXPECT_EQ(none.condition, WeatherCondition::unknown);
}

TEST(Weather, MatchesScan) {
    const auto kb = synth_kb(13, 4, 4);
    Rng rng(6);
    std::vector<CityId> cities;
    for (const auto& [id, c] : kb.cities()) cities.push_back(id);
    for (int i = 0; i < 100; ++i) {
        const auto& c = rng.pick(cities);
        const Date d = Date(2024, 1, 1).plus_days(static_cast<int>(rng.uniform(-30, 400)));
        const auto got = weather_on(kb, c, d);
        const auto want = oracle::scan_weather(kb, c, d);
        if (want) {
            EXPECT_EQ(got, *want);
        } else {
            EXPECT_FALSE(got.known());
        }
    }
}

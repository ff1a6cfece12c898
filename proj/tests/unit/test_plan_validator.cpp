#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace itinera;
using K = ActivityKind;

namespace {

// One day that breaks all thirteen rules under all_fail_slots().
Plan all_fail_plan() {
    Plan p;
    p.query_id = "bad";
    p.party_size = 2;
    p.days.push_back(DayPlan{Date(2024, 5, 1),
                             {fixture::act(K::attraction, "wh-a3", "sh", hhmm(10, 0), hhmm(11, 0), 100),
                              fixture::act(K::attraction, "wh-a3", "sh", hhmm(11, 10), hhmm(12, 0), 100),
                              fixture::act(K::transport, "ghost-train", "sh", hhmm(13, 0), hhmm(14, 0), 50),
                              fixture::act(K::lodging, "wh-h1", "sh", hhmm(22, 0), hhmm(7, 0), 260)}});
    return p;
}

IntentSlots all_fail_slots() {
    auto s = fixture::all_pass_slots();
    s.budget_total = Money{};
    s.hotel_type = HotelPreference::upscale;
    return s;
}

std::vector<fixture::Case> copies(const fixture::Case& c, int n) { return std::vector<fixture::Case>(n, c); }

std::vector<PlanReport> evaluate_all(const std::vector<fixture::Case>& cases, const KnowledgeBase& kb) {
    std::vector<PlanReport> out;
    for (const auto& c : cases) out.push_back(evaluate_plan(c.plan, c.slots, kb));
    return out;
}

const KnowledgeBase& mini() {
    static const KnowledgeBase kb = fixture::mini_kb();
    return kb;
}

}  // namespace

// ---------------------------------------------------------------------------
// Cost ledger
// ---------------------------------------------------------------------------

TEST(Ledger, EmptyPlanIsZero) {
    Plan p;
    p.days.push_back(DayPlan{Date(2024, 5, 1), {}});
    const auto l = total_cost(p, mini());
    EXPECT_EQ(l, CostLedger{});
}

TEST(Ledger, LateTrainForTwo) {
    const auto kb = fixture::sample_kb();
    Plan p;
    p.party_size = 2;
    p.days.push_back(DayPlan{Date(2024, 5, 1), {make_transport(kb.link(LinkId("G7382-hz-sh")), 2)}});
    const auto l = total_cost(p, kb);
    EXPECT_EQ(l.transport.str(), "120.00");
    EXPECT_EQ(l.total, Money::yuan(120));
    EXPECT_EQ(p.days[0].activities[0].detail, "G7382");
}

TEST(Ledger, TotalIsFoldOverActivities) {
    const gen::Pools pools(mini());
    Rng rng(21);
    for (int t = 0; t < 50; ++t) {
        Plan p;
        p.days.push_back(DayPlan{Date(2024, 5, 1), {}});
        std::int64_t sum = 0, lodging = 0;
        for (int i = 0; i < 20; ++i) {
            auto a = gen::random_activity(rng, pools, mini());
            sum += a.cost.fen;
            if (a.is_lodging()) lodging += a.cost.fen;
            p.days[0].activities.push_back(a);
        }
        const auto l = tally_costs(p);
        EXPECT_EQ(l.total.fen, sum);
        EXPECT_EQ(l.lodging.fen, lodging);
        EXPECT_EQ(l.total, l.transport + l.tickets + l.meals + l.lodging);
    }
}

TEST(Ledger, DanglingReferenceIsValidationError) {
    Plan p = fixture::all_pass_plan();
    p.days[0].activities[2].ref = "nowhere";
    EXPECT_THROW(total_cost(p, mini()), ValidationError);
    EXPECT_NO_THROW(tally_costs(p));
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

TEST(PlanJson, RoundTripAndFixpoint) {
    const Plan p = fixture::all_pass_plan();
    const std::string bytes = serialize_plan(p);
    EXPECT_EQ(parse_plan(bytes), p);
    EXPECT_EQ(serialize_plan(parse_plan(bytes)), bytes);
}

TEST(PlanJson, WorkedExampleRoundTrips) {
    const std::string bytes = fixture::slurp(fixture::data_dir() / "golden" / "worked_example" / "plan.json");
    const Plan p = parse_plan(bytes);
    EXPECT_EQ(serialize_plan(p), bytes);
}

TEST(PlanJson, RandomPlansRoundTrip) {
    const gen::Pools pools(mini());
    Rng rng(22);
    for (int i = 0; i < 100; ++i) {
        const Plan p = gen::random_plan(rng, pools, mini());
        const auto bytes = serialize_plan(p);
        const Plan q = parse_plan(bytes);
        ASSERT_EQ(q, p);
        EXPECT_EQ(serialize_plan(q), bytes);
    }
}

TEST(PlanJson, TruncatedStreamIsParseError) {
    const std::string bytes = serialize_plan(fixture::all_pass_plan());
    for (std::size_t cut : {std::size_t{0}, std::size_t{1}, bytes.size() / 2, bytes.size() - 3})
        EXPECT_THROW(parse_plan(bytes.substr(0, cut)), ParseError) << cut;
}

TEST(PlanJson, StructuralErrorsCarryPath) {
    Json j = to_json(fixture::all_pass_plan());
    auto broken = j;
    broken["days"][1]["activities"][0]["start"] = 2000;
    try {
        plan_from_json(JsonReader(broken));
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.path, "/days/1/activities/0/start");
    }
    broken = j;
    broken["days"][0]["activities"][1].erase("meal");
    EXPECT_THROW(plan_from_json(JsonReader(broken)), ParseError);
    broken = j;
    broken["days"][0]["activities"][1]["cost_fen"] = -1;
    EXPECT_THROW(plan_from_json(JsonReader(broken)), ParseError);
    broken = j;
    std::swap(broken["days"][0]["activities"][1], broken["days"][0]["activities"][2]);
    EXPECT_THROW(plan_from_json(JsonReader(broken)), ParseError);
    broken = j;
    broken["days"] = Json::array();
    EXPECT_THROW(plan_from_json(JsonReader(broken)), ParseError);
}

// ---------------------------------------------------------------------------
// Checkers
// ---------------------------------------------------------------------------

TEST(Checkers, TwentyMinuteGapFailsTimeInterval) {
    Plan p;
    p.days.push_back(DayPlan{Date(2024, 5, 1),
                             {fixture::act(K::attraction, "sh-a1", "sh", hhmm(8, 0), hhmm(10, 0), 0),
                              fixture::act(K::attraction, "sh-a2", "sh", hhmm(10, 20), hhmm(12, 0), 0)}});
    const auto r = check(p, IntentSlots{}, mini(), ConstraintId::TimeInterval);
    EXPECT_FALSE(r.passed);
    ASSERT_EQ(r.diagnostics.size(), 1u);
    EXPECT_EQ(r.diagnostics[0].day, 0);
    EXPECT_EQ(r.diagnostics[0].activity, 1);
    EXPECT_NE(r.diagnostics[0].message.find("activity 1"), std::string::npos);
    p.days[0].activities[1].start = hhmm(10, 30);
    EXPECT_TRUE(check(p, IntentSlots{}, mini(), ConstraintId::TimeInterval).passed);
}

TEST(Checkers, NightsBeforeEveryDayButTheLast) {
    Plan p;
    for (int d = 0; d < 3; ++d) p.days.push_back(DayPlan{Date(2024, 5, 1).plus_days(d), {}});
    p.days[0].activities.push_back(fixture::act(K::lodging, "sh-h1", "sh", hhmm(22, 0), hhmm(7, 0), 260));
    p.days[1].activities.push_back(fixture::act(K::lodging, "wh-h1", "wh", hhmm(22, 0), hhmm(7, 0), 260));
    EXPECT_TRUE(check(p, IntentSlots{}, mini(), ConstraintId::Accommodation).passed);
    p.days[1].activities.clear();
    const auto r = check(p, IntentSlots{}, mini(), ConstraintId::Accommodation);
    EXPECT_FALSE(r.passed);
    ASSERT_EQ(r.diagnostics.size(), 1u);
    EXPECT_EQ(r.diagnostics[0].day, 1);
}

TEST(Checkers, HotelMayRepeatOnConsecutiveNightsOnly) {
    Plan p;
    for (int d = 0; d < 4; ++d) p.days.push_back(DayPlan{Date(2024, 5, 1).plus_days(d), {}});
    auto night = [&](int d, const char* h) {
        p.days[d].activities.push_back(fixture::act(K::lodging, h, "sh", hhmm(22, 0), hhmm(7, 0), 260));
    };
    night(0, "sh-h1");
    night(1, "sh-h1");
    night(2, "sh-h2");
    EXPECT_TRUE(check(p, IntentSlots{}, mini(), ConstraintId::ActivityRepetition).passed);
    p.days[2].activities[0].ref = "sh-h1";
    EXPECT_TRUE(check(p, IntentSlots{}, mini(), ConstraintId::ActivityRepetition).passed);
    p.days[1].activities[0].ref = "sh-h2";
    EXPECT_FALSE(check(p, IntentSlots{}, mini(), ConstraintId::ActivityRepetition).passed);
}

TEST(Checkers, NoDepartureCityMeansNoReturn) {
    auto s = fixture::all_pass_slots();
    s.departure_city.reset();
    EXPECT_FALSE(check(fixture::all_pass_plan(), s, mini(), ConstraintId::ReturnJourney).passed);
}

TEST(Checkers, UnsetPreferencesAreVacuous) {
    const auto r = evaluate_plan(fixture::all_pass_plan(), IntentSlots{}, mini());
    for (auto id : {ConstraintId::CityCoverage, ConstraintId::Budget, ConstraintId::HotelType,
                    ConstraintId::RequiredSites, ConstraintId::ExcludedSites})
        EXPECT_TRUE(r.passed(id)) << to_string(id);
}

TEST(Checkers, AgreeWithOracleOnThousandChecks) {
    const KnowledgeBase kb = synth_kb(31, 5, 6);
    const gen::Pools pools(kb);
    Rng rng(32);
    int checks = 0;
    while (checks < 1000) {
        const auto pr = gen::fuzz_pair(rng, pools, kb, {});
        for (auto id : kAllConstraints) {
            ASSERT_EQ(check(pr.plan, pr.slots, kb, id).passed, oracle::verdict(id, pr.plan, pr.slots, kb))
                << to_string(id) << "\n"
                << serialize_plan(pr.plan) << to_json(pr.slots).dump();
            ++checks;
        }
    }
}

TEST(Checkers, RemovingAFlaggedActivityNeverAddsFindings) {
    // Checkers whose findings point at one activity each.
    const std::vector<ConstraintId> local{ConstraintId::ActivityRepetition, ConstraintId::TimeInterval,
                                          ConstraintId::PoiValidation, ConstraintId::HotelType,
                                          ConstraintId::ExcludedSites};
    const KnowledgeBase kb = synth_kb(33, 4, 6);
    const gen::Pools pools(kb);
    Rng rng(34);
    for (int t = 0; t < 500; ++t) {
        const auto pr = gen::fuzz_pair(rng, pools, kb, {});
        for (auto id : local) {
            const auto before = check(pr.plan, pr.slots, kb, id);
            for (const auto& d : before.diagnostics) {
                if (d.activity < 0) continue;
                Plan smaller = pr.plan;
                auto& acts = smaller.days[static_cast<std::size_t>(d.day)].activities;
                acts.erase(acts.begin() + d.activity);
                const auto after = check(smaller, pr.slots, kb, id);
                EXPECT_LE(after.diagnostics.size(), before.diagnostics.size()) << to_string(id);
            }
            if (before.passed) {
                EXPECT_TRUE(before.diagnostics.empty());
            }
        }
    }
}

TEST(Checkers, TotalOnRandomPlans) {
    const KnowledgeBase kb = synth_kb(35, 4, 6);
    const gen::Pools pools(kb);
    Rng rng(36);
    for (int t = 0; t < 2000; ++t) {
        const auto pr = gen::fuzz_pair(rng, pools, kb, {});
        EXPECT_NO_THROW(evaluate_plan(pr.plan, pr.slots, kb));
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

TEST(Report, AllPassFixture) {
    const auto r = evaluate_plan(fixture::all_pass_plan(), fixture::all_pass_slots(), mini());
    for (auto id : kAllConstraints) {
        EXPECT_TRUE(r.passed(id)) << to_string(id);
        EXPECT_TRUE(oracle::verdict(id, fixture::all_pass_plan(), fixture::all_pass_slots(), mini())) << to_string(id);
    }
    EXPECT_TRUE(r.final_pass);
    EXPECT_EQ(tally_costs(fixture::all_pass_plan()).total, Money::yuan(2686));
}

TEST(Report, FourPlanVerdicts) {
    const auto cases = fixture::four_plan_corpus();
    const auto r = evaluate_all(cases, mini());
    EXPECT_TRUE(r[0].final_pass);
    EXPECT_EQ(r[1].failing(), std::vector<ConstraintId>{ConstraintId::Budget});
    EXPECT_TRUE(r[1].commonsense_pass);
    EXPECT_FALSE(r[1].final_pass);
    EXPECT_EQ(r[2].failing(), std::vector<ConstraintId>{ConstraintId::TimeInterval});
    EXPECT_EQ(r[3].failing(), (std::vector<ConstraintId>{ConstraintId::TimeInterval, ConstraintId::RequiredSites}));
    EXPECT_FALSE(r[3].commonsense_pass);
    EXPECT_FALSE(r[3].preference_pass);
    for (std::size_t i = 0; i < cases.size(); ++i)
        for (auto id : kAllConstraints)
            EXPECT_EQ(r[i].passed(id), oracle::verdict(id, cases[i].plan, cases[i].slots, mini()));
}

TEST(Report, AllFailPlanFailsEverything) {
    const auto r = evaluate_plan(all_fail_plan(), all_fail_slots(), mini());
    EXPECT_EQ(r.failures(), 13);
}

// Hand arithmetic over the four-plan corpus: 36 commonsense checks with
// two failures, 16 preference checks with two failures; plans 0 and 1 pass
// commonsense, plans 0 and 2 pass preference, only plan 0 passes both.
TEST(Aggregate, FourPlanArithmetic) {
    const auto b = aggregate(evaluate_all(fixture::four_plan_corpus(), mini()));
    EXPECT_EQ(b.plans, 4);
    EXPECT_EQ(b.commonsense.passed_checks, 34);
    EXPECT_EQ(b.commonsense.total_checks, 36);
    EXPECT_EQ(b.commonsense.micro, 34.0 / 36.0);
    EXPECT_EQ(b.commonsense.macro, 2.0 / 4.0);
    EXPECT_EQ(b.preference.passed_checks, 14);
    EXPECT_EQ(b.preference.total_checks, 16);
    EXPECT_EQ(b.preference.micro, 14.0 / 16.0);
    EXPECT_EQ(b.preference.macro, 2.0 / 4.0);
    EXPECT_EQ(b.final_pr, 1.0 / 4.0);
    EXPECT_EQ(b.pass_counts[static_cast<std::size_t>(ConstraintId::TimeInterval)], 2);
    EXPECT_EQ(b.pass_counts[static_cast<std::size_t>(ConstraintId::Budget)], 3);
}

TEST(Aggregate, OneCommonsenseFailureInTwoPlans) {
    const auto cases = fixture::four_plan_corpus();
    const auto b = aggregate(evaluate_all({cases[0], cases[2]}, mini()));
    EXPECT_EQ(b.commonsense.micro, 17.0 / 18.0);
    EXPECT_EQ(b.commonsense.macro, 1.0 / 2.0);
    EXPECT_EQ(b.final_pr, 1.0 / 2.0);
    EXPECT_EQ(b.preference.micro, 1.0);
}

TEST(Aggregate, Degenerate) {
    const auto pass = aggregate(evaluate_all(copies(fixture::four_plan_corpus()[0], 5), mini()));
    EXPECT_EQ(pass.commonsense.micro, 1.0);
    EXPECT_EQ(pass.commonsense.macro, 1.0);
    EXPECT_EQ(pass.preference.micro, 1.0);
    EXPECT_EQ(pass.preference.macro, 1.0);
    EXPECT_EQ(pass.final_pr, 1.0);
    const auto fail = aggregate(evaluate_all(copies({all_fail_plan(), all_fail_slots()}, 5), mini()));
    EXPECT_EQ(fail.commonsense.micro, 0.0);
    EXPECT_EQ(fail.commonsense.macro, 0.0);
    EXPECT_EQ(fail.preference.micro, 0.0);
    EXPECT_EQ(fail.preference.macro, 0.0);
    EXPECT_EQ(fail.final_pr, 0.0);
    EXPECT_THROW(aggregate({}), ArgumentError);
}

TEST(Aggregate, MacroNeverExceedsMicro) {
    const KnowledgeBase kb = synth_kb(37, 4, 6);
    const gen::Pools pools(kb);
    Rng rng(38);
    for (int corpus = 0; corpus < 200; ++corpus) {
        std::vector<PlanReport> reports;
        const auto n = rng.uniform(1, 30);
        for (std::int64_t i = 0; i < n; ++i) {
            const auto pr = gen::fuzz_pair(rng, pools, kb, {});
            reports.push_back(evaluate_plan(pr.plan, pr.slots, kb));
        }
        const auto b = aggregate(reports);
        EXPECT_LE(b.commonsense.macro, b.commonsense.micro);
        EXPECT_LE(b.preference.macro, b.preference.micro);
        EXPECT_LE(b.final_pr, std::min(b.commonsense.macro, b.preference.macro));
    }
}

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

TEST(Pearson, ExactExtremes) {
    EXPECT_EQ(pearson_binary({1, 1, 0, 0}, {1, 1, 0, 0}).r, 1.0);
    EXPECT_EQ(pearson_binary({1, 0, 1, 0}, {0, 1, 0, 1}).r, -1.0);
    EXPECT_EQ(pearson_binary({1, 0, 0, 0, 0, 1, 1}, {0, 1, 1, 1, 1, 0, 0}).r, -1.0);
}

TEST(Pearson, HandComputedValue) {
    // n=4, sx=3, sy=2, sxy=2: (4*2 - 3*2) / sqrt((4*3 - 9) * (4*2 - 4)) = 2 / sqrt(12).
    const auto c = pearson_binary({1, 1, 0, 1}, {1, 0, 0, 1});
    ASSERT_TRUE(c.r);
    EXPECT_NEAR(*c.r, 2.0 / std::sqrt(12.0), 1e-12);
    EXPECT_NEAR(*c.r, 0.5773502691896258, 1e-12);
}

TEST(Pearson, UndefinedAndErrors) {
    EXPECT_FALSE(pearson_binary({1, 1, 1}, {1, 0, 1}).r);
    EXPECT_FALSE(pearson_binary({1, 0, 1}, {0, 0, 0}).r);
    EXPECT_FALSE(pearson_binary({1}, {1}).r);
    EXPECT_THROW(pearson_binary({1, 0}, {1}), ArgumentError);
    EXPECT_THROW(pearson_binary({1, 2}, {1, 0}), ArgumentError);
}

TEST(Pearson, MatchesTextbookFormula) {
    Rng rng(39);
    for (int t = 0; t < 100; ++t) {
        const auto n = static_cast<std::size_t>(rng.uniform(2, 60));
        std::vector<int> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.chance(0.5);
            y[i] = rng.chance(0.5);
        }
        const auto got = pearson_binary(x, y);
        const auto want = oracle::pearson(x, y);
        ASSERT_EQ(got.r.has_value(), want.has_value());
        if (want) {
            EXPECT_NEAR(*got.r, *want, 1e-9);
        }
    }
}

TEST(Pearson, CorrelateUsesFinalPass) {
    const auto reports = evaluate_all(fixture::four_plan_corpus(), mini());
    const auto c = correlate(reports);
    // TimeInterval indicator (1,1,0,0) against final pass (1,0,0,0).
    ASSERT_TRUE(c.at(ConstraintId::TimeInterval).r);
    EXPECT_NEAR(*c.at(ConstraintId::TimeInterval).r, 1.0 / std::sqrt(3.0), 1e-12);
    EXPECT_FALSE(c.at(ConstraintId::CityCoverage).r);
    EXPECT_THROW(correlate({reports[0]}), ArgumentError);
}

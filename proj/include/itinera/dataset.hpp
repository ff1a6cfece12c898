#pragma once

// Query corpus generation: explicit queries sampled from a KB, implicit
// variants with hidden fields, a simulated session per query and an
// optional scripted revision, split across four case types.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "itinera/core.hpp"
#include "itinera/dialogue.hpp"
#include "itinera/json_io.hpp"
#include "itinera/kb.hpp"
#include "itinera/planner.hpp"
#include "itinera/slots.hpp"

namespace itinera {

enum class CaseType { single_turn, single_turn_revision, multi_turn, multi_turn_revision };

inline constexpr std::array<std::string_view, 4> kCaseTypeNames{"single_turn", "single_turn_revision", "multi_turn",
                                                                "multi_turn_revision"};
inline constexpr std::array<CaseType, 4> kAllCaseTypes{CaseType::single_turn, CaseType::single_turn_revision,
                                                       CaseType::multi_turn, CaseType::multi_turn_revision};

inline std::string_view to_string(CaseType c) { return kCaseTypeNames[static_cast<std::size_t>(c)]; }

inline std::optional<CaseType> parse_case_type(std::string_view s) {
    for (std::size_t i = 0; i < kCaseTypeNames.size(); ++i)
        if (kCaseTypeNames[i] == s) return static_cast<CaseType>(i);
    return std::nullopt;
}

inline bool is_multi_turn(CaseType c) { return c == CaseType::multi_turn || c == CaseType::multi_turn_revision; }
inline bool has_revision(CaseType c) { return c == CaseType::single_turn_revision || c == CaseType::multi_turn_revision; }

// Relative weights of the four case types. The default is the published
// distribution: 3,500 / 2,500 / 2,500 / 1,500.
struct CaseMix {
    std::array<std::int64_t, 4> weights{3500, 2500, 2500, 1500};

    // Multi-turn share set to `implicit_ratio`; the revision share inside
    // each group keeps the default proportions (5/12 and 3/8).
    static CaseMix from_ratio(double implicit_ratio) {
        if (!(implicit_ratio >= 0.0 && implicit_ratio <= 1.0))
            throw ArgumentError("implicit_ratio must be between 0 and 1");
        constexpr std::int64_t kScale = 1'000'000;
        const std::int64_t multi = std::llround(implicit_ratio * kScale);
        const std::int64_t single = kScale - multi;
        return CaseMix{{single * 3500, single * 2500, multi * 2500, multi * 1500}};
    }

    // Exact integer apportionment by largest remainder; ties go to the
    // earlier case type.
    std::array<int, 4> counts(int n) const {
        if (n < 0) throw ArgumentError("count must be non-negative");
        std::int64_t total = 0;
        for (auto w : weights) {
            if (w < 0) throw ArgumentError("case weights must be non-negative");
            total += w;
        }
        if (total == 0) throw ArgumentError("case weights sum to zero");
        std::array<int, 4> out{};
        std::array<std::int64_t, 4> rem{};
        int assigned = 0;
        for (std::size_t i = 0; i < 4; ++i) {
            const __int128 num = static_cast<__int128>(n) * weights[i];
            out[i] = static_cast<int>(num / total);
            rem[i] = static_cast<std::int64_t>(num % total);
            assigned += out[i];
        }
        std::array<std::size_t, 4> order{0, 1, 2, 3};
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
        for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++out[order[k % 4]];
        return out;
    }
};

struct CorpusEntry {
    std::string id;
    CaseType case_type = CaseType::single_turn;
    bool implicit = false;
    std::vector<SlotField> hidden;  // empty for explicit entries
    std::uint64_t seed = 0;
    IntentSlots explicit_slots;
    IntentSlots query_slots;  // as posed: explicit_slots minus hidden
    std::vector<PoiId> key_attractions;
    Persona persona;
    DialogueSession session;  // final slots, plan and report live here
};

struct QueryCorpus {
    std::vector<CorpusEntry> entries;
    std::array<int, 4> counts{};
};

namespace detail {

inline std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t i) { return splitmix(splitmix(seed) ^ i); }

inline std::vector<CityId> attraction_cities(const KnowledgeBase& kb) {
    std::vector<CityId> out;
    for (const auto& [id, c] : kb.cities())
        if (!kb.pois_in(id, PoiKind::attraction).empty()) out.push_back(id);
    return out;
}

inline std::pair<Date, Date> weather_span(const KnowledgeBase& kb) {
    if (kb.weather().empty()) return {Date(2024, 1, 1), Date(2024, 12, 31)};
    Date lo = kb.weather().begin()->first.second, hi = lo;
    for (const auto& [key, w] : kb.weather()) {
        lo = std::min(lo, key.second);
        hi = std::max(hi, key.second);
    }
    return {lo, hi};
}

// Highest-rated attractions taken round-robin across the destinations.
inline std::vector<PoiId> key_attractions(const KnowledgeBase& kb, const std::vector<CityId>& dests, std::size_t n) {
    std::vector<std::vector<const Poi*>> per_city;
    for (const auto& c : dests) per_city.push_back(top_rated(kb, c, PoiKind::attraction, n));
    std::vector<PoiId> out;
    for (std::size_t rank = 0; out.size() < n; ++rank) {
        bool any = false;
        for (const auto& list : per_city)
            if (rank < list.size() && out.size() < n) {
                out.push_back(list[rank]->id);
                any = true;
            }
        if (!any) break;
    }
    return out;
}

inline std::vector<std::string> cuisines_in(const KnowledgeBase& kb, const std::vector<CityId>& dests) {
    std::set<std::string> tags;
    for (const auto& c : dests)
        for (const auto& id : kb.pois_in(c, PoiKind::restaurant))
            for (const auto& t : kb.poi(id).tags)
                if (t != "snack") tags.insert(t);
    return {tags.begin(), tags.end()};
}

}  // namespace detail

inline constexpr std::size_t kMinKeyAttractions = 8;
inline constexpr std::size_t kMaxKeyAttractions = 10;

struct ExplicitQuery {
    IntentSlots slots;
    std::vector<PoiId> key_attractions;
    Plan plan;  // what the planner produces for these slots
};

// Samples a fully specified query. The budget is the planned cost scaled
// by a factor in [1.1, 1.5], rounded up to whole yuan.
inline ExplicitQuery sample_explicit_query(const KnowledgeBase& kb, std::uint64_t seed, const std::string& query_id,
                                           const SearchBudget& search = {}) {
    const auto cities = detail::attraction_cities(kb);
    if (kb.cities().size() < 3 || cities.size() < 2)
        throw ArgumentError("knowledge base needs at least 3 cities, 2 with attractions");
    std::vector<std::size_t> supply;
    for (const auto& c : cities) supply.push_back(kb.pois_in(c, PoiKind::attraction).size());
    std::sort(supply.rbegin(), supply.rend());
    if (std::accumulate(supply.begin(), supply.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(4, supply.size())),
                        std::size_t{0}) < kMinKeyAttractions)
        throw ArgumentError("knowledge base has too few attractions for 8 key attractions");

    Rng rng(seed);
    const auto [first_date, last_date] = detail::weather_span(kb);
    std::vector<CityId> all_cities;
    for (const auto& [id, c] : kb.cities()) all_cities.push_back(id);

    for (int attempt = 0; attempt < 64; ++attempt) {
        IntentSlots s;
        const CityId dep = rng.pick(all_cities);
        std::vector<CityId> pool;
        for (const auto& c : cities)
            if (c != dep) pool.push_back(c);
        if (pool.size() < 2) continue;
        rng.shuffle(pool);
        const auto k = static_cast<std::size_t>(rng.uniform(2, static_cast<std::int64_t>(std::min<std::size_t>(4, pool.size()))));
        std::vector<CityId> dests(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));

        const auto n_key = static_cast<std::size_t>(rng.uniform(kMinKeyAttractions, kMaxKeyAttractions));
        auto keys = detail::key_attractions(kb, dests, n_key);
        if (keys.size() < kMinKeyAttractions) continue;

        const int days = static_cast<int>(k) + static_cast<int>(rng.uniform(0, 2));
        const int span = std::max(0, (last_date - first_date) - days);
        s.departure_city = dep;
        s.destination_cities = dests;
        s.start_date = first_date.plus_days(static_cast<int>(rng.uniform(0, span)));
        s.num_days = days;
        s.party_size = static_cast<int>(rng.uniform(1, 4));
        s.pace = static_cast<int>(rng.uniform(1, 3));
        s.hotel_type = static_cast<HotelPreference>(rng.uniform(0, 2));
        s.transport_pref = static_cast<TransportPreference>(rng.uniform(0, 2));

        std::vector<PoiId> shuffled = keys;
        rng.shuffle(shuffled);
        const auto n_req = static_cast<std::size_t>(rng.uniform(1, 2));
        s.required_sites = std::set<PoiId>(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_req));
        std::vector<PoiId> others;
        for (const auto& c : dests)
            for (const auto& id : kb.pois_in(c, PoiKind::attraction))
                if (std::find(keys.begin(), keys.end(), id) == keys.end()) others.push_back(id);
        s.excluded_sites = std::set<PoiId>{};
        if (!others.empty() && rng.chance(0.5)) s.excluded_sites->insert(rng.pick(others));

        auto cuisines = detail::cuisines_in(kb, dests);
        rng.shuffle(cuisines);
        const auto n_cuisine = std::min<std::size_t>(cuisines.size(), static_cast<std::size_t>(rng.uniform(0, 2)));
        s.cuisine_prefs = std::vector<std::string>(cuisines.begin(), cuisines.begin() + static_cast<std::ptrdiff_t>(n_cuisine));

        const double factor = 1.1 + 0.4 * rng.unit();
        PlanResult draft;
        try {
            draft = generate_plan(s, kb, search, query_id);
        } catch (const InfeasibleError&) {
            continue;
        }
        const Money cost = tally_costs(draft.plan).total;
        s.budget_total = Money{static_cast<std::int64_t>(std::ceil(static_cast<double>(cost.fen) * factor / 100.0)) * 100};
        check_slots(s);
        auto final_plan = generate_plan(s, kb, search, query_id);
        return ExplicitQuery{s, keys, std::move(final_plan.plan)};
    }
    throw ArgumentError("could not sample a plannable query from this knowledge base");
}

// A revision aimed at an activity that exists in `plan`. The category is
// fixed by the caller; a category with no eligible target falls back to
// a budget cut.
inline RevisionRequest script_revision(const Plan& plan, const IntentSlots& s, const KnowledgeBase& kb,
                                       RevisionCategory cat, Rng& rng) {
    RevisionRequest r;
    r.category = cat;
    r.directive.type = std::string(default_directive(cat));
    std::vector<std::pair<int, const Activity*>> eligible;
    for (std::size_t d = 0; d < plan.days.size(); ++d)
        for (const auto& a : plan.days[d].activities) {
            bool ok = false;
            switch (cat) {
                case RevisionCategory::dining:
                    ok = a.kind == ActivityKind::meal && (a.meal == MealSlot::lunch || a.meal == MealSlot::dinner);
                    break;
                case RevisionCategory::transportation: ok = a.kind == ActivityKind::transport; break;
                case RevisionCategory::weather:
                    ok = a.kind == ActivityKind::attraction && !s.requires_site(a.poi());
                    break;
                case RevisionCategory::budget: break;
            }
            if (ok) eligible.emplace_back(static_cast<int>(d), &a);
        }
    if (cat == RevisionCategory::budget || eligible.empty()) {
        r.category = RevisionCategory::budget;
        r.directive = RevisionDirective{};
        r.directive.type = "cap_budget";
        const Money total = tally_costs(plan).total;
        r.directive.amount = Money{total.fen * 95 / 100 / 100 * 100};
        return r;
    }
    const auto& [day, act] = rng.pick(eligible);
    r.target.day = day;
    switch (cat) {
        case RevisionCategory::dining: r.target.meal = act->meal; break;
        case RevisionCategory::transportation: {
            static const std::vector<std::string> prefs{"cheapest", "earliest", "latest"};
            r.directive.prefer = rng.pick(prefs);
            break;
        }
        case RevisionCategory::weather: {
            const Poi* p = kb.find_poi(act->poi());
            r.directive.type = p && p->indoor ? "swap_outdoor" : "swap_indoor";
            break;
        }
        default: break;
    }
    return r;
}

struct DatasetOptions {
    SearchBudget search;
    SimulationLimits limits;
};

// Builds one corpus entry of the given case type.
inline CorpusEntry make_entry(const KnowledgeBase& kb, const std::string& id, CaseType type, std::uint64_t seed,
                              RevisionCategory revision_category, const DatasetOptions& opts = {}) {
    CorpusEntry e;
    e.id = id;
    e.case_type = type;
    e.seed = seed;
    auto q = sample_explicit_query(kb, detail::derive_seed(seed, 1), id, opts.search);
    e.explicit_slots = q.slots;
    e.key_attractions = q.key_attractions;

    e.implicit = is_multi_turn(type);
    if (e.implicit) {
        const auto hide = sample_hidden(detail::derive_seed(seed, 2));
        e.hidden.assign(hide.begin(), hide.end());
        e.query_slots = make_implicit(q.slots, hide);
    } else {
        e.query_slots = q.slots;
    }

    e.persona.values = q.slots;
    for (auto f : kAllSlots)
        if (e.query_slots.filled(f)) e.persona.reveal.push_back(f);
    e.persona.likes = q.slots.required_sites.value_or(std::set<PoiId>{});
    e.persona.dislikes = q.slots.excluded_sites.value_or(std::set<PoiId>{});
    if (has_revision(type)) {
        Rng rng(detail::derive_seed(seed, 3));
        e.persona.revisions.push_back(script_revision(q.plan, q.slots, kb, revision_category, rng));
    }
    e.session = run_simulation(e.persona, kb, detail::derive_seed(seed, 4), id, opts.limits);
    return e;
}

inline QueryCorpus dataset_gen(const KnowledgeBase& kb, int n, const CaseMix& mix, std::uint64_t seed,
                               const DatasetOptions& opts = {}) {
    QueryCorpus corpus;
    corpus.counts = mix.counts(n);
    std::vector<CaseType> types;
    for (std::size_t i = 0; i < 4; ++i) types.insert(types.end(), static_cast<std::size_t>(corpus.counts[i]), kAllCaseTypes[i]);
    Rng rng(seed);
    rng.shuffle(types);
    int revisions = 0;
    for (std::size_t i = 0; i < types.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "q%04zu", i + 1);
        const auto cat = static_cast<RevisionCategory>(revisions % 4);
        if (has_revision(types[i])) ++revisions;
        corpus.entries.push_back(make_entry(kb, id, types[i], detail::derive_seed(seed, i + 1), cat, opts));
    }
    return corpus;
}

inline QueryCorpus dataset_gen(const KnowledgeBase& kb, int n, double implicit_ratio, std::uint64_t seed,
                               const DatasetOptions& opts = {}) {
    return dataset_gen(kb, n, CaseMix::from_ratio(implicit_ratio), seed, opts);
}

inline std::array<int, 4> case_counts(const QueryCorpus& c) {
    std::array<int, 4> out{};
    for (const auto& e : c.entries) ++out[static_cast<std::size_t>(e.case_type)];
    return out;
}

// ---------------------------------------------------------------------------
// Files
//   queries.jsonl           one line per entry; "slots" are the final
//                           requirements the plan is judged against
//   personas/<id>.json
//   transcripts/<id>.jsonl  one turn per line
//   plans/<id>.json
//   reports/<id>.json
// ---------------------------------------------------------------------------

inline Json query_line(const CorpusEntry& e) {
    Json hidden = Json::array(), keys = Json::array();
    for (auto f : e.hidden) hidden.push_back(to_string(f));
    for (const auto& k : e.key_attractions) keys.push_back(k.str());
    return Json{{"id", e.id},
                {"case_type", to_string(e.case_type)},
                {"implicit", e.implicit},
                {"hidden", hidden},
                {"seed", e.seed},
                {"query", to_json(e.query_slots)},
                {"slots", to_json(e.session.slots)},
                {"key_attractions", keys}};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
}

inline void write_corpus(const QueryCorpus& c, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    for (const char* sub : {"personas", "transcripts", "plans", "reports"}) fs::create_directories(dir / sub);
    std::string lines;
    for (const auto& e : c.entries) {
        lines += query_line(e).dump() + "\n";
        write_text(dir / "personas" / (e.id + ".json"), canonical(to_json(e.persona)));
        write_text(dir / "transcripts" / (e.id + ".jsonl"), transcript_jsonl(e.session.history));
        if (e.session.plan) write_text(dir / "plans" / (e.id + ".json"), serialize_plan(*e.session.plan));
        if (e.session.report) write_text(dir / "reports" / (e.id + ".json"), canonical(to_json(*e.session.report)));
    }
    write_text(dir / "queries.jsonl", lines);
}

}  // namespace itinera

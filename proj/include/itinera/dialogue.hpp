#pragma once

// Clarification dialogue: topic states, structured dialogue acts, intent
// extraction, implicit-query construction, a scripted user simulator and a
// text command grammar for terminal use.

#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "itinera/core.hpp"
#include "itinera/json_io.hpp"
#include "itinera/kb.hpp"
#include "itinera/plan.hpp"
#include "itinera/planner.hpp"
#include "itinera/slots.hpp"
#include "itinera/validator.hpp"

namespace itinera {

enum class TopicState {
    Greeting,
    BasicInfo,
    DestinationTopic,
    AttractionTopic,
    RestaurantTopic,
    HotelTopic,
    TransportWeather,
    ConfirmRevise,
};

inline constexpr std::array<std::string_view, 8> kTopicNames{"Greeting",        "BasicInfo",  "DestinationTopic",
                                                             "AttractionTopic", "RestaurantTopic", "HotelTopic",
                                                             "TransportWeather", "ConfirmRevise"};

inline std::string_view to_string(TopicState t) { return kTopicNames[static_cast<std::size_t>(t)]; }

inline std::optional<TopicState> parse_topic(std::string_view s) {
    for (std::size_t i = 0; i < kTopicNames.size(); ++i)
        if (kTopicNames[i] == s) return static_cast<TopicState>(i);
    return std::nullopt;
}

// Slots each asking state is responsible for, in asking order.
inline std::vector<SlotField> topic_slots(TopicState t) {
    switch (t) {
        case TopicState::BasicInfo:
            return {SlotField::departure_city, SlotField::start_date, SlotField::num_days, SlotField::party_size,
                    SlotField::budget_total};
        case TopicState::DestinationTopic: return {SlotField::destination_cities};
        case TopicState::AttractionTopic: return {SlotField::required_sites, SlotField::excluded_sites, SlotField::pace};
        case TopicState::RestaurantTopic: return {SlotField::cuisine_prefs};
        case TopicState::HotelTopic: return {SlotField::hotel_type};
        case TopicState::TransportWeather: return {SlotField::transport_pref};
        default: return {};
    }
}

inline constexpr std::array<TopicState, 6> kAskingTopics{TopicState::BasicInfo,       TopicState::DestinationTopic,
                                                         TopicState::AttractionTopic, TopicState::RestaurantTopic,
                                                         TopicState::HotelTopic,      TopicState::TransportWeather};

// Priority policy over the fill mask: the first topic owning an unfilled
// slot, or ConfirmRevise when everything is filled.
inline TopicState next_topic_for(const SlotMask& filled) {
    for (auto t : kAskingTopics)
        for (auto f : topic_slots(t))
            if (!filled[static_cast<std::size_t>(f)]) return t;
    return TopicState::ConfirmRevise;
}

// Pluggable topic selection.
class TopicPolicy {
public:
    virtual ~TopicPolicy() = default;
    virtual TopicState select(const IntentSlots& slots) const = 0;
};

class PriorityPolicy : public TopicPolicy {
public:
    TopicState select(const IntentSlots& slots) const override { return next_topic_for(slots.mask()); }
};

// ---------------------------------------------------------------------------
// Acts and turns
// ---------------------------------------------------------------------------

enum class Role { user, assistant };

enum class ActKind { ask, inform, recommend, confirm, revise, accept, reject, forecast, present_plan, diagnostic };

inline constexpr std::array<std::string_view, 10> kActKindNames{
    "ask", "inform", "recommend", "confirm", "revise", "accept", "reject", "forecast", "present_plan", "diagnostic"};

inline std::string_view to_string(ActKind k) { return kActKindNames[static_cast<std::size_t>(k)]; }
inline std::string_view to_string(Role r) { return r == Role::user ? "user" : "assistant"; }

inline std::optional<ActKind> parse_act_kind(std::string_view s) {
    for (std::size_t i = 0; i < kActKindNames.size(); ++i)
        if (kActKindNames[i] == s) return static_cast<ActKind>(i);
    return std::nullopt;
}

struct DialogueAct {
    ActKind kind = ActKind::inform;
    std::string slot;                 // ask, inform
    Json value;                       // inform: the slot value in its JSON form
    std::optional<PoiId> poi;         // recommend, accept, reject
    std::string name;                 // recommend: POI name
    std::optional<double> rating;     // recommend
    std::vector<std::string> reviews;     // recommend: at most 2
    std::vector<std::string> image_refs;  // recommend: at most 1
    std::optional<RevisionRequest> request;  // revise
    std::string message;              // forecast, present_plan, diagnostic, confirm

    static DialogueAct ask(SlotField f) {
        DialogueAct a;
        a.kind = ActKind::ask;
        a.slot = std::string(to_string(f));
        return a;
    }
    static DialogueAct inform(SlotField f, Json v) {
        DialogueAct a;
        a.kind = ActKind::inform;
        a.slot = std::string(to_string(f));
        a.value = std::move(v);
        return a;
    }
    static DialogueAct of(ActKind k, std::string msg = "") {
        DialogueAct a;
        a.kind = k;
        a.message = std::move(msg);
        return a;
    }
    friend bool operator==(const DialogueAct&, const DialogueAct&) = default;
};

struct DialogueTurn {
    Role role = Role::user;
    std::vector<DialogueAct> acts;
    std::string text;

    bool has(ActKind k) const {
        return std::any_of(acts.begin(), acts.end(), [&](const DialogueAct& a) { return a.kind == k; });
    }
    int count(ActKind k) const {
        return static_cast<int>(std::count_if(acts.begin(), acts.end(), [&](const DialogueAct& a) { return a.kind == k; }));
    }
    friend bool operator==(const DialogueTurn&, const DialogueTurn&) = default;
};

inline Json to_json(const DialogueAct& a) {
    Json j{{"kind", to_string(a.kind)}};
    if (!a.slot.empty()) j["slot"] = a.slot;
    if (a.kind == ActKind::inform) j["value"] = a.value;
    if (a.poi) j["poi"] = a.poi->str();
    if (!a.name.empty()) j["name"] = a.name;
    if (a.rating) j["rating"] = *a.rating;
    if (a.kind == ActKind::recommend) {
        j["reviews"] = a.reviews;
        j["image_refs"] = a.image_refs;
    }
    if (a.request) j["request"] = to_json(*a.request);
    if (!a.message.empty()) j["message"] = a.message;
    return j;
}

inline DialogueAct act_from_json(const JsonReader& r) {
    DialogueAct a;
    const auto kind = r.at("kind");
    auto k = parse_act_kind(kind.str());
    if (!k) kind.fail("unknown act kind");
    a.kind = *k;
    if (auto s = r.maybe("slot")) a.slot = s->str();
    if ((a.kind == ActKind::ask || a.kind == ActKind::inform) && a.slot.empty()) r.at("slot");
    if (a.kind == ActKind::inform) a.value = r.at("value").raw();
    if (auto p = r.maybe("poi")) a.poi = p->id<PoiTag>();
    if ((a.kind == ActKind::recommend || a.kind == ActKind::accept || a.kind == ActKind::reject) && !a.poi) r.at("poi");
    if (auto n = r.maybe("name")) a.name = n->str();
    if (auto x = r.maybe("rating")) a.rating = x->number();
    if (auto x = r.maybe("reviews")) a.reviews = x->strings();
    if (auto x = r.maybe("image_refs")) a.image_refs = x->strings();
    if (a.kind == ActKind::revise) a.request = revision_from_json(r.at("request"));
    if (auto m = r.maybe("message")) a.message = m->str();
    return a;
}

inline Json to_json(const DialogueTurn& t) {
    Json acts = Json::array();
    for (const auto& a : t.acts) acts.push_back(to_json(a));
    return Json{{"role", to_string(t.role)}, {"acts", acts}, {"text", t.text}};
}

inline DialogueTurn turn_from_json(const JsonReader& r) {
    DialogueTurn t;
    const auto role = r.at("role");
    const auto rs = role.str();
    if (rs == "user") t.role = Role::user;
    else if (rs == "assistant") t.role = Role::assistant;
    else role.fail("role must be user or assistant");
    if (auto acts = r.maybe("acts"))
        for (const auto& a : acts->items()) t.acts.push_back(act_from_json(a));
    if (auto text = r.maybe("text")) t.text = text->str();
    return t;
}

// One JSON object per line.
inline std::string transcript_jsonl(const std::vector<DialogueTurn>& turns) {
    std::string out;
    for (const auto& t : turns) out += to_json(t).dump() + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Intent extraction
// ---------------------------------------------------------------------------

// Maps a turn to the structured acts it carries. The default trusts the
// acts already attached; a model-backed extractor can read free text.
class IntentExtractor {
public:
    virtual ~IntentExtractor() = default;
    virtual std::vector<DialogueAct> acts_for(const DialogueTurn& turn, const IntentSlots& so_far) const = 0;
};

class StructuredActExtractor : public IntentExtractor {
public:
    std::vector<DialogueAct> acts_for(const DialogueTurn& turn, const IntentSlots&) const override { return turn.acts; }
};

// Applies one act to `slots`; returns a diagnostic when the act is skipped.
inline std::optional<std::string> fold_act(IntentSlots& slots, const DialogueAct& a) {
    if (a.kind == ActKind::revise) {
        if (a.request && a.request->category == RevisionCategory::budget && a.request->directive.amount)
            slots.budget_total = *a.request->directive.amount;
        return std::nullopt;
    }
    if (a.kind != ActKind::inform) return std::nullopt;
    auto f = parse_slot_field(a.slot);
    if (!f) return "unknown slot '" + a.slot + "'";
    IntentSlots next = slots;
    try {
        if (a.value.is_null()) next.clear(*f);
        else assign_slot(next, *f, JsonReader(a.value, "/" + a.slot));
        check_slots(next);
    } catch (const Error& e) {
        return "skipped inform(" + a.slot + "): " + e.what();
    }
    slots = std::move(next);
    return std::nullopt;
}

// Later acts overwrite earlier ones. Only user turns carry intent.
inline IntentSlots extract_intent(const std::vector<DialogueTurn>& history, const IntentExtractor& ex,
                                  std::vector<std::string>* diagnostics = nullptr) {
    IntentSlots slots;
    for (std::size_t t = 0; t < history.size(); ++t) {
        if (history[t].role != Role::user) continue;
        for (const auto& a : ex.acts_for(history[t], slots))
            if (auto d = fold_act(slots, a); d && diagnostics)
                diagnostics->push_back("turn " + std::to_string(t + 1) + ": " + *d);
    }
    return slots;
}

inline IntentSlots extract_intent(const std::vector<DialogueTurn>& history,
                                  std::vector<std::string>* diagnostics = nullptr) {
    return extract_intent(history, StructuredActExtractor{}, diagnostics);
}

// ---------------------------------------------------------------------------
// Implicit queries
// ---------------------------------------------------------------------------

inline IntentSlots make_implicit(const IntentSlots& explicit_slots, const std::set<SlotField>& hide) {
    if (hide.size() >= kSlotCount) throw ArgumentError("cannot hide all 12 slots");
    if (hide.count(SlotField::departure_city)) throw ArgumentError("departure_city is never hidden");
    IntentSlots out = explicit_slots;
    for (auto f : hide) out.clear(f);
    return out;
}

// Samples between 1 and 6 of the hideable fields.
inline std::set<SlotField> sample_hidden(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<SlotField> pool(kAllSlots.begin() + 1, kAllSlots.end());
    rng.shuffle(pool);
    const auto k = static_cast<std::size_t>(rng.uniform(1, 6));
    return {pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k)};
}

inline IntentSlots make_implicit(const IntentSlots& explicit_slots, std::uint64_t seed) {
    return make_implicit(explicit_slots, sample_hidden(seed));
}

// ---------------------------------------------------------------------------
// Sessions and the assistant
// ---------------------------------------------------------------------------

struct DialogueSession {
    std::string id;
    TopicState state = TopicState::Greeting;
    IntentSlots slots;
    std::vector<DialogueTurn> history;
    std::optional<Plan> plan;
    std::optional<PlanReport> report;
    std::vector<RevisionRequest> revisions;
    std::vector<TopicState> transitions;  // state after each assistant turn
    std::vector<std::string> diagnostics;

    bool users_turn() const { return history.empty() || history.back().role == Role::assistant; }
    bool awaiting_plan() const {
        return !plan && !history.empty() && history.back().role == Role::user && history.back().has(ActKind::confirm) &&
               state == TopicState::ConfirmRevise;
    }
    int assistant_turns() const {
        return static_cast<int>(std::count_if(history.begin(), history.end(),
                                              [](const DialogueTurn& t) { return t.role == Role::assistant; }));
    }
};

inline TopicState next_topic(const DialogueSession& s) { return next_topic_for(s.slots.mask()); }

inline constexpr std::size_t kRecommendationsPerCity = 3;

// Top-rated POIs of one kind in a city: rating desc, then id.
inline std::vector<const Poi*> top_rated(const KnowledgeBase& kb, const CityId& city, PoiKind kind, std::size_t n) {
    std::vector<const Poi*> pool;
    for (const auto& id : kb.pois_in(city, kind)) pool.push_back(&kb.poi(id));
    std::sort(pool.begin(), pool.end(), [](const Poi* a, const Poi* b) {
        if (a->rating != b->rating) return a->rating > b->rating;
        return a->id < b->id;
    });
    if (pool.size() > n) pool.resize(n);
    return pool;
}

inline DialogueAct recommend_act(const Poi& p) {
    DialogueAct a = DialogueAct::of(ActKind::recommend);
    a.poi = p.id;
    a.name = p.name;
    a.rating = p.rating;
    a.reviews.assign(p.reviews.begin(), p.reviews.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(2, p.reviews.size())));
    if (!p.image_refs.empty()) a.image_refs = {p.image_refs.front()};
    return a;
}

namespace detail {

inline std::string slot_label(std::string_view slot) {
    static const std::map<std::string_view, std::string_view> labels{
        {"departure_city", "where you are leaving from"},
        {"destination_cities", "which cities you would like to visit"},
        {"start_date", "your start date"},
        {"num_days", "how many days you have"},
        {"party_size", "how many people are travelling"},
        {"budget_total", "your total budget"},
        {"hotel_type", "the kind of hotel you prefer"},
        {"required_sites", "any sights you must see"},
        {"excluded_sites", "any places you would rather skip"},
        {"cuisine_prefs", "cuisines you enjoy"},
        {"transport_pref", "how you like to travel between cities"},
        {"pace", "how many attractions per day suit you"}};
    auto it = labels.find(slot);
    return std::string(it == labels.end() ? slot : it->second);
}

inline std::string city_name(const KnowledgeBase& kb, const CityId& id) {
    const City* c = kb.find_city(id);
    return c ? c->name : id.str();
}

inline std::string describe_slots(const IntentSlots& s, const KnowledgeBase& kb) {
    std::ostringstream os;
    if (s.departure_city) os << "from " << city_name(kb, *s.departure_city);
    if (s.destination_cities) {
        os << " to ";
        for (std::size_t i = 0; i < s.destination_cities->size(); ++i)
            os << (i ? ", " : "") << city_name(kb, (*s.destination_cities)[i]);
    }
    if (s.start_date) os << ", starting " << s.start_date->str();
    if (s.num_days) os << " for " << *s.num_days << " days";
    if (s.party_size) os << ", party of " << *s.party_size;
    if (s.budget_total) os << ", budget " << s.budget_total->str() << " CNY";
    if (s.hotel_type) os << ", " << to_string(*s.hotel_type) << " hotels";
    return os.str();
}

inline std::string render_assistant(const std::vector<DialogueAct>& acts) {
    std::ostringstream os;
    std::vector<std::string> asks;
    for (const auto& a : acts) {
        switch (a.kind) {
            case ActKind::ask: asks.push_back(slot_label(a.slot)); break;
            case ActKind::recommend: {
                char rating[16];
                std::snprintf(rating, sizeof rating, "%.1f", a.rating.value_or(0));
                os << a.name << " (rating " << rating << ")";
                if (!a.reviews.empty()) os << ": \"" << a.reviews.front() << "\"";
                os << "\n";
                break;
            }
            case ActKind::forecast:
            case ActKind::diagnostic:
            case ActKind::present_plan:
            case ActKind::confirm: os << a.message << "\n"; break;
            default: break;
        }
    }
    if (!asks.empty()) {
        os << "Could you tell me " << asks.front();
        if (asks.size() > 1) os << " and " << asks[1];
        os << "?\n";
    }
    return os.str();
}

}  // namespace detail

inline std::string summarize_plan(const Plan& p, const PlanReport& r, const KnowledgeBase& kb) {
    std::ostringstream os;
    os << "Here is your " << p.days.size() << "-day plan, total " << tally_costs(p).total.str() << " CNY. ";
    std::vector<std::string> cities;
    for (const auto& d : p.days)
        for (const auto& a : d.activities)
            if (a.kind == ActivityKind::attraction) {
                auto n = detail::city_name(kb, a.city_id);
                if (std::find(cities.begin(), cities.end(), n) == cities.end()) cities.push_back(n);
            }
    os << "Cities: ";
    for (std::size_t i = 0; i < cities.size(); ++i) os << (i ? ", " : "") << cities[i];
    os << ". ";
    if (r.final_pass) os << "All checks pass.";
    else {
        os << "Failing checks:";
        for (auto id : r.failing()) os << " " << to_string(id);
        os << ".";
    }
    return os.str();
}

// The assistant's next turn for a session whose last turn is the user's.
inline DialogueTurn assistant_turn(const DialogueSession& s, const KnowledgeBase& kb,
                                   const TopicPolicy& policy = PriorityPolicy{}) {
    if (s.users_turn()) throw ProtocolError("it is the user's turn");
    DialogueTurn t;
    t.role = Role::assistant;

    if (s.plan && s.report) {
        t.acts.push_back(DialogueAct::of(ActKind::present_plan, summarize_plan(*s.plan, *s.report, kb)));
        t.text = detail::render_assistant(t.acts);
        return t;
    }

    const TopicState topic = policy.select(s.slots);
    auto ask_unfilled = [&](TopicState owner) {
        int asked = 0;
        for (auto f : topic_slots(owner)) {
            if (asked == 2) break;
            if (!s.slots.filled(f)) {
                t.acts.push_back(DialogueAct::ask(f));
                ++asked;
            }
        }
    };

    auto recommend = [&](PoiKind kind) {
        for (const auto& city : s.slots.destination_cities.value_or(std::vector<CityId>{})) {
            const auto top = top_rated(kb, city, kind, kRecommendationsPerCity);
            if (top.empty()) {
                t.acts.clear();
                t.acts.push_back(DialogueAct::of(ActKind::diagnostic, "No " + std::string(to_string(kind)) +
                                                                          " data for " + detail::city_name(kb, city) +
                                                                          "; please choose another destination."));
                t.acts.push_back(DialogueAct::ask(SlotField::destination_cities));
                return false;
            }
            for (const Poi* p : top) t.acts.push_back(recommend_act(*p));
        }
        return true;
    };

    switch (topic) {
        case TopicState::Greeting:
        case TopicState::BasicInfo:
            ask_unfilled(TopicState::BasicInfo);
            break;
        case TopicState::DestinationTopic: ask_unfilled(topic); break;
        case TopicState::AttractionTopic:
            if (recommend(PoiKind::attraction)) ask_unfilled(topic);
            break;
        case TopicState::RestaurantTopic:
            if (recommend(PoiKind::restaurant)) ask_unfilled(topic);
            break;
        case TopicState::HotelTopic:
            if (recommend(PoiKind::hotel)) ask_unfilled(topic);
            break;
        case TopicState::TransportWeather:
            if (s.slots.start_date && s.slots.destination_cities)
                for (const auto& city : *s.slots.destination_cities) {
                    const auto w = weather_on(kb, city, *s.slots.start_date);
                    if (!w.known()) continue;
                    t.acts.push_back(DialogueAct::of(
                        ActKind::forecast, detail::city_name(kb, city) + " on " + w.date.str() + ": " +
                                               std::string(to_string(w.condition)) + ", " + std::to_string(w.low_c) +
                                               " to " + std::to_string(w.high_c) + " C, " + w.wind));
                }
            ask_unfilled(topic);
            break;
        case TopicState::ConfirmRevise:
            t.acts.push_back(DialogueAct::of(ActKind::confirm, "To confirm: a trip " +
                                                                   detail::describe_slots(s.slots, kb) +
                                                                   ". Shall I draft the plan?"));
            break;
    }
    t.text = detail::render_assistant(t.acts);
    return t;
}

// Appends a user turn and refreshes the extracted slots.
inline void record_user_turn(DialogueSession& s, DialogueTurn t) {
    if (!s.users_turn()) throw ProtocolError("it is the assistant's turn");
    if (t.role != Role::user) throw ProtocolError("expected a user turn");
    s.history.push_back(std::move(t));
    for (const auto& a : s.history.back().acts)
        if (a.kind == ActKind::revise && a.request) s.revisions.push_back(*a.request);
    std::vector<std::string> diags;
    s.slots = extract_intent(s.history, &diags);
    s.diagnostics = std::move(diags);
}

inline void record_assistant_turn(DialogueSession& s, DialogueTurn t) {
    if (s.users_turn()) throw ProtocolError("it is the user's turn");
    s.history.push_back(std::move(t));
    s.state = s.plan ? TopicState::ConfirmRevise : next_topic(s);
    s.transitions.push_back(s.state);
}

// ---------------------------------------------------------------------------
// Simulated users
// ---------------------------------------------------------------------------

struct Persona {
    IntentSlots values;                // what the user wants
    std::vector<SlotField> reveal;     // stated up front
    std::set<PoiId> likes;             // accepted when recommended
    std::set<PoiId> dislikes;          // rejected when recommended
    std::vector<RevisionRequest> revisions;  // issued one per plan presentation
    friend bool operator==(const Persona&, const Persona&) = default;
};

inline Json to_json(const Persona& p) {
    Json reveal = Json::array();
    for (auto f : p.reveal) reveal.push_back(to_string(f));
    Json likes = Json::array(), dislikes = Json::array(), revs = Json::array();
    for (const auto& id : p.likes) likes.push_back(id.str());
    for (const auto& id : p.dislikes) dislikes.push_back(id.str());
    for (const auto& r : p.revisions) revs.push_back(to_json(r));
    return Json{{"values", to_json(p.values)},
                {"reveal", reveal},
                {"preferences", Json{{"accept", likes}, {"reject", dislikes}}},
                {"revisions", revs}};
}

inline Persona persona_from_json(const JsonReader& r) {
    Persona p;
    p.values = slots_from_json(r.at("values"));
    if (auto rv = r.maybe("reveal"))
        for (const auto& it : rv->items()) {
            auto f = parse_slot_field(it.str());
            if (!f) it.fail("unknown slot field");
            p.reveal.push_back(*f);
        }
    if (auto pr = r.maybe("preferences")) {
        if (auto a = pr->maybe("accept"))
            for (const auto& it : a->items()) p.likes.insert(it.id<PoiTag>());
        if (auto a = pr->maybe("reject"))
            for (const auto& it : a->items()) p.dislikes.insert(it.id<PoiTag>());
    }
    if (auto rs = r.maybe("revisions"))
        for (const auto& it : rs->items()) p.revisions.push_back(revision_from_json(it));
    return p;
}

namespace detail {

inline constexpr std::array<const char*, 3> kOpeners{"Hi, I am planning a trip.", "Hello! I need help with a trip.",
                                                     "Hey, could you plan a trip for me?"};
inline constexpr std::array<const char*, 3> kAnswerLeads{"Sure.", "Okay.", "Here you go."};
inline constexpr std::array<const char*, 2> kConfirms{"Yes, that is right.", "Looks good, go ahead."};

inline std::string describe_inform(const DialogueAct& a) { return a.slot + " = " + a.value.dump(); }

}  // namespace detail

inline DialogueTurn simulate_user(const Persona& persona, const DialogueSession& s, std::uint64_t seed) {
    if (!s.users_turn()) throw ProtocolError("it is the assistant's turn");
    Rng rng(seed ^ (0x9E3779B97F4A7C15ULL * (s.history.size() + 1)));
    DialogueTurn t;
    t.role = Role::user;
    std::ostringstream text;

    auto inform = [&](SlotField f) {
        if (!persona.values.filled(f))
            throw ProtocolError("persona has no value for slot " + std::string(to_string(f)));
        t.acts.push_back(DialogueAct::inform(f, slot_value_json(persona.values, f)));
        text << " " << detail::describe_inform(t.acts.back()) << ".";
    };

    if (s.history.empty()) {
        text << rng.pick(std::vector<std::string>(detail::kOpeners.begin(), detail::kOpeners.end()));
        for (auto f : persona.reveal)
            if (persona.values.filled(f)) inform(f);
        t.text = text.str();
        return t;
    }

    const DialogueTurn& last = s.history.back();
    text << rng.pick(std::vector<std::string>(detail::kAnswerLeads.begin(), detail::kAnswerLeads.end()));
    bool confirmed = false;
    for (const auto& a : last.acts) {
        switch (a.kind) {
            case ActKind::ask: {
                auto f = parse_slot_field(a.slot);
                if (!f) throw ProtocolError("assistant asked for unknown slot '" + a.slot + "'");
                inform(*f);
                break;
            }
            case ActKind::recommend:
                if (a.poi && persona.likes.count(*a.poi)) {
                    DialogueAct x = DialogueAct::of(ActKind::accept);
                    x.poi = a.poi;
                    t.acts.push_back(x);
                } else if (a.poi && persona.dislikes.count(*a.poi)) {
                    DialogueAct x = DialogueAct::of(ActKind::reject);
                    x.poi = a.poi;
                    t.acts.push_back(x);
                }
                break;
            case ActKind::confirm:
                if (!confirmed && s.state == TopicState::ConfirmRevise) {
                    t.acts.push_back(DialogueAct::of(ActKind::confirm));
                    text << " " << rng.pick(std::vector<std::string>(detail::kConfirms.begin(), detail::kConfirms.end()));
                    confirmed = true;
                }
                break;
            case ActKind::present_plan: {
                std::size_t issued = 0;
                for (const auto& h : s.history)
                    if (h.role == Role::user) issued += static_cast<std::size_t>(h.count(ActKind::revise));
                if (issued < persona.revisions.size()) {
                    DialogueAct x = DialogueAct::of(ActKind::revise);
                    x.request = persona.revisions[issued];
                    t.acts.push_back(x);
                    text << " Could you change the " << to_string(x.request->category) << " arrangements?";
                } else if (!confirmed) {
                    t.acts.push_back(DialogueAct::of(ActKind::confirm));
                    text << " Thanks, this works.";
                    confirmed = true;
                }
                break;
            }
            default: break;
        }
    }
    t.text = text.str();
    return t;
}

// Slots the simulator has stated so far, computed from its own informs and
// budget revisions rather than by parsing the transcript.
inline IntentSlots simulator_ledger(const Persona& persona, const std::vector<DialogueTurn>& history) {
    IntentSlots ledger;
    auto copy_field = [&](SlotField f) {
        switch (f) {
            case SlotField::departure_city: ledger.departure_city = persona.values.departure_city; break;
            case SlotField::destination_cities: ledger.destination_cities = persona.values.destination_cities; break;
            case SlotField::start_date: ledger.start_date = persona.values.start_date; break;
            case SlotField::num_days: ledger.num_days = persona.values.num_days; break;
            case SlotField::party_size: ledger.party_size = persona.values.party_size; break;
            case SlotField::budget_total: ledger.budget_total = persona.values.budget_total; break;
            case SlotField::hotel_type: ledger.hotel_type = persona.values.hotel_type; break;
            case SlotField::required_sites: ledger.required_sites = persona.values.required_sites; break;
            case SlotField::excluded_sites: ledger.excluded_sites = persona.values.excluded_sites; break;
            case SlotField::cuisine_prefs: ledger.cuisine_prefs = persona.values.cuisine_prefs; break;
            case SlotField::transport_pref: ledger.transport_pref = persona.values.transport_pref; break;
            case SlotField::pace: ledger.pace = persona.values.pace; break;
        }
    };
    for (const auto& t : history) {
        if (t.role != Role::user) continue;
        for (const auto& a : t.acts) {
            if (a.kind == ActKind::inform)
                if (auto f = parse_slot_field(a.slot)) copy_field(*f);
            if (a.kind == ActKind::revise && a.request && a.request->category == RevisionCategory::budget)
                ledger.budget_total = a.request->directive.amount;
        }
    }
    return ledger;
}

// ---------------------------------------------------------------------------
// Session driver shared by the simulator runs and the HTTP service
// ---------------------------------------------------------------------------

struct StepOutcome {
    std::optional<DialogueTurn> assistant;  // empty when the session now waits for a plan
    std::optional<std::string> infeasible;  // planner or revision could not deliver
};

// Produces the plan for a session that has all basic slots, appending the
// presentation turn when it is the assistant's turn to speak.
inline void deliver_plan(DialogueSession& s, const KnowledgeBase& kb, const SearchBudget& budget) {
    auto r = generate_plan(s.slots, kb, budget, s.id);
    s.plan = std::move(r.plan);
    s.report = std::move(r.report);
    if (!s.users_turn()) record_assistant_turn(s, assistant_turn(s, kb));
}

// Applies a revision to the session's plan. Throws on infeasibility with
// the session untouched.
inline RevisionResult apply_revision(DialogueSession& s, const RevisionRequest& req, const KnowledgeBase& kb) {
    if (!s.plan) throw ProtocolError("no plan to revise yet");
    auto r = revise_plan(*s.plan, req, s.slots, kb);
    s.plan = r.plan;
    s.report = r.report;
    s.slots.budget_total = r.slots.budget_total;
    return r;
}

// Records a user turn and lets the assistant respond. Confirming in
// ConfirmRevise leaves the session waiting for a plan; revise acts are
// applied to the current plan before the assistant presents it again.
inline StepOutcome submit_user_turn(DialogueSession& s, DialogueTurn user, const KnowledgeBase& kb) {
    const bool confirm_now = !s.plan && s.state == TopicState::ConfirmRevise && user.has(ActKind::confirm);
    std::vector<RevisionRequest> reqs;
    for (const auto& a : user.acts)
        if (a.kind == ActKind::revise && a.request) reqs.push_back(*a.request);
    if (!reqs.empty() && !s.plan) throw ProtocolError("no plan to revise yet");

    DialogueSession trial = s;
    record_user_turn(trial, std::move(user));
    StepOutcome out;
    for (const auto& r : reqs) {
        try {
            apply_revision(trial, r, kb);
        } catch (const InfeasibleError& e) {
            out.infeasible = e.what();
        }
    }
    if (confirm_now) {
        s = std::move(trial);
        return out;
    }
    DialogueTurn reply = assistant_turn(trial, kb);
    if (out.infeasible) reply.acts.insert(reply.acts.begin(), DialogueAct::of(ActKind::diagnostic, *out.infeasible));
    reply.text = detail::render_assistant(reply.acts);
    record_assistant_turn(trial, reply);
    out.assistant = std::move(reply);
    s = std::move(trial);
    return out;
}

struct SimulationLimits {
    int max_assistant_turns = 40;
    SearchBudget search;
};

// Runs a persona to completion: clarification, plan, scripted revisions and
// the closing confirmation.
inline DialogueSession run_simulation(const Persona& persona, const KnowledgeBase& kb, std::uint64_t seed,
                                      const std::string& session_id = "sim", SimulationLimits limits = {}) {
    DialogueSession s;
    s.id = session_id;
    while (s.assistant_turns() < limits.max_assistant_turns) {
        DialogueTurn user = simulate_user(persona, s, seed);
        const bool closing = s.plan && user.has(ActKind::confirm) && !user.has(ActKind::revise);
        if (closing) {
            record_user_turn(s, std::move(user));
            break;
        }
        auto out = submit_user_turn(s, std::move(user), kb);
        if (!out.assistant) {
            try {
                deliver_plan(s, kb, limits.search);
            } catch (const InfeasibleError& e) {
                record_assistant_turn(s, DialogueTurn{Role::assistant, {DialogueAct::of(ActKind::diagnostic, e.what())}, e.what()});
                break;
            }
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Text commands
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::string tok;
        if (text[i] == '"') {
            const auto close = text.find('"', i + 1);
            if (close == std::string_view::npos) throw ArgumentError("unterminated quote");
            tok = std::string(text.substr(i + 1, close - i - 1));
            i = close + 1;
        } else {
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) tok += text[i++];
        }
        out.push_back(tok);
    }
    return out;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s + ",") {
        if (ch == ',') {
            auto b = cur.find_first_not_of(' '), e = cur.find_last_not_of(' ');
            if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    return out;
}

inline std::string resolve_city(const KnowledgeBase& kb, const std::string& s) {
    if (kb.find_city(CityId(s))) return s;
    if (const City* c = kb.find_city_by_name(s)) return c->id.str();
    throw ArgumentError("unknown city '" + s + "'");
}

inline std::string resolve_poi(const KnowledgeBase& kb, const std::string& s) {
    if (kb.find_poi(PoiId(s))) return s;
    if (const Poi* p = kb.find_poi_by_name(s)) return p->id.str();
    throw ArgumentError("unknown place '" + s + "'");
}

inline std::optional<SlotField> slot_alias(const std::string& w) {
    static const std::map<std::string, SlotField> aliases{
        {"from", SlotField::departure_city},     {"departure", SlotField::departure_city},
        {"to", SlotField::destination_cities},   {"destinations", SlotField::destination_cities},
        {"cities", SlotField::destination_cities}, {"start", SlotField::start_date},
        {"date", SlotField::start_date},         {"days", SlotField::num_days},
        {"party", SlotField::party_size},        {"people", SlotField::party_size},
        {"budget", SlotField::budget_total},     {"hotel", SlotField::hotel_type},
        {"cuisine", SlotField::cuisine_prefs},   {"transport", SlotField::transport_pref},
        {"pace", SlotField::pace},               {"require", SlotField::required_sites},
        {"exclude", SlotField::excluded_sites}};
    if (auto it = aliases.find(w); it != aliases.end()) return it->second;
    return parse_slot_field(w);
}

inline int parse_int(const std::string& s) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw ArgumentError("");
        return v;
    } catch (const std::exception&) {
        throw ArgumentError("expected a whole number, got '" + s + "'");
    }
}

}  // namespace detail

// Grammar (one command per line):
//   set <slot> <value>          e.g. set budget 5000, set to Wuhan,Shanghai
//   require "<place>"           adds a must-visit attraction
//   exclude "<place>"           adds an attraction to avoid
//   confirm
//   revise dining <day> [breakfast|lunch|dinner] [cuisine <tag>]
//   revise weather <day> [indoor|outdoor]
//   revise transport <day> [cheapest|earliest|latest]
//   revise budget <amount>
// Days are 1-based here.
inline std::vector<DialogueAct> parse_command(std::string_view text, const IntentSlots& so_far,
                                              const KnowledgeBase& kb) {
    using namespace detail;
    const auto tok = tokenize(text);
    if (tok.empty()) throw ArgumentError("empty command");
    const std::string& verb = tok[0];

    if (verb == "confirm") return {DialogueAct::of(ActKind::confirm)};

    if (verb == "require" || verb == "exclude") {
        if (tok.size() < 2) throw ArgumentError(verb + " needs a place name");
        const SlotField f = verb == "require" ? SlotField::required_sites : SlotField::excluded_sites;
        std::set<std::string> ids;
        const auto& cur = verb == "require" ? so_far.required_sites : so_far.excluded_sites;
        if (cur)
            for (const auto& id : *cur) ids.insert(id.str());
        for (std::size_t i = 1; i < tok.size(); ++i) ids.insert(resolve_poi(kb, tok[i]));
        return {DialogueAct::inform(f, Json(std::vector<std::string>(ids.begin(), ids.end())))};
    }

    if (verb == "set") {
        if (tok.size() < 3) throw ArgumentError("usage: set <slot> <value>");
        auto f = slot_alias(tok[1]);
        if (!f) throw ArgumentError("unknown slot '" + tok[1] + "'");
        std::string value = tok[2];
        for (std::size_t i = 3; i < tok.size(); ++i) value += " " + tok[i];
        Json v;
        switch (*f) {
            case SlotField::departure_city: v = resolve_city(kb, value); break;
            case SlotField::destination_cities: {
                Json a = Json::array();
                for (const auto& c : split_list(value)) a.push_back(resolve_city(kb, c));
                v = a;
                break;
            }
            case SlotField::required_sites:
            case SlotField::excluded_sites: {
                Json a = Json::array();
                for (const auto& c : split_list(value)) a.push_back(resolve_poi(kb, c));
                v = a;
                break;
            }
            case SlotField::cuisine_prefs: v = split_list(value); break;
            case SlotField::start_date: v = Date::parse(value).str(); break;
            case SlotField::num_days:
            case SlotField::party_size:
            case SlotField::pace: v = parse_int(value); break;
            case SlotField::budget_total: {
                try {
                    std::size_t used = 0;
                    const double d = std::stod(value, &used);
                    if (used != value.size()) throw ArgumentError("");
                    v = Money::from_yuan(d).as_yuan();
                } catch (const std::exception&) {
                    throw ArgumentError("expected an amount, got '" + value + "'");
                }
                break;
            }
            case SlotField::hotel_type:
            case SlotField::transport_pref: v = value; break;
        }
        IntentSlots check = so_far;
        assign_slot(check, *f, JsonReader(v, "/" + std::string(to_string(*f))));
        return {DialogueAct::inform(*f, v)};
    }

    if (verb == "revise") {
        if (tok.size() < 3) throw ArgumentError("usage: revise <category> <day|amount> ...");
        auto cat = tok[1] == "transport" ? std::optional(RevisionCategory::transportation)
                                          : parse_revision_category(tok[1]);
        if (!cat) throw ArgumentError("unknown revision category '" + tok[1] + "'");
        RevisionRequest r;
        r.category = *cat;
        r.directive.type = std::string(default_directive(*cat));
        if (*cat == RevisionCategory::budget) {
            try {
                r.directive.amount = Money::from_yuan(std::stod(tok[2]));
            } catch (const std::exception&) {
                throw ArgumentError("expected an amount, got '" + tok[2] + "'");
            }
        } else {
            r.target.day = parse_int(tok[2]) - 1;
            for (std::size_t i = 3; i < tok.size(); ++i) {
                const auto& w = tok[i];
                if (auto m = parse_meal_slot(w)) r.target.meal = m;
                else if (w == "cuisine" && i + 1 < tok.size()) r.directive.cuisine = tok[++i];
                else if (w == "indoor") r.directive.type = "swap_indoor";
                else if (w == "outdoor") r.directive.type = "swap_outdoor";
                else if (w == "cheapest" || w == "earliest" || w == "latest") r.directive.prefer = w;
                else throw ArgumentError("unexpected word '" + w + "'");
            }
        }
        DialogueAct a = DialogueAct::of(ActKind::revise);
        a.request = r;
        return {a};
    }
    throw ArgumentError("unknown command '" + verb + "'");
}

// Reads free-text turns through the command grammar.
class CommandExtractor : public IntentExtractor {
public:
    explicit CommandExtractor(const KnowledgeBase& kb) : kb_(kb) {}
    std::vector<DialogueAct> acts_for(const DialogueTurn& turn, const IntentSlots& so_far) const override {
        if (!turn.acts.empty() || turn.text.empty()) return turn.acts;
        std::vector<DialogueAct> out;
        std::istringstream lines(turn.text);
        std::string line;
        IntentSlots cur = so_far;
        while (std::getline(lines, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            for (auto& a : parse_command(line, cur, kb_)) {
                fold_act(cur, a);
                out.push_back(std::move(a));
            }
        }
        return out;
    }

private:
    const KnowledgeBase& kb_;
};

// ---------------------------------------------------------------------------
// Session JSON
// ---------------------------------------------------------------------------

inline Json fill_mask_json(const IntentSlots& s) {
    Json m = Json::object();
    for (auto f : kAllSlots) m[std::string(to_string(f))] = s.filled(f);
    return m;
}

inline Json to_json(const DialogueSession& s) {
    Json history = Json::array(), transitions = Json::array(), revisions = Json::array();
    for (const auto& t : s.history) history.push_back(to_json(t));
    for (auto t : s.transitions) transitions.push_back(to_string(t));
    for (const auto& r : s.revisions) revisions.push_back(to_json(r));
    Json latest = nullptr;
    for (auto it = s.history.rbegin(); it != s.history.rend(); ++it)
        if (it->role == Role::assistant) {
            latest = to_json(*it);
            break;
        }
    return Json{{"id", s.id},
                {"state", to_string(s.state)},
                {"slots", to_json(s.slots)},
                {"fill_mask", fill_mask_json(s.slots)},
                {"latest_assistant_turn", latest},
                {"history", history},
                {"transitions", transitions},
                {"revisions", revisions},
                {"diagnostics", s.diagnostics},
                {"awaiting", s.awaiting_plan() ? "plan" : (s.users_turn() ? "user" : "assistant")},
                {"plan", s.plan ? to_json(*s.plan) : Json(nullptr)},
                {"report", s.report ? to_json(*s.report) : Json(nullptr)}};
}

// Restores a session; the report is recomputed from the plan.
inline DialogueSession session_from_json(const JsonReader& r, const KnowledgeBase& kb) {
    DialogueSession s;
    s.id = r.at("id").str();
    const auto st = r.at("state");
    auto state = parse_topic(st.str());
    if (!state) st.fail("unknown topic state");
    s.state = *state;
    for (const auto& t : r.at("history").items()) s.history.push_back(turn_from_json(t));
    if (auto tr = r.maybe("transitions"))
        for (const auto& t : tr->items()) {
            auto x = parse_topic(t.str());
            if (!x) t.fail("unknown topic state");
            s.transitions.push_back(*x);
        }
    if (auto rv = r.maybe("revisions"))
        for (const auto& x : rv->items()) s.revisions.push_back(revision_from_json(x));
    if (auto d = r.maybe("diagnostics")) s.diagnostics = d->strings();
    s.slots = slots_from_json(r.at("slots"));
    if (auto p = r.maybe("plan")) {
        s.plan = plan_from_json(*p);
        s.report = evaluate_plan(*s.plan, s.slots, kb);
    }
    return s;
}

}  // namespace itinera

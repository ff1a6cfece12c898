#pragma once

// JSON-over-HTTP front end. `Service::handle` is a pure dispatcher over
// (method, path, query, body) so it can be driven without a socket;
// `serve` binds it to cpp-httplib.

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>

#include "itinera/core.hpp"
#include "itinera/dialogue.hpp"
#include "itinera/json_io.hpp"
#include "itinera/kb.hpp"
#include "itinera/planner.hpp"
#include "itinera/slots.hpp"
#include "itinera/validator.hpp"

namespace itinera {

struct HttpResponse {
    int status = 200;
    std::string body;  // canonical JSON
};

// Plan generation shared by `plan gen` and POST /sessions/{id}/plan.
inline Json plan_response(const IntentSlots& slots, const KnowledgeBase& kb, const std::string& query_id,
                          const SearchBudget& search = {}) {
    return to_json(generate_plan(slots, kb, search, query_id));
}

struct ServiceOptions {
    SearchBudget search;
    SimulationLimits limits;
    std::optional<std::filesystem::path> snapshot;  // written after every mutation
};

class Service {
public:
    explicit Service(const KnowledgeBase& kb, ServiceOptions opts = {}) : kb_(kb), opts_(std::move(opts)) {}

    HttpResponse handle(const std::string& method, const std::string& path,
                        const std::map<std::string, std::string>& query, const std::string& body) {
        try {
            return route(method, path, query, body);
        } catch (const ParseError& e) {
            return error(400, e.what(), e.path);
        } catch (const ArgumentError& e) {
            return error(400, e.what());
        } catch (const ValidationError& e) {
            return error(400, e.what());
        } catch (const NotFoundError& e) {
            return error(404, e.what());
        } catch (const ProtocolError& e) {
            return error(409, e.what());
        } catch (const InfeasibleError& e) {
            return error(422, e.what());
        } catch (const std::exception& e) {
            return error(500, e.what());
        }
    }

    // Splits "path?k=v&..." and dispatches.
    HttpResponse handle(const std::string& method, const std::string& target, const std::string& body = "") {
        const auto q = target.find('?');
        std::map<std::string, std::string> params;
        if (q != std::string::npos) {
            std::istringstream ss(target.substr(q + 1));
            std::string kv;
            while (std::getline(ss, kv, '&')) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) params[kv] = "";
                else params[kv.substr(0, eq)] = kv.substr(eq + 1);
            }
        }
        return handle(method, target.substr(0, q), params, body);
    }

    Json snapshot_json() const {
        std::lock_guard lock(store_mu_);
        Json sessions = Json::array();
        for (const auto& [id, slot] : sessions_) {
            std::lock_guard sl(slot->mu);
            Json s{{"session", to_json(slot->session)}, {"seed", slot->seed}};
            if (slot->persona) s["persona"] = to_json(*slot->persona);
            sessions.push_back(s);
        }
        return Json{{"next_id", next_id_}, {"sessions", sessions}};
    }

    void restore(const Json& snap) {
        const JsonReader r(snap);
        std::map<std::string, std::shared_ptr<Slot>> loaded;
        for (const auto& it : r.at("sessions").items()) {
            auto slot = std::make_shared<Slot>();
            slot->session = session_from_json(it.at("session"), kb_);
            slot->seed = static_cast<std::uint64_t>(it.at("seed").integer());
            if (auto p = it.maybe("persona")) slot->persona = persona_from_json(*p);
            loaded[slot->session.id] = slot;
        }
        std::lock_guard lock(store_mu_);
        sessions_ = std::move(loaded);
        next_id_ = r.at("next_id").integer();
    }

    void load_snapshot(const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw NotFoundError("cannot open snapshot " + p.string());
        std::stringstream ss;
        ss << in.rdbuf();
        restore(parse_json(ss.str()));
    }

private:
    struct Slot {
        std::mutex mu;
        DialogueSession session;
        std::optional<Persona> persona;
        std::uint64_t seed = 0;
    };

    static HttpResponse ok(const Json& j, int status = 200) { return {status, canonical(j)}; }

    static HttpResponse error(int status, const std::string& msg, const std::string& path = "") {
        Json j{{"error", msg}, {"status", status}};
        if (!path.empty()) j["path"] = path;
        return {status, canonical(j)};
    }

    static std::vector<std::string> segments(const std::string& path) {
        std::vector<std::string> out;
        std::istringstream ss(path);
        std::string part;
        while (std::getline(ss, part, '/'))
            if (!part.empty()) out.push_back(part);
        return out;
    }

    static Json body_json(const std::string& body) {
        if (body.find_first_not_of(" \t\r\n") == std::string::npos) return Json::object();
        Json j = parse_json(body);
        if (!j.is_object()) JsonReader(j).fail("request body must be an object");
        return j;
    }

    std::shared_ptr<Slot> find_session(const std::string& id) const {
        std::lock_guard lock(store_mu_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw NotFoundError("unknown session " + id);
        return it->second;
    }

    void persist() const {
        if (!opts_.snapshot) return;
        const auto text = canonical(snapshot_json());
        std::lock_guard lock(persist_mu_);
        std::ofstream out(*opts_.snapshot, std::ios::binary);
        out << text;
    }

    HttpResponse route(const std::string& method, const std::string& path,
                       const std::map<std::string, std::string>& query, const std::string& body) {
        const auto seg = segments(path);
        auto want = [&](const char* m) {
            if (method != m) throw MethodNotAllowed{};
        };
        try {
            if (seg.size() == 1 && seg[0] == "sessions") {
                want("POST");
                return create_session(body_json(body));
            }
            if (seg.size() == 2 && seg[0] == "sessions") {
                want("GET");
                auto slot = find_session(seg[1]);
                std::lock_guard sl(slot->mu);
                return ok(to_json(slot->session));
            }
            if (seg.size() == 3 && seg[0] == "sessions") {
                want("POST");
                auto slot = find_session(seg[1]);
                if (seg[2] == "turns") return post_turn(*slot, body_json(body));
                if (seg[2] == "plan") return post_plan(*slot);
                if (seg[2] == "revise") return post_revise(*slot, body_json(body));
            }
            if (seg.size() == 1 && seg[0] == "validate") {
                want("POST");
                return validate(body_json(body));
            }
            if (seg.size() >= 2 && seg[0] == "kb") {
                want("GET");
                return kb_get(seg, query);
            }
        } catch (const MethodNotAllowed&) {
            return error(405, "method " + method + " not allowed on " + path);
        }
        return error(404, "no route for " + path);
    }

    struct MethodNotAllowed {};

    HttpResponse create_session(const Json& body) {
        const JsonReader r(body);
        std::optional<Persona> persona;
        if (auto p = r.maybe("persona")) persona = persona_from_json(*p);
        std::uint64_t seed = 0;
        if (auto s = r.maybe("seed")) seed = static_cast<std::uint64_t>(s->integer());

        auto slot = std::make_shared<Slot>();
        {
            std::lock_guard lock(store_mu_);
            char id[32];
            std::snprintf(id, sizeof id, "s%04lld", static_cast<long long>(next_id_));
            slot->session.id = id;
        }
        slot->persona = persona;
        slot->seed = seed;
        if (persona) {
            // Drive the simulated user until it confirms the requirements.
            auto& s = slot->session;
            while (s.assistant_turns() < opts_.limits.max_assistant_turns) {
                auto out = submit_user_turn(s, simulate_user(*persona, s, seed), kb_);
                if (!out.assistant) break;
            }
        }
        {
            std::lock_guard lock(store_mu_);
            ++next_id_;
            sessions_[slot->session.id] = slot;
        }
        persist();
        return ok(to_json(slot->session), 201);
    }

    HttpResponse post_turn(Slot& slot, const Json& body) {
        std::unique_lock sl(slot.mu);
        auto& s = slot.session;
        if (!s.users_turn()) throw ProtocolError("it is the assistant's turn");
        if (s.awaiting_plan()) throw ProtocolError("the session is waiting for POST /plan");
        const JsonReader r(body);
        DialogueTurn t;
        t.role = Role::user;
        if (auto acts = r.maybe("acts"))
            for (const auto& a : acts->items()) t.acts.push_back(act_from_json(a));
        if (auto text = r.maybe("text")) t.text = text->str();
        if (t.acts.empty() && !t.text.empty()) t.acts = CommandExtractor(kb_).acts_for(t, s.slots);
        if (t.acts.empty()) JsonReader(body, "/acts").fail("a turn needs acts or a command");
        DialogueSession work = s;
        auto out = submit_user_turn(work, std::move(t), kb_);
        s = std::move(work);
        auto res = ok(Json{{"assistant_turn", out.assistant ? to_json(*out.assistant) : Json(nullptr)},
                           {"session", to_json(s)}});
        sl.unlock();
        persist();
        return res;
    }

    HttpResponse post_plan(Slot& slot) {
        std::unique_lock sl(slot.mu);
        auto& s = slot.session;
        try {
            require_basics(s.slots);
        } catch (const ArgumentError& e) {
            throw ProtocolError(std::string("not ready to plan: ") + e.what());
        }
        DialogueSession work = s;
        deliver_plan(work, kb_, opts_.search);
        s = std::move(work);
        auto res = ok(Json{{"plan", to_json(*s.plan)}, {"report", to_json(*s.report)}});
        sl.unlock();
        persist();
        return res;
    }

    HttpResponse post_revise(Slot& slot, const Json& body) {
        std::unique_lock sl(slot.mu);
        auto& s = slot.session;
        if (!s.plan) throw ProtocolError("no plan to revise yet");
        if (!s.users_turn()) throw ProtocolError("it is the assistant's turn");
        const auto req = revision_from_json(JsonReader(body));
        DialogueSession work = s;
        const auto result = apply_revision(work, req, kb_);
        DialogueAct act = DialogueAct::of(ActKind::revise);
        act.request = req;
        work.history.push_back(DialogueTurn{Role::user, {act}, ""});
        work.revisions.push_back(req);
        record_assistant_turn(work, assistant_turn(work, kb_));
        s = std::move(work);
        sl.unlock();
        persist();
        return ok(to_json(result));
    }

    HttpResponse validate(const Json& body) {
        const JsonReader r(body);
        const Plan plan = plan_from_json(r.at("plan"));
        const auto q = r.at("query");
        const IntentSlots slots = q.has("slots") ? query_from_json(q).slots : slots_from_json(q);
        return ok(to_json(evaluate_plan(plan, slots, kb_)));
    }

    HttpResponse kb_get(const std::vector<std::string>& seg, const std::map<std::string, std::string>& query) {
        if (seg.size() == 2 && seg[1] == "cities") {
            Json a = Json::array();
            for (const auto& [id, c] : kb_.cities()) a.push_back(to_json(c));
            return ok(a);
        }
        if (seg.size() == 2 && seg[1] == "attractions") {
            Json a = Json::array();
            if (auto it = query.find("city"); it != query.end()) {
                kb_.city(CityId(it->second));
                for (const auto& id : kb_.pois_in(CityId(it->second), PoiKind::attraction)) a.push_back(to_json(kb_.poi(id)));
            } else {
                for (const auto& [id, p] : kb_.pois())
                    if (p.kind == PoiKind::attraction) a.push_back(to_json(p));
            }
            return ok(a);
        }
        if (seg.size() == 3 && seg[1] == "attractions") {
            const Poi& p = kb_.poi(PoiId(seg[2]));
            if (p.kind != PoiKind::attraction) throw NotFoundError("unknown attraction " + seg[2]);
            Json j = to_json(p);
            Json nearby = Json::array();
            for (const auto& n : p.attraction->nearby_restaurants) {
                const Poi& r = kb_.poi(n.poi);
                nearby.push_back(Json{{"id", r.id.str()}, {"name", r.name}, {"distance_km", n.distance_km}, {"rating", r.rating}});
            }
            j["nearby_restaurant_details"] = nearby;
            return ok(j);
        }
        return error(404, "no such knowledge base resource");
    }

    const KnowledgeBase& kb_;
    ServiceOptions opts_;
    mutable std::mutex store_mu_;
    mutable std::mutex persist_mu_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
    std::int64_t next_id_ = 1;
};

// An HTTP server routing every GET and POST through the dispatcher.
inline std::unique_ptr<httplib::Server> make_server(Service& svc) {
    auto server = std::make_unique<httplib::Server>();
    auto bridge = [&svc](const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> params;
        for (const auto& [k, v] : req.params) params[k] = v;
        HttpResponse out;
        const auto ctype = req.get_header_value("Content-Type");
        if (req.method == "POST" && !req.body.empty() && ctype.find("application/json") == std::string::npos)
            out = HttpResponse{400, canonical(Json{{"error", "content type must be application/json"}, {"status", 400}})};
        else
            out = svc.handle(req.method, req.path, params, req.body);
        res.status = out.status;
        res.set_content(out.body, "application/json");
    };
    server->Get(R"(/.*)", bridge);
    server->Post(R"(/.*)", bridge);
    return server;
}

// Binds the dispatcher to a listening socket; blocks until stopped.
inline bool serve(Service& svc, const std::string& host, int port) { return make_server(svc)->listen(host, port); }

}  // namespace itinera

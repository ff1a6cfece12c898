// itinera: command-line front end for the knowledge base, planner, dataset
// generator, benchmark and HTTP service.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "itinera/itinera.hpp"

namespace fs = std::filesystem;
using namespace itinera;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw NotFoundError("cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error("cannot write " + out);
    f << text;
}

std::string kb_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("ITINERA_KB_DIR"); env && *env) return env;
    throw ArgumentError("no knowledge base: pass --kb or set ITINERA_KB_DIR");
}

KnowledgeBase open_kb(const std::string& flag) {
    auto loaded = load_kb_dir(kb_dir(flag));
    if (!loaded.report.rejected.empty())
        std::cerr << "warning: " << loaded.report.rejected.size() << " knowledge-base record(s) rejected\n";
    return std::move(loaded.kb);
}

// A query file holds either {"id", "slots"} or a bare slot object.
Query read_query(const std::string& path) {
    const Json j = parse_json(read_file(path));
    const JsonReader r(j);
    if (r.has("slots")) return query_from_json(r);
    return Query{fs::path(path).stem().string(), slots_from_json(r)};
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ArgumentError*>(&e)) return 2;
    if (dynamic_cast<const NotFoundError*>(&e)) return 3;
    if (dynamic_cast<const InfeasibleError*>(&e)) return 4;
    return 1;
}

void chat(const KnowledgeBase& kb, const SearchBudget& search) {
    DialogueSession s;
    s.id = "chat";
    std::cout << "Commands: set <slot> <value>, require \"<place>\", exclude \"<place>\", confirm,\n"
                 "          revise <dining|weather|transport> <day> ..., revise budget <amount>, plan, quit\n";
    std::string line;
    while (std::cout << "> " && std::getline(std::cin, line)) {
        if (line == "quit" || line == "exit") break;
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            if (line == "plan") {
                if (!s.users_turn()) throw ProtocolError("it is the assistant's turn");
                auto r = generate_plan(s.slots, kb, search, s.id);
                s.plan = r.plan;
                s.report = r.report;
                std::cout << render_plan(*s.plan, kb) << summarize_plan(*s.plan, *s.report, kb) << "\n";
                continue;
            }
            DialogueTurn t;
            t.role = Role::user;
            t.text = line;
            t.acts = CommandExtractor(kb).acts_for(t, s.slots);
            auto out = submit_user_turn(s, std::move(t), kb);
            if (out.assistant) std::cout << out.assistant->text;
            if (!out.assistant) {
                deliver_plan(s, kb, search);
                std::cout << render_plan(*s.plan, kb) << s.history.back().text;
            } else if (s.plan && out.assistant->has(ActKind::present_plan)) {
                std::cout << render_plan(*s.plan, kb);
            }
        } catch (const Error& e) {
            std::cout << "error: " << e.what() << "\n";
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"itinera: travel knowledge base, planner and benchmark"};
    app.require_subcommand(1);

    std::string kb_flag, out;
    std::uint64_t seed = 0;
    SearchBudget search;

    // kb synth | validate
    auto* kb_cmd = app.add_subcommand("kb", "Knowledge-base utilities");
    kb_cmd->require_subcommand(1);
    int n_cities = 8, n_attractions = 10;
    auto* kb_synth = kb_cmd->add_subcommand("synth", "Write a seeded synthetic knowledge base");
    kb_synth->add_option("--seed", seed, "Random seed");
    kb_synth->add_option("--cities", n_cities, "Number of cities (2-24)");
    kb_synth->add_option("--attractions", n_attractions, "Attractions per city");
    kb_synth->add_option("--out", out, "Output directory")->required();
    auto* kb_validate = kb_cmd->add_subcommand("validate", "Load a knowledge base and report rejected records");
    kb_validate->add_option("--kb", kb_flag, "Knowledge-base directory");

    // dataset gen
    auto* ds_cmd = app.add_subcommand("dataset", "Query corpus generation");
    ds_cmd->require_subcommand(1);
    int n_queries = 200;
    double implicit_ratio = 0.4;
    auto* ds_gen = ds_cmd->add_subcommand("gen", "Generate queries, simulated sessions and plans");
    ds_gen->add_option("--kb", kb_flag, "Knowledge-base directory");
    ds_gen->add_option("--n", n_queries, "Number of queries")->check(CLI::NonNegativeNumber);
    ds_gen->add_option("--implicit-ratio", implicit_ratio, "Share of multi-turn (implicit) queries")
        ->check(CLI::Range(0.0, 1.0));
    ds_gen->add_option("--seed", seed, "Random seed");
    ds_gen->add_option("--out", out, "Output directory")->required();

    // plan gen | revise
    auto* plan_cmd = app.add_subcommand("plan", "Planning");
    plan_cmd->require_subcommand(1);
    std::string query_path, plan_path, request_path;
    auto* plan_gen = plan_cmd->add_subcommand("gen", "Plan one query; exit status 0 only when every check passes");
    plan_gen->add_option("--kb", kb_flag, "Knowledge-base directory");
    plan_gen->add_option("--query", query_path, "Query JSON")->required();
    plan_gen->add_option("--out", out, "Output file (default stdout)");
    plan_gen->add_option("--seed", seed, "Accepted for uniformity; planning is deterministic");
    plan_gen->add_option("--max-candidates", search.max_candidates, "Candidate plans to render");
    plan_gen->add_option("--beam", search.beam_width, "City orders to explore");
    auto* plan_revise = plan_cmd->add_subcommand("revise", "Apply one revision request to a plan");
    plan_revise->add_option("--kb", kb_flag, "Knowledge-base directory");
    plan_revise->add_option("--plan", plan_path, "Plan JSON")->required();
    plan_revise->add_option("--query", query_path, "Query JSON")->required();
    plan_revise->add_option("--request", request_path, "Revision request JSON")->required();
    plan_revise->add_option("--out", out, "Output file (default stdout)");
    plan_revise->add_option("--seed", seed, "Accepted for uniformity; revision is deterministic");

    // bench run
    auto* bench_cmd = app.add_subcommand("bench", "Benchmark evaluation");
    bench_cmd->require_subcommand(1);
    std::string plans_dir, queries_path, report_path, csv_path;
    auto* bench_run_cmd = bench_cmd->add_subcommand("run", "Validate a plan corpus and report pass rates");
    bench_run_cmd->add_option("--plans", plans_dir, "Directory of <id>.json plans")->required();
    bench_run_cmd->add_option("--kb", kb_flag, "Knowledge-base directory");
    bench_run_cmd->add_option("--queries", queries_path, "queries.jsonl")->required();
    bench_run_cmd->add_option("--report", report_path, "Report JSON path")->required();
    bench_run_cmd->add_option("--csv", csv_path, "CSV path (default: report path with .csv)");

    // serve
    std::string host = "127.0.0.1", snapshot;
    int port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP JSON API");
    serve_cmd->add_option("--kb", kb_flag, "Knowledge-base directory");
    serve_cmd->add_option("--host", host, "Bind address");
    serve_cmd->add_option("--port", port, "Port");
    serve_cmd->add_option("--snapshot", snapshot, "Session snapshot file, loaded at start and rewritten on change");

    // chat
    auto* chat_cmd = app.add_subcommand("chat", "Interactive session on the terminal");
    chat_cmd->add_option("--kb", kb_flag, "Knowledge-base directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (kb_synth->parsed()) {
            if (n_cities < 2 || n_cities > 24) throw ArgumentError("--cities must be between 2 and 24");
            write_kb_dir(synth_kb(seed, n_cities, n_attractions), out);
            std::cout << "wrote " << out << "\n";
            return 0;
        }
        if (kb_validate->parsed()) {
            auto loaded = load_kb_dir(kb_dir(kb_flag));
            const auto& kb = loaded.kb;
            std::cout << kb.cities().size() << " cities, " << kb.pois().size() << " POIs, " << kb.links().size()
                      << " links, " << kb.weather().size() << " weather records\n"
                      << loaded.report.render();
            return loaded.report.rejected.empty() ? 0 : 1;
        }
        if (ds_gen->parsed()) {
            const auto kb = open_kb(kb_flag);
            const auto corpus = dataset_gen(kb, n_queries, implicit_ratio, seed);
            write_corpus(corpus, out);
            std::cout << "wrote " << corpus.entries.size() << " entries to " << out << " (";
            for (std::size_t i = 0; i < 4; ++i)
                std::cout << (i ? ", " : "") << to_string(kAllCaseTypes[i]) << " " << corpus.counts[i];
            std::cout << ")\n";
            return 0;
        }
        if (plan_gen->parsed()) {
            search.check();
            const auto kb = open_kb(kb_flag);
            const Query q = read_query(query_path);
            const Json res = plan_response(q.slots, kb, q.id, search);
            emit(canonical(res), out);
            return res.at("report").at("final_pass").get<bool>() ? 0 : 5;
        }
        if (plan_revise->parsed()) {
            const auto kb = open_kb(kb_flag);
            const Query q = read_query(query_path);
            const Plan plan = parse_plan(read_file(plan_path));
            const Json req_json = parse_json(read_file(request_path));
            const auto req = revision_from_json(JsonReader(req_json));
            const auto res = revise_plan(plan, req, q.slots, kb);
            emit(canonical(to_json(res)), out);
            return res.report.final_pass ? 0 : 5;
        }
        if (bench_run_cmd->parsed()) {
            const auto kb = open_kb(kb_flag);
            const auto items = load_bench_items(queries_path, plans_dir);
            const auto res = bench_run(items, kb);
            emit(canonical(to_json(res)), report_path);
            if (csv_path.empty()) csv_path = fs::path(report_path).replace_extension(".csv").string();
            emit(bench_csv(res), csv_path);
            std::cout << bench_table(res);
            return 0;
        }
        if (serve_cmd->parsed()) {
            const auto kb = open_kb(kb_flag);
            ServiceOptions opts;
            if (!snapshot.empty()) opts.snapshot = snapshot;
            Service svc(kb, opts);
            if (!snapshot.empty() && fs::exists(snapshot)) svc.load_snapshot(snapshot);
            std::cout << "listening on http://" << host << ":" << port << "\n" << std::flush;
            return serve(svc, host, port) ? 0 : 1;
        }
        if (chat_cmd->parsed()) {
            chat(open_kb(kb_flag), search);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return 0;
}

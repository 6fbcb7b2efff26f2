// Command-line front end over the C interface.
// Exit codes: 0 definitive result, 2 some notion inconclusive, 1 error.

#include "gdarb/gdarb.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CliError {
    std::string message;
};

void check(gd_status st) {
    if (st != GD_OK) throw CliError{gd_last_error()};
}

std::string take(char* s) {
    std::string out = s ? s : "";
    gd_string_free(s);
    return out;
}

using ModelPtr = std::unique_ptr<gd_model, decltype(&gd_model_free)>;

struct ModelArgs {
    std::string model_path, catalog, params;
};

void add_model_options(CLI::App* cmd, ModelArgs& a) {
    auto* m = cmd->add_option("--model", a.model_path, "model-spec JSON file")->envname("GDARB_MODEL");
    auto* c = cmd->add_option("--catalog", a.catalog, "catalog model name")->envname("GDARB_CATALOG");
    cmd->add_option("--params", a.params, "catalog parameters k=v,k=v")->envname("GDARB_PARAMS");
    m->excludes(c);
}

ModelPtr load_model(const ModelArgs& a) {
    gd_model* m = nullptr;
    if (!a.model_path.empty()) {
        std::ifstream in(a.model_path);
        if (!in) throw CliError{"cannot read model file '" + a.model_path + "'"};
        std::stringstream ss;
        ss << in.rdbuf();
        check(gd_model_from_json(ss.str().c_str(), &m));
    } else if (!a.catalog.empty()) {
        check(gd_model_from_catalog(a.catalog.c_str(), a.params.c_str(), &m));
    } else {
        throw CliError{"one of --model or --catalog is required"};
    }
    return ModelPtr(m, gd_model_free);
}

std::string stem_of(const gd_model* m) {
    char* id = nullptr;
    check(gd_model_id(m, &id));
    std::string s = take(id), out;
    for (char ch : s) out.push_back(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.' ? ch : '_');
    return out.empty() ? "model" : out;
}

void write_file(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw CliError{"cannot write '" + p.string() + "'"};
    out << body;
}

fs::path out_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw CliError{"cannot create output directory '" + dir + "'"};
    return p;
}

int cmd_classify(const ModelArgs& a, const std::vector<std::string>& tols, const std::string& out) {
    ModelPtr m = load_model(a);
    std::unique_ptr<gd_tolerances, decltype(&gd_tolerances_free)> tol(nullptr, gd_tolerances_free);
    {
        gd_tolerances* t = nullptr;
        check(gd_tolerances_new(&t));
        tol.reset(t);
    }
    for (const auto& item : tols) {
        std::stringstream ss(item);
        std::string kv;
        while (std::getline(ss, kv, ',')) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) throw CliError{"tol: expected key=value, got '" + kv + "'"};
            check(gd_tolerances_set(tol.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
        }
    }
    gd_verdict* v = nullptr;
    check(gd_classify(m.get(), tol.get(), &v));
    std::unique_ptr<gd_verdict, decltype(&gd_verdict_free)> vp(v, gd_verdict_free);
    char* js = nullptr;
    check(gd_verdict_to_json(v, &js));
    std::string body = take(js);
    std::cout << body;
    if (!out.empty()) write_file(out_dir(out) / (stem_of(m.get()) + ".verdict.json"), body);
    gd_tri t[4];
    check(gd_verdict_notions(v, &t[0], &t[1], &t[2], &t[3]));
    for (gd_tri x : t)
        if (x == GD_INCONCLUSIVE) return 2;
    return 0;
}

int cmd_simulate(const ModelArgs& a, const gd_sim_config& cfg, const std::string& out) {
    ModelPtr m = load_model(a);
    gd_sim_report* r = nullptr;
    check(gd_simulate(m.get(), &cfg, &r));
    std::unique_ptr<gd_sim_report, decltype(&gd_sim_report_free)> rp(r, gd_sim_report_free);
    char* s = nullptr;
    check(gd_sim_report_to_json(r, &s));
    std::string body = take(s);
    std::cout << body;
    if (!out.empty()) {
        fs::path dir = out_dir(out);
        std::string stem = stem_of(m.get());
        write_file(dir / (stem + ".simulation.json"), body);
        check(gd_sim_report_k_ladder_csv(r, &s));
        write_file(dir / (stem + ".k_ladder.csv"), take(s));
        check(gd_sim_report_payoff_histogram_csv(r, &s));
        write_file(dir / (stem + ".payoff_histogram.csv"), take(s));
        if (cfg.keep_paths) {
            check(gd_sim_report_paths_csv(r, &s));
            write_file(dir / (stem + ".paths.csv"), take(s));
        }
    }
    return 0;
}

int cmd_catalog_list() {
    char* s = nullptr;
    check(gd_catalog_list_json(&s));
    std::cout << take(s);
    return 0;
}

int cmd_catalog_show(const std::string& name, const std::string& params) {
    char* s = nullptr;
    check(gd_catalog_show_json(name.c_str(), &s));
    std::cout << take(s);
    check(gd_catalog_expected_json(name.c_str(), params.c_str(), &s));
    std::cout << take(s);
    return 0;
}

// Merge verdict and simulation outputs of a directory into one table.
int cmd_report(const std::string& in, const std::string& out) {
    using nlohmann::json;
    if (in.empty() || !fs::is_directory(in)) throw CliError{"report: input directory '" + in + "' does not exist"};
    struct Row {
        std::string nip = "-", nsa = "-", nupbr = "-", rp = "-", kdiv = "-", arb = "-";
    };
    std::map<std::string, Row> rows;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(in))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        std::string name = p.filename().string();
        bool verdict = name.size() > 13 && name.ends_with(".verdict.json");
        bool sim = name.size() > 16 && name.ends_with(".simulation.json");
        if (!verdict && !sim) continue;
        std::ifstream f(p);
        json j;
        try {
            j = json::parse(f);
        } catch (const json::exception& e) {
            throw CliError{"report: cannot parse '" + p.string() + "': " + e.what()};
        }
        Row& r = rows[j.value("model_id", name)];
        if (verdict) {
            r.nip = j.value("nip", "-");
            r.nsa = j.value("nsa", "-");
            r.nupbr = j.value("nupbr", "-");
            r.rp = j.value("rp", "-");
        } else {
            const json& fl = j.value("flags", json::object());
            if (fl.contains("k_divergent")) r.kdiv = fl["k_divergent"].get<bool>() ? "yes" : "no";
            if (fl.contains("empirical_arbitrage")) r.arb = fl["empirical_arbitrage"].get<bool>() ? "yes" : "no";
        }
    }
    if (rows.empty()) throw CliError{"report: no verdict or simulation outputs in '" + in + "'"};
    std::ostringstream os;
    os << "| model | NIP | NSA | NUPBR | RP | K divergent | empirical arbitrage |\n";
    os << "|---|---|---|---|---|---|---|\n";
    for (const auto& [id, r] : rows)
        os << "| " << id << " | " << r.nip << " | " << r.nsa << " | " << r.nupbr << " | " << r.rp << " | " << r.kdiv
           << " | " << r.arb << " |\n";
    std::cout << os.str();
    if (!out.empty()) write_file(fs::path(out), os.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Arbitrage classification and simulation for one-dimensional diffusion markets", "gdarb"};
    app.require_subcommand(1);

    ModelArgs cls_args, sim_args;
    std::vector<std::string> tols;
    std::string cls_out, sim_out, report_in, report_out, show_name, show_params;
    gd_sim_config cfg;
    gd_sim_config_default(&cfg);
    bool dump_paths = false;

    auto* cls = app.add_subcommand("classify", "classify a model (NIP, NSA, NUPBR, RP)");
    add_model_options(cls, cls_args);
    cls->add_option("--tol", tols, "tolerance override key=val (repeatable)")->envname("GDARB_TOL");
    cls->add_option("--out", cls_out, "output directory")->envname("GDARB_OUT");

    auto* sim = app.add_subcommand("simulate", "run the Markov-chain simulation pipeline");
    add_model_options(sim, sim_args);
    sim->add_option("--seed", cfg.seed, "random seed")->envname("GDARB_SEED");
    sim->add_option("--grid", cfg.grid, "grid size N")->envname("GDARB_GRID");
    sim->add_option("--paths", cfg.n_paths, "number of paths")->envname("GDARB_PATHS");
    sim->add_option("--levels", cfg.levels, "refinement levels")->envname("GDARB_LEVELS");
    sim->add_option("--out", sim_out, "output directory")->envname("GDARB_OUT");
    sim->add_flag("--dump-paths", dump_paths, "write per-path CSV");

    auto* cat = app.add_subcommand("catalog", "inspect the model catalog");
    cat->require_subcommand(1);
    auto* cat_list = cat->add_subcommand("list", "list all entries");
    auto* cat_show = cat->add_subcommand("show", "show one entry and its expected verdict");
    cat_show->add_option("name", show_name, "entry name")->required();
    cat_show->add_option("--params", show_params, "parameters k=v,k=v")->envname("GDARB_PARAMS");

    auto* rep = app.add_subcommand("report", "merge prior outputs into one table");
    rep->add_option("--in", report_in, "directory with prior outputs")->required();
    rep->add_option("--out", report_out, "write the table to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*cls) return cmd_classify(cls_args, tols, cls_out);
        if (*sim) {
            cfg.keep_paths = dump_paths ? 1 : 0;
            return cmd_simulate(sim_args, cfg, sim_out);
        }
        if (*cat_list) return cmd_catalog_list();
        if (*cat_show) return cmd_catalog_show(show_name, show_params);
        if (*rep) return cmd_report(report_in, report_out);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return 1;
    }
    return 1;
}

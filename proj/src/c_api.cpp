#include "gdarb/gdarb.h"

#include "gdarb/errors.hpp"
#include "gdarb/serialize.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct gd_model {
    gdarb::DiffusionSpec spec;
};
struct gd_tolerances {
    gdarb::Tolerances tol;
};
struct gd_verdict {
    gdarb::Verdict v;
};
struct gd_sim_report {
    std::string model_id;
    gdarb::SimulationReport rep;
};

namespace {

thread_local std::string g_last_error;

gd_status status_of(gdarb::ErrorKind k) {
    switch (k) {
        case gdarb::ErrorKind::Domain: return GD_ERR_DOMAIN;
        case gdarb::ErrorKind::Quadrature: return GD_ERR_QUADRATURE;
        case gdarb::ErrorKind::Range: return GD_ERR_RANGE;
        case gdarb::ErrorKind::Validation: return GD_ERR_VALIDATION;
        case gdarb::ErrorKind::Parse: return GD_ERR_PARSE;
        case gdarb::ErrorKind::UnknownModel: return GD_ERR_UNKNOWN_MODEL;
        case gdarb::ErrorKind::Numeric: return GD_ERR_NUMERIC;
    }
    return GD_ERR_INTERNAL;
}

template <class F>
gd_status guard(F&& f) {
    g_last_error.clear();
    try {
        f();
        return GD_OK;
    } catch (const gdarb::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return GD_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return GD_ERR_INTERNAL;
    }
}

gd_status invalid(const char* what) {
    g_last_error = what;
    return GD_ERR_INVALID_ARGUMENT;
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

gd_tri tri_of(gdarb::Tri t) {
    switch (t) {
        case gdarb::Tri::Holds: return GD_HOLDS;
        case gdarb::Tri::Fails: return GD_FAILS;
        default: return GD_INCONCLUSIVE;
    }
}

}  // namespace

extern "C" {

const char* gd_version(void) { return "1.0.0"; }

const char* gd_last_error(void) { return g_last_error.c_str(); }

void gd_string_free(char* s) { std::free(s); }

gd_status gd_model_from_json(const char* json, gd_model** out) {
    if (!json || !out) return invalid("gd_model_from_json: null argument");
    return guard([&] { *out = new gd_model{gdarb::parse_model_spec(json)}; });
}

gd_status gd_model_from_catalog(const char* name, const char* params, gd_model** out) {
    if (!name || !out) return invalid("gd_model_from_catalog: null argument");
    return guard([&] {
        gdarb::Params p = params ? gdarb::parse_param_list(params) : gdarb::Params{};
        *out = new gd_model{gdarb::build_catalog_model(name, p)};
    });
}

gd_status gd_model_to_json(const gd_model* m, char** out) {
    if (!m || !out) return invalid("gd_model_to_json: null argument");
    return guard([&] { *out = dup(gdarb::model_spec_to_json(m->spec)); });
}

gd_status gd_model_id(const gd_model* m, char** out) {
    if (!m || !out) return invalid("gd_model_id: null argument");
    return guard([&] { *out = dup(m->spec.model_id); });
}

void gd_model_free(gd_model* m) { delete m; }

gd_status gd_tolerances_new(gd_tolerances** out) {
    if (!out) return invalid("gd_tolerances_new: null argument");
    return guard([&] { *out = new gd_tolerances{}; });
}

gd_status gd_tolerances_set(gd_tolerances* t, const char* key, const char* value) {
    if (!t || !key || !value) return invalid("gd_tolerances_set: null argument");
    return guard([&] { gdarb::apply_tolerance(t->tol, key, value); });
}

void gd_tolerances_free(gd_tolerances* t) { delete t; }

gd_status gd_classify(const gd_model* m, const gd_tolerances* tol, gd_verdict** out) {
    if (!m || !out) return invalid("gd_classify: null argument");
    return guard([&] { *out = new gd_verdict{gdarb::classify(m->spec, tol ? tol->tol : gdarb::Tolerances{})}; });
}

gd_status gd_verdict_notions(const gd_verdict* v, gd_tri* nip, gd_tri* nsa, gd_tri* nupbr, gd_tri* rp) {
    if (!v) return invalid("gd_verdict_notions: null verdict");
    if (nip) *nip = tri_of(v->v.nip);
    if (nsa) *nsa = tri_of(v->v.nsa);
    if (nupbr) *nupbr = tri_of(v->v.nupbr);
    if (rp) *rp = tri_of(v->v.rp);
    return GD_OK;
}

gd_status gd_verdict_to_json(const gd_verdict* v, char** out) {
    if (!v || !out) return invalid("gd_verdict_to_json: null argument");
    return guard([&] { *out = dup(gdarb::verdict_to_json(v->v)); });
}

void gd_verdict_free(gd_verdict* v) { delete v; }

void gd_sim_config_default(gd_sim_config* cfg) {
    if (!cfg) return;
    gdarb::SimulationConfig d;
    cfg->grid = d.N;
    cfg->n_paths = d.n_paths;
    cfg->levels = d.levels;
    cfg->seed = d.seed;
    cfg->tradeoff_paths = d.tradeoff_paths;
    cfg->keep_paths = d.keep_paths ? 1 : 0;
}

gd_status gd_simulate(const gd_model* m, const gd_sim_config* cfg, gd_sim_report** out) {
    if (!m || !cfg || !out) return invalid("gd_simulate: null argument");
    if (cfg->levels < 1 || cfg->levels > 8) return invalid("gd_simulate: levels must be in [1, 8]");
    if (cfg->grid < 16 || cfg->grid > (1 << 20)) return invalid("gd_simulate: grid must be in [16, 2^20]");
    if (cfg->n_paths < 1) return invalid("gd_simulate: n_paths must be positive");
    return guard([&] {
        gdarb::SimulationConfig c;
        c.N = cfg->grid;
        c.n_paths = cfg->n_paths;
        c.levels = cfg->levels;
        c.seed = cfg->seed;
        c.tradeoff_paths = cfg->tradeoff_paths;
        c.keep_paths = cfg->keep_paths != 0;
        *out = new gd_sim_report{m->spec.model_id, gdarb::simulate(m->spec, c)};
    });
}

gd_status gd_sim_report_to_json(const gd_sim_report* r, char** out) {
    if (!r || !out) return invalid("gd_sim_report_to_json: null argument");
    return guard([&] { *out = dup(gdarb::simulation_report_to_json(r->model_id, r->rep)); });
}

gd_status gd_sim_report_k_ladder_csv(const gd_sim_report* r, char** out) {
    if (!r || !out) return invalid("gd_sim_report_k_ladder_csv: null argument");
    return guard([&] { *out = dup(gdarb::k_ladder_csv(r->rep.tradeoff)); });
}

gd_status gd_sim_report_payoff_histogram_csv(const gd_sim_report* r, char** out) {
    if (!r || !out) return invalid("gd_sim_report_payoff_histogram_csv: null argument");
    return guard([&] { *out = dup(gdarb::payoff_histogram_csv(r->rep)); });
}

gd_status gd_sim_report_paths_csv(const gd_sim_report* r, char** out) {
    if (!r || !out) return invalid("gd_sim_report_paths_csv: null argument");
    return guard([&] { *out = dup(gdarb::paths_csv(r->rep)); });
}

void gd_sim_report_free(gd_sim_report* r) { delete r; }

gd_status gd_catalog_list_json(char** out) {
    if (!out) return invalid("gd_catalog_list_json: null argument");
    return guard([&] { *out = dup(gdarb::catalog_list_json()); });
}

gd_status gd_catalog_show_json(const char* name, char** out) {
    if (!name || !out) return invalid("gd_catalog_show_json: null argument");
    return guard([&] { *out = dup(gdarb::catalog_entry_json(name)); });
}

gd_status gd_catalog_expected_json(const char* name, const char* params, char** out) {
    if (!name || !out) return invalid("gd_catalog_expected_json: null argument");
    return guard([&] {
        gdarb::Params p = params ? gdarb::parse_param_list(params) : gdarb::Params{};
        *out = dup(gdarb::expected_verdict_json(name, p));
    });
}

}  // extern "C"

#include <doctest.h>

#include "gdarb/gdarb.h"

#include <cstring>
#include <string>
#include <thread>

namespace {

std::string take(char* s) {
    std::string out = s ? s : "";
    gd_string_free(s);
    return out;
}

}  // namespace

TEST_CASE("version string is available") { CHECK(std::strlen(gd_version()) > 0); }

TEST_CASE("catalog model classifies through the C interface") {
    gd_model* m = nullptr;
    REQUIRE(gd_model_from_catalog("sticky_skew", "r=0.9", &m) == GD_OK);
    char* id = nullptr;
    REQUIRE(gd_model_id(m, &id) == GD_OK);
    CHECK(take(id) == "sticky_skew(r=0.9)");
    gd_verdict* v = nullptr;
    REQUIRE(gd_classify(m, nullptr, &v) == GD_OK);
    gd_tri nip, nsa, nupbr, rp;
    REQUIRE(gd_verdict_notions(v, &nip, &nsa, &nupbr, &rp) == GD_OK);
    CHECK(nip == GD_FAILS);
    CHECK(nsa == GD_FAILS);
    CHECK(nupbr == GD_FAILS);
    CHECK(rp == GD_HOLDS);
    char* js = nullptr;
    REQUIRE(gd_verdict_to_json(v, &js) == GD_OK);
    CHECK(take(js).find("\"nip\": \"fails\"") != std::string::npos);
    gd_verdict_free(v);
    gd_model_free(m);
}

TEST_CASE("model JSON round trip") {
    gd_model* m = nullptr;
    REQUIRE(gd_model_from_catalog("brownian_motion", nullptr, &m) == GD_OK);
    char* js = nullptr;
    REQUIRE(gd_model_to_json(m, &js) == GD_OK);
    std::string text = take(js);
    gd_model* back = nullptr;
    REQUIRE(gd_model_from_json(text.c_str(), &back) == GD_OK);
    REQUIRE(gd_model_to_json(back, &js) == GD_OK);
    CHECK(take(js) == text);
    gd_model_free(back);
    gd_model_free(m);
}

TEST_CASE("error codes and last error") {
    gd_model* m = nullptr;
    CHECK(gd_model_from_catalog("no_such_model", "", &m) == GD_ERR_UNKNOWN_MODEL);
    CHECK(m == nullptr);
    CHECK(std::string(gd_last_error()).find("no_such_model") != std::string::npos);
    CHECK(gd_model_from_json("{bad", &m) == GD_ERR_PARSE);
    CHECK(gd_model_from_catalog("squared_bessel", "delta=3", &m) == GD_ERR_VALIDATION);
    CHECK(gd_model_from_catalog(nullptr, "", &m) == GD_ERR_INVALID_ARGUMENT);
    CHECK(gd_classify(nullptr, nullptr, nullptr) == GD_ERR_INVALID_ARGUMENT);
    const char* absorbing = R"({"state_interval": {"alpha": 0, "beta": "inf", "alpha_closed": true},
        "scale": {"node": "affine", "a": 1, "b": 0},
        "speed": {"ac": {"node": "const", "value": 1}, "atoms": [[0, "inf"]]},
        "left_boundary": "absorbing", "x0": 0})";
    gd_status st = gd_model_from_json(absorbing, &m);
    if (st == GD_OK) {
        gd_verdict* v = nullptr;
        st = gd_classify(m, nullptr, &v);
        gd_model_free(m);
        CHECK(v == nullptr);
    }
    CHECK(st == GD_ERR_VALIDATION);
    CHECK(std::string(gd_last_error()).find("starting value absorbing") != std::string::npos);
}

TEST_CASE("last error is per thread") {
    gd_model* m = nullptr;
    CHECK(gd_model_from_catalog("first_thread_error", "", &m) != GD_OK);
    std::thread t([] {
        gd_model* other = nullptr;
        gd_model_from_catalog("second_thread_error", "", &other);
    });
    t.join();
    CHECK(std::string(gd_last_error()).find("first_thread_error") != std::string::npos);
}

TEST_CASE("tolerances") {
    gd_tolerances* t = nullptr;
    REQUIRE(gd_tolerances_new(&t) == GD_OK);
    CHECK(gd_tolerances_set(t, "equality_rel", "1e-8") == GD_OK);
    CHECK(gd_tolerances_set(t, "nope", "1") != GD_OK);
    gd_model* m = nullptr;
    REQUIRE(gd_model_from_catalog("sticky_reflected_bm", "", &m) == GD_OK);
    gd_verdict* v = nullptr;
    REQUIRE(gd_classify(m, t, &v) == GD_OK);
    gd_tri nip, nsa, nupbr, rp;
    gd_verdict_notions(v, &nip, &nsa, &nupbr, &rp);
    CHECK(nupbr == GD_HOLDS);
    gd_verdict_free(v);
    gd_model_free(m);
    gd_tolerances_free(t);
}

TEST_CASE("simulation through the C interface is deterministic") {
    gd_model* m = nullptr;
    REQUIRE(gd_model_from_catalog("sticky_reflected_bm", "r=0,rho=0", &m) == GD_OK);
    gd_sim_config cfg;
    gd_sim_config_default(&cfg);
    CHECK(cfg.grid == 512);
    CHECK(cfg.n_paths == 10000);
    CHECK(cfg.levels == 3);
    CHECK(cfg.seed == 42);
    cfg.grid = 64;
    cfg.n_paths = 200;
    cfg.levels = 2;
    cfg.keep_paths = 1;
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
        gd_sim_report* r = nullptr;
        REQUIRE(gd_simulate(m, &cfg, &r) == GD_OK);
        char* s = nullptr;
        REQUIRE(gd_sim_report_to_json(r, &s) == GD_OK);
        std::string body = take(s);
        if (rep == 0)
            first = body;
        else
            CHECK(body == first);
        REQUIRE(gd_sim_report_k_ladder_csv(r, &s) == GD_OK);
        CHECK(take(s).rfind("N,K_mean", 0) == 0);
        REQUIRE(gd_sim_report_payoff_histogram_csv(r, &s) == GD_OK);
        CHECK(!take(s).empty());
        REQUIRE(gd_sim_report_paths_csv(r, &s) == GD_OK);
        CHECK(take(s).rfind("path,", 0) == 0);
        gd_sim_report_free(r);
    }
    cfg.levels = 0;
    gd_sim_report* bad = nullptr;
    CHECK(gd_simulate(m, &cfg, &bad) == GD_ERR_INVALID_ARGUMENT);
    gd_model_free(m);
}

TEST_CASE("catalog views") {
    char* s = nullptr;
    REQUIRE(gd_catalog_list_json(&s) == GD_OK);
    CHECK(take(s).find("sticky_skew") != std::string::npos);
    REQUIRE(gd_catalog_show_json("cubed_bm", &s) == GD_OK);
    CHECK(take(s).find("cubed_bm") != std::string::npos);
    REQUIRE(gd_catalog_expected_json("sticky_reflected_bm", "r=0,rho=2", &s) == GD_OK);
    CHECK(take(s).find("fails") != std::string::npos);
    CHECK(gd_catalog_show_json("nope", &s) == GD_ERR_UNKNOWN_MODEL);
}

TEST_CASE("free functions accept null") {
    gd_model_free(nullptr);
    gd_verdict_free(nullptr);
    gd_sim_report_free(nullptr);
    gd_tolerances_free(nullptr);
    gd_string_free(nullptr);
}

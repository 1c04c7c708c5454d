#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "doctest.h"
#include "pestdet/pestdet.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("pestdet_capi_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string take(char* s) {
    std::string r = s ? s : "";
    pd_string_free(s);
    return r;
}

} // namespace

TEST_CASE("status names and version") {
    CHECK(std::string(pd_version()) == "1.0.0");
    CHECK(std::string(pd_status_name(PD_OK)) == "ok");
    CHECK(std::string(pd_status_name(PD_ERR_IO)) == "Io");
    CHECK(std::string(pd_status_name(PD_ERR_INSUFFICIENT_DATA)) == "InsufficientData");
    CHECK(std::string(pd_status_name(PD_ERR_INTERNAL)) == "internal");
    CHECK(std::string(pd_status_name(pd_status(77))) == "unknown");
}

TEST_CASE("images through handles") {
    TempDir tmp;
    std::vector<uint8_t> px(30 * 20);
    for (size_t i = 0; i < px.size(); ++i)
        px[i] = uint8_t(i * 7);
    pd_image* img = nullptr;
    REQUIRE(pd_image_from_pixels(30, 20, px.data(), &img) == PD_OK);
    uint32_t w = 0, h = 0;
    CHECK(pd_image_dims(img, &w, &h) == PD_OK);
    CHECK(w == 30);
    CHECK(h == 20);
    CHECK(pd_image_save(img, (tmp / "a.pgm").c_str()) == PD_OK);

    pd_image* back = nullptr;
    REQUIRE(pd_image_load((tmp / "a.pgm").c_str(), &back) == PD_OK);
    CHECK(pd_image_dims(back, &w, &h) == PD_OK);
    CHECK(w * h == 600);

    pd_image* noisy1 = nullptr;
    pd_image* noisy2 = nullptr;
    CHECK(pd_image_degrade(img, 5.0, 9, &noisy1) == PD_OK);
    CHECK(pd_image_degrade(img, 5.0, 9, &noisy2) == PD_OK);
    CHECK(pd_image_save(noisy1, (tmp / "n1.pgm").c_str()) == PD_OK);
    CHECK(pd_image_save(noisy2, (tmp / "n2.pgm").c_str()) == PD_OK);
    CHECK(fs::file_size(tmp / "n1.pgm") == fs::file_size(tmp / "n2.pgm"));
    CHECK(pd_image_degrade(img, -1.0, 9, &noisy1) == PD_ERR_INVALID_ARGUMENT);
    pd_image_free(noisy1);
    pd_image_free(noisy2);
    pd_image_free(back);
    pd_image_free(img);

    pd_image* none = nullptr;
    CHECK(pd_image_load((tmp / "missing.pgm").c_str(), &none) == PD_ERR_IO);
    CHECK(none == nullptr);
    CHECK(std::strlen(pd_last_error()) > 0);
    CHECK(pd_image_from_pixels(0, 5, px.data(), &none) != PD_OK);
    CHECK(pd_image_load(nullptr, &none) == PD_ERR_INVALID_ARGUMENT);
}

TEST_CASE("train, save, load and detect") {
    TempDir tmp;
    REQUIRE(pd_synth_corpus(tmp.path.c_str(), 60, 0, 2, 0, 160, 120, 3) == PD_OK);
    pd_train_options opt;
    pd_train_options_init(&opt);
    opt.num_stages = 2;
    opt.max_weak_per_stage = 3;
    opt.feature_fraction = 0.02;
    opt.negatives_per_stage = 100;
    opt.min_negatives = 10;
    opt.threads = 2;
    pd_cascade* c = nullptr;
    char* log = nullptr;
    REQUIRE(pd_train_dirs((tmp / "train/pos").c_str(), (tmp / "train/neg").c_str(), &opt, &c,
                          &log) == PD_OK);
    CHECK(take(log).find('\n') != std::string::npos);
    uint32_t stages = 0, weak = 0;
    uint64_t size = 0;
    CHECK(pd_cascade_info(c, &stages, &weak, &size) == PD_OK);
    CHECK(stages >= 1);
    CHECK(weak >= stages);
    CHECK(pd_cascade_save(c, (tmp / "c.json").c_str()) == PD_OK);
    pd_cascade* c2 = nullptr;
    REQUIRE(pd_cascade_load((tmp / "c.json").c_str(), &c2) == PD_OK);

    REQUIRE(pd_synth_scenes((tmp / "scenes").c_str(), 2, 320, 240, 3, 4) == PD_OK);
    CHECK(fs::exists(tmp / "scenes/gt.csv"));
    pd_image* img = nullptr;
    REQUIRE(pd_image_load((tmp / "scenes/scene_0000.pgm").c_str(), &img) == PD_OK);

    pd_detect_options dopt;
    pd_detect_options_init(&dopt);
    CHECK(dopt.num_scales == 5);
    CHECK(dopt.budget_bytes == 99600);
    std::string reports[2];
    for (int i = 0; i < 2; ++i) {
        dopt.workers = i == 0 ? 1 : 4;
        char* csv = nullptr;
        REQUIRE(pd_detect_report(i ? c2 : c, img, &dopt, "scene_0000", 1, &csv) == PD_OK);
        reports[i] = take(csv);
    }
    CHECK(reports[0] == reports[1]);
    pd_detection* d = nullptr;
    size_t n = 0;
    REQUIRE(pd_detect(c, img, &dopt, &d, &n) == PD_OK);
    size_t lines = 0;
    for (char ch : reports[0])
        lines += ch == '\n';
    CHECK(lines == n + 1);
    for (size_t i = 1; i < n; ++i)
        CHECK((d[i - 1].level < d[i].level ||
               (d[i - 1].level == d[i].level &&
                (d[i - 1].y < d[i].y || (d[i - 1].y == d[i].y && d[i - 1].x < d[i].x)))));
    pd_detections_free(d);

    dopt.scale_factor = 1.0;
    CHECK(pd_detect(c, img, &dopt, &d, &n) == PD_ERR_INVALID_ARGUMENT);
    pd_detect_options_init(&dopt);
    dopt.budget_bytes = 1000;
    CHECK(pd_detect(c, img, &dopt, &d, &n) == PD_ERR_BUDGET_TOO_SMALL);

    char* plan = nullptr;
    pd_detect_options_init(&dopt);
    REQUIRE(pd_tile_plan_report(320, 240, &dopt, &plan) == PD_OK);
    CHECK(take(plan).find("0,320,240,0,0,0,100,240") != std::string::npos);

    pd_image_free(img);
    pd_cascade_free(c2);
    pd_cascade_free(c);

    pd_cascade* bad = nullptr;
    CHECK(pd_cascade_load((tmp / "nope.json").c_str(), &bad) == PD_ERR_IO);
    CHECK(pd_train_dirs((tmp / "test/pos").c_str(), (tmp / "train/neg").c_str(), &opt, &bad,
                        nullptr) != PD_OK);
}

TEST_CASE("evaluation through files") {
    TempDir tmp;
    REQUIRE(pd_synth_scenes(tmp.path.c_str(), 3, 200, 150, 2, 5) == PD_OK);
    char* csv = nullptr;
    char* json = nullptr;
    REQUIRE(pd_eval_files((tmp / "gt.csv").c_str(), (tmp / "gt.csv").c_str(), 0.5, &csv, &json) ==
            PD_OK);
    const std::string j = take(json);
    CHECK(!take(csv).empty());
    CHECK(j.find("\"detection_rate\": 1.0") != std::string::npos);
    CHECK(j.find("\"false_positives\": 0") != std::string::npos);
    CHECK(pd_eval_files((tmp / "gt.csv").c_str(), (tmp / "none.csv").c_str(), 0.5, &csv, &json) ==
          PD_ERR_IO);
}

TEST_CASE("cnn cost model") {
    pd_graph* g = nullptr;
    REQUIRE(pd_graph_load(PESTDET_DATA_DIR "/graphs/mbnv3_ssdlite_320x240.json", &g) == PD_OK);
    uint64_t layers = 0, macs = 0, params = 0;
    CHECK(pd_graph_summary(g, &layers, &macs, &params) == PD_OK);
    CHECK(macs > 525000000);
    CHECK(macs < 643000000);
    pd_platform* p = nullptr;
    REQUIRE(pd_platform_resolve("gap9", "", &p) == PD_OK);
    char* pj = nullptr;
    CHECK(pd_platform_json(p, &pj) == PD_OK);
    CHECK(take(pj).find("\"gap9\"") != std::string::npos);

    pd_budget b[2];
    pd_budget_init(&b[0]);
    CHECK(b[0].l1_bytes == 115600);
    CHECK(pd_budget_parse("small:46.7k:267k", &b[0]) == PD_OK);
    CHECK(std::string(b[0].label) == "small");
    CHECK(b[0].l2_bytes == 267000);
    pd_budget_init(&b[1]);
    char* csv = nullptr;
    char* json = nullptr;
    REQUIRE(pd_cnn_latency(g, p, &b[1], &csv, &json) == PD_OK);
    CHECK(take(csv).find("l2_resident") != std::string::npos);
    CHECK(take(json).find("total_cycles") != std::string::npos);
    REQUIRE(pd_cnn_compare(g, p, b, 2, &csv, &json) == PD_OK);
    take(csv);
    take(json);
    CHECK(pd_cnn_compare(g, p, b, 1, &csv, &json) == PD_ERR_INVALID_ARGUMENT);
    b[1].l1_bytes = 10;
    CHECK(pd_cnn_latency(g, p, &b[1], &csv, &json) == PD_ERR_L1_OVERFLOW);
    CHECK(pd_budget_parse("garbage", &b[1]) == PD_ERR_INVALID_ARGUMENT);
    pd_platform_free(p);
    CHECK(pd_platform_resolve("gap7", "", &p) == PD_ERR_UNKNOWN_PLATFORM);
    pd_graph_free(g);
}

TEST_CASE("power through handles") {
    pd_scenario* s = nullptr;
    REQUIRE(pd_scenario_load(PESTDET_DATA_DIR "/scenarios/gap9_viola_jones.json", &s) == PD_OK);
    double daily = 0;
    uint64_t days = 0;
    char* json = nullptr;
    REQUIRE(pd_power_daily(s, &daily, &days, &json) == PD_OK);
    take(json);
    CHECK(daily == doctest::Approx(5.8).epsilon(0.01));
    CHECK(days == 2300);
    CHECK(pd_scenario_set(s, "wake_period_s", 30) == PD_OK);
    CHECK(pd_power_daily(s, &daily, &days, nullptr) == PD_OK);
    CHECK(daily == doctest::Approx(66.9).epsilon(0.03));
    CHECK(pd_scenario_set(s, "no_such_field", 1) == PD_ERR_INVALID_ARGUMENT);
    CHECK(pd_scenario_set(s, "payload_policy", 2) == PD_ERR_INVALID_ARGUMENT);

    double* trace = nullptr;
    size_t n = 0;
    REQUIRE(pd_trace_uniform(33, 2, &trace, &n) == PD_OK);
    CHECK(n == 66);
    char* csv = nullptr;
    REQUIRE(pd_power_simulate(s, trace, n, 2, &csv, &json) == PD_OK);
    CHECK(take(json).find("\"exhausted\": false") != std::string::npos);
    const std::string tl = take(csv);
    size_t lines = 0;
    for (char ch : tl)
        lines += ch == '\n';
    CHECK(lines == 1 + 2 * 2880);
    std::swap(trace[0], trace[1]);
    CHECK(pd_power_simulate(s, trace, n, 2, &csv, &json) == PD_ERR_UNSORTED_TRACE);
    pd_doubles_free(trace);
    pd_scenario_free(s);
    CHECK(pd_scenario_default(&s) == PD_OK);
    pd_scenario_free(s);
}

// pestdet command-line front end. Talks to the library through the C API only.

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pestdet/pestdet.h"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

#ifndef PESTDET_DATA_DIR
#define PESTDET_DATA_DIR "data"
#endif

namespace {

enum Exit { kOk = 0, kInternal = 1, kInput = 2, kConstraint = 3 };

struct Failure {
    pd_status status;
    std::string message;
};

void check(pd_status s, const std::string& context = {}) {
    if (s == PD_OK)
        return;
    std::string msg = pd_last_error();
    if (!context.empty())
        msg = context + ": " + msg;
    throw Failure{s, msg};
}

int exit_class(pd_status s) {
    switch (s) {
    case PD_ERR_BUDGET_TOO_SMALL:
    case PD_ERR_L1_OVERFLOW:
    case PD_ERR_IMAGE_TOO_SMALL:
    case PD_ERR_INSUFFICIENT_DATA:
    case PD_ERR_OVERFLOW:
        return kConstraint;
    case PD_ERR_INTERNAL:
        return kInternal;
    default:
        return kInput;
    }
}

// owning wrapper for strings handed out by the library
struct CStr {
    char* p = nullptr;
    ~CStr() { pd_string_free(p); }
    char** out() { return &p; }
    std::string str() const { return p ? p : ""; }
};

template <typename T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    ~Handle() { Free(p); }
    T** out() { return &p; }
    T* get() const { return p; }
};

using Image = Handle<pd_image, pd_image_free>;
using CascadeH = Handle<pd_cascade, pd_cascade_free>;
using Graph = Handle<pd_graph, pd_graph_free>;
using Platform = Handle<pd_platform, pd_platform_free>;
using ScenarioH = Handle<pd_scenario, pd_scenario_free>;

std::string hex(const unsigned char* d, unsigned n) {
    static const char* k = "0123456789abcdef";
    std::string s;
    for (unsigned i = 0; i < n; ++i) {
        s += k[d[i] >> 4];
        s += k[d[i] & 15];
    }
    return s;
}

std::string sha256(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned n = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &n, EVP_sha256(), nullptr);
    return hex(md, n);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f)
        throw Failure{PD_ERR_IO, "cannot read " + p.string()};
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Directories hash the sorted "name digest" listing of their regular files.
std::string digest(const fs::path& p) {
    if (!fs::is_directory(p))
        return sha256(slurp(p));
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file())
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string listing;
    for (const auto& f : files)
        listing += f.filename().string() + ' ' + sha256(slurp(f)) + '\n';
    return sha256(listing);
}

struct Manifest {
    explicit Manifest(std::string cmd) : command(std::move(cmd)) {}

    std::string command;
    std::vector<std::pair<std::string, std::string>> params;
    std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
    std::string seed = "none";

    void param(const std::string& k, const std::string& v) { params.emplace_back(k, v); }
    void param(const std::string& k, double v) {
        char b[64];
        std::snprintf(b, sizeof b, "%.15g", v);
        params.emplace_back(k, b);
    }
    void param(const std::string& k, uint64_t v) { params.emplace_back(k, std::to_string(v)); }
    void input(const std::string& path) { inputs.emplace_back(path, digest(path)); }

    std::string csv_header() const {
        std::string s = "# pestdet " + std::string(pd_version()) + " " + command + "\n";
        for (const auto& [k, v] : params)
            s += "# param " + k + "=" + v + "\n";
        for (const auto& [p, d] : inputs)
            s += "# input " + p + " sha256=" + d + "\n";
        s += "# seed " + seed + "\n";
        return s;
    }

    ordered_json json() const {
        ordered_json p = ordered_json::object(), in = ordered_json::array();
        for (const auto& [k, v] : params)
            p[k] = v;
        for (const auto& [path, d] : inputs)
            in.push_back({{"path", path}, {"sha256", d}});
        return {{"tool", "pestdet"}, {"version", pd_version()}, {"command", command},
                {"parameters", p},   {"inputs", in},          {"seed", seed}};
    }

    std::string wrap(const std::string& report_json) const {
        ordered_json out = {{"manifest", json()}};
        const ordered_json r = ordered_json::parse(report_json);
        for (auto it = r.begin(); it != r.end(); ++it)
            out[it.key()] = it.value();
        return out.dump(2) + "\n";
    }
};

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f)
        throw Failure{PD_ERR_IO, "cannot write " + path};
}

std::string search_path() {
    const char* env = std::getenv("PESTDET_PLATFORM_PATH");
    std::string s = env ? env : "";
    return s.empty() ? std::string(PESTDET_DATA_DIR "/platforms") : s + ":" PESTDET_DATA_DIR "/platforms";
}

pd_accounting parse_accounting(const std::string& s) {
    if (s == "ii_only")
        return PD_ACCOUNT_II_ONLY;
    if (s == "ii_plus_input")
        return PD_ACCOUNT_II_PLUS_INPUT;
    if (s == "ii_input_squares")
        return PD_ACCOUNT_II_INPUT_SQUARES;
    throw Failure{PD_ERR_INVALID_ARGUMENT, "--accounting: unknown mode '" + s + "'"};
}

// ---- detect ----

struct DetectArgs {
    std::string cascade;
    std::vector<std::string> images;
    uint32_t scales = 5;
    double factor = 1.1;
    uint32_t max_px = 30;
    uint32_t overlap = 20;
    uint64_t budget = 99600;
    std::string accounting = "ii_only";
    uint32_t step = 1;
    uint32_t workers = 8;
    double group_iou = 0.0;
    double sensor_sigma = 0.0;
    uint64_t seed = 1;
    std::string out, tiles;
};

void run_detect(const DetectArgs& a) {
    pd_detect_options o;
    pd_detect_options_init(&o);
    o.num_scales = a.scales;
    o.scale_factor = a.factor;
    o.max_detection_px = a.max_px;
    o.overlap = a.overlap;
    o.budget_bytes = a.budget;
    o.accounting = parse_accounting(a.accounting);
    o.step = a.step;
    o.workers = a.workers;
    o.group_iou = a.group_iou;

    Manifest m{"detect"};
    m.param("scales", uint64_t(a.scales));
    m.param("scale_factor", a.factor);
    m.param("max_detection_px", uint64_t(a.max_px));
    m.param("overlap", uint64_t(a.overlap));
    m.param("budget_bytes", a.budget);
    m.param("accounting", a.accounting);
    m.param("step", uint64_t(a.step));
    m.param("group_iou", a.group_iou);
    m.param("sensor_sigma", a.sensor_sigma);
    if (a.sensor_sigma > 0)
        m.seed = std::to_string(a.seed);
    m.input(a.cascade);
    for (const auto& i : a.images)
        m.input(i);

    CascadeH c;
    check(pd_cascade_load(a.cascade.c_str(), c.out()), a.cascade);
    std::string report = m.csv_header();
    std::string tiles;
    for (size_t k = 0; k < a.images.size(); ++k) {
        const std::string& path = a.images[k];
        Image img;
        check(pd_image_load(path.c_str(), img.out()), path);
        if (a.sensor_sigma > 0) {
            Image noisy;
            check(pd_image_degrade(img.get(), a.sensor_sigma, a.seed + k, noisy.out()), path);
            std::swap(img.p, noisy.p);
        }
        if (k == 0 && !a.tiles.empty()) {
            uint32_t w = 0, h = 0;
            check(pd_image_dims(img.get(), &w, &h));
            CStr t;
            check(pd_tile_plan_report(w, h, &o, t.out()), path);
            tiles = m.csv_header() + t.str();
        }
        CStr csv;
        check(pd_detect_report(c.get(), img.get(), &o, fs::path(path).stem().string().c_str(),
                               k == 0, csv.out()),
              path);
        report += csv.str();
    }
    if (!a.tiles.empty())
        emit(a.tiles, tiles);
    emit(a.out, report);
}

// ---- train ----

struct TrainArgs {
    std::string pos, neg, out, log;
    pd_train_options o;
};

void run_train(TrainArgs& a) {
    Manifest m{"train"};
    const auto& o = a.o;
    m.param("stages", uint64_t(o.num_stages));
    m.param("min_detection_rate", o.min_detection_rate);
    m.param("max_false_positive_rate", o.max_false_positive_rate);
    m.param("max_weak", uint64_t(o.max_weak_per_stage));
    m.param("feature_fraction", o.feature_fraction);
    m.param("feature_min_size", uint64_t(o.feature_min_size));
    m.param("feature_stride", uint64_t(o.feature_stride));
    m.param("negatives_per_stage", uint64_t(o.negatives_per_stage));
    m.param("min_negatives", uint64_t(o.min_negatives));
    m.param("mining_step", uint64_t(o.mining_step));
    m.param("pool_scales", uint64_t(o.pool_scales));
    m.param("pool_scale_factor", o.pool_scale_factor);
    m.param("variance_normalization", o.variance_normalization ? "on" : "off");
    m.seed = std::to_string(o.seed);
    m.input(a.pos);
    m.input(a.neg);

    CascadeH c;
    CStr log;
    check(pd_train_dirs(a.pos.c_str(), a.neg.c_str(), &o, c.out(), log.out()));
    check(pd_cascade_save(c.get(), a.out.c_str()), a.out);
    emit(a.log, m.csv_header() + log.str());
}

// ---- eval ----

struct EvalArgs {
    std::string pred, gt, out, json;
    double iou = 0.01;
};

void run_eval(const EvalArgs& a) {
    Manifest m{"eval"};
    m.param("iou", a.iou);
    m.input(a.pred);
    m.input(a.gt);
    CStr csv, js;
    check(pd_eval_files(a.pred.c_str(), a.gt.c_str(), a.iou, csv.out(), js.out()));
    if (!a.json.empty())
        emit(a.json, m.wrap(js.str()));
    emit(a.out, m.csv_header() + csv.str());
}

// ---- cnn ----

struct CnnArgs {
    std::string graph = PESTDET_DATA_DIR "/graphs/mbnv3_ssdlite_320x240.json";
    std::string platform = "gap9";
    std::string budget = "115.6k:1.2M";
    std::string engine = "accelerator";
    std::string overlap = "platform";
    std::vector<std::string> compare;
    bool compare_given = false;
    std::string schedule, out;
};

pd_budget make_budget(const std::string& spec, const CnnArgs& a) {
    pd_budget b;
    check(pd_budget_parse(spec.c_str(), &b), "budget '" + spec + "'");
    if (a.engine == "accelerator" || a.engine == "conv_accelerator")
        b.engine = PD_ENGINE_CONV_ACCELERATOR;
    else if (a.engine == "cores" || a.engine == "worker_cores")
        b.engine = PD_ENGINE_WORKER_CORES;
    else
        throw Failure{PD_ERR_INVALID_ARGUMENT, "--engine: unknown engine '" + a.engine + "'"};
    if (a.overlap == "on")
        b.dma_overlap = 1;
    else if (a.overlap == "off")
        b.dma_overlap = 0;
    else if (a.overlap != "platform")
        throw Failure{PD_ERR_INVALID_ARGUMENT, "--dma-overlap takes on, off or platform"};
    return b;
}

void run_cnn(const CnnArgs& a) {
    Manifest m{a.compare_given ? "cnn compare" : "cnn"};
    m.param("platform", a.platform);
    m.param("engine", a.engine);
    m.param("dma_overlap", a.overlap);
    m.input(a.graph);
    if (fs::is_regular_file(a.platform))
        m.input(a.platform);

    Graph g;
    check(pd_graph_load(a.graph.c_str(), g.out()));
    Platform p;
    check(pd_platform_resolve(a.platform.c_str(), search_path().c_str(), p.out()));

    if (a.compare_given) {
        std::vector<std::string> specs;
        for (const auto& s : a.compare)
            if (!s.empty())
                specs.push_back(s);
        if (specs.empty())
            specs = {"small:46.7k:267k", "large:115.6k:1.2M"};
        std::vector<pd_budget> bs;
        std::string joined;
        for (const auto& s : specs) {
            bs.push_back(make_budget(s, a));
            joined += (joined.empty() ? "" : ",") + s;
        }
        m.param("budgets", joined);
        CStr csv, js;
        check(pd_cnn_compare(g.get(), p.get(), bs.data(), bs.size(), csv.out(), js.out()));
        if (!a.schedule.empty())
            emit(a.schedule, m.csv_header() + csv.str());
        emit(a.out, m.wrap(js.str()));
        return;
    }
    m.param("budget", a.budget);
    const pd_budget b = make_budget(a.budget, a);
    CStr csv, js;
    check(pd_cnn_latency(g.get(), p.get(), &b, csv.out(), js.out()));
    if (!a.schedule.empty())
        emit(a.schedule, m.csv_header() + csv.str());
    emit(a.out, m.wrap(js.str()));
}

// ---- power ----

struct PowerArgs {
    std::string scenario;
    std::vector<std::string> sets;
    std::string policy;
    double wake_period = 0;
    std::string trace;
    double uniform = -1;
    double days = 30;
    bool simulate = false;
    std::string timeline, out;
};

void run_power(const PowerArgs& a) {
    Manifest m{a.simulate ? "power simulate" : "power"};
    ScenarioH s;
    if (a.scenario.empty()) {
        check(pd_scenario_default(s.out()));
    } else {
        m.input(a.scenario);
        check(pd_scenario_load(a.scenario.c_str(), s.out()), a.scenario);
    }
    auto set = [&](const std::string& field, double v, const std::string& shown) {
        check(pd_scenario_set(s.get(), field.c_str(), v), "--set " + field);
        m.param(field, shown);
    };
    if (!a.policy.empty()) {
        if (a.policy == "counters" || a.policy == "counters_every_wake")
            set("payload_policy", 0, "counters_every_wake");
        else if (a.policy == "image" || a.policy == "image_per_detection")
            set("payload_policy", 1, "image_per_detection");
        else
            throw Failure{PD_ERR_INVALID_ARGUMENT, "--policy: unknown policy '" + a.policy + "'"};
    }
    if (a.wake_period > 0) {
        char b[64];
        std::snprintf(b, sizeof b, "%.15g", a.wake_period);
        set("wake_period_s", a.wake_period, b);
    }
    for (const auto& kv : a.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw Failure{PD_ERR_INVALID_ARGUMENT, "--set expects field=value, got '" + kv + "'"};
        const std::string field = kv.substr(0, eq), val = kv.substr(eq + 1);
        char* end = nullptr;
        const double v = std::strtod(val.c_str(), &end);
        if (val.empty() || *end)
            throw Failure{PD_ERR_INVALID_ARGUMENT, "--set " + field + ": not a number"};
        set(field, v, val);
    }
    CStr scen;
    check(pd_scenario_json(s.get(), scen.out()));
    const ordered_json scenario = ordered_json::parse(scen.str());

    if (!a.simulate) {
        CStr js;
        double daily = 0;
        uint64_t days = 0;
        check(pd_power_daily(s.get(), &daily, &days, js.out()));
        ordered_json r = {{"scenario", scenario}};
        const ordered_json l = ordered_json::parse(js.str());
        for (auto it = l.begin(); it != l.end(); ++it)
            r[it.key()] = it.value();
        emit(a.out, m.wrap(r.dump()));
        return;
    }
    double* arr = nullptr;
    size_t n = 0;
    if (!a.trace.empty()) {
        m.input(a.trace);
        check(pd_trace_read(a.trace.c_str(), &arr, &n), a.trace);
    } else if (a.uniform >= 0) {
        char b[64];
        std::snprintf(b, sizeof b, "%.15g", a.uniform);
        m.param("uniform_per_day", b);
        check(pd_trace_uniform(a.uniform, a.days, &arr, &n));
    } else {
        const double per_day = scenario["duty_cycle"]["detections_per_day"].get<double>();
        m.param("uniform_per_day", "scenario");
        check(pd_trace_uniform(per_day, a.days, &arr, &n));
    }
    std::unique_ptr<double, void (*)(double*)> hold(arr, pd_doubles_free);
    m.param("days", a.days);
    CStr csv, js;
    check(pd_power_simulate(s.get(), arr, n, a.days, csv.out(), js.out()));
    if (!a.timeline.empty())
        emit(a.timeline, m.csv_header() + csv.str());
    ordered_json r = {{"scenario", scenario}};
    const ordered_json l = ordered_json::parse(js.str());
    for (auto it = l.begin(); it != l.end(); ++it)
        r[it.key()] = it.value();
    emit(a.out, m.wrap(r.dump()));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pestdet: on-device moth detection experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", pd_version());

    DetectArgs da;
    auto* det = app.add_subcommand("detect", "run the cascade detector on PGM images");
    det->add_option("cascade", da.cascade, "cascade file")->required();
    det->add_option("images", da.images, "PGM images")->required();
    det->add_option("--scales", da.scales, "pyramid levels")->capture_default_str();
    det->add_option("--scale-factor", da.factor, "downscale per level")->capture_default_str();
    det->add_option("--max-detection", da.max_px, "discard boxes larger than this")
        ->capture_default_str();
    det->add_option("--overlap", da.overlap, "tile overlap in pixels")->capture_default_str();
    det->add_option("--budget", da.budget, "scratchpad bytes per tile")->capture_default_str();
    det->add_option("--accounting", da.accounting, "ii_only, ii_plus_input or ii_input_squares")
        ->capture_default_str();
    det->add_option("--step", da.step, "window stride")->capture_default_str();
    det->add_option("--workers", da.workers, "scan workers")->capture_default_str();
    det->add_option("--group-iou", da.group_iou, "IoU grouping threshold, 0 = off")
        ->capture_default_str();
    det->add_option("--sensor-sigma", da.sensor_sigma, "Gaussian noise added before detection");
    det->add_option("--seed", da.seed, "noise seed")->capture_default_str();
    det->add_option("-o,--out", da.out, "report file (stdout if absent)");
    det->add_option("--tiles", da.tiles, "write the tile plan of the first image");

    TrainArgs ta;
    pd_train_options_init(&ta.o);
    ta.o.num_stages = 15;
    bool no_varnorm = false;
    auto* tr = app.add_subcommand("train", "train a cascade from PGM folders");
    tr->add_option("pos_dir", ta.pos, "window-sized positive patches")->required();
    tr->add_option("neg_dir", ta.neg, "moth-free images")->required();
    tr->add_option("-o,--out", ta.out, "cascade file")->required();
    tr->add_option("--log", ta.log, "training log (stdout if absent)");
    tr->add_option("--stages", ta.o.num_stages)->capture_default_str();
    tr->add_option("--min-detection-rate", ta.o.min_detection_rate)->capture_default_str();
    tr->add_option("--max-fp-rate", ta.o.max_false_positive_rate)->capture_default_str();
    tr->add_option("--max-weak", ta.o.max_weak_per_stage)->capture_default_str();
    tr->add_option("--feature-fraction", ta.o.feature_fraction)->capture_default_str();
    tr->add_option("--feature-min-size", ta.o.feature_min_size)->capture_default_str();
    tr->add_option("--feature-stride", ta.o.feature_stride)->capture_default_str();
    tr->add_option("--negatives", ta.o.negatives_per_stage)->capture_default_str();
    tr->add_option("--min-negatives", ta.o.min_negatives)->capture_default_str();
    tr->add_option("--mining-step", ta.o.mining_step)->capture_default_str();
    tr->add_option("--pool-scales", ta.o.pool_scales)->capture_default_str();
    tr->add_option("--pool-scale-factor", ta.o.pool_scale_factor)->capture_default_str();
    tr->add_flag("--no-variance-norm", no_varnorm);
    tr->add_option("--seed", ta.o.seed)->capture_default_str();
    tr->add_option("--threads", ta.o.threads, "0 = all cores")->capture_default_str();

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "score detections against ground truth");
    ev->add_option("pred", ea.pred, "image_id,x,y,w,h[,score] rows")->required();
    ev->add_option("gt", ea.gt, "image_id,x,y,w,h rows")->required();
    ev->add_option("--iou", ea.iou, "match threshold")->capture_default_str();
    ev->add_option("-o,--out", ea.out, "CSV report (stdout if absent)");
    ev->add_option("--json", ea.json, "JSON summary");

    CnnArgs ca;
    auto* cnn = app.add_subcommand("cnn", "schedule a layer graph and estimate latency");
    cnn->add_option("--graph", ca.graph)->capture_default_str();
    cnn->add_option("--platform", ca.platform, "name or JSON file")->capture_default_str();
    cnn->add_option("--budget", ca.budget, "[LABEL:]L1:L2, k/M suffixes")->capture_default_str();
    cnn->add_option("--engine", ca.engine, "accelerator or worker_cores")->capture_default_str();
    cnn->add_option("--dma-overlap", ca.overlap, "on, off or platform")->capture_default_str();
    auto* cmp = cnn->add_option("--compare-budgets", ca.compare,
                                "budgets to compare (default: small 46.7k:267k, large 115.6k:1.2M)")
                    ->expected(0, -1);
    cnn->add_option("--schedule", ca.schedule, "per-layer CSV");
    cnn->add_option("-o,--out", ca.out, "JSON summary (stdout if absent)");

    PowerArgs pa;
    auto* pw = app.add_subcommand("power", "duty-cycle energy and lifetime");
    pw->add_option("--scenario", pa.scenario, "scenario JSON (builtin defaults if absent)");
    pw->add_option("--policy", pa.policy, "counters or image");
    pw->add_option("--wake-period", pa.wake_period, "seconds");
    pw->add_option("--set", pa.sets, "field=value override, repeatable");
    pw->add_flag("--simulate", pa.simulate, "discrete-event run instead of the closed form");
    pw->add_option("--trace", pa.trace, "arrival times in seconds, one per line");
    pw->add_option("--uniform", pa.uniform, "evenly spread arrivals per day");
    pw->add_option("--days", pa.days, "simulation horizon")->capture_default_str();
    pw->add_option("--timeline", pa.timeline, "per-wake CSV");
    pw->add_option("-o,--out", pa.out, "JSON report (stdout if absent)");

    std::string syn_dir;
    uint32_t n_tp = 3000, n_vp = 1000, n_tn = 150, n_vn = 20, nw = 320, nh = 240;
    uint32_t sc_count = 20, sc_moths = 3;
    uint64_t syn_seed = 7;
    auto* syn = app.add_subcommand("synth", "generate synthetic trap imagery");
    syn->require_subcommand(1);
    auto* corpus = syn->add_subcommand("corpus", "training/test patches and negative images");
    corpus->add_option("dir", syn_dir)->required();
    corpus->add_option("--train-pos", n_tp)->capture_default_str();
    corpus->add_option("--test-pos", n_vp)->capture_default_str();
    corpus->add_option("--train-neg", n_tn)->capture_default_str();
    corpus->add_option("--test-neg", n_vn)->capture_default_str();
    corpus->add_option("--width", nw)->capture_default_str();
    corpus->add_option("--height", nh)->capture_default_str();
    corpus->add_option("--seed", syn_seed)->capture_default_str();
    auto* scenes = syn->add_subcommand("scenes", "full frames with ground truth");
    scenes->add_option("dir", syn_dir)->required();
    scenes->add_option("--count", sc_count)->capture_default_str();
    scenes->add_option("--moths", sc_moths, "per image")->capture_default_str();
    scenes->add_option("--width", nw)->capture_default_str();
    scenes->add_option("--height", nh)->capture_default_str();
    scenes->add_option("--seed", syn_seed)->capture_default_str();

    std::string plat_name = "gap9";
    auto* plat = app.add_subcommand("platform", "print a resolved platform description");
    plat->add_option("name", plat_name, "name or JSON file")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInput;
    }

    try {
        if (*det) {
            run_detect(da);
        } else if (*tr) {
            ta.o.variance_normalization = no_varnorm ? 0 : 1;
            run_train(ta);
        } else if (*ev) {
            run_eval(ea);
        } else if (*cnn) {
            ca.compare_given = cmp->count() > 0;
            run_cnn(ca);
        } else if (*pw) {
            run_power(pa);
        } else if (*corpus) {
            check(pd_synth_corpus(syn_dir.c_str(), n_tp, n_vp, n_tn, n_vn, nw, nh, syn_seed));
        } else if (*scenes) {
            check(pd_synth_scenes(syn_dir.c_str(), sc_count, nw, nh, sc_moths, syn_seed));
        } else if (*plat) {
            Platform p;
            check(pd_platform_resolve(plat_name.c_str(), search_path().c_str(), p.out()));
            CStr js;
            check(pd_platform_json(p.get(), js.out()));
            std::cout << js.str();
        }
    } catch (const Failure& f) {
        std::cerr << "pestdet: " << pd_status_name(f.status) << ": " << f.message << "\n";
        return exit_class(f.status);
    } catch (const std::exception& e) {
        std::cerr << "pestdet: " << e.what() << "\n";
        return kInternal;
    }
    return kOk;
}

#include "pestdet/pestdet.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "json.hpp"
#include "pestdet/cnngraph.hpp"
#include "pestdet/detector.hpp"
#include "pestdet/error.hpp"
#include "pestdet/evaluator.hpp"
#include "pestdet/platform.hpp"
#include "pestdet/power.hpp"
#include "pestdet/sched.hpp"
#include "pestdet/synth.hpp"
#include "pestdet/trainer.hpp"

namespace fs = std::filesystem;
using namespace pestdet;
using nlohmann::ordered_json;

struct pd_image {
    GrayImage img;
};
struct pd_cascade {
    Cascade c;
};
struct pd_graph {
    LayerGraph g;
};
struct pd_platform {
    PlatformModel p;
};
struct pd_scenario {
    Scenario s;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
pd_status guarded(F&& f) {
    try {
        f();
        g_last_error.clear();
        return PD_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return pd_status(int(e.code()));
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
    } catch (const std::exception& e) {
        g_last_error = e.what();
    } catch (...) {
        g_last_error = "unknown failure";
    }
    return PD_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
    if (!p)
        fail(ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p)
        throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

void give(char** out, const std::string& s) {
    if (out)
        *out = dup(s);
}

double* dup(const std::vector<double>& v) {
    auto* p = static_cast<double*>(std::malloc(std::max<size_t>(1, v.size()) * sizeof(double)));
    if (!p)
        throw std::bad_alloc();
    std::copy(v.begin(), v.end(), p);
    return p;
}

DetectOptions to_cpp(const pd_detect_options* o) {
    pd_detect_options d;
    pd_detect_options_init(&d);
    if (!o)
        o = &d;
    DetectOptions r;
    r.pyramid.num_levels = o->num_scales;
    r.pyramid.scale_factor = o->scale_factor;
    r.pyramid.max_detection_px = o->max_detection_px;
    r.overlap = o->overlap;
    r.budget.bytes = o->budget_bytes;
    switch (o->accounting) {
    case PD_ACCOUNT_II_ONLY:
        r.budget.mode = Accounting::IntegralOnly;
        break;
    case PD_ACCOUNT_II_PLUS_INPUT:
        r.budget.mode = Accounting::IntegralPlusInput;
        break;
    case PD_ACCOUNT_II_INPUT_SQUARES:
        r.budget.mode = Accounting::IntegralInputAndSquares;
        break;
    default:
        fail(ErrorCode::InvalidArgument, "unknown accounting mode");
    }
    r.step = o->step;
    r.workers = o->workers;
    r.group_iou = o->group_iou;
    if (r.pyramid.num_levels == 0 || !(r.pyramid.scale_factor > 1.0) || r.step == 0)
        fail(ErrorCode::InvalidArgument, "scales >= 1, scale factor > 1 and step >= 1 required");
    if (r.group_iou < 0 || r.group_iou > 1)
        fail(ErrorCode::InvalidArgument, "grouping IoU must lie in [0, 1]");
    return r;
}

std::vector<fs::path> pgm_files(const char* dir) {
    need(dir, "directory");
    if (!fs::is_directory(dir))
        fail(ErrorCode::Io, std::string(dir) + " is not a directory");
    std::vector<fs::path> v;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".pgm")
            v.push_back(e.path());
    std::sort(v.begin(), v.end());
    return v;
}

std::vector<GrayImage> read_all(const std::vector<fs::path>& files) {
    std::vector<GrayImage> v;
    v.reserve(files.size());
    for (const auto& f : files)
        v.push_back(read_pgm_file(f));
    return v;
}

void write_numbered(const std::vector<GrayImage>& imgs, const fs::path& dir) {
    fs::create_directories(dir);
    char name[32];
    for (size_t i = 0; i < imgs.size(); ++i) {
        std::snprintf(name, sizeof name, "%06zu.pgm", i);
        write_pgm_file(imgs[i], dir / name);
    }
}

BudgetConfig to_cpp(const pd_budget& b) {
    BudgetConfig r;
    r.label = std::string(b.label, strnlen(b.label, sizeof b.label));
    r.l1_bytes = b.l1_bytes;
    r.l2_bytes = b.l2_bytes;
    if (b.engine != PD_ENGINE_WORKER_CORES && b.engine != PD_ENGINE_CONV_ACCELERATOR)
        fail(ErrorCode::InvalidArgument, "unknown engine");
    r.engine = b.engine == PD_ENGINE_WORKER_CORES ? EngineKind::WorkerCores
                                                  : EngineKind::ConvAccelerator;
    if (b.dma_overlap >= 0)
        r.dma_overlap = b.dma_overlap != 0;
    return r;
}

ordered_json sim_json(const SimResult& r, const Battery& battery) {
    const EnergyLedger& l = r.ledger;
    return {{"simulated_days", r.simulated_s / 86400.0},
            {"wakes", r.timeline.size()},
            {"exhausted", r.exhausted},
            {"exhausted_at_day", r.exhausted ? r.exhausted_at_s / 86400.0 : 0.0},
            {"compute_j", l.compute_j},
            {"radio_j", l.radio_j},
            {"camera_j", l.camera_j},
            {"sleep_j", l.sleep_j},
            {"overhead_j", l.overhead_j},
            {"total_j", l.total_j()},
            {"daily_j", l.daily_j},
            {"battery_j", battery.joules()},
            {"lifetime_days", l.lifetime_days}};
}

} // namespace

extern "C" {

const char* pd_version(void) {
    return "1.0.0";
}

const char* pd_status_name(pd_status s) {
    if (s == PD_OK)
        return "ok";
    if (s == PD_ERR_INTERNAL)
        return "internal";
    if (int(s) >= 1 && int(s) <= int(ErrorCode::InsufficientData))
        return error_code_name(ErrorCode(int(s)));
    return "unknown";
}

const char* pd_last_error(void) {
    return g_last_error.c_str();
}

void pd_string_free(char* s) {
    std::free(s);
}

pd_status pd_image_load(const char* path, pd_image** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new pd_image{read_pgm_file(path)};
    });
}

pd_status pd_image_from_pixels(uint32_t width, uint32_t height, const uint8_t* pixels,
                               pd_image** out) {
    return guarded([&] {
        need(pixels, "pixels");
        need(out, "out");
        std::vector<uint8_t> px(pixels, pixels + size_t(width) * height);
        *out = new pd_image{GrayImage(width, height, std::move(px))};
    });
}

pd_status pd_image_save(const pd_image* img, const char* path) {
    return guarded([&] {
        need(img, "image");
        need(path, "path");
        write_pgm_file(img->img, path);
    });
}

pd_status pd_image_dims(const pd_image* img, uint32_t* width, uint32_t* height) {
    return guarded([&] {
        need(img, "image");
        if (width)
            *width = img->img.width();
        if (height)
            *height = img->img.height();
    });
}

pd_status pd_image_degrade(const pd_image* img, double sigma, uint64_t seed, pd_image** out) {
    return guarded([&] {
        need(img, "image");
        need(out, "out");
        *out = new pd_image{sensor_degrade(img->img, sigma, seed)};
    });
}

void pd_image_free(pd_image* img) {
    delete img;
}

pd_status pd_cascade_load(const char* path, pd_cascade** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new pd_cascade{load_cascade(path)};
    });
}

pd_status pd_cascade_save(const pd_cascade* c, const char* path) {
    return guarded([&] {
        need(c, "cascade");
        need(path, "path");
        save_cascade(c->c, path);
    });
}

pd_status pd_cascade_info(const pd_cascade* c, uint32_t* stages, uint32_t* weak,
                          uint64_t* size_bytes) {
    return guarded([&] {
        need(c, "cascade");
        if (stages)
            *stages = uint32_t(c->c.stages.size());
        if (weak)
            *weak = uint32_t(c->c.num_weak());
        if (size_bytes)
            *size_bytes = c->c.size_bytes();
    });
}

void pd_cascade_free(pd_cascade* c) {
    delete c;
}

void pd_detect_options_init(pd_detect_options* opt) {
    if (!opt)
        return;
    const DetectOptions d;
    opt->num_scales = d.pyramid.num_levels;
    opt->scale_factor = d.pyramid.scale_factor;
    opt->max_detection_px = d.pyramid.max_detection_px;
    opt->overlap = d.overlap;
    opt->budget_bytes = d.budget.bytes;
    opt->accounting = PD_ACCOUNT_II_ONLY;
    opt->step = d.step;
    opt->workers = d.workers;
    opt->group_iou = d.group_iou;
}

pd_status pd_detect(const pd_cascade* c, const pd_image* img, const pd_detect_options* opt,
                    pd_detection** out, size_t* count) {
    return guarded([&] {
        need(c, "cascade");
        need(img, "image");
        need(out, "out");
        need(count, "count");
        const auto dets = detect(img->img, c->c, to_cpp(opt));
        auto* p = static_cast<pd_detection*>(
            std::malloc(std::max<size_t>(1, dets.size()) * sizeof(pd_detection)));
        if (!p)
            throw std::bad_alloc();
        for (size_t i = 0; i < dets.size(); ++i)
            p[i] = {dets[i].bbox.x, dets[i].bbox.y, dets[i].bbox.w, dets[i].bbox.h, dets[i].level,
                    dets[i].score};
        *out = p;
        *count = dets.size();
    });
}

void pd_detections_free(pd_detection* d) {
    std::free(d);
}

pd_status pd_detect_report(const pd_cascade* c, const pd_image* img, const pd_detect_options* opt,
                           const char* image_id, int header, char** csv) {
    return guarded([&] {
        need(c, "cascade");
        need(img, "image");
        need(csv, "csv");
        const auto dets = detect(img->img, c->c, to_cpp(opt));
        give(csv, format_detection_report(image_id ? image_id : "", dets, header != 0));
    });
}

pd_status pd_tile_plan_report(uint32_t width, uint32_t height, const pd_detect_options* opt,
                              char** csv) {
    return guarded([&] {
        need(csv, "csv");
        const DetectOptions o = to_cpp(opt);
        std::string s = "level,width,height,tile,x,y,w,h,core_x,core_y,core_w,core_h\n";
        const auto dims = pyramid_dims(width, height, o.pyramid);
        for (size_t lv = 0; lv < dims.size(); ++lv) {
            const auto [w, h] = dims[lv];
            const auto tiles = plan_tiles(w, h, o.budget, o.overlap);
            for (size_t t = 0; t < tiles.size(); ++t) {
                const Rect &a = tiles[t].area, &k = tiles[t].core;
                s += std::to_string(lv) + ',' + std::to_string(w) + ',' + std::to_string(h) + ',' +
                     std::to_string(t) + ',' + std::to_string(a.x) + ',' + std::to_string(a.y) +
                     ',' + std::to_string(a.w) + ',' + std::to_string(a.h) + ',' +
                     std::to_string(k.x) + ',' + std::to_string(k.y) + ',' + std::to_string(k.w) +
                     ',' + std::to_string(k.h) + '\n';
            }
        }
        give(csv, s);
    });
}

void pd_train_options_init(pd_train_options* opt) {
    if (!opt)
        return;
    const TrainConfig d;
    opt->num_stages = d.num_stages;
    opt->min_detection_rate = d.min_detection_rate;
    opt->max_false_positive_rate = d.max_false_positive_rate;
    opt->max_weak_per_stage = d.max_weak_per_stage;
    opt->feature_fraction = d.feature_fraction;
    opt->feature_min_size = d.feature_min_size;
    opt->feature_stride = d.feature_stride;
    opt->negatives_per_stage = d.negatives_per_stage;
    opt->min_negatives = d.min_negatives;
    opt->mining_step = d.mining_step;
    opt->pool_scales = d.pool_pyramid.num_levels;
    opt->pool_scale_factor = d.pool_pyramid.scale_factor;
    opt->variance_normalization = d.variance_normalization ? 1 : 0;
    opt->seed = d.seed;
    opt->threads = d.threads;
}

pd_status pd_train_dirs(const char* pos_dir, const char* neg_dir, const pd_train_options* opt,
                        pd_cascade** out, char** log_csv) {
    return guarded([&] {
        need(out, "out");
        pd_train_options d;
        pd_train_options_init(&d);
        if (!opt)
            opt = &d;
        TrainConfig cfg;
        cfg.num_stages = opt->num_stages;
        cfg.min_detection_rate = opt->min_detection_rate;
        cfg.max_false_positive_rate = opt->max_false_positive_rate;
        cfg.max_weak_per_stage = opt->max_weak_per_stage;
        cfg.feature_fraction = opt->feature_fraction;
        cfg.feature_min_size = opt->feature_min_size;
        cfg.feature_stride = opt->feature_stride;
        cfg.negatives_per_stage = opt->negatives_per_stage;
        cfg.min_negatives = opt->min_negatives;
        cfg.mining_step = opt->mining_step;
        cfg.pool_pyramid.num_levels = opt->pool_scales;
        cfg.pool_pyramid.scale_factor = opt->pool_scale_factor;
        cfg.variance_normalization = opt->variance_normalization != 0;
        cfg.seed = opt->seed;
        cfg.threads = opt->threads;
        const auto pos = read_all(pgm_files(pos_dir));
        const auto neg = read_all(pgm_files(neg_dir));
        TrainResult r = train_cascade(pos, neg, cfg);
        give(log_csv, format_training_log(r));
        *out = new pd_cascade{std::move(r.cascade)};
    });
}

pd_status pd_synth_corpus(const char* dir, uint32_t n_train_pos, uint32_t n_test_pos,
                          uint32_t n_train_neg, uint32_t n_test_neg, uint32_t neg_width,
                          uint32_t neg_height, uint64_t seed) {
    return guarded([&] {
        need(dir, "dir");
        const SynthCorpus c = synth_corpus(n_train_pos, n_test_pos, n_train_neg, n_test_neg,
                                           neg_width, neg_height, seed);
        const fs::path root(dir);
        write_numbered(c.train_positives, root / "train" / "pos");
        write_numbered(c.test_positives, root / "test" / "pos");
        write_numbered(c.train_negatives, root / "train" / "neg");
        write_numbered(c.test_negatives, root / "test" / "neg");
    });
}

pd_status pd_synth_scenes(const char* dir, uint32_t count, uint32_t width, uint32_t height,
                          uint32_t moths_per_image, uint64_t seed) {
    return guarded([&] {
        need(dir, "dir");
        const fs::path root(dir);
        fs::create_directories(root);
        std::mt19937_64 rng(seed);
        std::string gt = "image_id,x,y,w,h\n";
        char name[32];
        for (uint32_t i = 0; i < count; ++i) {
            const SynthScene s = synth_scene(width, height, moths_per_image, rng);
            std::snprintf(name, sizeof name, "scene_%04u", i);
            write_pgm_file(s.image, root / (std::string(name) + ".pgm"));
            for (const Rect& r : s.targets)
                gt += std::string(name) + ',' + std::to_string(r.x) + ',' + std::to_string(r.y) +
                      ',' + std::to_string(r.w) + ',' + std::to_string(r.h) + '\n';
        }
        std::ofstream f(root / "gt.csv", std::ios::binary);
        f << gt;
        if (!f)
            fail(ErrorCode::Io, "cannot write " + (root / "gt.csv").string());
    });
}

pd_status pd_eval_files(const char* pred_path, const char* gt_path, double iou_threshold,
                        char** csv, char** json) {
    return guarded([&] {
        need(pred_path, "prediction path");
        need(gt_path, "ground-truth path");
        const auto preds = read_box_table(pred_path);
        const auto gts = read_box_table(gt_path);
        const EvalReport r = evaluate(preds, gts, iou_threshold);
        give(csv, format_eval_report(r, iou_threshold));
        give(json, eval_report_json(r, iou_threshold));
    });
}

pd_status pd_graph_load(const char* path, pd_graph** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new pd_graph{load_graph(path)};
    });
}

pd_status pd_graph_summary(const pd_graph* g, uint64_t* layers, uint64_t* macs, uint64_t* params) {
    return guarded([&] {
        need(g, "graph");
        if (layers)
            *layers = g->g.layers.size();
        if (macs)
            *macs = count_macs_total(g->g);
        if (params)
            *params = count_params_total(g->g);
    });
}

void pd_graph_free(pd_graph* g) {
    delete g;
}

pd_status pd_platform_resolve(const char* name_or_path, const char* search_path,
                              pd_platform** out) {
    return guarded([&] {
        need(name_or_path, "platform");
        need(out, "out");
        *out = new pd_platform{resolve_platform(name_or_path, search_path ? search_path : "")};
    });
}

pd_status pd_platform_json(const pd_platform* p, char** json) {
    return guarded([&] {
        need(p, "platform");
        need(json, "json");
        give(json, platform_to_json(p->p));
    });
}

void pd_platform_free(pd_platform* p) {
    delete p;
}

void pd_budget_init(pd_budget* b) {
    if (!b)
        return;
    const BudgetConfig d;
    std::memset(b->label, 0, sizeof b->label);
    std::strncpy(b->label, "default", sizeof b->label - 1);
    b->l1_bytes = d.l1_bytes;
    b->l2_bytes = d.l2_bytes;
    b->engine = PD_ENGINE_CONV_ACCELERATOR;
    b->dma_overlap = -1;
}

pd_status pd_budget_parse(const char* spec, pd_budget* out) {
    return guarded([&] {
        need(spec, "budget");
        need(out, "out");
        const BudgetConfig b = parse_budget(spec);
        pd_budget_init(out);
        std::strncpy(out->label, b.label.c_str(), sizeof out->label - 1);
        out->l1_bytes = b.l1_bytes;
        out->l2_bytes = b.l2_bytes;
    });
}

pd_status pd_cnn_latency(const pd_graph* g, const pd_platform* p, const pd_budget* b,
                         char** schedule_csv, char** summary_json) {
    return guarded([&] {
        need(g, "graph");
        need(p, "platform");
        pd_budget d;
        pd_budget_init(&d);
        const BudgetConfig bc = to_cpp(b ? *b : d);
        const Schedule s = plan_schedule(g->g, p->p, bc);
        const LatencyReport r = estimate_latency(s, g->g, p->p);
        give(schedule_csv, format_schedule_csv(s, r));
        give(summary_json, latency_summary_json(s, r));
    });
}

pd_status pd_cnn_compare(const pd_graph* g, const pd_platform* p, const pd_budget* budgets,
                         size_t count, char** csv, char** json) {
    return guarded([&] {
        need(g, "graph");
        need(p, "platform");
        need(budgets, "budgets");
        std::vector<BudgetConfig> v;
        for (size_t i = 0; i < count; ++i)
            v.push_back(to_cpp(budgets[i]));
        const BudgetComparison c = compare_budgets(g->g, p->p, v);
        give(csv, format_comparison_csv(c));
        give(json, comparison_json(c));
    });
}

pd_status pd_scenario_load(const char* path, pd_scenario** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new pd_scenario{load_scenario(path)};
    });
}

pd_status pd_scenario_default(pd_scenario** out) {
    return guarded([&] {
        need(out, "out");
        *out = new pd_scenario{};
        (*out)->s.name = "default";
    });
}

pd_status pd_scenario_set(pd_scenario* s, const char* field, double value) {
    return guarded([&] {
        need(s, "scenario");
        need(field, "field");
        Scenario& sc = s->s;
        const std::string f = field;
        auto count = [&](uint64_t& dst) {
            if (!(value >= 0) || value != std::floor(value))
                fail(ErrorCode::InvalidArgument, f + " must be a non-negative integer");
            dst = uint64_t(value);
        };
        if (f == "camera_mj")
            sc.phase.camera_mj = value;
        else if (f == "compute_mj")
            sc.phase.compute_mj = value;
        else if (f == "tx_mj_per_byte")
            sc.phase.tx_mj_per_byte = value;
        else if (f == "wake_overhead_mj")
            sc.phase.wake_overhead_mj = value;
        else if (f == "wake_period_s")
            sc.duty.wake_period_s = value;
        else if (f == "payload_policy") {
            if (value != 0 && value != 1)
                fail(ErrorCode::InvalidArgument, "payload_policy is 0 or 1");
            sc.duty.payload_policy =
                value == 0 ? PayloadPolicy::CountersEveryWake : PayloadPolicy::ImagePerDetection;
        } else if (f == "counter_payload_bytes")
            count(sc.duty.counter_payload_bytes);
        else if (f == "image_payload_bytes")
            count(sc.duty.image_payload_bytes);
        else if (f == "detections_per_day")
            sc.duty.detections_per_day = value;
        else if (f == "sleep_power_uw")
            sc.duty.sleep_power_uw = value;
        else if (f == "active_s")
            sc.duty.active_s = value;
        else if (f == "capacity_mah")
            sc.battery.capacity_mah = value;
        else if (f == "voltage_v")
            sc.battery.voltage_v = value;
        else if (f == "usable_fraction")
            sc.battery.usable_fraction = value;
        else
            fail(ErrorCode::InvalidArgument, "unknown scenario field '" + f + "'");
    });
}

pd_status pd_scenario_json(const pd_scenario* s, char** json) {
    return guarded([&] {
        need(s, "scenario");
        need(json, "json");
        give(json, scenario_to_json(s->s));
    });
}

void pd_scenario_free(pd_scenario* s) {
    delete s;
}

pd_status pd_power_daily(const pd_scenario* s, double* daily_j, uint64_t* lifetime_days,
                         char** json) {
    return guarded([&] {
        need(s, "scenario");
        const EnergyLedger l = daily_energy(s->s.phase, s->s.duty, s->s.battery);
        const Lifetime life = lifetime(s->s.battery, l.daily_j);
        if (daily_j)
            *daily_j = l.daily_j;
        if (lifetime_days)
            *lifetime_days = life.days;
        give(json, ledger_json(l, life));
    });
}

pd_status pd_power_simulate(const pd_scenario* s, const double* arrivals_s, size_t count,
                            double horizon_days, char** timeline_csv, char** json) {
    return guarded([&] {
        need(s, "scenario");
        if (count)
            need(arrivals_s, "arrivals");
        const std::vector<double> trace(arrivals_s, arrivals_s + count);
        const SimResult r = simulate(s->s.phase, s->s.duty, s->s.battery, trace, horizon_days);
        give(timeline_csv, format_timeline_csv(r));
        give(json, sim_json(r, s->s.battery).dump(2) + "\n");
    });
}

pd_status pd_trace_read(const char* path, double** arrivals_s, size_t* count) {
    return guarded([&] {
        need(path, "path");
        need(arrivals_s, "out");
        need(count, "count");
        const auto v = read_trace(path);
        *arrivals_s = dup(v);
        *count = v.size();
    });
}

pd_status pd_trace_uniform(double per_day, double days, double** arrivals_s, size_t* count) {
    return guarded([&] {
        need(arrivals_s, "out");
        need(count, "count");
        const auto v = uniform_trace(per_day, days);
        *arrivals_s = dup(v);
        *count = v.size();
    });
}

void pd_doubles_free(double* v) {
    std::free(v);
}

} // extern "C"

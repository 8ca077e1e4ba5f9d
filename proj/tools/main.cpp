// Pipeline driver: dataset generation, training, evaluation, ablations,
// reliability scoring, and artifact export. Exit codes: 0 success, 2 usage
// (bad flags/config/paths), 1 runtime failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aoitr/error.hpp"
#include "aoitr/geojson.hpp"
#include "aoitr/model.hpp"
#include "aoitr/reliability.hpp"
#include "aoitr/roadcut.hpp"
#include "aoitr/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aoitr;

namespace {

// Usage-phase failures (flags, config file, missing inputs) exit 2; anything
// thrown after validation exits 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check_usage(bool cond, const std::string& msg) {
    if (!cond) throw UsageError(msg);
}

// Library validation errors raised before any long work are usage errors.
template <typename Fn>
void as_usage(Fn&& f) {
    try {
        f();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream f(path);
    check_usage(f.good(), "cannot read config file: " + path);
    json j = json::parse(f, nullptr, false);
    check_usage(!j.is_discarded() && j.is_object(),
                "config file is not a JSON object: " + path);
    return j;
}

// Precedence: explicit flag > config-file key > built-in default.
template <typename T>
void overlay(const CLI::App& cmd, const std::string& flag, const json& file,
             const std::string& key, T& var) {
    if (cmd.count(flag) != 0 || !file.contains(key)) return;
    try {
        var = file.at(key).get<T>();
    } catch (const json::exception&) {
        throw UsageError("config key '" + key + "' has the wrong type");
    }
}

// Relative default locations honor AOITR_DATA_ROOT when set.
std::string default_path(const char* leaf) {
    const char* root = std::getenv("AOITR_DATA_ROOT");
    if (root && *root) return (fs::path(root) / leaf).string();
    return leaf;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail("cannot create directory " + dir + ": " + ec.message());
}

void require_dataset(const std::string& dir) {
    check_usage(fs::exists(fs::path(dir) / "manifest.json"),
                "no dataset manifest under " + dir);
}

void require_file(const std::string& path, const char* what) {
    check_usage(fs::exists(path), std::string(what) + " not found: " + path);
}

const char* tag_name(sampling::RefTag t) {
    switch (t) {
        case sampling::RefTag::road: return "road";
        case sampling::RefTag::entrance: return "entrance";
        case sampling::RefTag::truncated: return "truncated";
    }
    fail("unknown ref tag");
}

// ---- shared option blocks ------------------------------------------------

struct GenOpts {
    synth::WorldConfig wc;
    double train_fraction = 0.8;
    std::string out = default_path("dataset");
    std::string config;

    void bind(CLI::App& cmd) {
        cmd.add_option("--out", out, "dataset directory");
        cmd.add_option("--seed", wc.seed, "world seed");
        cmd.add_option("--samples", wc.samples, "sample count");
        cmd.add_option("--categories", wc.categories, "taxonomy codes (0..19)")
            ->delimiter(',');
        cmd.add_option("--negative-fraction", wc.negative_fraction,
                       "share of unreliable samples");
        cmd.add_option("--open-fraction", wc.open_fraction,
                       "share of scenes without an enclosing road loop");
        cmd.add_option("--road-cells", wc.road_cells, "road lattice density");
        cmd.add_option("--patch-px", wc.patch_px, "raster side in pixels");
        cmd.add_option("--lbs-points", wc.lbs_points, "activity points per sample");
        cmd.add_option("--train-fraction", train_fraction, "train split share");
        cmd.add_option("--config", config, "JSON config file; flags override it");
    }

    void merge(const CLI::App& cmd) {
        const json f = load_config_file(config);
        overlay(cmd, "--out", f, "out", out);
        overlay(cmd, "--seed", f, "seed", wc.seed);
        overlay(cmd, "--samples", f, "samples", wc.samples);
        overlay(cmd, "--categories", f, "categories", wc.categories);
        overlay(cmd, "--negative-fraction", f, "negative_fraction",
                wc.negative_fraction);
        overlay(cmd, "--open-fraction", f, "open_fraction", wc.open_fraction);
        overlay(cmd, "--road-cells", f, "road_cells", wc.road_cells);
        overlay(cmd, "--patch-px", f, "patch_px", wc.patch_px);
        overlay(cmd, "--lbs-points", f, "lbs_points", wc.lbs_points);
        overlay(cmd, "--train-fraction", f, "train_fraction", train_fraction);
    }
};

struct ModelOpts {
    model::ModelConfig mc;
    std::string data = default_path("dataset");
    std::string out = default_path("out");
    std::string config;

    void bind(CLI::App& cmd) {
        cmd.add_option("--data", data, "dataset directory");
        cmd.add_option("--out", out, "output directory");
        cmd.add_option("--n-points", mc.n_points, "boundary nodes per polygon");
        cmd.add_option("--d-model", mc.d_model, "transformer width");
        cmd.add_option("--enc-layers", mc.enc_layers, "encoder depth");
        cmd.add_option("--dec-layers", mc.dec_layers, "decoder depth");
        cmd.add_option("--heads", mc.heads, "attention heads");
        cmd.add_option("--c-mid", mc.c_mid, "conv stem mid width");
        cmd.add_option("--lr", mc.lr, "learning rate");
        cmd.add_option("--batch", mc.batch, "batch size");
        cmd.add_option("--epochs", mc.epochs, "training epochs");
        cmd.add_option("--threads", mc.threads, "worker threads (1 = sequential)");
        cmd.add_option("--seed", mc.seed, "training seed");
        cmd.add_option("--config", config, "JSON config file; flags override it");
    }

    void merge(const CLI::App& cmd) {
        const json f = load_config_file(config);
        overlay(cmd, "--data", f, "data", data);
        overlay(cmd, "--out", f, "out", out);
        overlay(cmd, "--n-points", f, "n_points", mc.n_points);
        overlay(cmd, "--d-model", f, "d_model", mc.d_model);
        overlay(cmd, "--enc-layers", f, "enc_layers", mc.enc_layers);
        overlay(cmd, "--dec-layers", f, "dec_layers", mc.dec_layers);
        overlay(cmd, "--heads", f, "heads", mc.heads);
        overlay(cmd, "--c-mid", f, "c_mid", mc.c_mid);
        overlay(cmd, "--lr", f, "lr", mc.lr);
        overlay(cmd, "--batch", f, "batch", mc.batch);
        overlay(cmd, "--epochs", f, "epochs", mc.epochs);
        overlay(cmd, "--threads", f, "threads", mc.threads);
        overlay(cmd, "--seed", f, "seed", mc.seed);
    }
};

// ---- commands --------------------------------------------------------------

int cmd_gen(const CLI::App& cmd, GenOpts& o) {
    o.merge(cmd);
    as_usage([&] {
        o.wc.validate();
        require(o.train_fraction > 0.0 && o.train_fraction < 1.0,
                "train fraction must lie in (0,1)");
    });
    ensure_dir(o.out);
    const std::vector<data::GeoSample> world = synth::generate_world(o.wc);
    data::save_dataset(o.out, world, o.train_fraction);
    std::cout << "wrote " << world.size() << " samples to " << o.out << "\n";
    return 0;
}

int cmd_train(const CLI::App& cmd, ModelOpts& o) {
    o.merge(cmd);
    as_usage([&] { o.mc.validate(); });
    require_dataset(o.data);
    ensure_dir(o.out);

    const auto train_ds = data::load_dataset(o.data, "train");
    const auto val_ds = data::load_dataset(o.data, "val");
    model::ModelParams mp = model::make_model(o.mc);
    const std::string csv = (fs::path(o.out) / "metrics.csv").string();
    const auto logs = model::train(mp, train_ds, val_ds, csv);
    const std::string ckpt = (fs::path(o.out) / "model.ckpt").string();
    model::save_model(ckpt, mp);

    const model::EvalResult er = model::evaluate(val_ds, mp);
    std::printf("train done: %zu epochs, final loss %.6f\n", logs.size(),
                logs.empty() ? 0.0 : logs.back().loss);
    std::printf("val mIoU %.4f, high-IoU rate %.4f over %zu samples\n", er.miou,
                er.high_iou_rate, val_ds.size());
    std::cout << "checkpoint " << ckpt << "\nmetrics " << csv << "\n";
    return 0;
}

int cmd_eval(const CLI::App& cmd, ModelOpts& o, std::string& ckpt, std::string& split,
             bool& baseline) {
    o.merge(cmd);
    check_usage(split == "train" || split == "val" || split == "all",
                "--split must be train, val, or all");
    require_dataset(o.data);
    require_file(ckpt, "model checkpoint");
    ensure_dir(o.out);

    model::ModelParams mp = model::load_model(ckpt);
    if (cmd.count("--threads")) mp.cfg.threads = o.mc.threads;
    const auto ds = data::load_dataset(o.data, split);
    const model::EvalResult er = model::evaluate(ds, mp);

    std::ofstream f((fs::path(o.out) / "eval.csv").string());
    require(f.good(), "cannot write eval.csv under " + o.out);
    f << "method,split,miou,high_iou,samples\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "aoitr,%s,%.17g,%.17g,%zu\n", split.c_str(), er.miou,
                  er.high_iou_rate, ds.size());
    f << buf;
    std::printf("aoitr   %s mIoU %.4f high-IoU %.4f (%zu samples)\n", split.c_str(),
                er.miou, er.high_iou_rate, ds.size());

    if (baseline) {
        double sum = 0.0;
        int high = 0, misses = 0;
        for (const auto& s : ds) {
            double iou = 0.0;
            try {
                const auto faces = roadcut::polygonize(s.roads, s.raster.bbox);
                if (auto aoi = roadcut::roadcut_aoi(s.core, faces))
                    iou = geo::polygon_iou(*aoi, s.truth);
                else
                    ++misses;
            } catch (const Error&) {
                iou = 0.0;  // degenerate arrangement scores zero
            }
            sum += iou;
            if (iou > geo::kHighIouThreshold) ++high;
        }
        const double miou = sum / double(ds.size());
        const double hr = double(high) / double(ds.size());
        std::snprintf(buf, sizeof buf, "roadcut,%s,%.17g,%.17g,%zu\n", split.c_str(),
                      miou, hr, ds.size());
        f << buf;
        std::printf("roadcut %s mIoU %.4f high-IoU %.4f (no face on %d)\n",
                    split.c_str(), miou, hr, misses);
    }
    return 0;
}

int cmd_ablate(const CLI::App& cmd, ModelOpts& o) {
    o.merge(cmd);
    as_usage([&] { o.mc.validate(); });
    require_dataset(o.data);
    ensure_dir(o.out);

    const auto train_ds = data::load_dataset(o.data, "train");
    const auto val_ds = data::load_dataset(o.data, "val");

    struct Row {
        std::string condition;
        int n = 0;
        double miou = 0, high = 0, loss = 0;
    };
    std::vector<Row> rows;
    const auto run = [&](const std::string& name, model::Ablation a, int n) {
        model::ModelConfig c = o.mc;
        c.ablation = a;
        c.n_points = n;
        model::ModelParams mp = model::make_model(c);
        const auto logs = model::train(mp, train_ds, val_ds, "");
        const model::EvalResult er = model::evaluate(val_ds, mp);
        rows.push_back({name, n, er.miou, er.high_iou_rate,
                        logs.empty() ? 0.0 : logs.back().loss});
        std::printf("%-20s n=%-3d val mIoU %.4f high-IoU %.4f\n", name.c_str(), n,
                    er.miou, er.high_iou_rate);
    };

    for (model::Ablation a :
         {model::Ablation::core_location, model::Ablation::category,
          model::Ablation::road_refs, model::Ablation::imagery})
        run(std::string("drop_") + model::ablation_name(a), a, o.mc.n_points);
    for (int n : {4, 8, 16, 24, 32}) run("n" + std::to_string(n), model::Ablation::none, n);

    std::ofstream f((fs::path(o.out) / "ablation.csv").string());
    require(f.good(), "cannot write ablation.csv under " + o.out);
    f << "condition,n_points,val_miou,val_high_iou,train_loss\n";
    char buf[200];
    for (const Row& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g,%.17g\n", r.condition.c_str(),
                      r.n, r.miou, r.high, r.loss);
        f << buf;
    }
    std::cout << "ablation report " << (fs::path(o.out) / "ablation.csv").string()
              << "\n";
    return 0;
}

int cmd_reliability(const CLI::App& cmd, ModelOpts& o, std::string& ckpt,
                    rel::CascadeConfig& cc, double& target) {
    o.merge(cmd);
    {
        const json f = load_config_file(o.config);
        overlay(cmd, "--cascade-epochs", f, "cascade_epochs", cc.epochs);
        overlay(cmd, "--target-precision", f, "target_precision", target);
    }
    check_usage(target > 0.0 && target <= 1.0, "--target-precision must be in (0,1]");
    require_dataset(o.data);
    require_file(ckpt, "model checkpoint");
    ensure_dir(o.out);

    model::ModelParams mp = model::load_model(ckpt);
    if (cmd.count("--threads")) mp.cfg.threads = o.mc.threads;
    const auto train_ds = data::load_dataset(o.data, "train");
    const auto val_ds = data::load_dataset(o.data, "val");

    const auto extract_all = [&](const std::vector<data::GeoSample>& ds) {
        std::vector<std::vector<double>> X(ds.size());
        model::parallel_for(int(ds.size()), mp.cfg.threads, [&](int i) {
            X[size_t(i)] = rel::extract_features(mp, ds[size_t(i)]);
        });
        return X;
    };
    const auto labels_of = [](const std::vector<data::GeoSample>& ds) {
        std::vector<int> y(ds.size());
        for (size_t i = 0; i < ds.size(); ++i) y[i] = ds[i].label.reliable ? 1 : 0;
        return y;
    };

    const auto X_train = extract_all(train_ds);
    const auto X_val = extract_all(val_ds);
    const auto y_train = labels_of(train_ds);
    const auto y_val = labels_of(val_ds);

    cc.in_dim = int(X_train.at(0).size());
    cc.seed = mp.cfg.seed;
    rel::Cascade cascade = rel::make_cascade(cc);
    const auto losses = rel::cascade_train(cascade, X_train, y_train);
    const auto scores = rel::cascade_scores(cascade, X_val);
    const double auc = rel::roc_auc(scores, y_val);
    const rel::PRResult pr = rel::pr_threshold(scores, y_val, target);

    // permutation null: shuffled labels against the same scores
    Rng null_rng(cc.seed ^ 0x9e11u);
    std::vector<int> shuffled = y_val;
    double null_auc = 0.0;
    const int perms = 200;
    for (int k = 0; k < perms; ++k) {
        null_rng.shuffle(shuffled);
        null_auc += rel::roc_auc(scores, shuffled);
    }
    null_auc /= perms;

    const int embed = mp.cfg.d_model;
    rel::write_feature_csv((fs::path(o.out) / "features_train.csv").string(), X_train,
                           y_train, embed);
    rel::write_feature_csv((fs::path(o.out) / "features_val.csv").string(), X_val,
                           y_val, embed);
    rel::write_pr_csv((fs::path(o.out) / "pr.csv").string(), pr);

    json meta;
    meta["kind"] = "aoitr-cascade";
    meta["config"] = {{"in_dim", cc.in_dim}, {"h1", cc.h1},     {"h2", cc.h2},
                      {"lr", cc.lr},         {"batch", cc.batch}, {"epochs", cc.epochs},
                      {"seed", cc.seed},     {"target_precision", target}};
    nn::save_checkpoint((fs::path(o.out) / "cascade.ckpt").string(), cascade.store,
                        meta.dump());

    json summary;
    summary["auc"] = auc;
    summary["null_auc"] = null_auc;
    summary["attainable"] = pr.attainable;
    summary["threshold"] = pr.chosen.threshold;
    summary["precision"] = pr.chosen.precision;
    summary["recall"] = pr.chosen.recall;
    summary["train_loss_final"] = losses.empty() ? 0.0 : losses.back();
    std::ofstream sf((fs::path(o.out) / "reliability.json").string());
    require(sf.good(), "cannot write reliability.json under " + o.out);
    sf << summary.dump(2) << "\n";

    std::printf("cascade AUC %.4f (permutation null %.4f)\n", auc, null_auc);
    if (pr.attainable)
        std::printf("recall %.4f at precision %.4f (threshold %.4f)\n",
                    pr.chosen.recall, pr.chosen.precision, pr.chosen.threshold);
    else
        std::printf("target precision %.2f unattainable; best precision %.4f\n",
                    target, pr.chosen.precision);
    return 0;
}

void write_svg(const std::string& path, const data::GeoSample& s,
               const geo::Polygon& pred, const sampling::ReferencePoints& refs) {
    const geo::BBox& bb = s.raster.bbox;
    const double W = 512, H = 512;
    const auto X = [&](double x) { return (x - bb.min.x) / bb.width() * W; };
    const auto Y = [&](double y) { return (bb.max.y - y) / bb.height() * H; };
    const auto path_d = [&](const geo::Polygon& p) {
        std::ostringstream d;
        char buf[80];
        for (size_t i = 0; i < p.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%c%.2f %.2f", i ? 'L' : 'M', X(p[i].x),
                          Y(p[i].y));
            d << buf;
        }
        d << "Z";
        return d.str();
    };

    std::ofstream f(path);
    require(f.good(), "cannot write " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 512 512\">\n"
      << "<rect width=\"512\" height=\"512\" fill=\"#f4f2ea\"/>\n";
    char buf[200];
    for (const auto& seg : s.roads.segments) {
        const geo::GeoPoint a = s.roads.nodes[size_t(seg.first)];
        const geo::GeoPoint b = s.roads.nodes[size_t(seg.second)];
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                      "stroke=\"#8a8a90\" stroke-width=\"2\"/>\n",
                      X(a.x), Y(a.y), X(b.x), Y(b.y));
        f << buf;
    }
    f << "<path d=\"" << path_d(s.truth)
      << "\" fill=\"none\" stroke=\"#cc2222\" stroke-width=\"3\"/>\n";
    f << "<path d=\"" << path_d(pred)
      << "\" fill=\"none\" stroke=\"#22aa44\" stroke-width=\"3\"/>\n";
    for (const geo::GeoPoint& p : refs.points) {
        std::snprintf(buf, sizeof buf,
                      "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"#3366cc\"/>\n",
                      X(p.x), Y(p.y));
        f << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"5\" fill=\"#111111\"/>\n",
                  X(s.core.location.x), Y(s.core.location.y));
    f << buf << "</svg>\n";
    require(f.good(), "short write: " + path);
}

int cmd_export(const CLI::App& cmd, ModelOpts& o, std::string& ckpt, std::string& split,
               int& limit) {
    o.merge(cmd);
    check_usage(split == "train" || split == "val" || split == "all",
                "--split must be train, val, or all");
    check_usage(limit > 0, "--limit must be positive");
    require_dataset(o.data);
    require_file(ckpt, "model checkpoint");
    ensure_dir(o.out);

    const model::ModelParams mp = model::load_model(ckpt);
    const auto ds = data::load_dataset(o.data, split);
    const size_t n = std::min(ds.size(), size_t(limit));
    for (size_t i = 0; i < n; ++i) {
        const data::GeoSample& s = ds[i];
        const model::ModelInput in = model::make_input(s, mp.cfg);
        const model::ForwardOut fo = model::forward(mp, in);
        const geo::Polygon pred(
            model::denormalize_points(fo.pred.p_hat, s.raster.bbox));

        std::vector<json> features;
        features.push_back(data::polygon_feature(s.truth, {{"role", "truth"}}));
        features.push_back(data::polygon_feature(pred, {{"role", "prediction"}}));
        features.push_back(data::poi_feature(s.core));
        for (size_t k = 0; k < in.refs.size(); ++k)
            features.push_back(
                {{"type", "Feature"},
                 {"geometry",
                  {{"type", "Point"},
                   {"coordinates", json::array({in.refs.points[k].x,
                                                in.refs.points[k].y})}}},
                 {"properties",
                  {{"role", "ref"}, {"tag", tag_name(in.refs.tags[k])}}}});
        json fc = data::feature_collection(std::move(features));
        fc["sample_id"] = s.id;

        std::ofstream gf((fs::path(o.out) / (s.id + ".geojson")).string());
        require(gf.good(), "cannot write geojson for " + s.id);
        gf << fc.dump(2) << "\n";
        write_svg((fs::path(o.out) / (s.id + ".svg")).string(), s, pred, in.refs);
    }
    std::cout << "exported " << n << " samples to " << o.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AOI boundary regression pipeline"};
    app.require_subcommand(1);

    GenOpts gen_o;
    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    gen_o.bind(*gen);

    ModelOpts train_o;
    CLI::App* train = app.add_subcommand("train", "train the polygon model");
    train_o.bind(*train);

    ModelOpts eval_o;
    std::string eval_ckpt = default_path("out/model.ckpt");
    std::string eval_split = "val";
    bool eval_baseline = false;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_o.bind(*eval);
    eval->add_option("--model", eval_ckpt, "model checkpoint");
    eval->add_option("--split", eval_split, "train, val, or all");
    eval->add_flag("--baseline", eval_baseline, "also score the road-cut baseline");

    ModelOpts abl_o;
    CLI::App* ablate = app.add_subcommand("ablate", "modality and N ablation study");
    abl_o.bind(*ablate);

    ModelOpts rel_o;
    std::string rel_ckpt = default_path("out/model.ckpt");
    rel::CascadeConfig rel_cc;
    double rel_target = 0.80;
    CLI::App* reliability =
        app.add_subcommand("reliability", "train and score the reliability cascade");
    rel_o.bind(*reliability);
    reliability->add_option("--model", rel_ckpt, "polygon model checkpoint");
    reliability->add_option("--cascade-epochs", rel_cc.epochs, "cascade epochs");
    reliability->add_option("--target-precision", rel_target,
                            "precision target for thresholding");

    ModelOpts exp_o;
    std::string exp_ckpt = default_path("out/model.ckpt");
    std::string exp_split = "val";
    int exp_limit = 8;
    CLI::App* exportc =
        app.add_subcommand("export", "write GeoJSON + SVG prediction overlays");
    exp_o.bind(*exportc);
    exportc->add_option("--model", exp_ckpt, "model checkpoint");
    exportc->add_option("--split", exp_split, "train, val, or all");
    exportc->add_option("--limit", exp_limit, "samples to export");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_gen(*gen, gen_o);
        if (train->parsed()) return cmd_train(*train, train_o);
        if (eval->parsed())
            return cmd_eval(*eval, eval_o, eval_ckpt, eval_split, eval_baseline);
        if (ablate->parsed()) return cmd_ablate(*ablate, abl_o);
        if (reliability->parsed())
            return cmd_reliability(*reliability, rel_o, rel_ckpt, rel_cc, rel_target);
        if (exportc->parsed())
            return cmd_export(*exportc, exp_o, exp_ckpt, exp_split, exp_limit);
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

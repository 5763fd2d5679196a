// fgc: seeds -> fuzzy GrowCut -> Zernike -> MLP command line driver.

#include <glob.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fgc/fgc.hpp"

namespace fs = std::filesystem;
using namespace fgc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailures = 1;
constexpr int kExitConfig = 2;

bool use_color() {
  return std::getenv("NO_COLOR") == nullptr && ::isatty(STDERR_FILENO);
}

void say(const char* tag, const char* color, const std::string& msg) {
  if (use_color()) std::cerr << color << tag << "\033[0m " << msg << '\n';
  else std::cerr << tag << ' ' << msg << '\n';
}

void warn(const std::string& msg) { say("warning:", "\033[33m", msg); }
void error(const std::string& msg) { say("error:", "\033[31m", msg); }

bool is_image_file(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".png" || ext == ".pgm" || ext == ".PNG" || ext == ".PGM";
}

/// Files are taken as-is, directories contribute their image files, anything
/// else is treated as a glob pattern.
std::vector<std::string> expand_inputs(const std::vector<std::string>& specs) {
  std::vector<std::string> out;
  for (const auto& s : specs) {
    if (fs::is_directory(s)) {
      for (const auto& e : fs::directory_iterator(s))
        if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path().generic_string());
    } else if (fs::exists(s)) {
      out.push_back(s);
    } else {
      glob_t g{};
      if (::glob(s.c_str(), 0, nullptr, &g) == 0) {
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
      } else {
        out.push_back(s);  // reported as a per-image failure
      }
      ::globfree(&g);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

/// Flags shared by the stage subcommands; unset flags leave the JSON config
/// value (or the library default) in place.
struct Overrides {
  std::string config_path;
  std::optional<std::string> method;
  std::optional<int> n_seeds;
  std::optional<double> alpha, beta, alpha_x, alpha_y;
  std::optional<int> max_iter;
  std::optional<int> touch_radius;
  std::optional<std::uint64_t> rng_seed;
  std::optional<int> workers;
  std::optional<std::string> distance;
  std::optional<int> epochs;
  std::optional<double> learning_rate;
  std::optional<int> folds;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config; flags override its values")
        ->check(CLI::ExistingFile);
    app->add_option("--method", method, "fuzzy | growcut");
    app->add_option("--n-seeds,--n", n_seeds, "number of annealed seeds");
    app->add_option("--alpha", alpha, "annealing distance weight");
    app->add_option("--beta", beta, "annealing intensity weight");
    app->add_option("--alpha-x", alpha_x, "Gaussian tuning weight along x");
    app->add_option("--alpha-y", alpha_y, "Gaussian tuning weight along y");
    app->add_option("--max-iter", max_iter, "automaton iteration budget");
    app->add_option("--touch-radius", touch_radius, "border band for the well-segmented test");
    app->add_option("--rng-seed", rng_seed, "random seed");
    app->add_option("--workers", workers, "parallel images");
    app->add_option("--distance", distance, "annealing distance term: spread | anchored | pairwise");
    app->add_option("--epochs", epochs, "MLP epochs");
    app->add_option("--lr", learning_rate, "MLP learning rate");
    app->add_option("--folds", folds, "cross-validation folds");
  }

  PipelineConfig resolve() const {
    PipelineConfig c;
    if (!config_path.empty()) from_json(read_json(config_path), c);
    if (method) c.method = parse_method(*method);
    if (n_seeds) c.annealing.n_seeds = *n_seeds;
    if (alpha) c.annealing.alpha = *alpha;
    if (beta) c.annealing.beta = *beta;
    if (distance) {
      try {
        c.annealing.distance = parse_distance_mode(*distance);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    if (alpha_x) c.fuzzy.alpha_x = *alpha_x;
    if (alpha_y) c.fuzzy.alpha_y = *alpha_y;
    if (max_iter) c.fuzzy.max_iter = *max_iter;
    if (touch_radius) c.touch_radius = *touch_radius;
    if (rng_seed) c.rng_seed = *rng_seed;
    if (workers) c.workers = *workers;
    if (epochs) c.train.epochs = *epochs;
    if (learning_rate) c.train.learning_rate = *learning_rate;
    if (folds) c.folds = *folds;
    return c;
  }
};

// synth ---------------------------------------------------------------------

struct SynthArgs {
  Overrides o;
  std::string out = "phantoms";
  std::string spec_path;
  std::string kind = "disk";
  int benign = 0;
  int malignant = 0;
  std::string benign_kind = "ellipse";
  double noise = 0.0;
};

int cmd_synth(const SynthArgs& a) {
  const PipelineConfig cfg = a.o.resolve();
  fs::create_directories(fs::path(a.out) / "images");
  fs::create_directories(fs::path(a.out) / "truth");
  json specs = json::object();
  json labels = json::object();
  auto emit = [&](const std::string& stem, const PhantomSpec& spec) {
    const Phantom ph = synth_phantom(spec);
    save_image(ph.image, (fs::path(a.out) / "images" / (stem + ".png")).string());
    save_mask(ph.truth, (fs::path(a.out) / "truth" / (stem + ".png")).string());
    specs[stem] = spec;
  };
  if (a.benign > 0 || a.malignant > 0) {
    const ShapeKind bk = parse_shape(a.benign_kind);
    const SeedFan fan{cfg.rng_seed};
    for (int i = 0; i < a.benign + a.malignant; ++i) {
      const bool mal = i >= a.benign;
      char stem[64];
      std::snprintf(stem, sizeof stem, "%s_%03d", mal ? "malignant" : "benign",
                    mal ? i - a.benign : i);
      const auto seed = fan.image(stem);
      emit(stem, random_phantom_spec(mal ? ShapeKind::kStar : bk, seed, a.noise));
      labels[stem] = mal ? "malignant" : "benign";
    }
    write_json(labels, (fs::path(a.out) / "labels.json").string());
  } else {
    PhantomSpec spec;
    if (!a.spec_path.empty()) from_json(read_json(a.spec_path), spec);
    else {
      spec.kind = parse_shape(a.kind);
      spec.noise_sigma = a.noise;
      spec.rng_seed = cfg.rng_seed;
    }
    emit("phantom", spec);
  }
  write_json(specs, (fs::path(a.out) / "specs.json").string());
  std::cout << "wrote " << specs.size() << " phantom(s) to " << a.out << '\n';
  return kExitOk;
}

// seeds ---------------------------------------------------------------------

struct SeedsArgs {
  Overrides o;
  std::string image;
  std::string out;
};

int cmd_seeds(const SeedsArgs& a) {
  const PipelineConfig cfg = a.o.resolve();
  cfg.validate();
  const GrayImage image = load_image(a.image);
  SAConfig sa = cfg.annealing;
  sa.rng_seed = cfg.rng_seed;
  const AnnealResult r = anneal(image, sa);
  const SeedSet seeds = r.seed_set(image.width(), image.height());
  json doc{{"image", a.image},
           {"seeds", seeds_to_json(seeds.seeds())},
           {"objective", r.fitness},
           {"initial_objective", r.initial_fitness},
           {"evaluations", r.evaluations},
           {"annealing", sa}};
  doc["annealing"]["rng_seed"] = sa.rng_seed;
  if (a.out.empty()) std::cout << doc.dump(2) << '\n';
  else {
    ensure_parent(a.out);
    write_json(doc, a.out);
  }
  return kExitOk;
}

// segment -------------------------------------------------------------------

struct SegmentArgs {
  Overrides o;
  std::string image;
  std::string seeds;
  std::string out = "mask.png";
  std::string overlay;
  std::string result;
  std::string truth;
};

int cmd_segment(const SegmentArgs& a) {
  const PipelineConfig cfg = a.o.resolve();
  cfg.validate();
  const GrayImage image = load_image(a.image);
  json doc{{"image", a.image}, {"method", to_string(cfg.method)}};
  SegmentationResult seg{BinaryMask(1, 1), CellGrid(1, 1), 0, false};
  if (cfg.method == Method::kGrowCut) {
    if (a.seeds.empty()) throw ConfigError("growcut needs --seeds with object and background seeds");
    const SeedSet seeds(seeds_from_json(read_json(a.seeds)), image.width(), image.height());
    seg = growcut_run(image, seeds, cfg.fuzzy.max_iter, cfg.fuzzy.neighborhood);
    doc["seeds"] = seeds_to_json(seeds.seeds());
  } else {
    std::optional<SeedSet> seeds;
    if (!a.seeds.empty()) {
      seeds.emplace(seeds_from_json(read_json(a.seeds)), image.width(), image.height());
    } else {
      SAConfig sa = cfg.annealing;
      sa.rng_seed = cfg.rng_seed;
      seeds.emplace(anneal(image, sa).seed_set(image.width(), image.height()));
    }
    auto res = fuzzy_run(image, *seeds, cfg.fuzzy);
    if (res.fit.warning()) warn("seed spread degenerate along an axis; sigma floored to 1 px");
    doc["seeds"] = seeds_to_json(seeds->seeds());
    doc["gaussian_model"] = res.fit.model;
    doc["center"] = {res.center.x, res.center.y};
    seg = std::move(res.segmentation);
  }
  ensure_parent(a.out);
  save_mask(seg.mask, a.out);
  if (!a.overlay.empty()) {
    ensure_parent(a.overlay);
    save_overlay(image, seg.mask, a.overlay);
  }
  doc["iterations"] = seg.iterations;
  doc["converged"] = seg.converged;
  doc["mask"] = a.out;
  doc["area"] = seg.mask.count();
  doc["well_segmented"] = well_segmented(seg.mask, cfg.touch_radius);
  if (!a.truth.empty()) doc["dice"] = dice(seg.mask, load_mask(a.truth));
  if (a.result.empty()) std::cout << doc.dump(2) << '\n';
  else {
    ensure_parent(a.result);
    write_json(doc, a.result);
  }
  if (!seg.converged) warn("iteration budget exhausted before convergence");
  return kExitOk;
}

// features ------------------------------------------------------------------

struct FeaturesArgs {
  Overrides o;
  std::vector<std::string> masks;
  std::string labels;
  std::string out = "features.csv";
};

int cmd_features(const FeaturesArgs& a) {
  const auto labels = a.labels.empty() ? std::map<std::string, int>{} : load_labels(a.labels);
  std::vector<FeatureRow> rows;
  int failures = 0;
  for (const auto& path : expand_inputs(a.masks)) {
    const std::string stem = fs::path(path).stem().string();
    try {
      FeatureRow r{stem, descriptor(load_mask(path)), std::nullopt};
      if (auto it = labels.find(stem); it != labels.end()) r.label = it->second;
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      error(path + ": " + e.what());
      ++failures;
    }
  }
  ensure_parent(a.out);
  write_features_csv(rows, a.out);
  std::cout << "wrote " << rows.size() << " feature row(s) to " << a.out << '\n';
  return failures ? kExitFailures : kExitOk;
}

// train / classify ----------------------------------------------------------

struct TrainArgs {
  Overrides o;
  std::string features;
  std::string out = "model.json";
};

int cmd_train(const TrainArgs& a) {
  const PipelineConfig cfg = a.o.resolve();
  cfg.validate();
  const auto rows = read_features_csv(a.features);
  const Dataset data = to_dataset(rows);
  TrainConfig tc = cfg.train;
  tc.rng_seed = SeedFan{cfg.rng_seed}.training();
  const auto res = train_with_trace(data, tc);
  ensure_parent(a.out);
  write_json(model_to_json(res.model), a.out);
  std::printf("samples %zu  loss %.6f -> %.6f  train accuracy %.4f\n", data.size(),
              res.epoch_loss.front(), res.epoch_loss.back(), accuracy(res.model, data));
  return kExitOk;
}

struct ClassifyArgs {
  std::string model;
  std::string features;
  std::string out;
};

int cmd_classify(const ClassifyArgs& a) {
  const MLPModel model = model_from_json(read_json(a.model));
  const auto rows = read_features_csv(a.features);
  std::ostringstream csv;
  csv << "image,p_benign,p_malignant,prediction,label\n";
  std::size_t labeled = 0, correct = 0;
  for (const auto& r : rows) {
    const auto p = predict_proba(model, r.features.values);
    const int pred = p[1] > p[0] ? 1 : 0;
    csv << r.image << ',' << format_double(p[0]) << ',' << format_double(p[1]) << ','
        << class_name(pred) << ',' << (r.label ? class_name(*r.label) : "") << '\n';
    if (r.label) {
      ++labeled;
      correct += *r.label == pred;
    }
  }
  if (a.out.empty()) std::cout << csv.str();
  else {
    ensure_parent(a.out);
    std::ofstream(a.out, std::ios::binary) << csv.str();
  }
  if (labeled) std::fprintf(stderr, "accuracy %zu/%zu\n", correct, labeled);
  return kExitOk;
}

// eval ----------------------------------------------------------------------

struct EvalArgs {
  Overrides o;
  std::string manifest;
  std::string features;
  std::string truth_dir;
  std::string out;
  std::vector<std::string> ttest;
};

std::vector<double> read_numbers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    for (auto& c : tok)
      if (c == ',') c = ' ';
    std::istringstream is(tok);
    double x;
    while (is >> x) v.push_back(x);
  }
  return v;
}

int cmd_eval(const EvalArgs& a) {
  const PipelineConfig cfg = a.o.resolve();
  cfg.validate();
  const SeedFan fan{cfg.rng_seed};
  TrainConfig tc = cfg.train;
  tc.rng_seed = fan.training();
  const ReportOptions opt{cfg.folds, tc, fan.folds()};

  if (!a.ttest.empty()) {
    if (a.ttest.size() != 2) throw ConfigError("--ttest takes two files of numbers");
    const auto x = read_numbers(a.ttest[0]);
    const auto y = read_numbers(a.ttest[1]);
    const TTest t = t_test(x, y);
    std::printf("t %.6f  df %.4f  p %.6g  %s at 95%%\n", t.t, t.df, t.p,
                t.p < 0.05 ? "significant" : "not significant");
    return kExitOk;
  }

  Report rep;
  if (!a.manifest.empty()) {
    const json m = read_json(a.manifest);
    const auto csv = read_features_csv(m.at("features_csv").get<std::string>());
    std::map<std::string, FeatureVector> feats;
    for (const auto& r : csv) feats[r.image] = r.features;
    std::vector<ImageRecord> recs;
    for (const auto& j : m.at("records")) {
      ImageRecord r;
      r.input = j.at("input").get<std::string>();
      r.stem = j.at("stem").get<std::string>();
      r.ok = j.at("status") == "ok";
      if (r.ok) {
        r.mask_path = j.at("mask").get<std::string>();
        const BinaryMask mask = load_mask(r.mask_path);
        r.well_segmented = well_segmented(mask, cfg.touch_radius);
        r.touching = touching_fraction(mask, cfg.touch_radius);
        if (!a.truth_dir.empty()) {
          const auto truth = fs::path(a.truth_dir) / (r.stem + ".png");
          if (fs::exists(truth)) r.dice = dice(mask, load_mask(truth.string()));
        } else if (!j.at("dice").is_null()) {
          r.dice = j.at("dice").get<double>();
        }
        if (!j.at("label").is_null()) r.label = parse_class(j.at("label").get<std::string>());
        if (auto it = feats.find(r.stem); it != feats.end()) r.features = it->second;
      }
      recs.push_back(std::move(r));
    }
    rep = report(recs, opt);
  } else if (!a.features.empty()) {
    const auto rows = read_features_csv(a.features);
    std::vector<ImageRecord> recs;
    for (const auto& r : rows) {
      ImageRecord rec;
      rec.stem = r.image;
      rec.ok = true;
      rec.well_segmented = true;
      rec.features = r.features;
      rec.label = r.label;
      recs.push_back(std::move(rec));
    }
    rep = report(recs, opt);
  } else {
    throw ConfigError("eval needs --manifest, --features or --ttest");
  }
  std::cout << rep.text();
  if (!a.out.empty()) {
    ensure_parent(a.out);
    write_json(json(rep), a.out);
  }
  return kExitOk;
}

// pipeline ------------------------------------------------------------------

struct PipelineArgs {
  Overrides o;
  std::vector<std::string> inputs;
  std::optional<std::string> out;
  std::optional<std::string> labels;
  std::optional<std::string> truth_dir;
  std::optional<std::string> seeds_dir;
  bool intensity = false;
};

int cmd_pipeline(const PipelineArgs& a) {
  PipelineConfig cfg = a.o.resolve();
  if (!a.inputs.empty()) cfg.inputs = a.inputs;
  cfg.inputs = expand_inputs(cfg.inputs);
  if (a.out) cfg.out_dir = *a.out;
  if (a.labels) cfg.labels_file = *a.labels;
  if (a.truth_dir) cfg.truth_dir = *a.truth_dir;
  if (a.seeds_dir) cfg.seeds_dir = *a.seeds_dir;
  if (a.intensity) cfg.intensity_features = true;
  if (cfg.inputs.empty()) warn("no input images; writing an empty manifest");
  const RunManifest m = run_pipeline(cfg);
  for (const auto& r : m.records)
    if (!r.ok) error(r.input + ": " + r.error);
  std::cout << m.summary->text();
  return m.any_failed() ? kExitFailures : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fuzzy GrowCut mass segmentation and shape classification"};
  app.set_version_flag("--version", std::string("fgc ") + kVersion);
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate phantom ROIs with ground truth");
  synth.o.attach(s);
  s->add_option("--out", synth.out, "output directory");
  s->add_option("--spec", synth.spec_path, "phantom spec JSON")->check(CLI::ExistingFile);
  s->add_option("--kind", synth.kind, "disk | ellipse | star");
  s->add_option("--benign", synth.benign, "number of benign phantoms");
  s->add_option("--malignant", synth.malignant, "number of malignant (star) phantoms");
  s->add_option("--benign-kind", synth.benign_kind, "shape of benign phantoms");
  s->add_option("--noise", synth.noise, "additive Gaussian noise sigma");

  SeedsArgs seeds;
  auto* sd = app.add_subcommand("seeds", "select object seeds by simulated annealing");
  seeds.o.attach(sd);
  sd->add_option("image", seeds.image, "ROI image")->required();
  sd->add_option("--out", seeds.out, "seeds JSON (stdout if omitted)");

  SegmentArgs seg;
  auto* sg = app.add_subcommand("segment", "segment one ROI");
  seg.o.attach(sg);
  sg->add_option("image", seg.image, "ROI image")->required();
  sg->add_option("--seeds", seg.seeds, "seeds JSON (fuzzy: annealed if omitted)");
  sg->add_option("--out", seg.out, "mask PNG");
  sg->add_option("--overlay", seg.overlay, "contour overlay PNG");
  sg->add_option("--result", seg.result, "result JSON (stdout if omitted)");
  sg->add_option("--truth", seg.truth, "ground-truth mask for Dice");

  FeaturesArgs feat;
  auto* fe = app.add_subcommand("features", "Zernike descriptors of masks to CSV");
  feat.o.attach(fe);
  fe->add_option("masks", feat.masks, "mask files, directories or globs")->required();
  fe->add_option("--labels", feat.labels, "labels JSON {stem: class}");
  fe->add_option("--out", feat.out, "feature CSV");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train the MLP on a feature CSV");
  tr.o.attach(t);
  t->add_option("features", tr.features, "labeled feature CSV")->required();
  t->add_option("--out", tr.out, "model JSON");

  ClassifyArgs cl;
  auto* c = app.add_subcommand("classify", "apply a trained model to a feature CSV");
  c->add_option("model", cl.model, "model JSON")->required();
  c->add_option("features", cl.features, "feature CSV")->required();
  c->add_option("--out", cl.out, "predictions CSV (stdout if omitted)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "selection, cross-validation, Dice and t-tests");
  ev.o.attach(e);
  e->add_option("--manifest", ev.manifest, "pipeline manifest");
  e->add_option("--features", ev.features, "feature CSV (cross-validation only)");
  e->add_option("--truth-dir", ev.truth_dir, "ground-truth masks <stem>.png");
  e->add_option("--ttest", ev.ttest, "two files of numbers to compare")->expected(2);
  e->add_option("--out", ev.out, "report JSON");

  PipelineArgs pl;
  auto* p = app.add_subcommand("pipeline", "run every stage over a batch of ROIs");
  pl.o.attach(p);
  p->add_option("inputs", pl.inputs, "images, directories or globs");
  p->add_option("--out", pl.out, "output directory");
  p->add_option("--labels", pl.labels, "labels JSON {stem: class}");
  p->add_option("--truth-dir", pl.truth_dir, "ground-truth masks <stem>.png");
  p->add_option("--seeds-dir", pl.seeds_dir, "per-image seeds for growcut");
  p->add_flag("--intensity", pl.intensity, "masked intensity instead of binary shape");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*sd) return cmd_seeds(seeds);
    if (*sg) return cmd_segment(seg);
    if (*fe) return cmd_features(feat);
    if (*t) return cmd_train(tr);
    if (*c) return cmd_classify(cl);
    if (*e) return cmd_eval(ev);
    if (*p) return cmd_pipeline(pl);
  } catch (const ConfigError& err) {
    error(err.what());
    return kExitConfig;
  } catch (const std::invalid_argument& err) {
    error(err.what());
    return kExitConfig;
  } catch (const std::exception& err) {
    error(err.what());
    return kExitFailures;
  }
  return kExitOk;
}

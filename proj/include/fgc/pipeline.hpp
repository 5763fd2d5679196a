#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fgc/evaluation.hpp"
#include "fgc/fuzzy_growcut.hpp"
#include "fgc/growcut.hpp"
#include "fgc/image_io.hpp"
#include "fgc/mlp.hpp"
#include "fgc/seed_annealing.hpp"
#include "fgc/serialize.hpp"
#include "fgc/version.hpp"
#include "fgc/zernike.hpp"

namespace fgc {

enum class Method { kFuzzy, kGrowCut };

inline const char* to_string(Method m) { return m == Method::kFuzzy ? "fuzzy" : "growcut"; }

inline Method parse_method(const std::string& s) {
  if (s == "fuzzy") return Method::kFuzzy;
  if (s == "growcut") return Method::kGrowCut;
  throw ConfigError("method must be 'fuzzy' or 'growcut', got '" + s + "'");
}

inline const char* class_name(int label) { return label == 1 ? "malignant" : "benign"; }

inline int parse_class(const std::string& s) {
  if (s == "benign" || s == "0") return 0;
  if (s == "malignant" || s == "1") return 1;
  throw ConfigError("class label must be 'benign' or 'malignant', got '" + s + "'");
}

/// 64-bit mix used to fan one seed out to independent streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Per-stream seeds derived from the run seed. Image streams are keyed by
/// file stem so results do not depend on batch composition or scheduling.
struct SeedFan {
  std::uint64_t root = 0;

  std::uint64_t image(const std::string& stem) const { return splitmix64(root ^ fnv1a(stem)); }
  std::uint64_t training() const { return splitmix64(root + 1); }
  std::uint64_t folds() const { return splitmix64(root + 2); }
};

struct PipelineConfig {
  std::vector<std::string> inputs;
  Method method = Method::kFuzzy;
  SAConfig annealing;
  FuzzyParams fuzzy;
  TrainConfig train;
  bool intensity_features = false;
  int touch_radius = 1;
  int folds = 10;
  std::string out_dir = "out";
  std::string seeds_dir;    // growcut: <stem>.json per input
  std::string labels_file;  // {"<stem>": "benign" | "malignant", ...}
  std::string truth_dir;    // <stem>.png ground-truth masks
  std::uint64_t rng_seed = 0;
  int workers = 1;

  void validate() const {
    try {
      annealing.validate();
      fuzzy.validate();
      train.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (touch_radius < 0) throw ConfigError("touch_radius must be >= 0");
    if (folds < 2) throw ConfigError("folds must be >= 2");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (out_dir.empty()) throw ConfigError("output directory required");
    if (method == Method::kGrowCut && seeds_dir.empty()) {
      throw ConfigError("growcut needs a seeds directory (<stem>.json per input)");
    }
  }
};

inline void to_json(json& j, const PipelineConfig& c) {
  j = json{{"inputs", c.inputs},
           {"method", to_string(c.method)},
           {"annealing", c.annealing},
           {"fuzzy", c.fuzzy},
           {"train", c.train},
           {"features", {{"intensity", c.intensity_features}}},
           {"touch_radius", c.touch_radius},
           {"folds", c.folds},
           {"out", c.out_dir},
           {"seeds_dir", c.seeds_dir},
           {"labels", c.labels_file},
           {"truth_dir", c.truth_dir},
           {"rng_seed", c.rng_seed},
           {"workers", c.workers}};
}

inline void from_json(const json& j, PipelineConfig& c) {
  constexpr const char* w = "pipeline config";
  detail::check_keys(j, {"inputs", "method", "annealing", "fuzzy", "train", "features",
                         "touch_radius", "folds", "out", "seeds_dir", "labels", "truth_dir",
                         "rng_seed", "workers"},
                     w);
  detail::read_opt(j, "inputs", c.inputs, w);
  std::string method = to_string(c.method);
  detail::read_opt(j, "method", method, w);
  c.method = parse_method(method);
  if (j.contains("annealing")) from_json(j.at("annealing"), c.annealing);
  if (j.contains("fuzzy")) from_json(j.at("fuzzy"), c.fuzzy);
  if (j.contains("train")) from_json(j.at("train"), c.train);
  if (j.contains("features")) {
    detail::check_keys(j.at("features"), {"intensity"}, "features");
    detail::read_opt(j.at("features"), "intensity", c.intensity_features, w);
  }
  detail::read_opt(j, "touch_radius", c.touch_radius, w);
  detail::read_opt(j, "folds", c.folds, w);
  detail::read_opt(j, "out", c.out_dir, w);
  detail::read_opt(j, "seeds_dir", c.seeds_dir, w);
  detail::read_opt(j, "labels", c.labels_file, w);
  detail::read_opt(j, "truth_dir", c.truth_dir, w);
  detail::read_opt(j, "rng_seed", c.rng_seed, w);
  detail::read_opt(j, "workers", c.workers, w);
}

struct ImageRecord {
  std::string input;
  std::string stem;
  bool ok = false;
  std::string error;
  std::vector<Seed> seeds;
  std::optional<GaussianModel> model;
  bool sigma_floored = false;
  int iterations = 0;
  bool converged = false;
  std::string mask_path;
  std::string overlay_path;
  bool well_segmented = false;
  double touching = 0.0;
  std::optional<double> dice;
  std::optional<int> label;
  std::optional<FeatureVector> features;
};

inline void to_json(json& j, const ImageRecord& r) {
  j = json{{"input", r.input}, {"stem", r.stem}, {"status", r.ok ? "ok" : "failed"}};
  if (!r.ok) {
    j["error"] = r.error;
    return;
  }
  j["seeds"] = seeds_to_json(r.seeds);
  if (r.model) {
    j["gaussian_model"] = *r.model;
    j["sigma_floored"] = r.sigma_floored;
  }
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["mask"] = r.mask_path;
  j["overlay"] = r.overlay_path;
  j["well_segmented"] = r.well_segmented;
  j["touching_fraction"] = r.touching;
  j["dice"] = r.dice ? json(*r.dice) : json(nullptr);
  j["label"] = r.label ? json(class_name(*r.label)) : json(nullptr);
  j["features_row"] = r.stem;
}

struct Stats {
  std::size_t count = 0;
  double mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0;

  static Stats of(const std::vector<double>& v) {
    Stats s;
    s.count = v.size();
    if (v.empty()) return s;
    s.mean = mean_of(v);
    s.stddev = v.size() > 1 ? std::sqrt(variance_of(v)) : 0.0;
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    return s;
  }
};

/// Either a CV result or the reason it could not be computed.
struct CVOutcome {
  std::optional<CVReport> report;
  std::string reason;

  std::string str() const { return report ? report->str() : "unavailable (" + reason + ")"; }
};

inline void to_json(json& j, const CVOutcome& o) {
  if (o.report) j = *o.report;
  else j = json{{"status", "unavailable"}, {"reason", o.reason}};
}

struct Report {
  std::size_t images = 0;
  std::size_t failed = 0;
  SelectionReport selection;
  CVOutcome cv_overall;
  CVOutcome cv_selected;
  std::optional<Stats> dice;

  std::string text() const {
    std::ostringstream o;
    char buf[160];
    auto row = [&](const char* k, const std::string& v) {
      std::snprintf(buf, sizeof buf, "%-14s%s\n", k, v.c_str());
      o << buf;
    };
    row("images", std::to_string(images));
    row("failed", std::to_string(failed));
    std::snprintf(buf, sizeof buf, "%s (%.2f%%)", selection.str().c_str(), 100.0 * selection.ratio());
    row("selection", buf);
    row("cv overall", cv_overall.str());
    row("cv selected", cv_selected.str());
    if (dice) {
      std::snprintf(buf, sizeof buf, "mean %.4f std %.4f min %.4f max %.4f (n=%zu)", dice->mean,
                    dice->stddev, dice->min, dice->max, dice->count);
      row("dice", buf);
    } else {
      row("dice", "unavailable (no ground truth)");
    }
    return o.str();
  }
};

inline void to_json(json& j, const Report& r) {
  j = json{{"images", r.images},
           {"failed", r.failed},
           {"selection",
            {{"selected", r.selection.selected},
             {"total", r.selection.total},
             {"ratio", r.selection.ratio()},
             {"text", r.selection.str()}}},
           {"cv_overall", r.cv_overall},
           {"cv_selected", r.cv_selected}};
  if (r.dice) {
    j["dice"] = {{"count", r.dice->count}, {"mean", r.dice->mean}, {"std", r.dice->stddev},
                 {"min", r.dice->min},     {"max", r.dice->max}};
  } else {
    j["dice"] = nullptr;
  }
}

struct ReportOptions {
  int folds = 10;
  TrainConfig train;
  std::uint64_t fold_seed = 0;
};

namespace detail {

inline CVOutcome try_cv(const Dataset& data, const ReportOptions& opt) {
  std::size_t n[2] = {0, 0};
  for (const auto& s : data) ++n[s.label];
  const auto k = static_cast<std::size_t>(opt.folds);
  if (n[0] < k || n[1] < k) {
    return {std::nullopt, "too few labeled images: " + std::to_string(n[0]) + " benign, " +
                              std::to_string(n[1]) + " malignant, need " + std::to_string(k) +
                              " of each"};
  }
  return {kfold_cv(data, opt.folds, opt.fold_seed, MLPFitter{opt.train}), ""};
}

}  // namespace detail

/// Selection counts, CV accuracy on all and on well-segmented images, and
/// Dice statistics where ground truth was available.
inline Report report(std::span<const ImageRecord> records, const ReportOptions& opt) {
  Report r;
  r.images = records.size();
  Dataset all, selected;
  std::vector<double> dices;
  for (const auto& rec : records) {
    r.selection.total++;
    r.selection.flags.push_back(rec.ok && rec.well_segmented);
    if (!rec.ok) {
      ++r.failed;
      continue;
    }
    r.selection.selected += rec.well_segmented;
    if (rec.dice) dices.push_back(*rec.dice);
    if (rec.features && rec.label) {
      Sample s{std::vector<double>(rec.features->values.begin(), rec.features->values.end()),
               *rec.label};
      if (rec.well_segmented) selected.push_back(s);
      all.push_back(std::move(s));
    }
  }
  r.cv_overall = detail::try_cv(all, opt);
  r.cv_selected = detail::try_cv(selected, opt);
  if (!dices.empty()) r.dice = Stats::of(dices);
  return r;
}

// Feature CSV: image,z_0_0,...,z_14_14,label

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct FeatureRow {
  std::string image;
  FeatureVector features;
  std::optional<int> label;
};

inline void write_features_csv(std::span<const FeatureRow> rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "image";
  for (const auto& idx : feature_indices()) out << ',' << idx.name();
  out << ",label\n";
  for (const auto& r : rows) {
    if (r.image.find_first_of(",\n\"") != std::string::npos) {
      throw std::invalid_argument("feature csv: image id '" + r.image + "' contains a separator");
    }
    out << r.image;
    for (double v : r.features.values) out << ',' << format_double(v);
    out << ',' << (r.label ? class_name(*r.label) : "") << '\n';
  }
}

inline std::vector<FeatureRow> read_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, ',')) f.push_back(cur);
    if (!s.empty() && s.back() == ',') f.emplace_back();
    return f;
  };
  if (!std::getline(in, line)) throw ConfigError("feature csv: empty file");
  const auto header = split(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  std::array<std::size_t, kFeatureCount> zcol{};
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    auto it = col.find(feature_indices()[k].name());
    if (it == col.end()) throw ConfigError("feature csv: missing column " + feature_indices()[k].name());
    zcol[k] = it->second;
  }
  const auto img = col.find("image");
  const auto lab = col.find("label");
  std::vector<FeatureRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) {
      throw ConfigError("feature csv: line " + std::to_string(lineno) + " has " +
                        std::to_string(f.size()) + " fields, expected " +
                        std::to_string(header.size()));
    }
    FeatureRow r;
    if (img != col.end()) r.image = f[img->second];
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      try {
        r.features.values[k] = std::stod(f[zcol[k]]);
      } catch (const std::exception&) {
        throw ConfigError("feature csv: bad number on line " + std::to_string(lineno));
      }
    }
    if (lab != col.end() && !f[lab->second].empty()) r.label = parse_class(f[lab->second]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Dataset to_dataset(std::span<const FeatureRow> rows) {
  Dataset d;
  for (const auto& r : rows) {
    if (!r.label) throw ConfigError("dataset: row '" + r.image + "' has no label");
    d.push_back({std::vector<double>(r.features.values.begin(), r.features.values.end()), *r.label});
  }
  return d;
}

struct RunManifest {
  std::string version = kVersion;
  json config;
  std::vector<ImageRecord> records;
  std::string features_csv;
  std::optional<Report> summary;

  bool any_failed() const {
    return std::any_of(records.begin(), records.end(), [](const auto& r) { return !r.ok; });
  }
};

inline void to_json(json& j, const RunManifest& m) {
  j = json{{"software", "fgc"}, {"version", m.version}, {"config", m.config},
           {"features_csv", m.features_csv}, {"records", m.records}};
  j["report"] = m.summary ? json(*m.summary) : json(nullptr);
}

inline std::map<std::string, int> load_labels(const std::string& path) {
  std::map<std::string, int> out;
  const json j = read_json(path);
  if (!j.is_object()) throw ConfigError("labels: expected an object {stem: class}");
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw ConfigError("labels: class for '" + k + "' must be a string");
    out[k] = parse_class(v.get<std::string>());
  }
  return out;
}

namespace detail {

inline std::string join(const std::filesystem::path& dir, const std::string& leaf) {
  return (dir / leaf).generic_string();
}

inline ImageRecord process_image(const PipelineConfig& cfg, const std::string& input,
                                 const std::map<std::string, int>& labels) {
  namespace fs = std::filesystem;
  ImageRecord rec;
  rec.input = input;
  rec.stem = fs::path(input).stem().string();
  try {
    const GrayImage image = load_image(input);
    SegmentationResult seg{BinaryMask(1, 1), CellGrid(1, 1), 0, false};
    if (cfg.method == Method::kFuzzy) {
      SAConfig sa = cfg.annealing;
      sa.rng_seed = SeedFan{cfg.rng_seed}.image(rec.stem);
      const auto best = anneal(image, sa);
      const SeedSet seeds = best.seed_set(image.width(), image.height());
      auto res = fuzzy_run(image, seeds, cfg.fuzzy);
      rec.seeds.assign(seeds.begin(), seeds.end());
      rec.model = res.fit.model;
      rec.sigma_floored = res.fit.warning();
      seg = std::move(res.segmentation);
    } else {
      const SeedSet seeds(seeds_from_json(read_json(join(cfg.seeds_dir, rec.stem + ".json"))),
                          image.width(), image.height());
      seg = growcut_run(image, seeds, cfg.fuzzy.max_iter, cfg.fuzzy.neighborhood);
      rec.seeds.assign(seeds.begin(), seeds.end());
    }
    rec.iterations = seg.iterations;
    rec.converged = seg.converged;
    const fs::path out(cfg.out_dir);
    rec.mask_path = join(out / "masks", rec.stem + ".png");
    rec.overlay_path = join(out / "overlays", rec.stem + ".png");
    save_mask(seg.mask, rec.mask_path);
    save_overlay(image, seg.mask, rec.overlay_path);
    rec.touching = touching_fraction(seg.mask, cfg.touch_radius);
    rec.well_segmented = well_segmented(seg.mask, cfg.touch_radius);
    if (!cfg.truth_dir.empty()) {
      const std::string truth = join(cfg.truth_dir, rec.stem + ".png");
      if (fs::exists(truth)) rec.dice = dice(seg.mask, load_mask(truth));
    }
    if (!seg.mask.empty()) {
      rec.features = descriptor(seg.mask, cfg.intensity_features ? &image : nullptr);
    }
    if (auto it = labels.find(rec.stem); it != labels.end()) rec.label = it->second;
    rec.ok = true;
  } catch (const std::exception& e) {
    ImageRecord failed;
    failed.input = input;
    failed.stem = rec.stem;
    failed.error = e.what();
    rec = std::move(failed);
  }
  return rec;
}

}  // namespace detail

/**
 * Runs every input through seeds -> segmentation -> mask/overlay ->
 * descriptor, writes features.csv, then trains/cross-validates when labels
 * are available and writes manifest.json, report.json and report.txt into the
 * output directory. Per-image failures are recorded, not thrown. Records are
 * ordered by input path; a fixed configuration reproduces every output file
 * byte for byte, however the images were scheduled across workers.
 */
inline RunManifest run_pipeline(PipelineConfig cfg) {
  namespace fs = std::filesystem;
  cfg.validate();
  std::sort(cfg.inputs.begin(), cfg.inputs.end());
  cfg.inputs.erase(std::unique(cfg.inputs.begin(), cfg.inputs.end()), cfg.inputs.end());
  {
    std::map<std::string, std::string> stems;
    for (const auto& in : cfg.inputs) {
      const auto s = fs::path(in).stem().string();
      if (auto [it, fresh] = stems.emplace(s, in); !fresh) {
        throw ConfigError("inputs '" + it->second + "' and '" + in + "' share the stem '" + s + "'");
      }
    }
  }
  const std::map<std::string, int> labels =
      cfg.labels_file.empty() ? std::map<std::string, int>{} : load_labels(cfg.labels_file);

  const fs::path out(cfg.out_dir);
  fs::create_directories(out / "masks");
  fs::create_directories(out / "overlays");

  RunManifest m;
  m.config = cfg;
  m.records.resize(cfg.inputs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cfg.inputs.size(); i = next++) {
      m.records[i] = detail::process_image(cfg, cfg.inputs[i], labels);
    }
  };
  const int n = std::min<int>(cfg.workers, std::max<int>(1, static_cast<int>(cfg.inputs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::vector<FeatureRow> rows;
  for (const auto& r : m.records)
    if (r.ok && r.features) rows.push_back({r.stem, *r.features, r.label});
  m.features_csv = detail::join(out, "features.csv");
  write_features_csv(rows, m.features_csv);

  const SeedFan fan{cfg.rng_seed};
  TrainConfig tc = cfg.train;
  tc.rng_seed = fan.training();
  m.summary = report(m.records, {cfg.folds, tc, fan.folds()});

  write_json(json(m), detail::join(out, "manifest.json"));
  write_json(json(*m.summary), detail::join(out, "report.json"));
  std::ofstream(detail::join(out, "report.txt"), std::ios::binary) << m.summary->text();
  return m;
}

}  // namespace fgc

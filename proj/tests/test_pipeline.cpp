#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fgc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace fgc;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / "fgc_test_pipeline" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Writes n benign ellipses and n malignant stars plus truth masks and labels.
void make_batch(const fs::path& dir, int n) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "truth");
  json labels = json::object();
  for (int i = 0; i < 2 * n; ++i) {
    const bool mal = i >= n;
    const std::string stem = (mal ? "malignant_" : "benign_") + std::to_string(i);
    const Phantom ph =
        synth_phantom(random_phantom_spec(mal ? ShapeKind::kStar : ShapeKind::kEllipse, i, 0.05));
    save_image(ph.image, (dir / "images" / (stem + ".png")).string());
    save_mask(ph.truth, (dir / "truth" / (stem + ".png")).string());
    labels[stem] = mal ? "malignant" : "benign";
  }
  write_json(labels, (dir / "labels.json").string());
}

std::vector<std::string> images_in(const fs::path& dir) {
  std::vector<std::string> v;
  for (const auto& e : fs::directory_iterator(dir)) v.push_back(e.path().string());
  return v;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FGC_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ImageRecord record(const std::string& stem, const BinaryMask& mask, int label) {
  ImageRecord r;
  r.input = stem + ".png";
  r.stem = stem;
  r.ok = true;
  r.well_segmented = well_segmented(mask);
  r.touching = touching_fraction(mask);
  r.features = descriptor(mask);
  r.label = label;
  return r;
}

}  // namespace

TEST(SeedFan, IndependentStreams) {
  const SeedFan a{7};
  EXPECT_EQ(a.image("x"), SeedFan{7}.image("x"));
  EXPECT_NE(a.image("x"), a.image("y"));
  EXPECT_NE(a.image("x"), SeedFan{8}.image("x"));
  EXPECT_NE(a.training(), a.folds());
  // FNV-1a reference values.
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Config, JsonRoundTrip) {
  PipelineConfig c;
  c.inputs = {"a.png", "b.png"};
  c.method = Method::kGrowCut;
  c.annealing.n_seeds = 5;
  c.annealing.distance = DistanceMode::kPairwise;
  c.fuzzy.alpha_x = 3.5;
  c.train.epochs = 7;
  c.intensity_features = true;
  c.touch_radius = 2;
  c.folds = 4;
  c.out_dir = "somewhere";
  c.seeds_dir = "seeds";
  c.rng_seed = 123456789012345ULL;
  c.workers = 3;
  const json j = c;
  PipelineConfig back;
  from_json(json::parse(j.dump()), back);
  EXPECT_EQ(json(back), j);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  PipelineConfig c;
  EXPECT_THROW(from_json(json::parse(R"({"inptus": []})"), c), ConfigError);
  EXPECT_THROW(from_json(json::parse(R"({"method": "watershed"})"), c), ConfigError);
  EXPECT_THROW(from_json(json::parse(R"({"annealing": {"n_seeds": "eight"}})"), c), ConfigError);
  c = PipelineConfig{};
  c.folds = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PipelineConfig{};
  c.method = Method::kGrowCut;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(FeatureCsv, RoundTripExact) {
  const fs::path dir = fresh_dir("csv");
  std::vector<FeatureRow> rows;
  PhantomSpec s;
  for (int i = 0; i < 3; ++i) {
    s.radius_x = 10.0 + 3 * i;
    s.kind = i == 1 ? ShapeKind::kStar : ShapeKind::kDisk;
    rows.push_back({"img" + std::to_string(i), descriptor(rasterize(s)),
                    i == 2 ? std::optional<int>{} : std::optional<int>{i % 2}});
  }
  const auto path = (dir / "f.csv").string();
  write_features_csv(rows, path);
  const auto back = read_features_csv(path);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].image, rows[i].image);
    EXPECT_EQ(back[i].features, rows[i].features);
    EXPECT_EQ(back[i].label, rows[i].label);
  }
  const std::string header = slurp(path).substr(0, slurp(path).find('\n'));
  EXPECT_EQ(header.substr(0, 18), "image,z_0_0,z_1_1,");
  EXPECT_EQ(header.substr(header.size() - 13), "z_14_14,label");
  EXPECT_EQ(to_dataset(std::span<const FeatureRow>(back).first(2)).size(), 2u);
  EXPECT_THROW(to_dataset(back), ConfigError);
}

TEST(FeatureCsv, MalformedRejected) {
  const fs::path dir = fresh_dir("badcsv");
  std::ofstream(dir / "short.csv") << "image,z_0_0\nx,1\n";
  EXPECT_THROW(read_features_csv((dir / "short.csv").string()), ConfigError);
  std::ofstream(dir / "empty.csv") << "";
  EXPECT_THROW(read_features_csv((dir / "empty.csv").string()), ConfigError);
}

TEST(Report, InteriorMasksAllSelected) {
  std::vector<ImageRecord> recs;
  PhantomSpec s;
  for (int i = 0; i < 6; ++i) {
    s.kind = i % 2 ? ShapeKind::kStar : ShapeKind::kDisk;
    s.radius_x = 12.0 + i;
    recs.push_back(record("m" + std::to_string(i), rasterize(s), i % 2));
  }
  ReportOptions opt;
  opt.folds = 3;
  opt.train.epochs = 50;
  const Report r = report(recs, opt);
  EXPECT_EQ(r.selection.selected, 6u);
  EXPECT_EQ(r.selection.total, 6u);
  ASSERT_TRUE(r.cv_overall.report.has_value());
  ASSERT_TRUE(r.cv_selected.report.has_value());
  EXPECT_FALSE(r.dice.has_value());
}

TEST(Report, FullRoiMasksNoneSelected) {
  std::vector<ImageRecord> recs;
  for (int i = 0; i < 6; ++i) recs.push_back(record("f" + std::to_string(i), BinaryMask(32, 32, true), i % 2));
  ReportOptions opt;
  opt.folds = 3;
  opt.train.epochs = 5;
  const Report r = report(recs, opt);
  EXPECT_EQ(r.selection.selected, 0u);
  EXPECT_EQ(r.selection.str(), "0/6");
  EXPECT_FALSE(r.cv_selected.report.has_value());
  EXPECT_NE(r.cv_selected.reason.find("too few"), std::string::npos);
  EXPECT_NE(r.text().find("0/6"), std::string::npos);
  const json j = r;
  EXPECT_EQ(j["cv_selected"]["status"], "unavailable");
}

TEST(Report, FailedRecordsCounted) {
  std::vector<ImageRecord> recs{record("a", BinaryMask(8, 8, true), 0)};
  ImageRecord bad;
  bad.stem = "b";
  bad.error = "boom";
  recs.push_back(bad);
  const Report r = report(recs, {});
  EXPECT_EQ(r.failed, 1u);
  EXPECT_EQ(r.selection.total, 2u);
  EXPECT_EQ(json(recs[1])["status"], "failed");
}

TEST(RunPipeline, EmptyInputs) {
  const fs::path out = fresh_dir("empty_out");
  PipelineConfig c;
  c.out_dir = out.string();
  const RunManifest m = run_pipeline(c);
  EXPECT_TRUE(m.records.empty());
  EXPECT_FALSE(m.any_failed());
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  const json j = read_json((out / "manifest.json").string());
  EXPECT_TRUE(j["records"].empty());
}

TEST(RunPipeline, DeterministicAcrossRunsAndWorkers) {
  const fs::path data = fresh_dir("batch");
  make_batch(data, 2);
  PipelineConfig c;
  c.inputs = images_in(data / "images");
  c.labels_file = (data / "labels.json").string();
  c.truth_dir = (data / "truth").string();
  c.folds = 2;
  c.train.epochs = 20;
  c.rng_seed = 42;
  c.out_dir = fresh_dir("run_a").string();
  const RunManifest a = run_pipeline(c);
  c.out_dir = fresh_dir("run_b").string();
  c.workers = 3;
  std::reverse(c.inputs.begin(), c.inputs.end());
  const RunManifest b = run_pipeline(c);

  ASSERT_EQ(a.records.size(), 4u);
  EXPECT_FALSE(a.any_failed());
  for (const char* f : {"features.csv", "report.json", "report.txt"}) {
    EXPECT_EQ(slurp(fs::path(a.features_csv).parent_path() / f),
              slurp(fs::path(b.features_csv).parent_path() / f))
        << f;
  }
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].stem, b.records[i].stem);
    EXPECT_EQ(a.records[i].seeds, b.records[i].seeds);
    EXPECT_EQ(slurp(a.records[i].mask_path), slurp(b.records[i].mask_path));
    ASSERT_TRUE(a.records[i].dice.has_value());
    EXPECT_GT(*a.records[i].dice, 0.8) << a.records[i].stem;
  }
  EXPECT_TRUE(fs::exists(a.records[0].overlay_path));
}

TEST(RunPipeline, UnreadableImageRecordedNotThrown) {
  const fs::path data = fresh_dir("broken");
  std::ofstream(data / "junk.png") << "not an image";
  make_batch(data, 1);
  PipelineConfig c;
  c.inputs = {(data / "junk.png").string(), (data / "images" / "benign_0.png").string()};
  c.out_dir = fresh_dir("broken_out").string();
  const RunManifest m = run_pipeline(c);
  ASSERT_EQ(m.records.size(), 2u);
  EXPECT_TRUE(m.any_failed());
  // Records follow the sorted input paths: images/benign_0.png, junk.png.
  EXPECT_TRUE(m.records[0].ok);
  EXPECT_FALSE(m.records[1].ok);
  EXPECT_FALSE(m.records[1].error.empty());
}

TEST(RunPipeline, DuplicateStemsRejected) {
  PipelineConfig c;
  c.inputs = {"a/x.png", "b/x.png"};
  c.out_dir = fresh_dir("dup").string();
  EXPECT_THROW(run_pipeline(c), ConfigError);
}

TEST(RunPipeline, GrowCutWithSeedFiles) {
  const fs::path data = fresh_dir("gc");
  PhantomSpec s;
  s.radius_x = 25.0;
  const Phantom ph = synth_phantom(s);
  save_image(ph.image, (data / "roi.png").string());
  fs::create_directories(data / "seeds");
  write_json(json::parse(R"({"seeds": [{"x": 64, "y": 64, "label": "object"},
                                       {"x": 2, "y": 2, "label": "background"}]})"),
             (data / "seeds" / "roi.json").string());
  PipelineConfig c;
  c.method = Method::kGrowCut;
  c.inputs = {(data / "roi.png").string()};
  c.seeds_dir = (data / "seeds").string();
  c.out_dir = fresh_dir("gc_out").string();
  const RunManifest m = run_pipeline(c);
  ASSERT_EQ(m.records.size(), 1u);
  ASSERT_TRUE(m.records[0].ok) << m.records[0].error;
  EXPECT_EQ(load_mask(m.records[0].mask_path), ph.truth);
}

TEST(Cli, EndToEndAndExitCodes) {
  const fs::path dir = fresh_dir("cli");
  const std::string d = dir.string();
  ASSERT_EQ(run_cli("synth --out " + d + "/data --benign 2 --malignant 2 --noise 0.05"), 0);
  EXPECT_TRUE(fs::exists(dir / "data" / "images" / "malignant_001.png"));
  EXPECT_EQ(run_cli("pipeline " + d + "/data/images --labels " + d + "/data/labels.json --out " +
                    d + "/run --folds 2 --epochs 10"),
            0);
  EXPECT_TRUE(fs::exists(dir / "run" / "manifest.json"));
  EXPECT_EQ(run_cli("train " + d + "/run/features.csv --out " + d + "/model.json --epochs 10"), 0);
  EXPECT_EQ(run_cli("classify " + d + "/model.json " + d + "/run/features.csv --out " + d +
                    "/pred.csv"),
            0);
  EXPECT_TRUE(fs::exists(dir / "pred.csv"));
  EXPECT_EQ(run_cli("eval --manifest " + d + "/run/manifest.json --folds 2 --epochs 10"), 0);

  std::ofstream(dir / "a.txt") << "1 2 3 4 5\n";
  std::ofstream(dir / "b.txt") << "2 3 4 5 6\n";
  EXPECT_EQ(run_cli("eval --ttest " + d + "/a.txt " + d + "/b.txt"), 0);

  fs::create_directories(dir / "nothing");
  EXPECT_EQ(run_cli("pipeline " + d + "/nothing --out " + d + "/empty"), 0);

  std::ofstream(dir / "bad.json") << R"({"annealing": {"cooling": 1.5}})";
  EXPECT_EQ(run_cli("pipeline " + d + "/data/images --config " + d + "/bad.json --out " + d + "/x"),
            2);
  std::ofstream(dir / "typo.json") << R"({"foldz": 3})";
  EXPECT_EQ(run_cli("pipeline " + d + "/data/images --config " + d + "/typo.json"), 2);
  EXPECT_EQ(run_cli("pipeline --method watershed"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);

  std::ofstream(dir / "data" / "images" / "zz_broken.png") << "junk";
  EXPECT_EQ(run_cli("pipeline " + d + "/data/images --out " + d + "/run2"), 1);
}

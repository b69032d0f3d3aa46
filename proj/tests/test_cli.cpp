#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bss/cli.hpp"
#include "bss/wav.hpp"

using namespace bss;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Scratch directory per test-case invocation.
std::string scratch_dir(const std::string& tag) {
  const std::string dir =
      (std::filesystem::temp_directory_path() / ("bss_cli_" + tag)).string();
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string f;
  std::istringstream in(line);
  while (std::getline(in, f, ',')) fields.push_back(f);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

TEST_CASE("run config defaults match the pinned experimental conditions") {
  RunConfig cfg;
  CHECK(cfg.stft.window_ms == 64.0);
  CHECK(cfg.stft.hop_ms == 16.0);
  CHECK(cfg.rank == 20);
  CHECK(cfg.iterations == 300);
  CHECK(cfg.ilrma_iterations == 50);
  CHECK(cfg.schedule.lambda_const == 1e-7);
  CHECK(cfg.schedule.lambda0 == 1e-6);
  CHECK(cfg.schedule.lambda_end == 1e-13);
  CHECK(cfg.ilrma_rank_per_source == 10);
  CHECK(cfg.reference_channel == 1);
}

TEST_CASE("run config JSON round trip is lossless") {
  RunConfig cfg;
  cfg.method = Method::regufast1;
  cfg.init = InitStrategy::pca;
  cfg.iterations = 123;
  cfg.ilrma_iterations = 17;
  cfg.rank = 9;
  cfg.ilrma_rank_per_source = 3;
  cfg.stft.window_ms = 48.0;
  cfg.stft.hop_ms = 12.0;
  cfg.schedule.mode = ScheduleMode::geometric;
  cfg.schedule.lambda_const = 3.7e-9;
  cfg.schedule.lambda0 = 1.25e-5;
  cfg.schedule.lambda_end = 7.77e-14;
  cfg.schedule.total_iterations = 55;
  cfg.seed = 18446744073709551557ull;
  cfg.reference_channel = 2;
  cfg.emphasize_own_channel = true;

  const RunConfig back = run_config_from_json(run_config_to_json(cfg));
  CHECK(back.method == cfg.method);
  CHECK(back.init == cfg.init);
  CHECK(back.iterations == cfg.iterations);
  CHECK(back.ilrma_iterations == cfg.ilrma_iterations);
  CHECK(back.rank == cfg.rank);
  CHECK(back.ilrma_rank_per_source == cfg.ilrma_rank_per_source);
  CHECK(back.stft.window_ms == cfg.stft.window_ms);
  CHECK(back.stft.hop_ms == cfg.stft.hop_ms);
  CHECK(back.schedule.mode == cfg.schedule.mode);
  CHECK(back.schedule.lambda_const == cfg.schedule.lambda_const);
  CHECK(back.schedule.lambda0 == cfg.schedule.lambda0);
  CHECK(back.schedule.lambda_end == cfg.schedule.lambda_end);
  CHECK(back.schedule.total_iterations == cfg.schedule.total_iterations);
  CHECK(back.seed == cfg.seed);
  CHECK(back.reference_channel == cfg.reference_channel);
  CHECK(back.emphasize_own_channel == cfg.emphasize_own_channel);
}

TEST_CASE("method and init names round trip and reject unknowns") {
  for (Method m : {Method::ilrma, Method::fastmnmf, Method::regufast1,
                   Method::regufast2})
    CHECK(method_from_name(method_name(m)) == m);
  for (InitStrategy s :
       {InitStrategy::identity, InitStrategy::pca, InitStrategy::ilrma})
    CHECK(init_from_name(init_name(s)) == s);
  CHECK_THROWS_AS(method_from_name("nonsense"), ConfigMismatch);
  CHECK_THROWS_AS(init_from_name("nonsense"), ConfigMismatch);
  CHECK_THROWS_AS(run_config_from_json("{ not json"), ConfigMismatch);
}

TEST_CASE("bench labels cover the comparison grid") {
  BenchMethod m;
  m.method = Method::fastmnmf;
  m.init = InitStrategy::pca;
  CHECK(bench_label(m) == "fastmnmf-pca");
  const BenchMethod back = bench_method_from_label("fastmnmf-pca");
  CHECK(back.method == Method::fastmnmf);
  CHECK(back.init == InitStrategy::pca);
  const BenchMethod r2 = bench_method_from_label("regufast2");
  CHECK(r2.method == Method::regufast2);
  const BenchMethod il = bench_method_from_label("ilrma");
  CHECK(il.method == Method::ilrma);
}

TEST_CASE("mix writes a mixture, per-source images, and a manifest") {
  const std::string dir = scratch_dir("mix");
  MixRequest req;
  req.scene.seed = 9;
  req.scene.t60_ms = 0.0;
  req.duration_s = 1.0;
  req.output_dir = dir;
  const MixOutcome out = cmd_mix(req);

  CHECK(std::filesystem::exists(out.mixture_path));
  REQUIRE(out.image_paths.size() == 2);
  for (const std::string& p : out.image_paths)
    CHECK(std::filesystem::exists(p));

  const std::string manifest = slurp(out.manifest_path);
  CHECK(manifest.find("mixture") != std::string::npos);
  CHECK(manifest.find("images") != std::string::npos);

  const Waveform mixture = read_wav(out.mixture_path);
  CHECK(mixture.num_channels() == 2);
  CHECK(mixture.num_samples() == 16000);
}

TEST_CASE("mix is deterministic: same seed gives byte-identical files") {
  MixRequest req;
  req.scene.seed = 31;
  req.scene.t60_ms = 120.0;
  req.duration_s = 0.8;

  const std::string dir_a = scratch_dir("mix_det_a");
  const std::string dir_b = scratch_dir("mix_det_b");
  req.output_dir = dir_a;
  const MixOutcome a = cmd_mix(req);
  req.output_dir = dir_b;
  const MixOutcome b = cmd_mix(req);

  CHECK(slurp(a.mixture_path) == slurp(b.mixture_path));
  REQUIRE(a.image_paths.size() == b.image_paths.size());
  for (size_t n = 0; n < a.image_paths.size(); ++n)
    CHECK(slurp(a.image_paths[n]) == slurp(b.image_paths[n]));
}

TEST_CASE("mix at 300 ms reverberation records a tail-covering RIR length") {
  const std::string dir = scratch_dir("mix_t60");
  MixRequest req;
  req.scene.seed = 5;
  req.scene.t60_ms = 300.0;
  req.duration_s = 0.6;
  req.output_dir = dir;
  const MixOutcome out = cmd_mix(req);
  // 300 ms at 16 kHz is 4800 samples of tail after the direct path.
  CHECK(out.rir_length_samples >= 4800);
  const std::string manifest = slurp(out.manifest_path);
  CHECK(manifest.find("rir_length_samples") != std::string::npos);
}

TEST_CASE("separate then eval on an anechoic scene improves on the mixture") {
  const std::string dir = scratch_dir("sep_eval");
  MixRequest mix;
  mix.scene.seed = 12;
  mix.scene.t60_ms = 0.0;
  mix.duration_s = 1.5;
  mix.output_dir = dir;
  const MixOutcome mixed = cmd_mix(mix);

  RunConfig cfg;
  cfg.method = Method::ilrma;
  cfg.iterations = 30;
  cfg.seed = 1;
  const SeparateOutcome sep = cmd_separate(cfg, mixed.mixture_path, dir);
  REQUIRE(sep.estimate_paths.size() == 2);
  for (const std::string& p : sep.estimate_paths)
    CHECK(read_wav(p).num_channels() == 1);

  EvalRequest ev;
  ev.manifest_path = mixed.manifest_path;
  ev.estimate_paths = sep.estimate_paths;
  ev.report_path = dir + "/report.json";
  const EvalOutcome res = cmd_eval(ev);
  CHECK(res.report.mean_improvement_db > 0.0);
  CHECK(std::filesystem::exists(ev.report_path));
  CHECK(res.table.find("improvement over mixture") != std::string::npos);
}

TEST_CASE("separate trace file has one row per iteration plus the start") {
  const std::string dir = scratch_dir("trace_rows");
  MixRequest mix;
  mix.scene.seed = 3;
  mix.scene.t60_ms = 80.0;
  mix.duration_s = 0.7;
  mix.output_dir = dir;
  const MixOutcome mixed = cmd_mix(mix);

  RunConfig cfg;
  cfg.method = Method::fastmnmf;
  cfg.iterations = 7;
  cfg.rank = 4;
  cfg.seed = 2;
  const SeparateOutcome sep = cmd_separate(cfg, mixed.mixture_path, dir);

  const std::vector<std::string> lines = split_lines(slurp(sep.trace_path));
  REQUIRE(lines.size() == 1 + 8);  // header + iterations + 1
  CHECK(lines[0] == "iteration,lambda,cost,elapsed_seconds");
  const std::vector<std::string> first = split_fields(lines[1]);
  REQUIRE(first.size() == 4);
  CHECK(first[0] == "0");
  CHECK(sep.trace.cost.size() == 8);
}

TEST_CASE("annealed variant with an all-zero schedule degenerates to the "
          "unregularized method") {
  const std::string dir = scratch_dir("degen");
  MixRequest mix;
  mix.scene.seed = 8;
  mix.scene.t60_ms = 150.0;
  mix.duration_s = 1.2;
  mix.output_dir = dir;
  const MixOutcome mixed = cmd_mix(mix);

  RunConfig plain;
  plain.method = Method::fastmnmf;
  plain.init = InitStrategy::identity;
  plain.iterations = 25;
  plain.rank = 6;
  plain.seed = 4;
  const SeparateOutcome a = cmd_separate(plain, mixed.mixture_path, dir + "/a");

  RunConfig zero = plain;
  zero.method = Method::regufast2;
  zero.schedule.lambda0 = 0.0;
  zero.schedule.lambda_end = 0.0;
  zero.schedule.lambda_const = 0.0;
  const SeparateOutcome b = cmd_separate(zero, mixed.mixture_path, dir + "/b");

  REQUIRE(a.estimate_paths.size() == b.estimate_paths.size());
  for (size_t n = 0; n < a.estimate_paths.size(); ++n) {
    const Waveform wa = read_wav(a.estimate_paths[n]);
    const Waveform wb = read_wav(b.estimate_paths[n]);
    REQUIRE(wa.num_samples() == wb.num_samples());
    double max_abs = 0.0;
    for (size_t t = 0; t < wa.num_samples(); ++t)
      max_abs = std::max(max_abs,
                         std::abs(wa.channels[0][t] - wb.channels[0][t]));
    CHECK(max_abs <= 1e-6);
  }
}

TEST_CASE("separation output bytes are reproducible across runs") {
  const std::string dir = scratch_dir("repro");
  MixRequest mix;
  mix.scene.seed = 77;
  mix.scene.t60_ms = 100.0;
  mix.duration_s = 0.9;
  mix.output_dir = dir;
  const MixOutcome mixed = cmd_mix(mix);

  RunConfig cfg;
  cfg.method = Method::regufast2;
  cfg.iterations = 6;
  cfg.rank = 4;
  cfg.ilrma_iterations = 8;
  cfg.seed = 11;
  const SeparateOutcome a = cmd_separate(cfg, mixed.mixture_path, dir + "/a");
  const SeparateOutcome b = cmd_separate(cfg, mixed.mixture_path, dir + "/b");

  for (size_t n = 0; n < a.estimate_paths.size(); ++n)
    CHECK(slurp(a.estimate_paths[n]) == slurp(b.estimate_paths[n]));

  // Traces match except the wall-clock column.
  const std::vector<std::string> la = split_lines(slurp(a.trace_path));
  const std::vector<std::string> lb = split_lines(slurp(b.trace_path));
  REQUIRE(la.size() == lb.size());
  for (size_t i = 0; i < la.size(); ++i) {
    const std::vector<std::string> fa = split_fields(la[i]);
    const std::vector<std::string> fb = split_fields(lb[i]);
    REQUIRE(fa.size() == 4);
    REQUIRE(fb.size() == 4);
    CHECK(fa[0] == fb[0]);  // iteration
    CHECK(fa[1] == fb[1]);  // lambda
    CHECK(fa[2] == fb[2]);  // cost
  }
}

TEST_CASE("bench grid of one cell emits one data row and one summary row") {
  const std::string dir = scratch_dir("bench1");
  BenchRequest req;
  req.scenes = 1;
  req.scene_seed_base = 6;
  req.trial_seeds = {1};
  req.methods = {{Method::fastmnmf, InitStrategy::identity}};
  req.duration_s = 0.8;
  req.t60_ms = 100.0;
  req.run.iterations = 5;
  req.run.rank = 4;
  req.jobs = 1;
  req.csv_path = dir + "/bench.csv";
  const BenchOutcome out = cmd_bench(req);

  REQUIRE(out.cells.size() == 1);
  CHECK(out.cells[0].ok);
  const std::vector<std::string> lines = split_lines(out.csv);
  REQUIRE(lines.size() == 3);  // header + data + summary
  CHECK(lines[0] ==
        "scene,method,seed,sdr_improvement_db,sec_per_iteration,sdr_std_db,"
        "status");
  const std::vector<std::string> data = split_fields(lines[1]);
  REQUIRE(data.size() == 7);
  CHECK(data[0] == "0");
  CHECK(data[1] == "fastmnmf-identity");
  CHECK(data[2] == "1");
  CHECK(data[6] == "ok");
  const std::vector<std::string> summary = split_fields(lines[2]);
  REQUIRE(summary.size() == 7);
  CHECK(summary[0] == "summary");
  CHECK(summary[1] == "fastmnmf-identity");
  CHECK(std::filesystem::exists(req.csv_path));
}

TEST_CASE("bench SDR columns are reproducible and failures keep the run "
          "alive") {
  BenchRequest req;
  req.scenes = 1;
  req.scene_seed_base = 14;
  req.trial_seeds = {1, 2};
  req.methods = {{Method::fastmnmf, InitStrategy::identity},
                 {Method::ilrma, InitStrategy::identity}};
  req.duration_s = 0.8;
  req.t60_ms = 100.0;
  req.run.iterations = 4;
  req.run.rank = 4;
  req.jobs = 2;
  req.csv_path.clear();
  const BenchOutcome a = cmd_bench(req);
  const BenchOutcome b = cmd_bench(req);
  REQUIRE(a.cells.size() == 4);
  // Grid order: scene-major, then method, then seed.
  CHECK(a.cells[0].method == "fastmnmf-identity");
  CHECK(a.cells[1].method == "fastmnmf-identity");
  CHECK(a.cells[0].seed == 1);
  CHECK(a.cells[1].seed == 2);
  CHECK(a.cells[2].method == "ilrma");
  for (size_t i = 0; i < a.cells.size(); ++i) {
    REQUIRE(a.cells[i].ok);
    REQUIRE(b.cells[i].ok);
    CHECK(a.cells[i].sdr_improvement_db ==
          doctest::Approx(b.cells[i].sdr_improvement_db).epsilon(1e-12));
  }

  // A reference channel that does not exist fails that cell but not the run.
  BenchRequest bad = req;
  bad.run.reference_channel = 9;
  const BenchOutcome c = cmd_bench(bad);
  REQUIRE(c.cells.size() == 4);
  for (const BenchCell& cell : c.cells) {
    CHECK_FALSE(cell.ok);
    CHECK_FALSE(cell.error.empty());
  }
  const std::string csv = c.csv;
  CHECK(csv.find("failed:") != std::string::npos);
}

TEST_CASE("command line surface: config file plus flag overrides") {
  const std::string dir = scratch_dir("cli_surface");

  // Write a config that changes several defaults.
  RunConfig cfg;
  cfg.method = Method::fastmnmf;
  cfg.iterations = 6;
  cfg.rank = 4;
  cfg.seed = 3;
  {
    std::ofstream out(dir + "/cfg.json");
    out << run_config_to_json(cfg);
  }

  {
    const char* argv[] = {"bss",    "mix",   "--out", dir.c_str(),
                          "--seed", "21",    "--t60", "90",
                          "--duration", "0.8"};
    CHECK(run_cli(10, argv) == 0);
  }
  const std::string mixture = dir + "/scene_mixture.wav";
  REQUIRE(std::filesystem::exists(mixture));

  const std::string cfg_path = dir + "/cfg.json";
  {
    const char* argv[] = {"bss",   "separate",  "--mix",    mixture.c_str(),
                          "--out", dir.c_str(), "--config", cfg_path.c_str(),
                          "--iterations", "5"};
    CHECK(run_cli(10, argv) == 0);
  }
  // 5 iterations from the flag (not 6 from the config file): 6 rows + header.
  const std::vector<std::string> lines = split_lines(slurp(dir + "/trace.csv"));
  CHECK(lines.size() == 1 + 6);

  {
    const char* argv[] = {"bss", "bench", "--scenes", "1"};
    CHECK(run_cli(4, argv) != 0);  // missing the mandatory --seed
  }
  {
    const char* argv[] = {"bss", "separate", "--mix", mixture.c_str(),
                          "--method", "bogus"};
    CHECK(run_cli(6, argv) != 0);
  }
}

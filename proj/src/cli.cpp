#include "bss/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "bss/wav.hpp"

namespace bss {

namespace {

using nlohmann::json;

std::string join_path(const std::string& dir, const std::string& name) {
  std::filesystem::path p(name);
  if (p.is_absolute() || dir.empty()) return name;
  return (std::filesystem::path(dir) / p).string();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoFailure("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Scales the tensor to the fixed reference power and returns the total
// multiplier that was applied.
double scale_to_reference(Spectrogram& x) {
  const double base = normalize_power(x);
  const double s = std::sqrt(kInputReferencePower);
  for (cdouble& c : x.v) c *= s;
  return base * s;
}

struct SeparationRun {
  Spectrogram separated;  // channels = sources, reference-channel images
  IterationTrace trace;
};

// Runs the configured method on an already scaled spectrogram.
SeparationRun run_method(const RunConfig& cfg, const Spectrogram& x) {
  if (cfg.reference_channel < 1 || cfg.reference_channel > x.channels)
    throw ConfigMismatch("reference channel out of range");
  const int ref0 = cfg.reference_channel - 1;
  SeparationRun out;
  switch (cfg.method) {
    case Method::ilrma: {
      IlrmaResult r = run_ilrma(x, cfg.iterations, cfg.ilrma_rank_per_source,
                                cfg.seed, true, ref0);
      out.separated = std::move(r.separated);
      out.trace = std::move(r.trace);
      break;
    }
    case Method::fastmnmf: {
      FastmnmfConfig f;
      f.iterations = cfg.iterations;
      f.rank = cfg.rank;
      f.init = cfg.init;
      f.seed = cfg.seed;
      f.emphasize_own_channel = cfg.emphasize_own_channel;
      f.reference_channel = ref0;
      if (cfg.init == InitStrategy::ilrma) {
        IlrmaResult pre = run_ilrma(x, cfg.ilrma_iterations,
                                    cfg.ilrma_rank_per_source,
                                    derive_seed(cfg.seed, kIlrmaSeedStream),
                                    true, ref0);
        FastmnmfResult r = run_fastmnmf(x, f, &pre.demixing);
        out.separated = std::move(r.separated);
        out.trace = std::move(r.trace);
      } else {
        FastmnmfResult r = run_fastmnmf(x, f);
        out.separated = std::move(r.separated);
        out.trace = std::move(r.trace);
      }
      break;
    }
    case Method::regufast1:
    case Method::regufast2: {
      RegufastConfig r;
      r.iterations = cfg.iterations;
      r.rank = cfg.rank;
      r.ilrma_iterations = cfg.ilrma_iterations;
      r.ilrma_rank_per_source = cfg.ilrma_rank_per_source;
      r.schedule = cfg.schedule;
      r.schedule.mode = cfg.method == Method::regufast1 ? ScheduleMode::constant
                                                        : ScheduleMode::geometric;
      r.seed = cfg.seed;
      r.emphasize_own_channel = cfg.emphasize_own_channel;
      r.reference_channel = ref0;
      RegufastResult res = run_regularized_fastmnmf(x, r);
      out.separated = std::move(res.separated);
      out.trace = std::move(res.trace);
      break;
    }
  }
  return out;
}

std::string trace_to_csv(const IterationTrace& trace) {
  std::ostringstream out;
  out << "iteration,lambda,cost,elapsed_seconds\n";
  for (size_t l = 0; l < trace.cost.size(); ++l)
    out << l << ',' << format_double(trace.lambda[l]) << ','
        << format_double(trace.cost[l]) << ','
        << format_double(trace.elapsed_seconds[l]) << '\n';
  return out.str();
}

// Converts one source channel of a separated tensor back to a waveform at
// the original input scale.
std::vector<double> synthesize_estimate(const Spectrogram& separated, int source,
                                        double multiplier, const StftConfig& stft,
                                        double sample_rate, size_t samples) {
  Spectrogram one(separated.bins, separated.frames, 1);
  for (int i = 0; i < separated.bins; ++i)
    for (int j = 0; j < separated.frames; ++j)
      one.at(i, j, 0) = separated.at(i, j, source) / multiplier;
  return istft(one, stft, sample_rate, samples).channels[0];
}

double median_iteration_seconds(const IterationTrace& trace) {
  std::vector<double> steps;
  for (size_t l = 1; l < trace.elapsed_seconds.size(); ++l)
    steps.push_back(trace.elapsed_seconds[l] - trace.elapsed_seconds[l - 1]);
  if (steps.empty()) return 0.0;
  std::sort(steps.begin(), steps.end());
  const size_t mid = steps.size() / 2;
  if (steps.size() % 2 == 1) return steps[mid];
  return 0.5 * (steps[mid - 1] + steps[mid]);
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::ilrma: return "ilrma";
    case Method::fastmnmf: return "fastmnmf";
    case Method::regufast1: return "regufast1";
    case Method::regufast2: return "regufast2";
  }
  throw ConfigMismatch("unknown method enum");
}

Method method_from_name(const std::string& name) {
  if (name == "ilrma") return Method::ilrma;
  if (name == "fastmnmf") return Method::fastmnmf;
  if (name == "regufast1") return Method::regufast1;
  if (name == "regufast2") return Method::regufast2;
  throw ConfigMismatch("unknown method: " + name);
}

std::string init_name(InitStrategy s) {
  switch (s) {
    case InitStrategy::identity: return "identity";
    case InitStrategy::pca: return "pca";
    case InitStrategy::ilrma: return "ilrma";
  }
  throw ConfigMismatch("unknown init enum");
}

InitStrategy init_from_name(const std::string& name) {
  if (name == "identity") return InitStrategy::identity;
  if (name == "pca") return InitStrategy::pca;
  if (name == "ilrma") return InitStrategy::ilrma;
  throw ConfigMismatch("unknown init strategy: " + name);
}

namespace {

std::string schedule_mode_name(ScheduleMode m) {
  return m == ScheduleMode::constant ? "constant" : "geometric";
}

ScheduleMode schedule_mode_from_name(const std::string& name) {
  if (name == "constant") return ScheduleMode::constant;
  if (name == "geometric") return ScheduleMode::geometric;
  throw ConfigMismatch("unknown schedule mode: " + name);
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["method"] = method_name(cfg.method);
  j["init"] = init_name(cfg.init);
  j["iterations"] = cfg.iterations;
  j["ilrma_iterations"] = cfg.ilrma_iterations;
  j["rank"] = cfg.rank;
  j["ilrma_rank_per_source"] = cfg.ilrma_rank_per_source;
  j["stft"] = {{"window_ms", cfg.stft.window_ms},
               {"hop_ms", cfg.stft.hop_ms},
               {"window", "hamming"}};
  j["schedule"] = {{"mode", schedule_mode_name(cfg.schedule.mode)},
                   {"lambda_const", cfg.schedule.lambda_const},
                   {"lambda0", cfg.schedule.lambda0},
                   {"lambda_end", cfg.schedule.lambda_end},
                   {"total_iterations", cfg.schedule.total_iterations}};
  j["seed"] = cfg.seed;
  j["reference_channel"] = cfg.reference_channel;
  j["emphasize_own_channel"] = cfg.emphasize_own_channel;
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigMismatch(std::string("config parse error: ") + e.what());
  }
  RunConfig cfg;
  try {
    if (j.contains("method")) cfg.method = method_from_name(j["method"]);
    if (j.contains("init")) cfg.init = init_from_name(j["init"]);
    if (j.contains("iterations")) cfg.iterations = j["iterations"];
    if (j.contains("ilrma_iterations")) cfg.ilrma_iterations = j["ilrma_iterations"];
    if (j.contains("rank")) cfg.rank = j["rank"];
    if (j.contains("ilrma_rank_per_source"))
      cfg.ilrma_rank_per_source = j["ilrma_rank_per_source"];
    if (j.contains("stft")) {
      const json& s = j["stft"];
      if (s.contains("window_ms")) cfg.stft.window_ms = s["window_ms"];
      if (s.contains("hop_ms")) cfg.stft.hop_ms = s["hop_ms"];
      if (s.contains("window") && s["window"] != "hamming")
        throw ConfigMismatch("unknown window kind in config");
    }
    if (j.contains("schedule")) {
      const json& s = j["schedule"];
      if (s.contains("mode")) cfg.schedule.mode = schedule_mode_from_name(s["mode"]);
      if (s.contains("lambda_const")) cfg.schedule.lambda_const = s["lambda_const"];
      if (s.contains("lambda0")) cfg.schedule.lambda0 = s["lambda0"];
      if (s.contains("lambda_end")) cfg.schedule.lambda_end = s["lambda_end"];
      if (s.contains("total_iterations"))
        cfg.schedule.total_iterations = s["total_iterations"];
    }
    if (j.contains("seed")) cfg.seed = j["seed"];
    if (j.contains("reference_channel"))
      cfg.reference_channel = j["reference_channel"];
    if (j.contains("emphasize_own_channel"))
      cfg.emphasize_own_channel = j["emphasize_own_channel"];
  } catch (const json::exception& e) {
    throw ConfigMismatch(std::string("config field error: ") + e.what());
  }
  return cfg;
}

MixOutcome cmd_mix(const MixRequest& req) {
  std::filesystem::create_directories(req.output_dir);
  MixtureScene scene = make_scene(req.scene, req.duration_s, req.snr_db);

  MixOutcome out;
  out.rir_length_samples = static_cast<int>(scene.rirs[0][0].size());
  out.mixture_path = join_path(req.output_dir, req.stem + "_mixture.wav");
  write_wav(out.mixture_path, scene.mixture);
  for (size_t n = 0; n < scene.ground_truth_images.size(); ++n) {
    const std::string path = join_path(
        req.output_dir, req.stem + "_image_" + std::to_string(n + 1) + ".wav");
    write_wav(path, scene.ground_truth_images[n]);
    out.image_paths.push_back(path);
  }

  json manifest;
  manifest["mixture"] = std::filesystem::path(out.mixture_path).filename().string();
  json images = json::array();
  for (const std::string& p : out.image_paths)
    images.push_back(std::filesystem::path(p).filename().string());
  manifest["images"] = images;
  manifest["seed"] = req.scene.seed;
  manifest["t60_ms"] = req.scene.t60_ms;
  manifest["drr_db"] = req.scene.drr_db;
  manifest["snr_db"] = req.snr_db;
  manifest["channels"] = req.scene.channels;
  manifest["sources"] = req.scene.sources;
  manifest["sample_rate"] = req.scene.sample_rate;
  manifest["duration_s"] = req.duration_s;
  manifest["rir_length_samples"] = out.rir_length_samples;
  out.manifest_path = join_path(req.output_dir, req.stem + "_manifest.json");
  write_text_file(out.manifest_path, manifest.dump(2) + "\n");
  return out;
}

SeparateOutcome cmd_separate(const RunConfig& cfg,
                             const std::string& mixture_path,
                             const std::string& output_dir) {
  const Waveform mixture = read_wav(mixture_path);
  const size_t samples = mixture.num_samples();
  Spectrogram x = stft(mixture, cfg.stft);
  const double multiplier = scale_to_reference(x);
  const SeparationRun run = run_method(cfg, x);

  std::filesystem::create_directories(output_dir);
  SeparateOutcome out;
  out.trace = run.trace;
  for (int n = 0; n < run.separated.channels; ++n) {
    Waveform est;
    est.sample_rate = mixture.sample_rate;
    est.channels.push_back(synthesize_estimate(run.separated, n, multiplier,
                                               cfg.stft, mixture.sample_rate,
                                               samples));
    const std::string path =
        join_path(output_dir, "estimate_" + std::to_string(n + 1) + ".wav");
    write_wav(path, est);
    out.estimate_paths.push_back(path);
  }
  out.trace_path = join_path(output_dir, "trace.csv");
  write_text_file(out.trace_path, trace_to_csv(run.trace));
  return out;
}

EvalOutcome cmd_eval(const EvalRequest& req) {
  const std::string manifest_text = read_text_file(req.manifest_path);
  json manifest;
  try {
    manifest = json::parse(manifest_text);
  } catch (const json::exception& e) {
    throw ConfigMismatch(std::string("manifest parse error: ") + e.what());
  }
  const std::string dir =
      std::filesystem::path(req.manifest_path).parent_path().string();

  MixtureScene scene;
  scene.mixture = read_wav(join_path(dir, manifest.at("mixture")));
  for (const auto& name : manifest.at("images"))
    scene.ground_truth_images.push_back(read_wav(join_path(dir, name)));

  if (req.estimate_paths.size() != scene.ground_truth_images.size())
    throw ConfigMismatch("estimate count does not match manifest sources");
  std::vector<std::vector<double>> estimates;
  for (const std::string& p : req.estimate_paths) {
    Waveform w = read_wav(p);
    if (w.num_channels() != 1)
      throw ConfigMismatch("estimates must be single channel: " + p);
    estimates.push_back(std::move(w.channels[0]));
  }

  const int ref0 = req.reference_channel - 1;
  if (ref0 < 0 || ref0 >= scene.mixture.num_channels())
    throw ConfigMismatch("reference channel out of range");

  EvalOutcome out;
  out.report = sdr_improvement(scene, estimates, ref0);

  json rep;
  rep["per_source_db"] = out.report.per_source_db;
  rep["permutation"] = out.report.permutation;
  rep["mean_db"] = out.report.mean_db;
  rep["mean_improvement_db"] = out.report.mean_improvement_db;
  rep["reference_channel"] = req.reference_channel;
  out.report_json = rep.dump(2) + "\n";

  std::ostringstream table;
  table << "source  estimate  sdr_db\n";
  for (size_t n = 0; n < out.report.per_source_db.size(); ++n) {
    char line[96];
    std::snprintf(line, sizeof line, "%-7zu %-9d %8.3f\n", n + 1,
                  out.report.permutation[n] + 1, out.report.per_source_db[n]);
    table << line;
  }
  char tail[128];
  std::snprintf(tail, sizeof tail,
                "mean sdr: %.3f dB\nimprovement over mixture: %.3f dB\n",
                out.report.mean_db, out.report.mean_improvement_db);
  table << tail;
  out.table = table.str();

  if (!req.report_path.empty()) {
    write_text_file(req.report_path, out.report_json);
    out.report_path = req.report_path;
  }
  return out;
}

std::string bench_label(const BenchMethod& m) {
  if (m.method == Method::fastmnmf)
    return "fastmnmf-" + init_name(m.init);
  return method_name(m.method);
}

BenchMethod bench_method_from_label(const std::string& label) {
  BenchMethod m;
  const std::string prefix = "fastmnmf-";
  if (label.rfind(prefix, 0) == 0) {
    m.method = Method::fastmnmf;
    m.init = init_from_name(label.substr(prefix.size()));
    return m;
  }
  m.method = method_from_name(label);
  m.init = InitStrategy::identity;
  return m;
}

BenchOutcome cmd_bench(const BenchRequest& req) {
  if (req.scenes < 1) throw ConfigMismatch("bench needs at least one scene");
  if (req.trial_seeds.empty()) throw ConfigMismatch("bench needs trial seeds");
  std::vector<BenchMethod> methods = req.methods;
  if (methods.empty())
    methods = {{Method::ilrma, InitStrategy::identity},
               {Method::fastmnmf, InitStrategy::identity},
               {Method::fastmnmf, InitStrategy::pca},
               {Method::regufast1, InitStrategy::identity},
               {Method::regufast2, InitStrategy::identity}};

  // Scenes are generated up front and shared read-only by the workers.
  struct SceneData {
    MixtureScene scene;
    Spectrogram x;        // scaled to the reference power
    double multiplier = 1.0;
  };
  std::vector<SceneData> scenes(req.scenes);
  for (int s = 0; s < req.scenes; ++s) {
    SyntheticSceneConfig sc;
    sc.t60_ms = req.t60_ms;
    sc.seed = req.scene_seed_base + static_cast<std::uint64_t>(s);
    scenes[s].scene = make_scene(sc, req.duration_s, req.snr_db);
    scenes[s].x = stft(scenes[s].scene.mixture, req.run.stft);
    scenes[s].multiplier = scale_to_reference(scenes[s].x);
  }

  const size_t cell_count =
      static_cast<size_t>(req.scenes) * methods.size() * req.trial_seeds.size();
  std::vector<BenchCell> cells(cell_count);

  auto run_cell = [&](size_t index) {
    const size_t per_scene = methods.size() * req.trial_seeds.size();
    const int s = static_cast<int>(index / per_scene);
    const size_t rem = index % per_scene;
    const BenchMethod& bm = methods[rem / req.trial_seeds.size()];
    const std::uint64_t seed = req.trial_seeds[rem % req.trial_seeds.size()];

    BenchCell& cell = cells[index];
    cell.scene = s;
    cell.method = bench_label(bm);
    cell.seed = seed;
    try {
      RunConfig cfg = req.run;
      cfg.method = bm.method;
      cfg.init = bm.init;
      cfg.seed = seed;
      const SceneData& sd = scenes[s];
      const SeparationRun run = run_method(cfg, sd.x);
      std::vector<std::vector<double>> estimates;
      for (int n = 0; n < run.separated.channels; ++n)
        estimates.push_back(synthesize_estimate(
            run.separated, n, sd.multiplier, cfg.stft,
            sd.scene.mixture.sample_rate, sd.scene.mixture.num_samples()));
      cell.sdr_improvement_db =
          sdr_improvement(sd.scene, estimates, cfg.reference_channel - 1)
              .mean_improvement_db;
      cell.sec_per_iteration = median_iteration_seconds(run.trace);
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  };

  int jobs = req.jobs;
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  jobs = std::min<int>(jobs, static_cast<int>(cell_count));
  if (jobs <= 1) {
    for (size_t i = 0; i < cell_count; ++i) run_cell(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&]() {
        for (size_t i = next.fetch_add(1); i < cell_count; i = next.fetch_add(1))
          run_cell(i);
      });
    for (std::thread& t : pool) t.join();
  }

  std::ostringstream csv;
  csv << "scene,method,seed,sdr_improvement_db,sec_per_iteration,sdr_std_db,"
         "status\n";
  char line[256];
  for (const BenchCell& c : cells) {
    if (c.ok) {
      std::snprintf(line, sizeof line, "%d,%s,%llu,%.4f,%.6f,,ok\n", c.scene,
                    c.method.c_str(), static_cast<unsigned long long>(c.seed),
                    c.sdr_improvement_db, c.sec_per_iteration);
      csv << line;
    } else {
      std::snprintf(line, sizeof line, "%d,%s,%llu,nan,nan,,failed: %s\n",
                    c.scene, c.method.c_str(),
                    static_cast<unsigned long long>(c.seed), c.error.c_str());
      csv << line;
    }
  }
  // One summary row per method: mean over its successful cells, with the
  // sample standard deviation of the improvement.
  for (const BenchMethod& bm : methods) {
    const std::string label = bench_label(bm);
    std::vector<double> sdrs, secs;
    for (const BenchCell& c : cells)
      if (c.ok && c.method == label) {
        sdrs.push_back(c.sdr_improvement_db);
        secs.push_back(c.sec_per_iteration);
      }
    auto mean_of = [](const std::vector<double>& v) {
      if (v.empty()) return std::nan("");
      double acc = 0.0;
      for (double x : v) acc += x;
      return acc / static_cast<double>(v.size());
    };
    auto std_of = [&](const std::vector<double>& v) {
      if (v.size() < 2) return v.empty() ? std::nan("") : 0.0;
      double acc = 0.0, m = 0.0;
      for (double x : v) m += x;
      m /= static_cast<double>(v.size());
      for (double x : v) acc += (x - m) * (x - m);
      return std::sqrt(acc / static_cast<double>(v.size() - 1));
    };
    std::snprintf(line, sizeof line, "summary,%s,,%.4f,%.6f,%.4f,summary\n",
                  label.c_str(), mean_of(sdrs), mean_of(secs), std_of(sdrs));
    csv << line;
  }

  BenchOutcome out;
  out.cells = std::move(cells);
  out.csv = csv.str();
  out.csv_path = req.csv_path;
  if (!req.csv_path.empty()) {
    const std::string dir =
        std::filesystem::path(req.csv_path).parent_path().string();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    write_text_file(req.csv_path, out.csv);
  }
  return out;
}

namespace {

// Registers the RunConfig flags shared by `separate` and `bench`. `bench`
// owns its own --seed (the grid seed), so the per-run seed flag is optional.
void add_run_options(CLI::App* app, RunConfig& cfg, std::string& method,
                     std::string& init, bool with_seed) {
  app->add_option("--method", method,
                  "separation method: ilrma|fastmnmf|regufast1|regufast2");
  app->add_option("--init", init,
                  "diagonalizer init for fastmnmf: identity|pca|ilrma");
  app->add_option("--iterations", cfg.iterations, "main iteration count");
  app->add_option("--ilrma-iterations", cfg.ilrma_iterations,
                  "warm-start demixing iterations");
  app->add_option("--rank", cfg.rank, "shared basis count K");
  app->add_option("--ilrma-rank", cfg.ilrma_rank_per_source,
                  "bases per source for the demixing solver");
  app->add_option("--window-ms", cfg.stft.window_ms, "analysis window (ms)");
  app->add_option("--hop-ms", cfg.stft.hop_ms, "analysis hop (ms)");
  app->add_option("--lambda0", cfg.schedule.lambda0,
                  "annealed schedule start weight");
  app->add_option("--lambda-end", cfg.schedule.lambda_end,
                  "annealed schedule end weight");
  app->add_option("--lambda-const", cfg.schedule.lambda_const,
                  "constant schedule weight");
  if (with_seed) app->add_option("--seed", cfg.seed, "random seed");
  app->add_option("--ref", cfg.reference_channel, "reference channel (1-based)");
  app->add_flag("--emphasize", cfg.emphasize_own_channel,
                "per-source channel emphasis in the spatial gain init");
}

std::vector<std::string> split_csv_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Convolutive blind source separation toolkit"};
  app.require_subcommand(1);

  // ---- mix ----
  MixRequest mix;
  bool mix_seed_set = false;
  CLI::App* mix_cmd = app.add_subcommand("mix", "generate a synthetic scene");
  mix_cmd->add_option("--out", mix.output_dir, "output directory");
  mix_cmd->add_option("--stem", mix.stem, "output file stem");
  mix_cmd->add_option("--seed", mix.scene.seed, "scene seed")
      ->each([&](const std::string&) { mix_seed_set = true; });
  mix_cmd->add_option("--t60", mix.scene.t60_ms, "reverberation time (ms)");
  mix_cmd->add_option("--drr", mix.scene.drr_db,
                      "direct-to-reverberant ratio (dB)");
  mix_cmd->add_option("--snr", mix.snr_db, "source power ratio (dB)");
  mix_cmd->add_option("--duration", mix.duration_s, "scene length (seconds)");
  mix_cmd->add_option("--channels", mix.scene.channels, "microphone count");
  mix_cmd->add_option("--sources", mix.scene.sources, "source count");
  mix_cmd->add_option("--sample-rate", mix.scene.sample_rate, "sample rate (Hz)");

  // ---- separate ----
  RunConfig run_cfg;
  std::string sep_method, sep_init, sep_config_path, sep_mixture, sep_out = ".";
  CLI::App* sep_cmd = app.add_subcommand("separate", "separate a mixture");
  sep_cmd->add_option("--config", sep_config_path, "JSON config file");
  sep_cmd->add_option("--mix", sep_mixture, "mixture WAV path")->required();
  sep_cmd->add_option("--out", sep_out, "output directory");
  add_run_options(sep_cmd, run_cfg, sep_method, sep_init, true);

  // ---- eval ----
  EvalRequest eval_req;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score estimates");
  eval_cmd->add_option("--manifest", eval_req.manifest_path, "scene manifest")
      ->required();
  eval_cmd->add_option("--estimates", eval_req.estimate_paths,
                       "estimate WAVs, one per source")
      ->required()
      ->expected(-1);
  eval_cmd->add_option("--ref", eval_req.reference_channel,
                       "reference channel (1-based)");
  eval_cmd->add_option("--report", eval_req.report_path, "JSON report path");

  // ---- bench ----
  BenchRequest bench;
  RunConfig bench_run;
  std::string bench_method, bench_init, bench_config_path, bench_methods,
      bench_trials;
  bool bench_seed_set = false;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "scene x method x seed comparison grid");
  bench_cmd->add_option("--config", bench_config_path, "JSON config file");
  bench_cmd->add_option("--out", bench.csv_path, "CSV output path");
  bench_cmd->add_option("--scenes", bench.scenes, "scene count");
  bench_cmd
      ->add_option("--seed", bench.scene_seed_base,
                   "grid seed (scene s uses seed + s)")
      ->each([&](const std::string&) { bench_seed_set = true; });
  bench_cmd->add_option("--trial-seeds", bench_trials,
                        "comma-separated per-method seeds");
  bench_cmd->add_option("--methods", bench_methods,
                        "comma-separated method labels");
  bench_cmd->add_option("--duration", bench.duration_s, "scene length (seconds)");
  bench_cmd->add_option("--t60", bench.t60_ms, "reverberation time (ms)");
  bench_cmd->add_option("--snr", bench.snr_db, "source power ratio (dB)");
  bench_cmd->add_option("--jobs", bench.jobs, "worker threads (0 = auto)");
  add_run_options(bench_cmd, bench_run, bench_method, bench_init, false);

  // Config files are loaded before the full parse so explicit flags win.
  try {
    for (int i = 1; i + 1 < argc; ++i)
      if (std::string(argv[i]) == "--config") {
        RunConfig loaded = run_config_from_json(read_text_file(argv[i + 1]));
        run_cfg = loaded;
        bench_run = loaded;
        break;
      }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (mix_cmd->parsed()) {
      if (!mix_seed_set) {
        std::fprintf(stderr, "mix requires --seed\n");
        return 2;
      }
      MixOutcome out = cmd_mix(mix);
      std::printf("%s\n", out.manifest_path.c_str());
      return 0;
    }
    if (sep_cmd->parsed()) {
      if (!sep_method.empty()) run_cfg.method = method_from_name(sep_method);
      if (!sep_init.empty()) run_cfg.init = init_from_name(sep_init);
      SeparateOutcome out = cmd_separate(run_cfg, sep_mixture, sep_out);
      for (const std::string& p : out.estimate_paths)
        std::printf("%s\n", p.c_str());
      std::printf("%s\n", out.trace_path.c_str());
      return 0;
    }
    if (eval_cmd->parsed()) {
      EvalOutcome out = cmd_eval(eval_req);
      std::fputs(out.table.c_str(), stdout);
      return 0;
    }
    if (bench_cmd->parsed()) {
      if (!bench_seed_set) {
        std::fprintf(stderr, "bench requires --seed\n");
        return 2;
      }
      if (!bench_method.empty()) bench_run.method = method_from_name(bench_method);
      if (!bench_init.empty()) bench_run.init = init_from_name(bench_init);
      bench.run = bench_run;
      if (!bench_trials.empty()) {
        bench.trial_seeds.clear();
        for (const std::string& s : split_csv_list(bench_trials))
          bench.trial_seeds.push_back(std::stoull(s));
      }
      if (!bench_methods.empty()) {
        bench.methods.clear();
        for (const std::string& s : split_csv_list(bench_methods))
          bench.methods.push_back(bench_method_from_label(s));
      }
      BenchOutcome out = cmd_bench(bench);
      std::fputs(out.csv.c_str(), stdout);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace bss

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bss/eval.hpp"
#include "bss/fastmnmf.hpp"
#include "bss/mixsim.hpp"
#include "bss/regufast.hpp"
#include "bss/signal.hpp"
#include "bss/trace.hpp"

namespace bss {

// Separation methods exposed by the command line. regufast1 runs the
// demixing-prior solver with a constant regularizer weight, regufast2 with
// the geometrically annealed schedule.
enum class Method { ilrma, fastmnmf, regufast1, regufast2 };

std::string method_name(Method m);
Method method_from_name(const std::string& name);
std::string init_name(InitStrategy s);
InitStrategy init_from_name(const std::string& name);

// Mean squared spectrogram magnitude every separation entry point scales its
// input to before running a solver (outputs are scaled back afterwards).
// The regularizer weights and variance floors are absolute constants, so
// the relative strength of both depends on the input level; pinning the
// level makes their behavior independent of how the mixture was recorded.
// The value leaves typical quiet-bin power about an order of magnitude
// above the variance floor while keeping the default regularizer schedule
// effective (its starting weight comparable to the power of active bins).
inline constexpr double kInputReferencePower = 1e-7;

// One separation run as configured from the command line or a config file.
// Defaults give the toolkit's reference conditions: 64 ms / 16 ms Hamming
// STFT, K = 20 shared bases, 300 iterations after a 50-iteration demixing
// warm start, and the annealed weight schedule 1e-6 -> 1e-13 (constant
// variant 1e-7). reference_channel is 1-based here; the library uses
// 0-based indices internally.
struct RunConfig {
  Method method = Method::regufast2;
  InitStrategy init = InitStrategy::identity;
  int iterations = 300;
  int ilrma_iterations = 50;
  int rank = 20;                  // K, shared basis count
  int ilrma_rank_per_source = 10;
  StftConfig stft;
  RegularizerSchedule schedule;
  std::uint64_t seed = 0;
  int reference_channel = 1;      // 1-based
  bool emphasize_own_channel = false;
};

// Lossless JSON round trip for RunConfig (every field serialized).
std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);

// ---- mix -------------------------------------------------------------

struct MixRequest {
  SyntheticSceneConfig scene;
  double duration_s = 4.0;
  double snr_db = 0.0;
  std::string output_dir = ".";
  std::string stem = "scene";
};

struct MixOutcome {
  std::string manifest_path;
  std::string mixture_path;
  std::vector<std::string> image_paths;
  int rir_length_samples = 0;
};

// Generates a synthetic scene and writes the mixture, the per-source images
// and a JSON manifest listing the files and generation parameters.
MixOutcome cmd_mix(const MixRequest& req);

// ---- separate --------------------------------------------------------

struct SeparateOutcome {
  std::vector<std::string> estimate_paths;
  std::string trace_path;
  IterationTrace trace;
};

// Reads a mixture, runs the configured method, writes one single-channel
// estimate per source (reference-channel images) plus a CSV trace with
// header iteration,lambda,cost,elapsed_seconds and iterations+1 rows.
SeparateOutcome cmd_separate(const RunConfig& cfg,
                             const std::string& mixture_path,
                             const std::string& output_dir);

// ---- eval ------------------------------------------------------------

struct EvalRequest {
  std::string manifest_path;
  std::vector<std::string> estimate_paths;
  int reference_channel = 1;  // 1-based
  std::string report_path;    // optional; empty skips the file
};

struct EvalOutcome {
  SdrReport report;
  std::string report_json;
  std::string table;
  std::string report_path;
};

// Scores estimates against the manifest's ground-truth images: SDR per
// source under the best permutation and mean improvement over the
// unprocessed mixture. Returns the JSON report and a human-readable table.
EvalOutcome cmd_eval(const EvalRequest& req);

// ---- bench -----------------------------------------------------------

// One method column of the benchmark grid. The label is what appears in
// the CSV: ilrma, fastmnmf-identity, fastmnmf-pca, fastmnmf-ilrma,
// regufast1, regufast2.
struct BenchMethod {
  Method method = Method::fastmnmf;
  InitStrategy init = InitStrategy::identity;
};

std::string bench_label(const BenchMethod& m);
BenchMethod bench_method_from_label(const std::string& label);

struct BenchRequest {
  int scenes = 8;
  std::uint64_t scene_seed_base = 1;   // scene s is seeded scene_seed_base+s
  std::vector<std::uint64_t> trial_seeds = {1, 2, 3};
  std::vector<BenchMethod> methods;    // empty selects the default grid
  double duration_s = 4.0;
  double t60_ms = 300.0;
  double snr_db = 0.0;
  RunConfig run;                       // iterations, rank, stft, schedule
  int jobs = 0;                        // 0 = hardware concurrency
  std::string csv_path = "bench.csv";
};

struct BenchCell {
  int scene = 0;
  std::string method;
  std::uint64_t seed = 0;
  double sdr_improvement_db = 0.0;
  double sec_per_iteration = 0.0;
  bool ok = false;
  std::string error;
};

struct BenchOutcome {
  std::vector<BenchCell> cells;   // grid order: scene-major, method, seed
  std::string csv_path;
  std::string csv;
};

// Runs the scene x method x seed grid and writes a CSV with columns
// scene,method,seed,sdr_improvement_db,sec_per_iteration,status followed by
// per-method mean and std summary rows over the successful cells. Cells
// that throw are marked failed and the run continues. Cells are executed
// by a small worker pool; results are merged in grid order.
BenchOutcome cmd_bench(const BenchRequest& req);

// ---- entry point -----------------------------------------------------

// Full argument parser: subcommands mix, separate, eval, bench. Returns the
// process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace bss

// erligme: command-line front end for single runs, sweeps, comparison tables
// and the built-in self test.
//
// Exit codes: 0 success, 1 configuration error, 2 solver divergence or
// numerical failure, 3 I/O error.

#include "erligme/config.hpp"
#include "erligme/selftest.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace erligme;

namespace {

enum class Mode { run, sweep, compare };

struct Options {
  std::string config;
  int jobs = 0;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool trace = false;
};

int exit_code_for(const std::string& kind) {
  if (kind == "config" || kind == "dimension" || kind == "capacity") return 1;
  if (kind == "io") return 3;
  return 2;
}

std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Never reuses an existing directory: a second identical run gets a suffix.
fs::path fresh_run_dir(const RunConfig& c) {
  const fs::path base = fs::path(c.output_dir) / (hex16(config_hash(c)) + "-s" + std::to_string(c.seed));
  fs::path dir = base;
  for (int k = 1; fs::exists(dir); ++k) dir = base.string() + "." + std::to_string(k);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void require_single(const RunConfig& c) {
  auto one = [](std::size_t n, const char* key) {
    if (n != 1)
      throw ConfigError(std::string("run expects a single value for '") + key + "'; use sweep");
  };
  one(c.variants.size(), "variants");
  one(c.mu.size(), "mu");
  one(c.shifts.size(), "shifts");
  const auto [r, e] = parse_variant(c.variants.front());
  if (!is_image_regularizer(r)) one(c.lambda1.size(), "lambda1");
  if (e == Enhancement::ligme) one(c.theta_ligme.size(), "theta_ligme");
  if (e == Enhancement::er_ligme) one(c.theta_er.size(), "theta_er");
}

void write_rpca_matrix(const fs::path& path, VecCRef x, Index rows, Index cols) {
  std::string out;
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) out += (j ? "," : "") + format_double(x[j * rows + i]);
    out += "\n";
  }
  write_text(path.string(), out);
}

void print_reports(const std::vector<RunReport>& reports) {
  std::printf("%-9s %5s %6s %6s %6s %6s %9s %7s %10s\n", "variant", "shift", "mu", "lambda",
              "theta", "rho", "psnr[dB]", "iters", "max_gap");
  for (const auto& r : reports) {
    if (!r.error.empty()) {
      std::printf("%-9s %5d %6g %6g %6g %6g  error: %s\n", r.variant.c_str(), r.shift, r.cfg.mu,
                  r.cfg.lambda1, r.cfg.theta, r.cfg.rho, r.error.c_str());
      continue;
    }
    std::printf("%-9s %5d %6g %6g %6g %6g %9.2f %7d %10.2e%s\n", r.variant.c_str(), r.shift,
                r.cfg.mu, r.cfg.lambda1, r.cfg.theta, r.cfg.rho, r.psnr_db, r.iterations,
                r.max_relative_gap, r.converged ? "" : "  (not converged)");
  }
}

int execute(Mode mode, const Options& opt) {
  RunConfig cfg = load_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (!opt.out.empty()) cfg.output_dir = opt.out;
  if (mode == Mode::compare && cfg.variants.empty()) cfg.variants = default_variants(cfg.task);
  cfg = resolve(cfg);
  if (mode == Mode::run) require_single(cfg);
  const int jobs = opt.jobs > 0 ? opt.jobs : int(std::max(1u, std::thread::hardware_concurrency()));

  SolverConfig scfg = solver_config(cfg);
  scfg.track_objective = opt.trace;
  scfg.track_gap = opt.trace;

  // Build every observation before writing anything so that bad input
  // images fail without leaving a run directory behind.
  std::vector<Problem> problems;
  for (int shift : cfg.shifts) problems.push_back(make_problem(cfg, shift));

  const fs::path dir = fresh_run_dir(cfg);
  write_text((dir / "resolved_config.json").string(), config_to_json(cfg).dump(2) + "\n");

  std::vector<RunReport> reports;
  for (const Problem& p : problems) {
    auto part = run_grid(p, expand_grid(cfg, p), scfg, jobs);
    reports.insert(reports.end(), part.begin(), part.end());
  }

  const Json report_json = mode == Mode::run ? report_to_json(reports.front()) : reports_to_json(reports);
  write_text((dir / "report.json").string(), report_json.dump(2) + "\n");
  write_text((dir / "results.csv").string(), results_csv(reports));
  write_text((dir / "timing.csv").string(), timing_csv(reports));
  if (opt.trace)
    for (std::size_t i = 0; i < reports.size(); ++i)
      write_text((dir / ("trace_" + std::to_string(i) + ".csv")).string(), trace_csv(reports[i]));

  print_reports(reports);
  if (mode != Mode::run) {
    const auto best = max_psnr_summary(reports);
    write_text((dir / "summary.csv").string(), summary_csv(best));
    if (mode == Mode::compare) {
      const std::string table = comparison_csv(best, cfg.shifts, cfg.variants);
      write_text((dir / "table.csv").string(), table);
      std::printf("\nMaximum PSNR [dB]\n%s", table.c_str());
    } else {
      std::printf("\nMaximum PSNR [dB]\n%s", summary_csv(best).c_str());
    }
  }

  const RunReport& first = reports.front();
  if (mode == Mode::run && first.error.empty()) {
    const Problem& p = problems.front();
    if (p.task == Task::rpca) {
      write_rpca_matrix(dir / "estimate_L.csv", first.estimate, p.rows, p.cols);
    } else {
      write_ppm((dir / "estimate.ppm").string(), first.estimate, p.n);
      write_ppm((dir / "truth.ppm").string(), p.truth, p.n);
      if (p.task == Task::denoise) write_ppm((dir / "observation.ppm").string(), p.y, p.n);
    }
  }
  std::printf("\noutputs: %s\n", dir.string().c_str());

  int failed = 0;
  for (const auto& r : reports) failed += !r.error.empty();
  if (mode == Mode::run && failed) {
    std::fprintf(stderr, "error: %s\n", first.error.c_str());
    return exit_code_for(first.error_kind);
  }
  if (failed) std::fprintf(stderr, "warning: %d of %zu grid points failed\n", failed, reports.size());
  return 0;
}

int run_check() {
  int failed = 0;
  for (const auto& r : run_self_tests()) {
    std::printf("%s  %s%s%s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.empty() ? "" : "  ",
                r.detail.c_str());
    failed += !r.pass;
  }
  std::printf("%s\n", failed ? "self test FAILED" : "all checks passed");
  return failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ER-LiGME recovery toolkit"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* c = sub->add_option("--config", opt.config, "JSON config file");
    if (need_config) c->required();
    sub->add_option("--jobs", opt.jobs, "parallel grid points (default: all cores)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", opt.out, "output root, overrides output_dir");
    sub->add_option("--seed", opt.seed, "seed, overrides the config");
    sub->add_flag("--trace", opt.trace, "write per-iteration trace CSVs");
  };
  CLI::App* run = app.add_subcommand("run", "solve one configuration");
  CLI::App* sweep = app.add_subcommand("sweep", "expand parameter grids, report maximum PSNRs");
  CLI::App* compare = app.add_subcommand("compare", "compare variants on one observation");
  CLI::App* check = app.add_subcommand("check", "run the built-in property checks");
  add_common(run, true);
  add_common(sweep, true);
  add_common(compare, true);
  add_common(check, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (check->parsed()) return run_check();
    const Mode mode = run->parsed() ? Mode::run : sweep->parsed() ? Mode::sweep : Mode::compare;
    return execute(mode, opt);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(error_kind(e));
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

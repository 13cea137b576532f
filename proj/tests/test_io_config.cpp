#include "erligme/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace erligme;
namespace fs = std::filesystem;

namespace {

Json parse(const char* text) { return Json::parse(text); }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "erligme_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string error_of(const Json& j) {
  try {
    resolve(parse_config(j));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, RejectsUnknownKeysAndMissingTask) {
  EXPECT_THROW(parse_config(parse(R"({"task":"rpca","colour":1})")), ConfigError);
  EXPECT_THROW(parse_config(parse(R"({"mu":0.1})")), ConfigError);
  EXPECT_THROW(parse_config(parse(R"([1,2])")), ConfigError);
  EXPECT_THROW(parse_config(parse(R"({"task":"inpaint"})")), ConfigError);
  EXPECT_THROW(parse_config(parse(R"({"task":"denoise","mu":"big"})")), ConfigError);
}

TEST(Config, ConvexityViolationMessage) {
  const std::string msg = error_of(parse(R"({"task":"denoise","theta_er":4,"rho_er":3})"));
  EXPECT_NE(msg.find("convexity condition violated"), std::string::npos) << msg;
  EXPECT_EQ(error_of(parse(R"({"task":"denoise","theta_er":3,"rho_er":3})")), "");
  EXPECT_NE(error_of(parse(R"({"task":"denoise","theta_er":[1,2],"rho_er":[2]})")), "");
}

TEST(Config, VariantSelection) {
  const RunConfig a = parse_config(parse(R"({"task":"denoise","regularizer":["DVTV","STV"],
                                             "enhancement":["plain","er_ligme"]})"));
  EXPECT_EQ(a.variants, (std::vector<std::string>{"DVTV", "EL-DVTV", "STV", "EL-STV"}));
  EXPECT_THROW(parse_config(parse(R"({"task":"denoise","variants":"DVTV","regularizer":"STV"})")),
               ConfigError);
  EXPECT_THROW(parse_config(parse(R"({"task":"denoise","enhancement":"ligme"})")), ConfigError);
  EXPECT_NE(error_of(parse(R"({"task":"denoise","variants":"L-DSTV"})")).find("EL-DSTV"),
            std::string::npos);
  EXPECT_NE(error_of(parse(R"({"task":"rpca","variants":"DVTV"})")), "");
  EXPECT_NE(error_of(parse(R"({"task":"denoise","variants":"NN"})")), "");
}

TEST(Config, ResolveDefaults) {
  const RunConfig d = resolve(parse_config(parse(R"({"task":"denoise"})")));
  EXPECT_EQ(d.mu, denoise_mu_grid());
  EXPECT_EQ(d.theta_er, std::vector<double>{3.5});
  EXPECT_EQ(d.rho_er, d.theta_er);
  EXPECT_EQ(d.theta_ligme, std::vector<double>{0.99});
  EXPECT_EQ(*d.eps_stop, 1e-3);
  EXPECT_EQ(d.shifts, std::vector<int>{0});

  const RunConfig c = resolve(parse_config(parse(R"({"task":"cs"})")));
  EXPECT_EQ(c.theta_er, std::vector<double>{4.0});

  const RunConfig r = resolve(parse_config(parse(R"({"task":"rpca"})")));
  EXPECT_EQ(r.mu, std::vector<double>{1.0});
  EXPECT_EQ(r.lambda1, rpca_lambda_grid());
  EXPECT_EQ(r.theta_ligme, std::vector<double>{0.1});
  EXPECT_EQ(r.theta_er, std::vector<double>{1.0});
  EXPECT_EQ(r.shifts, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(*r.eps_stop, 1e-5);
  EXPECT_EQ(r.variants, (std::vector<std::string>{"NN", "L-NN", "ASNN", "EL-ASNN"}));

  const Problem p = make_problem(r, 1);
  const auto grid = expand_grid(r, p);
  ASSERT_EQ(grid.size(), 24u);
  for (const auto& v : grid) EXPECT_DOUBLE_EQ(v.eps_s, 80.0);
}

TEST(Config, RangeChecks) {
  for (const char* bad : {R"({"task":"denoise","mu":0})", R"({"task":"denoise","n":4})",
                          R"({"task":"rpca","shifts":3})", R"({"task":"denoise","shifts":1})",
                          R"({"task":"denoise","kappa":1})", R"({"task":"denoise","sampling_ratio":0})",
                          R"({"task":"rpca","p_noise":2})", R"({"task":"denoise","max_iters":0})"})
    EXPECT_NE(error_of(parse(bad)), "") << bad;
}

TEST(Config, HashIgnoresSeedAndOutputDir) {
  RunConfig a = resolve(parse_config(parse(R"({"task":"rpca"})")));
  RunConfig b = a;
  b.seed = 99;
  b.output_dir = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.mu = {0.5};
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, ResolvedConfigRoundTrips) {
  const RunConfig a = resolve(parse_config(parse(R"({"task":"cs","mu":[0.1,0.2],"seed":4})")));
  const fs::path path = scratch("resolved.json");
  write_text(path.string(), config_to_json(a).dump(2));
  const RunConfig b = resolve(load_config(path.string()));
  EXPECT_EQ(config_to_json(a).dump(), config_to_json(b).dump());
  EXPECT_THROW(load_config(scratch("missing.json").string()), IoError);
  write_text(scratch("broken.json").string(), "{\"task\": ");
  EXPECT_THROW(load_config(scratch("broken.json").string()), ConfigError);
}

TEST(Io, PpmRoundTrip) {
  const Index n = 5;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> level(0, 255);
  Vec x(3 * n * n);
  for (Index k = 0; k < x.size(); ++k) x[k] = level(rng) / 255.0;
  const fs::path path = scratch("round.ppm");
  write_ppm(path.string(), x, n);
  const Image img = read_ppm(path.string());
  EXPECT_EQ(img.n, n);
  EXPECT_LE((img.data - x).lpNorm<Eigen::Infinity>(), 1e-15);
  // The first raster byte is the red sample of the top-left pixel.
  const std::string raw = read_text(path.string());
  EXPECT_EQ(raw.substr(0, 2), "P6");
  EXPECT_EQ(static_cast<unsigned char>(raw[raw.size() - 3 * n * n]), std::lround(x[0] * 255));
  // The green sample of pixel (row 0, col 1) comes second in raster order.
  EXPECT_EQ(static_cast<unsigned char>(raw[raw.size() - 3 * n * n + 4]),
            std::lround(x[n * n + n] * 255));
}

TEST(Io, PpmErrors) {
  EXPECT_THROW(read_ppm(scratch("nothing.ppm").string()), IoError);
  write_text(scratch("p3.ppm").string(), "P3\n2 2\n255\n");
  EXPECT_THROW(read_ppm(scratch("p3.ppm").string()), IoError);
  write_text(scratch("rect.ppm").string(), "P6\n2 3\n255\n" + std::string(18, '\0'));
  EXPECT_THROW(read_ppm(scratch("rect.ppm").string()), IoError);
  write_text(scratch("short.ppm").string(), "P6\n# comment\n2 2\n255\n" + std::string(5, '\0'));
  EXPECT_THROW(read_ppm(scratch("short.ppm").string()), IoError);
  write_text(scratch("deep.ppm").string(), "P6\n2 2\n65535\n" + std::string(24, '\0'));
  EXPECT_THROW(read_ppm(scratch("deep.ppm").string()), IoError);
}

TEST(Io, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1e3);
  for (int t = 0; t < 1000; ++t) {
    const double v = g(rng);
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"x\""), "\"say \"\"x\"\"\"");
}

TEST(Io, ReportsAreReproducible) {
  const Problem p = make_denoise_problem(8, 3, 0.1, 1);
  VariantConfig c;
  c.regularizer = Regularizer::DVTV;
  c.mu = 0.1;
  SolverConfig sc;
  const auto a = run_grid(p, {c}, sc);
  const auto b = run_grid(p, {c}, sc);
  EXPECT_EQ(reports_to_json(a).dump(2), reports_to_json(b).dump(2));
  EXPECT_EQ(results_csv(a), results_csv(b));
  EXPECT_FALSE(report_to_json(a[0]).contains("seconds"));

  const std::string csv = results_csv(a);
  const std::string header = csv.substr(0, csv.find('\n'));
  EXPECT_EQ(std::count(header.begin(), header.end(), ',') + 1, Index(results_columns().size()));
  const std::string row = csv.substr(csv.find('\n') + 1);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), Index(results_columns().size()) - 1);

  const auto best = max_psnr_summary(a);
  const std::string table = comparison_csv(best, {0}, {"DVTV", "EL-DVTV"});
  EXPECT_EQ(table.substr(0, table.find('\n')), "variant,shift_0");
  EXPECT_NE(table.find("\nEL-DVTV,\n"), std::string::npos);
}

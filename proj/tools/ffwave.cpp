#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ffwave/ffwave.hpp"

namespace {

constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

constexpr const char* kOutputEnv = "FFWAVE_OUTPUT_DIR";

std::string env_output_dir() {
  const char* v = std::getenv(kOutputEnv);
  return v && *v ? std::string(v) : std::string();
}

void print_summary(const ffwave::Json& report, bool verbose) {
  for (const auto& [suite, body] : report.at("suites").items()) {
    std::cout << suite << ": " << body.at("status").get<std::string>();
    if (body.contains("reason")) std::cout << " (" << body.at("reason").get<std::string>() << ")";
    std::cout << "\n";
    if (body.contains("errors"))
      for (const auto& e : body.at("errors")) std::cout << "  error: " << e.get<std::string>() << "\n";
    for (const auto& [name, c] : body.at("checks").items()) {
      const std::string st = c.at("status").get<std::string>();
      if (!verbose && st != "fail") continue;
      std::cout << "  " << st << "  " << name;
      if (c.contains("value")) std::cout << " = " << c.at("value").dump();
      if (c.contains("tolerance")) std::cout << " (" << c.at("comparison").get<std::string>() << " " << c.at("tolerance").dump() << ")";
      if (c.contains("note")) std::cout << "  [" << c.at("note").get<std::string>() << "]";
      std::cout << "\n";
    }
  }
}

int cmd_validate(const std::string& path) {
  const ffwave::ScenarioConfig cfg = ffwave::parse_config(path);
  const ffwave::BuiltKernel k = ffwave::build_kernel(cfg);
  std::cout << path << ": valid\n"
            << "  interval [" << cfg.a << ", " << cfg.b << "], sizes";
  for (int n : cfg.sizes) std::cout << " " << n;
  std::cout << ", kernel " << k.kernel->family << " (d = " << k.kernel->dim << ")\n  suites";
  for (auto s : cfg.checks) std::cout << " " << ffwave::to_string(s);
  std::cout << "\n";
  return 0;
}

int cmd_run(const std::string& path, const std::string& out_flag, const std::string& dump, unsigned threads, bool verbose) {
  ffwave::ScenarioConfig cfg = ffwave::parse_config(path);
  if (threads) cfg.threads = threads;
  std::string out = cfg.output_dir;
  if (const std::string env = env_output_dir(); !env.empty()) out = env;
  if (!out_flag.empty()) out = out_flag;

  ffwave::ScenarioRunner runner(cfg);
  const ffwave::RunResult res = runner.run();
  const auto files = ffwave::write_outputs(res.report, out);

  if (!dump.empty()) {
    namespace fs = std::filesystem;
    for (std::size_t k = 0; k < runner.level_count(); ++k) {
      ffwave::Level& L = runner.level(k);
      const ffwave::TKernel& tk = runner.tplus(L);
      const std::string stem = (fs::path(out) / ("tkernel_N" + std::to_string(L.n))).string();
      if (dump == "binary") {
        std::ofstream os(stem + ".bin", std::ios::binary);
        ffwave::write_tkernel_binary(tk, os);
        std::cout << "wrote " << stem << ".bin\n";
      } else {
        std::ofstream os(stem + ".json");
        os << ffwave::tkernel_json(tk).dump() << "\n";
        std::cout << "wrote " << stem << ".json\n";
      }
    }
  }

  print_summary(res.report, verbose);
  for (const auto& f : files) std::cout << "wrote " << f << "\n";
  std::cout << (res.passed ? "PASS" : "FAIL") << "\n";
  return res.passed ? 0 : kExitFailed;
}

int cmd_export(const std::string& report_path, const std::string& kind_name, const std::string& out_file) {
  const ffwave::ExportKind kind = ffwave::export_kind_from_string(kind_name);
  const ffwave::Json report = ffwave::read_report(report_path);
  std::string path = out_file;
  if (path.empty()) {
    namespace fs = std::filesystem;
    std::string dir = env_output_dir();
    if (dir.empty()) dir = fs::path(report_path).parent_path().string();
    if (dir.empty()) dir = ".";
    fs::create_directories(dir);
    path = (fs::path(dir) / (kind_name + ".csv")).string();
  }
  if (path == "-") {
    ffwave::write_csv(report, kind, std::cout);
    return 0;
  }
  std::ofstream os(path);
  if (!os) throw ffwave::Error("cannot write '" + path + "'");
  ffwave::write_csv(report, kind, os);
  std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Friedrichs-Faddeev scattering: T-kernel, S-matrix and wave-operator checks"};
  app.set_version_flag("--version", std::string(ffwave::kVersion));
  app.require_subcommand(1);

  std::string config_path, report_path, out_dir, dump, kind, out_file;
  unsigned threads = 0;
  bool verbose = false;

  auto* run = app.add_subcommand("run", "Run the suites listed in a config and write report.json plus CSV files");
  run->add_option("config", config_path, "Scenario config file")->required();
  run->add_option("-o,--output-dir", out_dir,
                  std::string("Output directory (overrides ") + kOutputEnv + " and [output] directory)");
  run->add_option("--dump-tkernel", dump, "Also dump the plus-side T-kernel per size")->check(CLI::IsMember({"binary", "json"}));
  run->add_option("-j,--threads", threads, "Worker threads for column solves (0: all cores)");
  run->add_flag("-v,--verbose", verbose, "List every check, not only failures");

  auto* validate = app.add_subcommand("validate", "Parse and validate a config without running it");
  validate->add_option("config", config_path, "Scenario config file")->required();

  auto* exp = app.add_subcommand("export", "Write CSV plot data from a report");
  exp->add_option("report", report_path, "report.json written by 'run'")->required();
  exp->add_option("--kind", kind, "smatrix, ksvd or refinement")->required()->check(CLI::IsMember({"smatrix", "ksvd", "refinement"}));
  exp->add_option("-o,--output", out_file, "Output file ('-' for stdout); default <dir>/<kind>.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir, dump, threads, verbose);
    if (*validate) return cmd_validate(config_path);
    if (*exp) return cmd_export(report_path, kind, out_file);
  } catch (const ffwave::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ffwave::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

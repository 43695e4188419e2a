#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ffwave/scenario.hpp"

using namespace ffwave;

namespace {

const char* kMinimal = R"(
[grid]
a = 0
b = 1
sizes = [16]

[kernel]
family = free
)";

const char* kSeparable = R"(
[scenario]
name = unit
[grid]
a = 0
b = 1
sizes = [101, 201]
[kernel]
family = separable
profiles = [sin-bump]
powers = [2]
coefficients = [[0.5]]
[checks]
suites = [smatrix, waveop, refinement]
)";

ScenarioConfig cfg_from(const std::string& text) { return build_config(parse_config_text(text)); }

std::string error_of(const std::string& text) {
  try {
    cfg_from(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

Json strip_timing(Json j) {
  j.erase("timing");
  for (auto& [name, s] : j["suites"].items()) s.erase("seconds");
  return j;
}

const Json& separable_report() {
  static const Json r = run_scenario(cfg_from(kSeparable)).report;
  return r;
}

}  // namespace

TEST(ConfigParse, MinimalConfigUsesDefaults) {
  const ScenarioConfig c = cfg_from(std::string(kMinimal) + "[checks]\nsuites = [spectrum]\n");
  EXPECT_EQ(c.sizes, std::vector<int>{16});
  EXPECT_EQ(c.kernel.family, "free");
  EXPECT_EQ(c.line_count, 512);
  EXPECT_DOUBLE_EQ(c.line_half_width, 8.0);
  EXPECT_DOUBLE_EQ(c.tol("main_formula"), 5e-3);
  EXPECT_EQ(c.assess_from, 201);
}

TEST(ConfigParse, MultilineListsAndComments) {
  const ConfigSections s = parse_config_text(
      "[kernel]\n"
      "coefficients = [[0.4, 0.1],   # first row\n"
      "                [0.1, -0.3]]  ; second row\n"
      "name = \"a # b\"\n");
  const ConfigEntry& e = s.at("kernel").at("coefficients");
  EXPECT_EQ(e.line, 2);
  ASSERT_TRUE(e.value.is_list());
  EXPECT_EQ(std::get<std::vector<ConfigValue>>(e.value.data).size(), 2u);
  EXPECT_EQ(std::get<std::string>(s.at("kernel").at("name").value.data), "a # b");
}

TEST(ConfigParse, ErrorsCarryLineNumbers) {
  EXPECT_NE(error_of("[grid]\na = 0\nb = 1\nsizes = [16]\n[kernel]\nfamily = free\nfoo = 1\n").find("line 7: unknown key 'foo'"),
            std::string::npos);
  EXPECT_NE(error_of("[grid]\na = 1\nb = 0\nsizes = [16]\n[kernel]\nfamily = free\n").find("line 3: interval requires b > a"),
            std::string::npos);
  EXPECT_NE(error_of("x = 1\n").find("line 1: key outside of any section"), std::string::npos);
  EXPECT_NE(error_of("[grid]\nsizes = [16,\n").find("line 2: unterminated list"), std::string::npos);
  EXPECT_NE(error_of("[grid]\na = 0\na = 1\n").find("line 3: duplicate key 'a'"), std::string::npos);
}

TEST(ConfigParse, UnknownSectionListsValidNames) {
  const std::string e = error_of(std::string(kMinimal) + "[plots]\nwidth = 3\n");
  EXPECT_NE(e.find("unknown section [plots]"), std::string::npos);
  EXPECT_NE(e.find("tolerances"), std::string::npos);
}

TEST(ConfigParse, ErrorsAreAggregated) {
  const std::string e = error_of("[grid]\na = 0\nb = 1\nsizes = [16, 8, 4]\n[kernel]\nfamily = free\nbogus = 2\n[tolerances]\nmain_formula = -1\n");
  EXPECT_NE(e.find("strictly increasing"), std::string::npos);
  EXPECT_NE(e.find("bogus"), std::string::npos);
  EXPECT_NE(e.find("main_formula"), std::string::npos);
}

TEST(ConfigParse, KernelValidation) {
  const std::string base = "[grid]\na = 0\nb = 1\nsizes = [16]\n[kernel]\n";
  EXPECT_NE(error_of(base + "family = separable\nprofiles = [sin-bump, sin-bump]\ncoefficients = [[1, 2], [0, 1]]\n").find("symmetric"),
            std::string::npos);
  EXPECT_NE(error_of(base + "family = separable\nprofiles = [sin-bump]\ncoefficients = [[1]]\neigenvalue = 0.3\n").find("eigenvalue"),
            std::string::npos);
  EXPECT_FALSE(error_of(base + "family = embedded\neigenvalue = 0.3\n[checks]\nsuites = [refinement]\n").empty());
  EXPECT_THROW(build_kernel(cfg_from(base + "family = embedded\neigenvalue = 1.5\n")), ConfigError);
  EXPECT_THROW(parse_config("/nonexistent/ffwave.ini"), ConfigError);
}

TEST(Scenario, FreeSpectrumRunPasses) {
  ScenarioConfig c = cfg_from(std::string(kMinimal) + "[checks]\nsuites = [spectrum, smatrix]\n");
  const RunResult r = run_scenario(c);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.report["suites"]["spectrum"]["status"], "pass");
  EXPECT_EQ(r.report["suites"]["smatrix"]["checks"]["free_s_identity.N16"]["status"], "pass");
  EXPECT_FALSE(r.report["suites"].contains("waveop"));
}

TEST(Scenario, EmbeddedSuiteSkipsForSeparable) {
  const RunResult r = run_scenario(cfg_from(
      "[grid]\na = 0\nb = 1\nsizes = [32]\n[kernel]\nfamily = separable\nprofiles = [sin-bump]\ncoefficients = [[0.5]]\n"
      "[checks]\nsuites = [embedded]\n"));
  EXPECT_EQ(r.report["suites"]["embedded"]["status"], "skipped");
  EXPECT_TRUE(r.passed);
}

TEST(Scenario, RefinementTableAndPointers) {
  const Json& r = separable_report();
  EXPECT_TRUE(r["passed"].get<bool>());
  EXPECT_EQ(r["refinement"]["sizes"], Json::array({101, 201}));
  EXPECT_EQ(r["refinement"]["metrics"]["main_formula"].size(), 2u);
  const double mf = r.at(Json::json_pointer("/suites/waveop/checks/main_formula.N201/value")).get<double>();
  EXPECT_LE(mf, 5e-3);
  EXPECT_EQ(r.at(Json::json_pointer("/suites/waveop/checks/main_formula.N101/status")), "recorded");
  EXPECT_EQ(r.at(Json::json_pointer("/suites/refinement/checks/main_formula_ratio.N201/status")), "pass");
}

TEST(Scenario, DeterministicApartFromTiming) {
  const Json again = run_scenario(cfg_from(kSeparable)).report;
  EXPECT_EQ(strip_timing(again).dump(), strip_timing(separable_report()).dump());
}

TEST(Export, CsvKinds) {
  const Json& r = separable_report();
  std::ostringstream sm, kv, rf;
  write_csv(r, ExportKind::smatrix, sm);
  write_csv(r, ExportKind::ksvd, kv);
  write_csv(r, ExportKind::refinement, rf);
  EXPECT_EQ(sm.str().rfind("size,index,lambda,re_s_11,im_s_11,unitarity_defect\n", 0), 0u);
  const std::string smtext = sm.str();
  EXPECT_EQ(std::count(smtext.begin(), smtext.end(), '\n'), 1 + 101 + 201);
  EXPECT_EQ(kv.str().rfind("size,index,singular_value,relative\n", 0), 0u);
  EXPECT_NE(rf.str().find("\nmain_formula,201,"), std::string::npos);
  EXPECT_EQ(export_kind_from_string("ksvd"), ExportKind::ksvd);
  EXPECT_THROW(export_kind_from_string("tkernel"), ConfigError);
}

TEST(Export, MissingDataIsAPreconditionError) {
  Json r;
  r["suites"] = Json::object();
  std::ostringstream os;
  EXPECT_THROW(write_csv(r, ExportKind::refinement, os), PreconditionError);
  EXPECT_FALSE(report_has(r, ExportKind::smatrix));
}

TEST(Export, WriteOutputsCreatesFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "ffwave-unit-out";
  std::filesystem::remove_all(dir);
  const auto files = write_outputs(separable_report(), dir.string());
  EXPECT_EQ(files.size(), 4u);
  EXPECT_EQ(read_report((dir / "report.json").string())["config"], separable_report()["config"]);
  std::filesystem::remove_all(dir);
}

TEST(Json, NonFiniteNumbersRoundTrip) {
  EXPECT_EQ(json_number(INFINITY), "inf");
  EXPECT_TRUE(std::isinf(number_from_json(json_number(INFINITY))));
  EXPECT_TRUE(std::isnan(number_from_json(json_number(NAN))));
  EXPECT_EQ(number_from_json(json_number(0.25)), 0.25);
}

TEST(SuiteReportTest, StatusLogic) {
  SuiteReport rep("x");
  rep.check("a", 1e-4, 1e-3, Comparison::at_most, 101, false);
  EXPECT_EQ(rep.status(), Status::pass);
  rep.check("b", 5.0, 3.0, Comparison::at_least, 201);
  EXPECT_EQ(rep.status(), Status::pass);
  rep.check("c", 2.0, 1.0, Comparison::equals);
  EXPECT_EQ(rep.status(), Status::fail);
  const Json j = rep.to_json(0.0);
  EXPECT_EQ(j["checks"]["a.N101"]["status"], "recorded");
  EXPECT_EQ(j["checks"]["b.N201"]["comparison"], ">=");
}

TEST(TKernelDumpTest, BinaryAndJsonRoundTrip) {
  Eigen::VectorXcd dir(2);
  dir << 0.6, cplx(0.0, 0.8);
  Eigen::MatrixXcd C(1, 1);
  C(0, 0) = 0.5;
  const KernelPtr k = build_separable_kernel({make_profile(ProfileShape::sin_bump, 0.0, 1.0, 2.0, dir)}, C);
  const TKernel tk = build_T_kernel(tabulate(k, build_grid(0.0, 1.0, 12, QuadratureScheme::gauss_legendre)), Side::minus);

  std::stringstream bin;
  write_tkernel_binary(tk, bin);
  EXPECT_EQ(bin.str().size(), 8 + 3 * 4 + 8 + 12 * 8 + 12 * 12 * 4 * 16);
  // First block entry follows the header and nodes: (lambda 0, mu 0, p 0, q 0).
  double re = 0.0;
  std::memcpy(&re, bin.str().data() + 8 + 12 + 8 + 12 * 8, 8);
  EXPECT_EQ(re, tk.blocks(0, 0).real());
  const TKernelDump b = read_tkernel_binary(bin);
  EXPECT_EQ(b.dim, 2);
  EXPECT_EQ(b.side, Side::minus);
  EXPECT_TRUE(b.blocks == tk.blocks);

  const TKernelDump j = tkernel_from_json(Json::parse(tkernel_json(tk).dump()));
  EXPECT_TRUE(j.blocks == tk.blocks);
  EXPECT_EQ(j.nodes, b.nodes);

  std::stringstream bad("NOTATKERNEL");
  EXPECT_THROW(read_tkernel_binary(bad), ShapeError);
}

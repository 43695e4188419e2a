// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ffwave/ffwave.hpp"
#include "oracles.hpp"

using namespace ffwave;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

KernelPtr sin2_kernel(double c) {
  Eigen::MatrixXcd C(1, 1);
  C(0, 0) = c;
  return build_separable_kernel({make_profile(ProfileShape::sin_bump, 0.0, 1.0, 2.0, unit_vector(1, 0))}, C);
}

struct Level {
  int n = 0;
  KernelTable table;
  TKernel tk;
  ScatteringData sd;
  DenseOperator W, Wp, H;
  KOperator K;
  LineMultiplier St;
  TestPanel panel;
};

std::unique_ptr<Level> build_level(const KernelPtr& k, int n, const LinePtr& line, const std::vector<double>& excluded) {
  auto L = std::make_unique<Level>();
  L->n = n;
  L->table = tabulate(k, build_grid(k->a, k->b, n, QuadratureScheme::gauss_legendre));
  L->tk = build_T_kernel(L->table, Side::plus);
  L->sd = scattering_matrix(L->tk);
  L->W = assemble_Wminus_stationary(L->tk);
  L->Wp = assemble_Wplus(L->W, L->sd);
  L->H = assemble_H(L->table);
  L->K = assemble_K(L->tk);
  L->St = assemble_S_tilde(L->sd, line);
  L->panel = build_test_panel(L->table.grid, k->dim, excluded);
  return L;
}

class Acceptance {
 public:
  Acceptance() : line_(build_line_grid(8.0, 512)), tanh_(line_, 4), embedded_(default_embedded_scenario(0.0, 1.0)) {}

  int run() {
    criterion(1, "free case: s = I, K = 0, W+- = I", [&] { return c1(); });
    criterion(2, "Fredholm vs direct resolvent (N=41, eps=1e-2)", [&] { return c2(); });
    criterion(3, "closed-form rank-one T-kernel (N=201)", [&] { return c3(); });
    criterion(4, "unitarity of s and its refinement 101 -> 201", [&] { return c4(); });
    criterion(5, "main formula on the panel (Nx=512, L=8)", [&] { return c5(); });
    criterion(6, "compactness of K (separable and embedded)", [&] { return c6(); });
    criterion(7, "embedded eigenvalue certification and conditioning", [&] { return c7(); });
    criterion(8, "intertwining and W+^* W- = S", [&] { return c8(); });
    criterion(9, "continuity of s near the embedded eigenvalue", [&] { return c9(); });
    criterion(10, "tanh multiplier vs sinh convolution", [&] { return c10(); });
    std::printf("%d/%d criteria passed\n", passed_, total_);
    return passed_ == total_ ? 0 : 1;
  }

 private:
  struct Outcome {
    bool pass = false;
    std::string detail;
  };

  void criterion(int id, const char* title, const std::function<Outcome()>& body) {
    ++total_;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (o.pass) ++passed_;
    std::printf("C%-2d %s  %s  [%s] (%.2f s)\n", id, o.pass ? "PASS" : "FAIL", title, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }

  static std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
  }

  Level& separable(int n) {
    auto& slot = sep_[n];
    if (!slot) slot = build_level(sin2_kernel(0.5), n, line_, {});
    return *slot;
  }
  Level& embedded(int n) {
    auto& slot = emb_[n];
    if (!slot) slot = build_level(embedded_.kernel, n, line_, {embedded_.eigenvalue});
    return *slot;
  }

  Outcome c1() {
    const auto t0 = Clock::now();
    const KernelPtr k = build_zero_kernel(0.0, 1.0, 2);
    const auto L = build_level(k, 201, line_, {});
    const Eigen::Index nd = L->W.size();
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(nd, nd);
    double worst = 0.0;
    for (const auto& s : L->sd.matrices) worst = std::max(worst, (s - Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff());
    worst = std::max(worst, L->K.K.entries.cwiseAbs().maxCoeff());
    worst = std::max(worst, (L->W.entries - I).cwiseAbs().maxCoeff());
    worst = std::max(worst, (L->Wp.entries - I).cwiseAbs().maxCoeff());
    const double secs = seconds_since(t0);
    return {worst <= 1e-12 && secs < 1.0, "max deviation " + fmt("%.2e", worst) + ", " + fmt("%.3f s", secs)};
  }

  Outcome c2() {
    const auto t0 = Clock::now();
    const KernelTable t = tabulate(sin2_kernel(0.5), build_grid(0.0, 1.0, 41, QuadratureScheme::gauss_legendre));
    const double err = (direct_T_offaxis(t, 1e-2) - fredholm_T_offaxis(t, 1e-2)).cwiseAbs().maxCoeff();
    const double secs = seconds_since(t0);
    return {err <= 1e-8 && secs < 10.0, "max |T_fredholm - T_direct| " + fmt("%.2e", err) + ", " + fmt("%.3f s", secs)};
  }

  Outcome c3() {
    const double c = 0.5;
    Level& L = separable(201);
    auto g = [](double x) { return oracle::sin2(x, 0.0, 1.0); };
    const EnergyGrid& grid = *L.table.grid;
    double worst = 0.0;
    for (int j = 0; j < grid.size(); ++j) {
      const double mu = grid.node(j);
      const cplx I = oracle::boundary_I(g, 0.0, 1.0, mu);
      for (int i = 0; i < grid.size(); ++i)
        worst = std::max(worst, std::abs(L.tk.blocks(i, j) - c * g(grid.node(i)) * g(mu) / (1.0 + c * I)));
    }
    return {worst <= 1e-6, "max error " + fmt("%.2e", worst)};
  }

  Outcome c4() {
    const double u101 = check_unitarity(separable(101).sd).max_defect;
    const double u201 = check_unitarity(separable(201).sd).max_defect;
    const double ratio = u201 > 0.0 ? u101 / u201 : INFINITY;
    const bool ok = u201 <= 1e-6 && ratio >= 4.0;
    std::string d = "defect N=201 " + fmt("%.2e", u201) + ", N=101 " + fmt("%.2e", u101) + ", improvement " + fmt("%.2f", ratio) + "x";
    if (!ok && u201 <= 1e-12) d += "; the discrete s is unitary to rounding at every N, so no refinement gain is observable";
    return {ok, d};
  }

  Outcome c5() {
    const auto t0 = Clock::now();
    const double m201 = verify_main_formula(separable(201).W, separable(201).St, separable(201).K, tanh_, separable(201).panel).residual;
    const double m401 = verify_main_formula(separable(401).W, separable(401).St, separable(401).K, tanh_, separable(401).panel).residual;
    const double secs = seconds_since(t0);
    return {m201 <= 5e-3 && m401 < m201 && secs < 180.0,
            "N=201 " + fmt("%.2e", m201) + ", N=401 " + fmt("%.2e", m401) + ", " + fmt("%.1f s", secs)};
  }

  Outcome c6() {
    bool ok = true;
    std::string d;
    for (bool emb : {false, true}) {
      Level& a = emb ? embedded(201) : separable(201);
      Level& b = emb ? embedded(401) : separable(401);
      const double rel = std::abs(b.K.hs_norm - a.K.hs_norm) / a.K.hs_norm;
      const double ratio = b.K.singular_values.size() >= 20 ? b.K.singular_values[19] / b.K.singular_values[0] : INFINITY;
      const double ratio_a = a.K.singular_values[19] / a.K.singular_values[0];
      ok = ok && rel <= 0.05 && ratio <= 0.1 && ratio_a <= 0.1;
      d += std::string(emb ? "; embedded" : "separable") + ": |K|_HS " + fmt("%.4g", a.K.hs_norm) + " -> " + fmt("%.4g", b.K.hs_norm) +
           " (" + fmt("%.1e", rel) + "), s20/s1 " + fmt("%.1e", std::max(ratio, ratio_a));
    }
    return {ok, d};
  }

  Outcome c7() {
    const double ln = embedded_.eigenvalue;
    Level& L = embedded(201);
    const SpectralData sp = eigendecompose(assemble_H(L.table, Weighting::symmetrized));
    if (sp.embedded_set.size() != 1) return {false, "expected one certified embedded eigenvalue, found " + std::to_string(sp.embedded_set.size())};
    const int k = sp.embedded_set.front();
    const double ev_err = std::abs(sp.eigenvalues(k) - ln);
    const RegularityReport reg = check_eigenfunction_regularity(embedded_, L.table.grid);
    const std::vector<Eigen::VectorXcd> fs = {sp.eigenvectors.col(k)};
    const Eigen::VectorXcd rhs = projection_P(sp).entries * L.table.values.col(L.n / 2);
    double proj = 0.0, unproj = INFINITY;
    for (Side s : {Side::plus, Side::minus}) {
      const BoundaryPoint pt = BoundaryPoint::on_axis(ln, s);
      proj = std::max(proj, solve_projected(L.table, pt, fs, rhs).condition);
      unproj = std::min(unproj, fredholm_condition(L.table, pt));
    }
    const bool ok = ev_err <= 1e-6 && reg.vf_at_eigenvalue <= 1e-10 && reg.derivative_identity <= 1e-6 && proj <= 1e4 && unproj >= 1e8;
    return {ok, "|lambda - lambda_n| " + fmt("%.1e", ev_err) + ", |Vf| " + fmt("%.1e", reg.vf_at_eigenvalue) + ", |f + V'f| " +
                    fmt("%.1e", reg.derivative_identity) + ", cond projected " + fmt("%.1f", proj) + ", unprojected " + fmt("%.1e", unproj)};
  }

  Outcome c8() {
    Level& a = separable(101);
    Level& b = separable(201);
    const IdentityChecks ia = check_wave_identities(a.W, a.Wp, a.H, a.sd, a.panel);
    const IdentityChecks ib = check_wave_identities(b.W, b.Wp, b.H, b.sd, b.panel);
    const double ri = ia.intertwining / ib.intertwining, rs = ia.s_identity / ib.s_identity;
    const bool ok = ib.intertwining <= 1e-3 && ib.s_identity <= 1e-3 && ri >= 3.0 && rs >= 3.0;
    return {ok, "intertwining " + fmt("%.2e", ib.intertwining) + " (x" + fmt("%.1f", ri) + "), W+^*W- - S " + fmt("%.2e", ib.s_identity) +
                    " (x" + fmt("%.1f", rs) + ")"};
  }

  Outcome c9() {
    bool ok = true;
    std::string d;
    for (int n : {101, 201, 401}) {
      const ContinuityReport r = check_continuity(embedded(n).sd, {embedded_.eigenvalue});
      const ContinuityFit& f = r.local.front();
      const double bound = 2.0;  // 2 sqrt(d) at d = 1
      const bool here = f.max_modulus <= bound && (f.flat || f.exponent >= 0.4);
      ok = ok && here;
      d += (d.empty() ? "" : "; ") + std::string("N=") + std::to_string(n) + " modulus " + fmt("%.2e", f.max_modulus) + ", exponent " +
           fmt("%.2f", f.exponent);
    }
    return {ok, d};
  }

  Outcome c10() {
    double worst = 0.0;
    for (int n : {201, 401}) worst = std::max(worst, tanh_cross_check(tanh_, separable(n).table.grid, 1, separable(n).panel));
    return {worst <= 1e-6, "max relative difference " + fmt("%.2e", worst)};
  }

  LinePtr line_;
  TanhMultiplier tanh_;
  EmbeddedScenario embedded_;
  std::map<int, std::unique_ptr<Level>> sep_, emb_;
  int passed_ = 0, total_ = 0;
};

}  // namespace

int main() { return Acceptance().run(); }

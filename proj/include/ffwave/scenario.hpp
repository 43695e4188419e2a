#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ffwave/config.hpp"
#include "ffwave/oracles.hpp"
#include "ffwave/report.hpp"
#include "ffwave/scattering.hpp"
#include "ffwave/spectral.hpp"
#include "ffwave/wave_operators.hpp"

namespace ffwave {

/// Hölder fit of (lambda, mu) -> t(lambda, mu, mu + i0) from diagonal strides
/// 1 to 4; nodes within `radius` of an excluded energy are skipped.
inline ContinuityFit fit_t_kernel_holder(const TKernel& tk, const std::vector<double>& excluded, double radius) {
  const EnergyGrid& g = *tk.grid;
  const int n = tk.size();
  auto blocked = [&](double x) {
    for (double e : excluded)
      if (std::abs(x - e) < radius) return true;
    return false;
  };
  std::vector<double> gaps, omegas;
  ContinuityFit fit;
  for (int stride : {1, 2, 3, 4}) {
    double om = 0.0, gap = 0.0;
    for (int i = 0; i + stride < n; ++i) {
      if (blocked(g.node(i)) || blocked(g.node(i + stride))) continue;
      for (int j = 0; j + stride < n; ++j) {
        if (blocked(g.node(j)) || blocked(g.node(j + stride))) continue;
        const double v = (tk.block(i + stride, j + stride) - tk.block(i, j)).norm();
        if (v > om) {
          om = v;
          gap = g.node(i + stride) - g.node(i) + g.node(j + stride) - g.node(j);
        }
      }
    }
    if (stride == 1) fit.max_modulus = om;
    if (om > 0.0 && gap > 0.0) {
      gaps.push_back(gap);
      omegas.push_back(om);
    }
  }
  fit.points = static_cast<int>(gaps.size());
  if (gaps.size() < 2) {
    fit.flat = true;
    return fit;
  }
  fit.exponent = loglog_fit(gaps, omegas).first;
  fit.constant = omegas.front() / std::pow(gaps.front(), fit.exponent);
  return fit;
}

/// Max |<u_k, u_l>_w - delta_kl| over the eigenvector basis.
inline double eigenvector_gram_defect(const SpectralData& spec) {
  const Eigen::VectorXd w = expanded_weights(*spec.grid, spec.dim);
  const Eigen::MatrixXcd G = spec.eigenvectors.adjoint() * w.asDiagonal() * spec.eigenvectors;
  return (G - Eigen::MatrixXcd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

/// Distance by which the spectrum leaves [a - |V|, b + |V|] (0 when inside).
inline double spectral_bound_violation(const SpectralData& spec, const KernelTable& table) {
  const DenseOperator Vs = assemble_V(table, Weighting::symmetrized);
  const double vnorm = Vs.entries.size() ? Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(Vs.entries, Eigen::EigenvaluesOnly)
                                               .eigenvalues()
                                               .cwiseAbs()
                                               .maxCoeff()
                                         : 0.0;
  const double lo = spec.grid->a() - vnorm, hi = spec.grid->b() + vnorm;
  const double tol = 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  double worst = 0.0;
  for (Eigen::Index k = 0; k < spec.eigenvalues.size(); ++k) {
    const double e = spec.eigenvalues(k);
    worst = std::max({worst, lo - tol - e, e - hi - tol});
  }
  return worst;
}

/// All artifacts for one grid size, computed on first use.
struct Level {
  int n = 0;
  GridPtr grid;
  KernelTable table;
  std::optional<SpectralData> spec;
  std::optional<TKernel> tplus, tminus;
  std::optional<ScatteringData> sd;
  std::optional<DenseOperator> W, Wp, H, T;
  std::optional<KOperator> K;
  std::optional<LineMultiplier> St;
  std::optional<TestPanel> panel;
  std::optional<IdentityChecks> identities;
  std::optional<FormulaCheck> main_formula, corollary;
  std::optional<UnitarityReport> unitarity;
  std::optional<double> cauchy_conj, tanh_cross, closed_form;
};

struct RunResult {
  Json report;
  bool passed = false;
};

class ScenarioRunner {
 public:
  explicit ScenarioRunner(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
    threads_ = cfg_.threads ? cfg_.threads : default_thread_count();
    {
      Stage s(*this, "kernel");
      built_ = build_kernel(cfg_);
    }
    line_ = build_line_grid(cfg_.line_half_width, cfg_.line_count);
    tanh_ = std::make_unique<TanhMultiplier>(line_, cfg_.fft_padding);
    for (int n : cfg_.sizes) {
      Stage s(*this, "grid");
      auto L = std::make_unique<Level>();
      L->n = n;
      L->grid = build_grid(cfg_.a, cfg_.b, n, cfg_.scheme);
      L->table = tabulate(built_.kernel, L->grid);
      levels_.push_back(std::move(L));
    }
  }

  const ScenarioConfig& config() const { return cfg_; }
  const KernelPtr& kernel() const { return built_.kernel; }

  RunResult run() {
    const auto t0 = std::chrono::steady_clock::now();
    Json suites = Json::object();
    bool all_ok = true;
    // Dependency order, independent of the order listed in the config.
    for (const auto& [suite, name] : suite_names()) {
      if (!cfg_.wants(suite)) continue;
      SuiteReport rep(name);
      const auto s0 = std::chrono::steady_clock::now();
      try {
        switch (suite) {
          case Suite::spectrum: suite_spectrum(rep); break;
          case Suite::tkernel: suite_tkernel(rep); break;
          case Suite::smatrix: suite_smatrix(rep); break;
          case Suite::waveop: suite_waveop(rep); break;
          case Suite::embedded: suite_embedded(rep); break;
          case Suite::refinement: suite_refinement(rep); break;
        }
      } catch (const ConditioningError& e) {
        rep.error(std::string(e.what()) + " (condition " + std::to_string(e.condition()) + ")");
      } catch (const Error& e) {
        rep.error(e.what());
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
      suites[name] = rep.to_json(secs);
      all_ok = all_ok && rep.status() != Status::fail;
    }

    Json report;
    report["tool"] = "ffwave";
    report["version"] = kVersion;
    report["passed"] = all_ok;
    report["config"] = config_echo();
    report["kernel"] = kernel_summary();
    report["suites"] = suites;
    if (!refinement_.is_null()) report["refinement"] = refinement_;
    if (!data_.is_null()) report["data"] = data_;
    Json timing = Json::object();
    for (const auto& [k, v] : stage_seconds_) timing[k] = v;
    timing["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report["timing"] = timing;
    return {report, all_ok};
  }

  // Artifact accessors (lazy).
  Level& level(std::size_t k) { return *levels_.at(k); }
  std::size_t level_count() const { return levels_.size(); }

  const SpectralData& spec(Level& L) {
    if (!L.spec) {
      Stage s(*this, "spectral");
      ClassifierSettings cs;
      cs.tol_embed = cfg_.tol("embed_certification");
      L.spec = eigendecompose(assemble_H(L.table, Weighting::symmetrized), cs);
    }
    return *L.spec;
  }
  const TKernel& tplus(Level& L) {
    if (!L.tplus) {
      Stage s(*this, "fredholm");
      TKernelOptions opt;
      opt.threads = threads_;
      L.tplus = build_T_kernel(L.table, Side::plus, opt);
    }
    return *L.tplus;
  }
  const TKernel& tminus(Level& L) {
    if (!L.tminus) {
      Stage s(*this, "fredholm");
      TKernelOptions opt;
      opt.threads = threads_;
      L.tminus = build_T_kernel(L.table, Side::minus, opt);
    }
    return *L.tminus;
  }
  const ScatteringData& sd(Level& L) {
    if (!L.sd) {
      const TKernel& tk = tplus(L);
      Stage s(*this, "scattering");
      L.sd = scattering_matrix(tk);
    }
    return *L.sd;
  }
  const DenseOperator& W(Level& L) {
    if (!L.W) {
      const TKernel& tk = tplus(L);
      Stage s(*this, "waveop");
      L.W = assemble_Wminus_stationary(tk);
    }
    return *L.W;
  }
  const DenseOperator& Wp(Level& L) {
    if (!L.Wp) {
      const DenseOperator& w = W(L);
      const ScatteringData& s = sd(L);
      L.Wp = assemble_Wplus(w, s);
    }
    return *L.Wp;
  }
  const KOperator& K(Level& L) {
    if (!L.K) {
      const TKernel& tk = tplus(L);
      Stage s(*this, "waveop");
      L.K = assemble_K(tk);
    }
    return *L.K;
  }
  const LineMultiplier& St(Level& L) {
    if (!L.St) L.St = assemble_S_tilde(sd(L), line_);
    return *L.St;
  }
  const TestPanel& panel(Level& L) {
    if (!L.panel) L.panel = build_test_panel(L.grid, cfg_.kernel.dim, excluded_energies(L));
    return *L.panel;
  }
  const IdentityChecks& identities(Level& L) {
    if (!L.identities) {
      if (!L.H) L.H = assemble_H(L.table, Weighting::plain);
      const auto& w = W(L);
      const auto& wp = Wp(L);
      const auto& s = sd(L);
      const auto& p = panel(L);
      Stage st(*this, "waveop");
      L.identities = check_wave_identities(w, wp, *L.H, s, p);
    }
    return *L.identities;
  }
  const FormulaCheck& main_formula(Level& L) {
    if (!L.main_formula) {
      const auto& w = W(L);
      const auto& st = St(L);
      const auto& k = K(L);
      const auto& p = panel(L);
      Stage s(*this, "waveop");
      L.main_formula = verify_main_formula(w, st, k, *tanh_, p);
    }
    return *L.main_formula;
  }
  const FormulaCheck& corollary(Level& L) {
    if (!L.corollary) {
      const auto& wp = Wp(L);
      const auto& s = sd(L);
      const auto& st = St(L);
      const auto& k = K(L);
      const auto& p = panel(L);
      Stage stg(*this, "waveop");
      L.corollary = verify_corollary(wp, s, st, k, *tanh_, p);
    }
    return *L.corollary;
  }
  const UnitarityReport& unitarity(Level& L) {
    if (!L.unitarity) L.unitarity = check_unitarity(sd(L));
    return *L.unitarity;
  }
  double cauchy_conjugation(Level& L) {
    if (!L.cauchy_conj) {
      if (!L.T) L.T = cauchy_T(L.grid, cfg_.kernel.dim);
      L.cauchy_conj = cauchy_conjugation_residual(*L.T, *tanh_, panel(L), line_);
    }
    return *L.cauchy_conj;
  }
  double tanh_cross(Level& L) {
    if (!L.tanh_cross) L.tanh_cross = tanh_cross_check(*tanh_, L.grid, cfg_.kernel.dim, panel(L));
    return *L.tanh_cross;
  }
  /// Closed-form comparison for a scalar rank-one separable kernel (empty otherwise).
  std::optional<double> closed_form(Level& L) {
    if (!rank_one_scalar()) return std::nullopt;
    if (!L.closed_form) {
      const TKernel& tk = tplus(L);
      Stage s(*this, "oracle");
      const Profile g = make_profile(cfg_.kernel.profiles[0].shape, cfg_.a, cfg_.b, cfg_.kernel.profiles[0].power,
                                     cfg_.kernel.profiles[0].direction);
      const double c = cfg_.kernel.coefficients(0, 0).real();
      double err = 0.0;
      for (int j = 0; j < L.n; ++j) {
        const double mu = L.grid->node(j);
        const cplx I = boundary_integral(g, mu, 1e-11);
        for (int i = 0; i < L.n; ++i)
          err = std::max(err, std::abs(tk.blocks(i, j) - rank_one_t(g, c, L.grid->node(i), mu, I)));
      }
      L.closed_form = err;
    }
    return L.closed_form;
  }

  bool assessed(int n) const {
    const int top = cfg_.sizes.back();
    return n >= cfg_.assess_from || (top < cfg_.assess_from && n == top);
  }

 private:
  struct Stage {
    ScenarioRunner& r;
    std::string name;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    Stage(ScenarioRunner& runner, std::string n) : r(runner), name(std::move(n)) {}
    ~Stage() { r.stage_seconds_[name] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
  };

  bool is_free() const { return cfg_.kernel.family == "free"; }
  bool is_embedded() const { return built_.embedded.has_value(); }
  bool rank_one_scalar() const {
    return cfg_.kernel.family == "separable" && cfg_.kernel.dim == 1 && cfg_.kernel.profiles.size() == 1;
  }

  std::vector<double> excluded_energies(Level& L) {
    std::vector<double> ex;
    if (is_embedded()) ex.push_back(built_.embedded->eigenvalue);
    const SpectralData& sp = spec(L);
    for (int k : sp.embedded_set) ex.push_back(sp.eigenvalues(k));
    return ex;
  }

  Json config_echo() const {
    Json j;
    j["name"] = cfg_.name;
    j["a"] = cfg_.a;
    j["b"] = cfg_.b;
    j["sizes"] = cfg_.sizes;
    j["scheme"] = std::string(to_string(cfg_.scheme));
    j["line"] = {{"half_width", cfg_.line_half_width}, {"count", cfg_.line_count}, {"padding", cfg_.fft_padding}};
    Json k;
    k["family"] = cfg_.kernel.family;
    k["dim"] = cfg_.kernel.dim;
    if (cfg_.kernel.family == "separable") {
      Json ps = Json::array();
      for (const auto& p : cfg_.kernel.profiles) {
        Json dir = Json::array();
        for (Eigen::Index i = 0; i < p.direction.size(); ++i) dir.push_back(p.direction(i).real());
        ps.push_back({{"shape", std::string(to_string(p.shape))}, {"power", p.power}, {"direction", dir}});
      }
      k["profiles"] = ps;
      Json C = Json::array();
      for (Eigen::Index i = 0; i < cfg_.kernel.coefficients.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < cfg_.kernel.coefficients.cols(); ++c) row.push_back(cfg_.kernel.coefficients(i, c).real());
        C.push_back(row);
      }
      k["coefficients"] = C;
    }
    if (cfg_.kernel.family == "embedded") {
      k["eigenvalue"] = cfg_.kernel.eigenvalue;
      k["eigenfunction"] = std::string(to_string(cfg_.kernel.eigenfunction.shape));
      k["eigenfunction_power"] = cfg_.kernel.eigenfunction.power;
    }
    j["kernel"] = k;
    Json checks = Json::array();
    for (Suite s : cfg_.checks) checks.push_back(to_string(s));
    j["checks"] = checks;
    j["assess_from"] = cfg_.assess_from;
    j["refinement_metrics"] = cfg_.refinement_metrics;
    j["regularization"] = cfg_.regularization;
    Json tol = Json::object();
    for (const auto& [key, v] : cfg_.tolerances) tol[key] = v;
    j["tolerances"] = tol;
    j["seed"] = cfg_.seed;
    return j;
  }

  Json kernel_summary() {
    Json j;
    const OperatorKernel& k = *built_.kernel;
    j["family"] = k.family;
    j["dim"] = k.dim;
    j["differentiable"] = k.differentiable;
    j["low_rank"] = k.factor_form.has_value();
    if (is_embedded()) {
      j["embedded_eigenvalue"] = built_.embedded->eigenvalue;
      j["coupling"] = built_.embedded->coupling;
      j["construction_residual"] = built_.embedded->construction_residual;
    }
    return j;
  }

  // ---------------------------------------------------------------- suites

  void suite_spectrum(SuiteReport& rep) {
    for (auto& Lp : levels_) {
      Level& L = *Lp;
      const SpectralData& sp = spec(L);
      const DenseOperator Hs = assemble_H(L.table, Weighting::symmetrized);
      const double scale = std::max(1.0, Hs.entries.cwiseAbs().maxCoeff());
      rep.check("hermitian_defect", hermitian_defect(Hs.entries) / scale, 1e-12, Comparison::at_most, L.n);
      rep.check("gram_defect", eigenvector_gram_defect(sp), 1e-10, Comparison::at_most, L.n);
      rep.check("spectral_bounds", spectral_bound_violation(sp, L.table), 0.0, Comparison::at_most, L.n);
      const int below = sp.count(EigenClass::discrete_below), above = sp.count(EigenClass::discrete_above);
      const int embedded = static_cast<int>(sp.embedded_set.size());
      rep.record("discrete_below", below, L.n);
      rep.record("discrete_above", above, L.n);
      if (is_free()) {
        double dev = 0.0;
        Eigen::VectorXd nodes = expanded_nodes(*L.grid, cfg_.kernel.dim);
        std::sort(nodes.data(), nodes.data() + nodes.size());
        dev = (sp.eigenvalues - nodes).cwiseAbs().maxCoeff();
        rep.check("free_eigenvalues_at_nodes", dev, cfg_.tol("free_exact"), Comparison::at_most, L.n);
        rep.check("embedded_count", embedded, 0, Comparison::equals, L.n);
        rep.check("discrete_count", below + above, 0, Comparison::equals, L.n);
      } else if (is_embedded()) {
        rep.check("embedded_count", embedded, 1, Comparison::equals, L.n);
        double err = INFINITY;
        for (int k : sp.embedded_set) err = std::min(err, std::abs(sp.eigenvalues(k) - built_.embedded->eigenvalue));
        rep.check("embedded_eigenvalue_error", err, cfg_.tol("embedded_eigenvalue"), Comparison::at_most, L.n);
      } else {
        rep.record("embedded_count", embedded, L.n);
      }
      Json d;
      Json evs = Json::array(), cls = Json::array(), res = Json::array();
      for (Eigen::Index k = 0; k < sp.eigenvalues.size(); ++k) {
        if (sp.classes[k] == EigenClass::continuum_artifact) continue;
        evs.push_back(sp.eigenvalues(k));
        cls.push_back(std::string(to_string(sp.classes[k])));
        res.push_back(sp.residuals[k]);
      }
      d["eigenvalues"] = evs;
      d["classification"] = cls;
      d["residuals"] = res;
      d["continuum_artifacts"] = sp.count(EigenClass::continuum_artifact);
      data_["spectrum"]["N" + std::to_string(L.n)] = d;
    }
  }

  void suite_tkernel(SuiteReport& rep) {
    const bool smooth = built_.kernel->differentiable;
    {
      const HolderEstimate he = estimate_holder(*built_.kernel, cfg_.holder_samples, cfg_.seed);
      if (he.no_data)
        rep.record("kernel_holder_exponent", 1.0, 0, "kernel vanishes on all samples");
      else
        rep.record("kernel_holder_exponent", he.exponent, 0, "fit residual " + std::to_string(he.fit_residual));
    }
    {
      Stage s(*this, "oracle");
      const GridPtr g41 = build_grid(cfg_.a, cfg_.b, 41, cfg_.scheme);
      const KernelTable t41 = tabulate(built_.kernel, g41);
      for (double eps : {1e-2, 1e-3}) {
        const double diff = (fredholm_T_offaxis(t41, eps) - direct_T_offaxis(t41, eps)).cwiseAbs().maxCoeff();
        rep.check(eps == 1e-2 ? "fredholm_vs_direct" : "fredholm_vs_direct_eps1e-3", diff, cfg_.tol("fredholm_direct"),
                  Comparison::at_most, 41);
      }
    }
    const double radius = 1e-2 * (cfg_.b - cfg_.a);
    for (auto& Lp : levels_) {
      Level& L = *Lp;
      const TKernel& tk = tplus(L);
      const int d = tk.dim;
      rep.record("max_condition", tk.max_condition, L.n);
      rep.record("boundary_warnings", static_cast<double>(tk.warnings.size()), L.n);
      if (is_free()) rep.check("free_t_zero", tk.blocks.cwiseAbs().maxCoeff(), cfg_.tol("free_exact"), Comparison::at_most, L.n);

      // t(lambda, mu, z) = t(mu, lambda, z-bar)^* at z = mu_j + i0, a few columns.
      double herm = 0.0;
      for (int q = 1; q <= 5; ++q) {
        const int j = q * (L.n - 1) / 6;
        const Eigen::MatrixXcd Tm = solve_T_full(L.table, BoundaryPoint::on_axis(L.grid->node(j), Side::minus));
        for (int i = 0; i < L.n; ++i) {
          const Eigen::MatrixXcd lhs = tk.block(i, j);
          const Eigen::MatrixXcd rhs = Tm.block(static_cast<Eigen::Index>(j) * d, static_cast<Eigen::Index>(i) * d, d, d).adjoint();
          herm = std::max(herm, (lhs - rhs).norm());
        }
      }
      rep.check("hermitian_relation", herm, cfg_.tol("hermitian_relation"), Comparison::at_most, L.n);

      if (auto cf = closed_form(L))
        rep.check("closed_form", *cf, cfg_.tol("closed_form"), Comparison::at_most, L.n, assessed(L.n));

      std::vector<double> ex;
      if (L.spec)
        for (int k : L.spec->embedded_set) ex.push_back(L.spec->eigenvalues(k));
      if (is_embedded()) ex.push_back(built_.embedded->eigenvalue);
      const ContinuityFit hf = fit_t_kernel_holder(tk, ex, radius);
      if (hf.flat)
        rep.record("t_holder_exponent", 1.0, L.n, "t constant");
      else if (smooth)
        rep.check("t_holder_exponent", hf.exponent, cfg_.tol("holder_min"), Comparison::at_least, L.n, assessed(L.n));
      else
        rep.record("t_holder_exponent", hf.exponent, L.n);
    }
  }

  void suite_smatrix(SuiteReport& rep) {
    const bool smooth = built_.kernel->differentiable;
    for (auto& Lp : levels_) {
      Level& L = *Lp;
      const ScatteringData& s = sd(L);
      const UnitarityReport& u = unitarity(L);
      rep.check("unitarity_defect", u.max_defect, cfg_.tol("unitarity"), Comparison::at_most, L.n);
      rep.check("inverse_defect", u.max_inverse_defect, std::max(2.0 * u.max_defect, 1e-12), Comparison::at_most, L.n);
      const double cons = side_consistency(s, tminus(L));
      rep.check("side_consistency", cons, cfg_.tol("side_consistency"), Comparison::at_most, L.n);
      if (is_free()) {
        double dev = 0.0;
        for (const auto& m : s.matrices) dev = std::max(dev, (m - Eigen::MatrixXcd::Identity(s.dim, s.dim)).norm());
        rep.check("free_s_identity", dev, cfg_.tol("free_exact"), Comparison::at_most, L.n);
      }
      if (s.dim > 1) {
        double second = 0.0;
        for (const auto& m : s.matrices) {
          Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m - Eigen::MatrixXcd::Identity(s.dim, s.dim));
          second = std::max(second, svd.singularValues()(1));
        }
        rep.record("s_minus_1_second_singular_value", second, L.n);
      }
      const ContinuityReport cr = check_continuity(s, is_embedded() ? std::vector<double>{built_.embedded->eigenvalue}
                                                                    : std::vector<double>{});
      if (cr.global.flat)
        rep.record("continuity_global_exponent", 1.0, L.n, "s constant");
      else if (smooth)
        rep.check("continuity_global_exponent", cr.global.exponent, cfg_.tol("holder_min"), Comparison::at_least, L.n,
                  assessed(L.n));
      else
        rep.record("continuity_global_exponent", cr.global.exponent, L.n);
      rep.record("s_tilde_unitarity_defect", St(L).max_unitarity_defect(), L.n);
      data_["smatrix"]["N" + std::to_string(L.n)] = smatrix_json(s);
    }
  }

  void suite_waveop(SuiteReport& rep) {
    const bool builtin_smooth = built_.kernel->differentiable && !is_free();
    std::optional<double> prev_hs;
    int prev_n = 0;
    for (auto& Lp : levels_) {
      Level& L = *Lp;
      const bool as = assessed(L.n);
      const auto& k = K(L);
      if (!L.T) L.T = cauchy_T(L.grid, cfg_.kernel.dim);
      const double dec = check_discrete_decomposition(W(L), *L.T, sd(L), k).max_entry_error;
      rep.check("decomposition_identity", dec, cfg_.tol("decomposition_identity"), Comparison::at_most, L.n);
      rep.check("main_formula", main_formula(L).residual, cfg_.tol("main_formula"), Comparison::at_most, L.n, as);
      rep.check("corollary", corollary(L).residual, cfg_.tol("corollary"), Comparison::at_most, L.n, as);
      rep.check("cauchy_conjugation", cauchy_conjugation(L), cfg_.tol("cauchy_conjugation"), Comparison::at_most, L.n, as);
      rep.check("tanh_cross_check", tanh_cross(L), cfg_.tol("tanh_cross"), Comparison::at_most, L.n, as);
      const IdentityChecks& ic = identities(L);
      rep.check("isometry", ic.isometry, cfg_.tol("isometry"), Comparison::at_most, L.n, as);
      rep.check("intertwining", ic.intertwining, cfg_.tol("intertwining"), Comparison::at_most, L.n, as);
      rep.check("s_identity", ic.s_identity, cfg_.tol("s_identity"), Comparison::at_most, L.n, as);

      rep.record("hs_norm_K", k.hs_norm, L.n);
      double ratio = 0.0;
      if (k.singular_values.size() >= 20 && k.singular_values[0] > 0) ratio = k.singular_values[19] / k.singular_values[0];
      if (builtin_smooth)
        rep.check("sigma20_over_sigma1", ratio, cfg_.tol("sigma_ratio"), Comparison::at_most, L.n, as);
      else
        rep.record("sigma20_over_sigma1", ratio, L.n);
      if (prev_hs) {
        const double rel = std::abs(k.hs_norm - *prev_hs) / std::max(*prev_hs, 1e-300);
        const std::string note = "from N=" + std::to_string(prev_n);
        if (*prev_hs == 0.0 && k.hs_norm == 0.0)
          rep.record("hs_stability", 0.0, L.n, note);
        else
          rep.check("hs_stability", rel, cfg_.tol("hs_stability"), Comparison::at_most, L.n, as && assessed(prev_n), note);
      }
      prev_hs = k.hs_norm;
      prev_n = L.n;

      const SpectralData& sp = spec(L);
      const CompletenessReport comp = verify_completeness(W(L), Wp(L), sp, panel(L));
      rep.check("isometry_defect", comp.isometry_defect, cfg_.tol("isometry"), Comparison::at_most, L.n, as);
      rep.check("plus_isometry_defect", comp.plus_isometry_defect, cfg_.tol("isometry"), Comparison::at_most, L.n, as);
      rep.record("range_defect", comp.range_defect, L.n);
      const auto discrete = sp.discrete_set();
      if (!discrete.empty()) {
        double best = 0.0;
        for (int q : discrete)
          best = std::max(best, weighted_overlap(*L.grid, cfg_.kernel.dim, comp.defect_top_vector, sp.eigenvectors.col(q)));
        rep.check("defect_eigenvector_overlap", best, 0.9, Comparison::at_least, L.n);
      }

      Json kd;
      kd["size"] = L.n;
      kd["hs_norm"] = k.hs_norm;
      Json sv = Json::array();
      for (std::size_t q = 0; q < std::min<std::size_t>(50, k.singular_values.size()); ++q) sv.push_back(k.singular_values[q]);
      kd["singular_values"] = sv;
      data_["ksvd"]["N" + std::to_string(L.n)] = kd;
      if (is_free()) {
        const Eigen::Index nd = W(L).size();
        rep.check("free_W_identity", (W(L).entries - Eigen::MatrixXcd::Identity(nd, nd)).cwiseAbs().maxCoeff(),
                  cfg_.tol("free_exact"), Comparison::at_most, L.n);
        rep.check("free_K_zero", k.K.entries.cwiseAbs().maxCoeff(), cfg_.tol("free_exact"), Comparison::at_most, L.n);
      }
    }
    regularized_check(rep);
  }

  /// Richardson limit of the regularized family against the stationary W_-
  /// at the first assessed size.
  void regularized_check(SuiteReport& rep) {
    if (cfg_.regularization.size() < 2) {
      rep.skip("regularized_limit", "needs at least two regularization parameters");
      return;
    }
    Level* target = nullptr;
    for (auto& Lp : levels_)
      if (assessed(Lp->n)) {
        target = Lp.get();
        break;
      }
    Level& L = *target;
    const auto sched = RegularizationSchedule::shared(cfg_.regularization);
    std::vector<DenseOperator> regs;
    {
      Stage s(*this, "regularized");
      try {
        regs = regularized_Wminus(L.table, sched, threads_);
      } catch (const Error& e) {
        rep.skip("regularized_limit", e.what(), L.n);
        return;
      }
    }
    const auto& w = W(L);
    const int d = cfg_.kernel.dim;
    double worst = 0.0;
    bool monotone = true;
    for (const auto& f : panel(L).functions) {
      const Eigen::VectorXcd ref = w.entries * f - f;
      const double nref = weighted_norm(*L.grid, d, ref);
      if (nref == 0.0) continue;
      std::vector<Eigen::VectorXcd> vals;
      double last = INFINITY;
      for (const auto& R : regs) {
        vals.push_back(R.entries * f - f);
        const double e = weighted_norm(*L.grid, d, vals.back() - ref) / nref;
        monotone = monotone && e <= last;
        last = e;
      }
      const Eigen::VectorXcd lim = richardson_limit(vals, cfg_.regularization);
      worst = std::max(worst, weighted_norm(*L.grid, d, lim - ref) / nref);
    }
    rep.check("regularized_limit", worst, cfg_.tol("regularized_limit"), Comparison::at_most, L.n);
    rep.check("regularized_monotone", monotone ? 1.0 : 0.0, 1.0, Comparison::equals, L.n);
  }

  void suite_embedded(SuiteReport& rep) {
    if (!is_embedded()) {
      rep.skip_suite("kernel family '" + cfg_.kernel.family + "' has no constructed embedded eigenvalue");
      return;
    }
    const EmbeddedScenario& sc = *built_.embedded;
    const double ln = sc.eigenvalue;
    rep.record("construction_residual", sc.construction_residual);
    std::vector<double> local_exponents;
    for (auto& Lp : levels_) {
      Level& L = *Lp;
      const bool as = assessed(L.n);
      const SpectralData& sp = spec(L);
      double err = INFINITY;
      for (int k : sp.embedded_set) err = std::min(err, std::abs(sp.eigenvalues(k) - ln));
      rep.check("certified_eigenvalue_error", err, cfg_.tol("embedded_eigenvalue"), Comparison::at_most, L.n);

      try {
        const RegularityReport rr = check_eigenfunction_regularity(sc, L.grid);
        rep.check("vf_at_eigenvalue", rr.vf_at_eigenvalue, cfg_.tol("vf_at_eigenvalue"), Comparison::at_most, L.n);
        rep.check("derivative_identity", rr.derivative_identity, cfg_.tol("derivative_identity"), Comparison::at_most, L.n);
        rep.record("resolvent_identity_closed", rr.resolvent_identity_closed, L.n);
        rep.record("resolvent_identity_quadrature", rr.resolvent_identity_quadrature, L.n);
        rep.record("eigen_residual", rr.eigen_residual, L.n);
      } catch (const UnsupportedCheck& e) {
        rep.skip("vf_at_eigenvalue", e.what(), L.n);
      }

      const Eigen::VectorXcd f = sc.sample(*L.grid);
      const DenseOperator P = projection_from_vectors(L.grid, cfg_.kernel.dim, {f});
      const int jn = L.grid->nearest_node(ln);
      const int d = cfg_.kernel.dim;
      const Eigen::VectorXcd rhs = P.entries * L.table.values.col(static_cast<Eigen::Index>(jn) * d);
      for (Side side : {Side::plus, Side::minus}) {
        const std::string tag = side == Side::plus ? "plus" : "minus";
        const auto pt = BoundaryPoint::on_axis(ln, side);
        const double unproj = fredholm_condition(L.table, pt);
        const ProjectedSolution ps = solve_projected(L.table, pt, {f}, rhs);
        rep.check("projected_condition_" + tag, ps.condition, cfg_.tol("projected_condition"), Comparison::at_most, L.n);
        rep.check("unprojected_condition_" + tag, unproj, cfg_.tol("unprojected_condition"), Comparison::at_least, L.n, as);
      }
      // Projected solutions at lambda_n +- delta on the plus side.
      {
        std::vector<double> deltas = {1e-2, 1e-3}, diffs;
        for (double delta : deltas) {
          const auto up = solve_projected(L.table, BoundaryPoint::on_axis(ln + delta, Side::plus), {f}, rhs);
          const auto dn = solve_projected(L.table, BoundaryPoint::on_axis(ln - delta, Side::plus), {f}, rhs);
          diffs.push_back(weighted_norm(*L.grid, d, up.solution - dn.solution));
        }
        const double expo = diffs[1] > 0 && diffs[0] > 0 ? std::log(diffs[0] / diffs[1]) / std::log(deltas[0] / deltas[1]) : 1.0;
        rep.record("projected_continuity_exponent", expo, L.n);
      }

      const ContinuityReport cr = check_continuity(sd(L), {ln});
      const ContinuityFit& loc = cr.local.front();
      const double bound = 2.0 * std::sqrt(static_cast<double>(d));
      rep.check("window_max_modulus", loc.max_modulus, bound, Comparison::at_most, L.n);
      if (loc.flat)
        rep.record("local_continuity_exponent", 1.0, L.n, "s constant in the window");
      else
        rep.check("local_continuity_exponent", loc.exponent, cfg_.tol("continuity_exponent"), Comparison::at_least, L.n);

      const Eigen::MatrixXcd Wadj = weighted_adjoint(W(L).entries, *L.grid, d);
      const double orth = weighted_norm(*L.grid, d, Wadj * f) / weighted_norm(*L.grid, d, f);
      rep.check("eigenfunction_orthogonality", orth, cfg_.tol("eigenfunction_orthogonality"), Comparison::at_most, L.n, as);
    }
  }

  void suite_refinement(SuiteReport& rep) {
    std::map<std::string, std::vector<double>> m;
    const bool cf = rank_one_scalar();
    for (auto& Lp : levels_) {
      Level& L = *Lp;
      m["unitarity"].push_back(unitarity(L).max_defect);
      m["main_formula"].push_back(main_formula(L).residual);
      m["corollary"].push_back(corollary(L).residual);
      const IdentityChecks& ic = identities(L);
      m["isometry"].push_back(ic.isometry);
      m["intertwining"].push_back(ic.intertwining);
      m["s_identity"].push_back(ic.s_identity);
      m["hs_norm_K"].push_back(K(L).hs_norm);
      m["cauchy_conjugation"].push_back(cauchy_conjugation(L));
      m["tanh_cross_check"].push_back(tanh_cross(L));
      m["max_condition"].push_back(tplus(L).max_condition);
      if (cf) m["closed_form"].push_back(*closed_form(L));
    }
    Json metrics = Json::object();
    for (const auto& [name, vals] : m) {
      Json arr = Json::array();
      for (double v : vals) arr.push_back(json_number(v));
      metrics[name] = arr;
    }
    refinement_["sizes"] = cfg_.sizes;
    refinement_["metrics"] = metrics;

    for (const std::string& metric : cfg_.refinement_metrics) {
      const auto& vals = m.at(metric);
      double need = 1.0;
      std::string what = "decreasing";
      if (metric == "unitarity") {
        need = cfg_.tol("unitarity_improvement");
        what = "improvement factor";
      } else if (metric == "intertwining" || metric == "s_identity" || metric == "isometry") {
        need = cfg_.tol("identity_improvement");
        what = "improvement factor";
      }
      for (std::size_t k = 1; k < vals.size(); ++k) {
        const double ratio = vals[k] > 0 ? vals[k - 1] / vals[k] : INFINITY;
        const std::string note = what + " from N=" + std::to_string(cfg_.sizes[k - 1]);
        if (need == 1.0)
          rep.check(metric + "_ratio", ratio, 1.0, Comparison::at_least, cfg_.sizes[k], true, note);
        else
          rep.check(metric + "_ratio", ratio, need, Comparison::at_least, cfg_.sizes[k], true, note);
      }
    }
  }

  ScenarioConfig cfg_;
  unsigned threads_ = 1;
  BuiltKernel built_;
  LinePtr line_;
  std::unique_ptr<TanhMultiplier> tanh_;
  std::vector<std::unique_ptr<Level>> levels_;
  std::map<std::string, double> stage_seconds_;
  Json data_;
  Json refinement_;
};

inline RunResult run_scenario(const ScenarioConfig& cfg) { return ScenarioRunner(cfg).run(); }

/// Writes report.json and every CSV the report has data for; returns the paths.
inline std::vector<std::string> write_outputs(const Json& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  const std::string rp = (fs::path(dir) / "report.json").string();
  {
    std::ofstream out(rp);
    if (!out) throw Error("cannot write '" + rp + "'");
    out << report.dump(2) << "\n";
  }
  written.push_back(rp);
  for (ExportKind k : {ExportKind::smatrix, ExportKind::ksvd, ExportKind::refinement}) {
    if (!report_has(report, k)) continue;
    const std::string path = (fs::path(dir) / (to_string(k) + ".csv")).string();
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    write_csv(report, k, out);
    written.push_back(path);
  }
  return written;
}

}  // namespace ffwave

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ffwave/errors.hpp"
#include "ffwave/fredholm.hpp"
#include "ffwave/scattering.hpp"

namespace ffwave {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.3.0";

enum class Comparison { at_most, at_least, equals };

inline const char* to_string(Comparison c) {
  switch (c) {
    case Comparison::at_most: return "<=";
    case Comparison::at_least: return ">=";
    case Comparison::equals: return "==";
  }
  return "?";
}

enum class Status { pass, fail, skipped, recorded };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::skipped: return "skipped";
    case Status::recorded: return "recorded";
  }
  return "?";
}

/// One measured quantity with its threshold. Recorded entries carry no verdict.
struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  Comparison comparison = Comparison::at_most;
  Status status = Status::recorded;
  int size = 0;
  std::string note;
};

inline bool satisfies(double value, double tol, Comparison c) {
  if (std::isnan(value)) return false;
  switch (c) {
    case Comparison::at_most: return value <= tol;
    case Comparison::at_least: return value >= tol;
    case Comparison::equals: return value == tol;
  }
  return false;
}

/// Non-finite doubles are not valid JSON numbers; they are written as strings.
inline Json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  throw ShapeError("expected a number in report");
}

class SuiteReport {
 public:
  explicit SuiteReport(std::string name = {}) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }

  CheckResult& check(const std::string& name, double value, double tol, Comparison cmp, int size = 0,
                     bool assessed = true, std::string note = {}) {
    CheckResult c{name, value, tol, cmp, Status::recorded, size, std::move(note)};
    if (assessed) c.status = satisfies(value, tol, cmp) ? Status::pass : Status::fail;
    checks_.push_back(c);
    return checks_.back();
  }
  void record(const std::string& name, double value, int size = 0, std::string note = {}) {
    checks_.push_back(CheckResult{name, value, 0.0, Comparison::at_most, Status::recorded, size, std::move(note)});
  }
  void skip(const std::string& name, std::string reason, int size = 0) {
    checks_.push_back(CheckResult{name, 0.0, 0.0, Comparison::at_most, Status::skipped, size, std::move(reason)});
  }
  void error(const std::string& msg) { errors_.push_back(msg); }
  void skip_suite(std::string reason) { skipped_reason_ = std::move(reason); }

  Json& data() { return data_; }
  const std::vector<CheckResult>& checks() const { return checks_; }

  Status status() const {
    if (!skipped_reason_.empty()) return Status::skipped;
    if (!errors_.empty()) return Status::fail;
    for (const auto& c : checks_)
      if (c.status == Status::fail) return Status::fail;
    return Status::pass;
  }

  Json to_json(double seconds) const {
    Json j;
    j["status"] = to_string(status());
    if (!skipped_reason_.empty()) j["reason"] = skipped_reason_;
    j["seconds"] = seconds;
    Json checks = Json::object();
    for (const auto& c : checks_) {
      Json e;
      e["status"] = to_string(c.status);
      if (c.status != Status::skipped) e["value"] = json_number(c.value);
      if (c.status == Status::pass || c.status == Status::fail) {
        e["tolerance"] = json_number(c.tolerance);
        e["comparison"] = to_string(c.comparison);
      }
      if (c.size > 0) e["size"] = c.size;
      if (!c.note.empty()) e["note"] = c.note;
      checks[check_key(c)] = e;
    }
    j["checks"] = checks;
    if (!errors_.empty()) j["errors"] = errors_;
    if (!data_.is_null()) j["data"] = data_;
    return j;
  }

  static std::string check_key(const CheckResult& c) {
    return c.size > 0 ? c.name + ".N" + std::to_string(c.size) : c.name;
  }

 private:
  std::string name_;
  std::vector<CheckResult> checks_;
  std::vector<std::string> errors_;
  std::string skipped_reason_;
  Json data_;
};

// ---------------------------------------------------------------------------
// CSV exports

enum class ExportKind { smatrix, ksvd, refinement };

inline ExportKind export_kind_from_string(const std::string& s) {
  if (s == "smatrix") return ExportKind::smatrix;
  if (s == "ksvd") return ExportKind::ksvd;
  if (s == "refinement") return ExportKind::refinement;
  throw ConfigError("unknown export kind '" + s + "' (valid: smatrix, ksvd, refinement)");
}

inline std::string to_string(ExportKind k) {
  switch (k) {
    case ExportKind::smatrix: return "smatrix";
    case ExportKind::ksvd: return "ksvd";
    case ExportKind::refinement: return "refinement";
  }
  return "?";
}

/// s(lambda) samples as stored in a report under data/smatrix/N<size>.
inline Json smatrix_json(const ScatteringData& sd) {
  Json j;
  j["size"] = sd.size();
  j["dim"] = sd.dim;
  Json lam = Json::array(), re = Json::array(), im = Json::array(), def = Json::array();
  for (int i = 0; i < sd.size(); ++i) {
    lam.push_back(sd.grid->node(i));
    Json r = Json::array(), m = Json::array();
    for (int p = 0; p < sd.dim; ++p)
      for (int q = 0; q < sd.dim; ++q) {
        r.push_back(sd.matrices[i](p, q).real());
        m.push_back(sd.matrices[i](p, q).imag());
      }
    re.push_back(r);
    im.push_back(m);
    def.push_back(sd.unitarity_defects[i]);
  }
  j["lambda"] = lam;
  j["re"] = re;
  j["im"] = im;
  j["unitarity_defect"] = def;
  return j;
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline const Json& require_path(const Json& report, const std::string& pointer, ExportKind kind) {
  const Json::json_pointer p(pointer);
  if (!report.contains(p))
    throw PreconditionError("report has no " + to_string(kind) + " data (missing " + pointer +
                            "); rerun with the suite that produces it");
  return report.at(p);
}

}  // namespace detail

/// Writes the CSV for one export kind. Columns:
///   smatrix:    size, index, lambda, re_s_PQ, im_s_PQ ..., unitarity_defect
///   ksvd:       size, index, singular_value, relative
///   refinement: metric, size, value, ratio
inline void write_csv(const Json& report, ExportKind kind, std::ostream& out) {
  switch (kind) {
    case ExportKind::smatrix: {
      const Json& all = detail::require_path(report, "/data/smatrix", kind);
      int dim = 0;
      for (const auto& [key, block] : all.items()) dim = block.at("dim").get<int>();
      out << "size,index,lambda";
      for (int p = 1; p <= dim; ++p)
        for (int q = 1; q <= dim; ++q) out << ",re_s_" << p << q << ",im_s_" << p << q;
      out << ",unitarity_defect\n";
      for (const auto& [key, block] : all.items()) {
        const int n = block.at("size").get<int>();
        for (int i = 0; i < n; ++i) {
          out << n << "," << i << "," << detail::fmt(block["lambda"][i].get<double>());
          for (int k = 0; k < dim * dim; ++k)
            out << "," << detail::fmt(block["re"][i][k].get<double>()) << "," << detail::fmt(block["im"][i][k].get<double>());
          out << "," << detail::fmt(block["unitarity_defect"][i].get<double>()) << "\n";
        }
      }
      return;
    }
    case ExportKind::ksvd: {
      const Json& all = detail::require_path(report, "/data/ksvd", kind);
      out << "size,index,singular_value,relative\n";
      for (const auto& [key, block] : all.items()) {
        const int n = block.at("size").get<int>();
        const auto& sv = block.at("singular_values");
        const double top = sv.empty() ? 1.0 : sv[0].get<double>();
        for (std::size_t k = 0; k < sv.size(); ++k) {
          const double s = sv[k].get<double>();
          out << n << "," << k << "," << detail::fmt(s) << "," << detail::fmt(top > 0 ? s / top : 0.0) << "\n";
        }
      }
      return;
    }
    case ExportKind::refinement: {
      const Json& tab = detail::require_path(report, "/refinement", kind);
      const auto& sizes = tab.at("sizes");
      out << "metric,size,value,ratio\n";
      for (const auto& [metric, values] : tab.at("metrics").items()) {
        for (std::size_t k = 0; k < values.size(); ++k) {
          const double v = number_from_json(values[k]);
          out << metric << "," << sizes[k].get<int>() << "," << detail::fmt(v) << ",";
          if (k > 0) out << detail::fmt(number_from_json(values[k - 1]) / v);
          out << "\n";
        }
      }
      return;
    }
  }
}

inline bool report_has(const Json& report, ExportKind kind) {
  switch (kind) {
    case ExportKind::smatrix: return report.contains(Json::json_pointer("/data/smatrix"));
    case ExportKind::ksvd: return report.contains(Json::json_pointer("/data/ksvd"));
    case ExportKind::refinement: return report.contains(Json::json_pointer("/refinement"));
  }
  return false;
}

inline Json read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open report '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("report '" + path + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// TKernel dump
//
// Binary layout (all little-endian):
//   char[8]  magic "FFWTK001"
//   int32    N (nodes), int32 d, int32 side (+1 plus, -1 minus)
//   float64  epsilon
//   float64  nodes[N]
//   then for lambda index i = 0..N-1, for mu index j = 0..N-1:
//     the d x d block t(lambda_i, mu_j, mu_j + side*i0) in row-major order,
//     each entry as (float64 re, float64 im).

namespace detail {

inline bool host_little_endian() {
  const std::uint16_t one = 1;
  unsigned char b = 0;
  std::memcpy(&b, &one, 1);
  return b == 1;
}

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if (!host_little_endian()) std::reverse(buf, buf + sizeof(T));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw ShapeError("truncated T-kernel file");
  if (!host_little_endian()) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace detail

inline void write_tkernel_binary(const TKernel& tk, std::ostream& out) {
  out.write("FFWTK001", 8);
  const int n = tk.size(), d = tk.dim;
  detail::put_le<std::int32_t>(out, n);
  detail::put_le<std::int32_t>(out, d);
  detail::put_le<std::int32_t>(out, tk.side == Side::plus ? 1 : -1);
  detail::put_le<double>(out, tk.epsilon);
  for (int i = 0; i < n; ++i) detail::put_le<double>(out, tk.grid->node(i));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) {
          const cplx v = tk.blocks(static_cast<Eigen::Index>(i) * d + p, static_cast<Eigen::Index>(j) * d + q);
          detail::put_le<double>(out, v.real());
          detail::put_le<double>(out, v.imag());
        }
}

/// Contents of a dumped T-kernel; blocks are stored exactly as in TKernel::blocks.
struct TKernelDump {
  int dim = 1;
  Side side = Side::plus;
  double epsilon = 0.0;
  std::vector<double> nodes;
  Eigen::MatrixXcd blocks;
};

inline TKernelDump read_tkernel_binary(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != "FFWTK001") throw ShapeError("not a T-kernel dump (bad magic)");
  TKernelDump t;
  const int n = detail::get_le<std::int32_t>(in);
  t.dim = detail::get_le<std::int32_t>(in);
  t.side = detail::get_le<std::int32_t>(in) > 0 ? Side::plus : Side::minus;
  t.epsilon = detail::get_le<double>(in);
  if (n <= 0 || t.dim <= 0) throw ShapeError("T-kernel dump has invalid dimensions");
  for (int i = 0; i < n; ++i) t.nodes.push_back(detail::get_le<double>(in));
  const Eigen::Index nd = static_cast<Eigen::Index>(n) * t.dim;
  t.blocks.resize(nd, nd);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < t.dim; ++p)
        for (int q = 0; q < t.dim; ++q) {
          const double re = detail::get_le<double>(in);
          const double im = detail::get_le<double>(in);
          t.blocks(static_cast<Eigen::Index>(i) * t.dim + p, static_cast<Eigen::Index>(j) * t.dim + q) = cplx(re, im);
        }
  return t;
}

/// JSON form: {"format", "size", "dim", "side", "epsilon", "nodes",
/// "blocks": [i][j] -> [re, im, re, im, ...] for the row-major d x d block}.
inline Json tkernel_json(const TKernel& tk) {
  Json j;
  j["format"] = "ffwave-tkernel-1";
  j["size"] = tk.size();
  j["dim"] = tk.dim;
  j["side"] = std::string(to_string(tk.side));
  j["epsilon"] = tk.epsilon;
  Json nodes = Json::array();
  for (int i = 0; i < tk.size(); ++i) nodes.push_back(tk.grid->node(i));
  j["nodes"] = nodes;
  Json rows = Json::array();
  for (int i = 0; i < tk.size(); ++i) {
    Json row = Json::array();
    for (int c = 0; c < tk.size(); ++c) {
      Json blk = Json::array();
      for (int p = 0; p < tk.dim; ++p)
        for (int q = 0; q < tk.dim; ++q) {
          const cplx v = tk.block(i, c)(p, q);
          blk.push_back(v.real());
          blk.push_back(v.imag());
        }
      row.push_back(blk);
    }
    rows.push_back(row);
  }
  j["blocks"] = rows;
  return j;
}

inline TKernelDump tkernel_from_json(const Json& j) {
  if (j.value("format", "") != "ffwave-tkernel-1") throw ShapeError("not a T-kernel JSON dump");
  TKernelDump t;
  const int n = j.at("size").get<int>();
  t.dim = j.at("dim").get<int>();
  t.side = j.at("side").get<std::string>() == "plus" ? Side::plus : Side::minus;
  t.epsilon = j.at("epsilon").get<double>();
  t.nodes = j.at("nodes").get<std::vector<double>>();
  const Eigen::Index nd = static_cast<Eigen::Index>(n) * t.dim;
  t.blocks.resize(nd, nd);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < n; ++c) {
      const auto& blk = j.at("blocks").at(i).at(c);
      for (int p = 0; p < t.dim; ++p)
        for (int q = 0; q < t.dim; ++q) {
          const int k = 2 * (p * t.dim + q);
          t.blocks(static_cast<Eigen::Index>(i) * t.dim + p, static_cast<Eigen::Index>(c) * t.dim + q) =
              cplx(blk.at(k).get<double>(), blk.at(k + 1).get<double>());
        }
    }
  return t;
}

}  // namespace ffwave

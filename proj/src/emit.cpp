#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "metasdt/error.hpp"
#include "metasdt/report.hpp"

namespace metasdt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_field(const json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number()) return number(v.get<double>());
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

// Follows a '/'-separated path, yielding null for anything missing.
json at(const json& j, const std::string& path) {
  const json* cur = &j;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t end = std::min(path.find('/', start), path.size());
    const std::string key = path.substr(start, end - start);
    if (!cur->is_object() || !cur->contains(key)) return nullptr;
    cur = &(*cur)[key];
    start = end + 1;
  }
  return *cur;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<json>> rows;

  std::string str() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
      out << "\n";
    }
    return out.str();
  }
};

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

const json& array_or_empty(const json& j, const char* key) {
  static const json empty = json::array();
  return j.contains(key) && j.at(key).is_array() ? j.at(key) : empty;
}

Table cells_table(const json& report) {
  Table t;
  t.header = {"label",   "model_id",  "dataset_id", "domain",      "temperature", "slice",
              "n_trials", "n_correct", "underpowered", "accuracy", "hr",          "far",
              "d_prime", "c",         "meta_d",     "meta_c",      "m_ratio",     "m_ci_low",
              "m_ci_high", "n_excluded", "meta_d_ci_low", "meta_d_ci_high", "auroc2", "ece",
              "brier",   "unstable",  "converged",  "error"};
  for (const auto& c : array_or_empty(report, "cells")) {
    t.rows.push_back({c["label"], c["model_id"], c["dataset_id"], c["domain"], c["temperature"],
                      c["slice"], c["n_trials"], c["n_correct"], c["underpowered"],
                      at(c, "metrics/accuracy"), at(c, "estimate/type1/hr"),
                      at(c, "estimate/type1/far"), at(c, "estimate/fit/d_prime"),
                      at(c, "estimate/fit/c"), at(c, "estimate/fit/meta_d"),
                      at(c, "estimate/fit/meta_c"), at(c, "estimate/m_ratio"),
                      at(c, "bootstrap/m_ratio/ci_low"), at(c, "bootstrap/m_ratio/ci_high"),
                      at(c, "bootstrap/m_ratio/n_excluded"), at(c, "bootstrap/meta_d/ci_low"),
                      at(c, "bootstrap/meta_d/ci_high"), at(c, "metrics/auroc2"),
                      at(c, "metrics/ece"), at(c, "metrics/brier"), at(c, "metrics/unstable"),
                      at(c, "estimate/fit/converged"), c["error"]});
  }
  return t;
}

Table aggregate_table(const json& report) {
  Table t;
  t.header = {"model_id", "dataset_id", "accuracy", "d_prime",    "meta_d",       "m_ratio",
              "ci_low",   "ci_high",    "n_excluded", "underpowered", "h1_supported"};
  std::map<std::string, json> verdicts;
  for (const auto& e : array_or_empty(at(report, "hypotheses/H1"), "evidence")) {
    verdicts[e.value("cell", "")] = e["supported"];
  }
  for (const auto& c : array_or_empty(report, "cells")) {
    if (c.value("slice", "") != "aggregate") continue;
    t.rows.push_back({c["model_id"], c["dataset_id"], at(c, "metrics/accuracy"),
                      at(c, "estimate/fit/d_prime"), at(c, "estimate/fit/meta_d"),
                      at(c, "estimate/m_ratio"), at(c, "bootstrap/m_ratio/ci_low"),
                      at(c, "bootstrap/m_ratio/ci_high"), at(c, "bootstrap/m_ratio/n_excluded"),
                      c["underpowered"], verdicts[c.value("label", "")]});
  }
  return t;
}

Table contrast_table(const json& contrasts, const std::string& model, const std::string& dataset,
                     Table t) {
  for (const auto& c : contrasts) {
    std::vector<json> row;
    if (!model.empty() || !dataset.empty()) {
      row.push_back(model);
      row.push_back(dataset);
    }
    for (const char* k : {"a", "b", "delta", "ci_low", "ci_high", "excludes_zero", "n_excluded"}) {
      row.push_back(c.contains(k) ? c[k] : json(nullptr));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table h2_table(const json& report) {
  Table t;
  t.header = {"model_id", "dataset_id", "a", "b", "delta", "ci_low", "ci_high", "excludes_zero",
              "n_excluded"};
  for (const auto& g : array_or_empty(at(report, "hypotheses/H2"), "evidence")) {
    t = contrast_table(array_or_empty(g, "contrasts"), g.value("model_id", ""),
                       g.value("dataset_id", ""), std::move(t));
  }
  return t;
}

Table h4_table(const json& report) {
  Table t;
  t.header = {"a", "b", "delta", "ci_low", "ci_high", "excludes_zero", "n_excluded"};
  return contrast_table(array_or_empty(at(report, "hypotheses/H4"), "evidence"), "", "",
                        std::move(t));
}

Table h3_table(const json& report) {
  Table t;
  t.header = {"model_id", "dataset_id", "tost_pass", "max_range", "rho_meta_d", "rho_d_prime",
              "supported"};
  for (const auto& e : array_or_empty(at(report, "hypotheses/H3"), "evidence")) {
    t.rows.push_back({e["model_id"], e["dataset_id"], at(e, "tost/pass"), at(e, "tost/max_range"),
                      e["rho_meta_d"], e["rho_d_prime"], e["supported"]});
  }
  return t;
}

Table hypotheses_table(const json& report) {
  Table t;
  t.header = {"hypothesis", "verdict", "rule"};
  const json hyps = at(report, "hypotheses");
  if (hyps.is_object()) {
    for (const auto& [id, h] : hyps.items()) t.rows.push_back({id, h["verdict"], h["rule"]});
  }
  return t;
}

Table monotonicity_table(const json& report) {
  std::size_t groups = 0;
  for (const auto& m : array_or_empty(report, "monotonicity")) {
    groups = std::max(groups, array_or_empty(m, "accuracies").size());
  }
  Table t;
  t.header = {"cell"};
  for (std::size_t g = 1; g <= groups; ++g) t.header.push_back("accuracy_q" + std::to_string(g));
  for (std::size_t g = 1; g <= groups; ++g) t.header.push_back("n_q" + std::to_string(g));
  t.header.push_back("pass");
  for (const auto& m : array_or_empty(report, "monotonicity")) {
    std::vector<json> row{m["cell"]};
    const auto& acc = array_or_empty(m, "accuracies");
    const auto& cnt = array_or_empty(m, "counts");
    for (std::size_t g = 0; g < groups; ++g) row.push_back(g < acc.size() ? acc[g] : json(nullptr));
    for (std::size_t g = 0; g < groups; ++g) row.push_back(g < cnt.size() ? cnt[g] : json(nullptr));
    row.push_back(m["pass"]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table risk_coverage_table(const json& report) {
  Table t;
  t.header = {"model_id", "dataset_id", "coverage", "retained", "accuracy"};
  for (const auto& rc : array_or_empty(report, "risk_coverage")) {
    for (const auto& p : array_or_empty(rc, "points")) {
      t.rows.push_back({rc["model_id"], rc["dataset_id"], p["coverage"], p["retained"], p["accuracy"]});
    }
  }
  return t;
}

Table robustness_table(const json& report) {
  Table t;
  t.header = {"check_id", "model_id", "dataset_id", "variant", "n_trials", "primary_m_ratio",
              "m_ratio", "delta", "error"};
  for (const auto& r : array_or_empty(report, "robustness")) {
    for (const auto& c : array_or_empty(r, "cells")) {
      t.rows.push_back({r["check_id"], c["model_id"], c["dataset_id"], c["variant"], c["n_trials"],
                        c["primary_m_ratio"], c["m_ratio"], c["delta"], c["error"]});
    }
  }
  return t;
}

// --- plot data -----------------------------------------------------------

json scatter_data(const json& report) {
  json points = json::array();
  double hi = 0.0;
  for (const auto& c : array_or_empty(report, "cells")) {
    if (c.value("slice", "") != "aggregate") continue;
    const json d = at(c, "estimate/fit/d_prime");
    const json m = at(c, "estimate/fit/meta_d");
    if (!d.is_number() || !m.is_number()) continue;
    hi = std::max({hi, d.get<double>(), m.get<double>()});
    points.push_back({{"label", c["model_id"].get<std::string>() + " / " +
                                    c["dataset_id"].get<std::string>()},
                      {"model_id", c["model_id"]},
                      {"dataset_id", c["dataset_id"]},
                      {"d_prime", d},
                      {"meta_d", m}});
  }
  const double end = hi + 0.2;
  return {{"kind", "scatter"},
          {"x", "d_prime"},
          {"y", "meta_d"},
          {"points", points},
          {"identity_line", json::array({json::array({0.0, 0.0}), json::array({end, end})})}};
}

json domain_bars_data(const json& report) {
  json bars = json::array();
  for (const auto& c : array_or_empty(report, "cells")) {
    if (c.value("slice", "") != "domain") continue;
    bars.push_back({{"model_id", c["model_id"]},
                    {"dataset_id", c["dataset_id"]},
                    {"domain", c["domain"]},
                    {"m_ratio", at(c, "estimate/m_ratio")},
                    {"ci_low", at(c, "bootstrap/m_ratio/ci_low")},
                    {"ci_high", at(c, "bootstrap/m_ratio/ci_high")},
                    {"underpowered", c["underpowered"]}});
  }
  return {{"kind", "bars"}, {"value", "m_ratio"}, {"bars", bars}};
}

json temperature_curves_data(const json& report) {
  std::map<std::pair<std::string, std::string>, std::vector<json>> series;
  for (const auto& c : array_or_empty(report, "cells")) {
    const std::string slice = c.value("slice", "");
    if (slice != "aggregate" && slice != "temperature") continue;
    series[{c["model_id"].get<std::string>(), c["dataset_id"].get<std::string>()}].push_back(
        {{"temperature", c["temperature"]},
         {"d_prime", at(c, "estimate/fit/d_prime")},
         {"meta_d", at(c, "estimate/fit/meta_d")}});
  }
  json out = json::array();
  for (auto& [id, pts] : series) {
    std::sort(pts.begin(), pts.end(), [](const json& a, const json& b) {
      return a["temperature"].get<double>() < b["temperature"].get<double>();
    });
    out.push_back({{"model_id", id.first}, {"dataset_id", id.second}, {"points", pts}});
  }
  return {{"kind", "lines"}, {"x", "temperature"}, {"y", json::array({"d_prime", "meta_d"})},
          {"series", out}};
}

// --- SVG rendering -------------------------------------------------------

constexpr double kW = 480, kH = 360, kPad = 48;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kPad + (x - x0) / (x1 - x0) * (kW - 2 * kPad); }
  double py(double y) const { return kH - kPad - (y - y0) / (y1 - y0) * (kH - 2 * kPad); }
};

std::string svg_open(const std::string& title, const Frame& f, const std::string& xl,
                     const std::string& yl) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kW / 2 << "\" y=\"18\" text-anchor=\"middle\">" << title << "</text>\n"
    << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad << "\" y2=\""
    << kH - kPad << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad << "\" y2=\"" << kH - kPad
    << "\" stroke=\"black\"/>\n"
    << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">" << xl
    << "</text>\n"
    << "<text x=\"12\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 12 " << kH / 2
    << ")\" text-anchor=\"middle\">" << yl << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    s << "<text x=\"" << f.px(xv) << "\" y=\"" << kH - kPad + 14 << "\" text-anchor=\"middle\">"
      << number(std::round(xv * 100) / 100) << "</text>\n"
      << "<text x=\"" << kPad - 4 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\">"
      << number(std::round(yv * 100) / 100) << "</text>\n";
  }
  return s.str();
}

std::string escape_xml(const std::string& in) {
  std::string out;
  for (char ch : in) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string scatter_svg(const json& data) {
  const double end = data["identity_line"][1][0].get<double>();
  const Frame f{0.0, end, 0.0, end};
  std::ostringstream s;
  s << svg_open("meta-d' against d'", f, "d'", "meta-d'");
  s << "<line x1=\"" << f.px(0) << "\" y1=\"" << f.py(0) << "\" x2=\"" << f.px(end) << "\" y2=\""
    << f.py(end) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  std::size_t i = 0;
  for (const auto& p : data["points"]) {
    const double x = p["d_prime"].get<double>(), y = p["meta_d"].get<double>();
    s << "<circle cx=\"" << f.px(x) << "\" cy=\"" << f.py(y) << "\" r=\"4\" fill=\""
      << kPalette[i++ % 6] << "\"/>\n"
      << "<text x=\"" << f.px(x) + 6 << "\" y=\"" << f.py(y) - 6 << "\">"
      << escape_xml(p["label"].get<std::string>()) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string bars_svg(const json& data) {
  double hi = 1.2;
  for (const auto& b : data["bars"]) {
    for (const char* k : {"m_ratio", "ci_high"}) {
      if (b[k].is_number()) hi = std::max(hi, b[k].get<double>() * 1.1);
    }
  }
  const std::size_t n = std::max<std::size_t>(1, data["bars"].size());
  const Frame f{0.0, static_cast<double>(n), 0.0, hi};
  std::ostringstream s;
  s << svg_open("M-ratio by domain", f, "cell", "M-ratio");
  s << "<line x1=\"" << f.px(0) << "\" y1=\"" << f.py(1) << "\" x2=\"" << f.px(n) << "\" y2=\""
    << f.py(1) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  std::size_t i = 0;
  std::map<std::string, std::size_t> colour;
  for (const auto& b : data["bars"]) {
    const std::string model = b["model_id"].get<std::string>();
    const auto c = colour.emplace(model, colour.size()).first->second;
    if (b["m_ratio"].is_number()) {
      const double v = std::max(0.0, b["m_ratio"].get<double>());
      s << "<rect x=\"" << f.px(i + 0.15) << "\" y=\"" << f.py(v) << "\" width=\""
        << f.px(i + 0.85) - f.px(i + 0.15) << "\" height=\"" << f.py(0) - f.py(v) << "\" fill=\""
        << kPalette[c % 6] << "\"><title>" << escape_xml(model + " " + b["domain"].get<std::string>())
        << "</title></rect>\n";
    }
    if (b["ci_low"].is_number() && b["ci_high"].is_number()) {
      s << "<line x1=\"" << f.px(i + 0.5) << "\" y1=\"" << f.py(b["ci_low"].get<double>())
        << "\" x2=\"" << f.px(i + 0.5) << "\" y2=\"" << f.py(b["ci_high"].get<double>())
        << "\" stroke=\"black\"/>\n";
    }
    ++i;
  }
  s << "</svg>\n";
  return s.str();
}

std::string curves_svg(const json& data) {
  double t0 = 1e300, t1 = -1e300, hi = 0.0;
  for (const auto& series : data["series"]) {
    for (const auto& p : series["points"]) {
      const double t = p["temperature"].get<double>();
      t0 = std::min(t0, t);
      t1 = std::max(t1, t);
      for (const char* k : {"d_prime", "meta_d"}) {
        if (p[k].is_number()) hi = std::max(hi, p[k].get<double>());
      }
    }
  }
  if (!(t1 > t0)) {
    t0 = 0.0;
    t1 = std::max(1.0, t1);
  }
  const Frame f{t0, t1, 0.0, hi + 0.2};
  std::ostringstream s;
  s << svg_open("d' (solid) and meta-d' (dashed) by temperature", f, "temperature", "sensitivity");
  std::size_t i = 0;
  for (const auto& series : data["series"]) {
    for (const char* k : {"d_prime", "meta_d"}) {
      std::ostringstream pts;
      for (const auto& p : series["points"]) {
        if (!p[k].is_number()) continue;
        pts << f.px(p["temperature"].get<double>()) << "," << f.py(p[k].get<double>()) << " ";
      }
      s << "<polyline fill=\"none\" stroke=\"" << kPalette[i % 6] << "\" points=\"" << pts.str()
        << "\"" << (std::string(k) == "meta_d" ? " stroke-dasharray=\"5 3\"" : "") << "/>\n";
    }
    ++i;
  }
  s << "</svg>\n";
  return s.str();
}

// --- validation ----------------------------------------------------------

class Checker {
 public:
  void require(const json& j, const std::string& where, const char* key, json::value_t type,
               bool nullable = false) {
    if (!j.is_object() || !j.contains(key)) {
      problems.push_back(where + ": missing '" + key + "'");
      return;
    }
    const json& v = j.at(key);
    if (nullable && v.is_null()) return;
    const bool ok = type == json::value_t::number_float ? v.is_number() : v.type() == type ||
                    (type == json::value_t::number_integer && v.is_number_integer());
    if (!ok) problems.push_back(where + ": '" + key + "' has the wrong type");
  }

  void bootstrap_result(const json& b, const std::string& where) {
    for (const char* k : {"point", "ci_low", "ci_high", "level"}) {
      require(b, where, k, json::value_t::number_float);
    }
    require(b, where, "n_resamples", json::value_t::number_integer);
    require(b, where, "n_excluded", json::value_t::number_integer);
    require(b, where, "seed", json::value_t::number_integer);
    if (b.is_object() && b.contains("ci_low") && b.contains("ci_high") && b["ci_low"].is_number() &&
        b["ci_high"].is_number() && b["ci_low"].get<double>() > b["ci_high"].get<double>()) {
      problems.push_back(where + ": ci_low > ci_high");
    }
  }

  std::vector<std::string> problems;
};

}  // namespace

std::vector<std::string> emit_report(const json& report, const fs::path& out_dir,
                                     const EmitOptions& options) {
  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("report.json", dump_report(report));
  files.emplace_back("tables/cells.csv", cells_table(report).str());
  files.emplace_back("tables/aggregate.csv", aggregate_table(report).str());
  files.emplace_back("tables/hypotheses.csv", hypotheses_table(report).str());
  files.emplace_back("tables/h2_domain_contrasts.csv", h2_table(report).str());
  files.emplace_back("tables/h3_temperature.csv", h3_table(report).str());
  files.emplace_back("tables/h4_model_contrasts.csv", h4_table(report).str());
  files.emplace_back("tables/monotonicity.csv", monotonicity_table(report).str());
  files.emplace_back("tables/risk_coverage.csv", risk_coverage_table(report).str());
  files.emplace_back("tables/robustness.csv", robustness_table(report).str());
  const json scatter = scatter_data(report);
  const json bars = domain_bars_data(report);
  const json curves = temperature_curves_data(report);
  files.emplace_back("plots/dprime_vs_metad.json", scatter.dump(2) + "\n");
  files.emplace_back("plots/domain_mratio.json", bars.dump(2) + "\n");
  files.emplace_back("plots/temperature_curves.json", curves.dump(2) + "\n");
  if (options.svg) {
    files.emplace_back("plots/dprime_vs_metad.svg", scatter_svg(scatter));
    files.emplace_back("plots/domain_mratio.svg", bars_svg(bars));
    files.emplace_back("plots/temperature_curves.svg", curves_svg(curves));
  }
  std::vector<std::string> written;
  for (const auto& [rel, text] : files) {
    write_file(out_dir / rel, text);
    written.push_back(rel);
  }
  return written;
}

std::vector<std::string> validate_report(const json& report) {
  using vt = json::value_t;
  Checker ck;
  if (!report.is_object()) return {"report: not an object"};
  ck.require(report, "report", "schema_version", vt::string);
  if (report.contains("schema_version") && report["schema_version"] != kReportSchemaVersion) {
    ck.problems.push_back("report: unsupported schema_version");
  }
  ck.require(report, "report", "provenance", vt::object);
  for (const char* k : {"tool", "tool_version", "config_sha256", "trials_sha256", "rng_family"}) {
    ck.require(report.value("provenance", json::object()), "provenance", k, vt::string);
  }
  ck.require(report, "report", "config", vt::object);
  if (report.contains("config")) {
    try {
      config_from_json(report["config"]);
    } catch (const std::exception& e) {
      ck.problems.push_back(std::string("config: ") + e.what());
    }
  }
  ck.require(report, "report", "binning", vt::array);
  ck.require(report, "report", "cells", vt::array);
  ck.require(report, "report", "hypotheses", vt::object);
  ck.require(report, "report", "monotonicity", vt::array);
  ck.require(report, "report", "risk_coverage", vt::array);
  ck.require(report, "report", "robustness", vt::array);
  ck.require(report, "report", "warnings", vt::array);

  static const std::set<std::string> slices{"aggregate", "temperature", "domain"};
  for (const auto& c : array_or_empty(report, "cells")) {
    const std::string where = "cell " + c.value("label", std::string("?"));
    for (const char* k : {"label", "model_id", "dataset_id", "domain", "slice"}) {
      ck.require(c, where, k, vt::string);
    }
    ck.require(c, where, "temperature", vt::number_float);
    ck.require(c, where, "n_trials", vt::number_integer);
    ck.require(c, where, "underpowered", vt::boolean);
    ck.require(c, where, "warnings", vt::array);
    ck.require(c, where, "error", vt::string, true);
    ck.require(c, where, "estimate", vt::object, true);
    ck.require(c, where, "metrics", vt::object, true);
    ck.require(c, where, "bootstrap", vt::object, true);
    if (c.is_object() && c.contains("slice") && c["slice"].is_string() &&
        !slices.count(c["slice"].get<std::string>())) {
      ck.problems.push_back(where + ": unknown slice");
    }
    if (c.is_object() && c.contains("bootstrap") && c["bootstrap"].is_object()) {
      for (const char* k : {"m_ratio", "meta_d", "d_prime"}) {
        ck.bootstrap_result(c["bootstrap"].value(k, json()), where + " bootstrap." + k);
      }
    }
    if (c.is_object() && c.contains("estimate") && c["estimate"].is_object()) {
      const json& e = c["estimate"];
      ck.require(e, where + " estimate", "m_ratio", vt::number_float);
      ck.require(e, where + " estimate", "fit", vt::object);
      ck.require(e, where + " estimate", "type1", vt::object);
      ck.require(e, where + " estimate", "counts", vt::object);
    }
  }

  static const std::set<std::string> verdicts{"supported", "partially supported", "not supported",
                                              "not evaluable"};
  const json hyps = report.value("hypotheses", json::object());
  for (const char* id : {"H1", "H2", "H3", "H4"}) {
    ck.require(hyps, "hypotheses", id, vt::object);
    const json h = hyps.value(id, json::object());
    ck.require(h, id, "verdict", vt::string);
    ck.require(h, id, "rule", vt::string);
    ck.require(h, id, "evidence", vt::array);
    if (h.contains("verdict") && h["verdict"].is_string() &&
        !verdicts.count(h["verdict"].get<std::string>())) {
      ck.problems.push_back(std::string(id) + ": unknown verdict");
    }
  }
  for (const auto& r : array_or_empty(report, "robustness")) {
    ck.require(r, "robustness", "check_id", vt::string);
    ck.require(r, "robustness", "cells", vt::array);
    ck.require(r, "robustness", "max_perturbation", vt::number_float);
    ck.require(r, "robustness", "ordering_preserved", vt::boolean, true);
    if (r.contains("max_perturbation") && r["max_perturbation"].is_number() &&
        r["max_perturbation"].get<double>() < 0.0) {
      ck.problems.push_back("robustness: negative max_perturbation");
    }
  }
  return ck.problems;
}

}  // namespace metasdt

// Copyright 2026 The incse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "incse/error.hpp"
#include "incse/harness/sequence.hpp"

namespace incse::harness {

inline constexpr int kReportFormatVersion = 1;
inline constexpr const char* kMatrixCsvHeader = "model_id,testset_id,sdr_stsa_db";

namespace report_detail {

inline std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  INCSE_CHECK(out.good(), ErrorCode::kIo, "cannot open ", path.string(), " for writing");
  out << text;
  out.flush();
  INCSE_CHECK(out.good(), ErrorCode::kIo, "write failed: ", path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  INCSE_CHECK(in.good(), ErrorCode::kIo, "cannot open ", path.string());
  std::ostringstream oss;
  oss << in.rdbuf();
  return oss.str();
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace report_detail

// One row per (model, test set) in grid order. Absent cells are written as NA.
inline std::string matrix_to_csv(const EvalMatrix& m) {
  std::string out = std::string(kMatrixCsvHeader) + "\n";
  for (std::size_t i = 0; i < m.num_models(); ++i)
    for (std::size_t j = 0; j < m.num_testsets(); ++j) {
      const auto& c = m.scores[i][j];
      out += m.model_ids[i] + "," + m.testset_ids[j] + "," + (c ? report_detail::fixed(*c) : std::string("NA")) + "\n";
    }
  return out;
}

inline EvalMatrix matrix_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  INCSE_CHECK(std::getline(in, line) && line == kMatrixCsvHeader, ErrorCode::kParse,
              "matrix CSV: expected header '", kMatrixCsvHeader, "'");
  struct Cell {
    std::string model, testset;
    std::optional<double> value;
  };
  std::vector<Cell> cells;
  std::vector<std::string> models, testsets;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = report_detail::split_line(line);
    INCSE_CHECK(f.size() == 3, ErrorCode::kParse, "matrix CSV line ", line_no, ": expected 3 fields");
    Cell c{f[0], f[1], std::nullopt};
    if (f[2] != "NA") {
      try {
        std::size_t used = 0;
        c.value = std::stod(f[2], &used);
        INCSE_CHECK(used == f[2].size(), ErrorCode::kParse, "matrix CSV line ", line_no, ": bad number '", f[2], "'");
      } catch (const std::logic_error&) {
        ::incse::detail::fail(ErrorCode::kParse, "matrix CSV line ", line_no, ": bad number '", f[2], "'");
      }
    }
    if (std::find(models.begin(), models.end(), c.model) == models.end()) models.push_back(c.model);
    if (std::find(testsets.begin(), testsets.end(), c.testset) == testsets.end()) testsets.push_back(c.testset);
    cells.push_back(std::move(c));
  }
  EvalMatrix m;
  m.model_ids = models;
  m.testset_ids = testsets;
  m.scores.assign(models.size(), std::vector<std::optional<double>>(testsets.size()));
  for (const auto& c : cells) {
    const auto i = static_cast<std::size_t>(std::find(models.begin(), models.end(), c.model) - models.begin());
    const auto j = static_cast<std::size_t>(std::find(testsets.begin(), testsets.end(), c.testset) - testsets.begin());
    m.scores[i][j] = c.value;
  }
  return m;
}

inline EvalMatrix load_matrix_csv(const std::filesystem::path& path) {
  return matrix_from_csv(report_detail::read_text(path));
}

inline std::string unprocessed_to_csv(const std::vector<std::string>& testset_ids, const std::vector<double>& scores) {
  INCSE_CHECK(testset_ids.size() == scores.size(), ErrorCode::kShapeMismatch, "unprocessed scores vs test sets");
  std::string out = "testset_id,sdr_stsa_db\n";
  for (std::size_t j = 0; j < scores.size(); ++j) out += testset_ids[j] + "," + report_detail::fixed(scores[j]) + "\n";
  return out;
}

inline std::vector<double> load_unprocessed_csv(const std::filesystem::path& path) {
  std::istringstream in(report_detail::read_text(path));
  std::string line;
  INCSE_CHECK(std::getline(in, line) && line == "testset_id,sdr_stsa_db", ErrorCode::kParse,
              "bad header in ", path.string());
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = report_detail::split_line(line);
    INCSE_CHECK(f.size() == 2, ErrorCode::kParse, "bad line in ", path.string());
    out.push_back(std::stod(f[1]));
  }
  return out;
}

inline nlohmann::json forgetting_to_json(const ForgettingReport& r) {
  nlohmann::json j;
  j["per_task_drop_db"] = r.per_task_drop;
  j["average_forgetting_db"] = r.average_forgetting;
  j["adaptation_gain_db"] = r.adaptation_gain;
  j["relative_forgetting_vs_finetune"] = report_detail::optional_json(r.relative_forgetting_vs_finetune);
  return j;
}

inline nlohmann::json matrix_to_json(const EvalMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : m.scores) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& c : row) r.push_back(report_detail::optional_json(c));
    rows.push_back(r);
  }
  return {{"model_ids", m.model_ids}, {"testset_ids", m.testset_ids}, {"scores_db", rows}};
}

// A named row of scores drawn on every chart. Constant series (noisy input,
// M_0) are given as one value per test set.
struct ChartSeries {
  std::string name;
  std::string color;
  std::vector<std::optional<double>> values;  // one per model
};

// Line chart of one test set's score across the model sequence.
inline std::string render_chart_svg(const std::string& title, const std::vector<std::string>& model_ids,
                                    const std::vector<ChartSeries>& series) {
  constexpr double kW = 520, kH = 340, kLeft = 60, kRight = 130, kTop = 36, kBottom = 44;
  const double plot_w = kW - kLeft - kRight, plot_h = kH - kTop - kBottom;
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& s : series)
    for (const auto& v : s.values)
      if (v) {
        lo = any ? std::min(lo, *v) : *v;
        hi = any ? std::max(hi, *v) : *v;
        any = true;
      }
  if (!any || hi - lo < 1e-9) {
    lo -= 1.0;
    hi += 1.0;
  }
  lo = std::floor(lo);
  hi = std::ceil(hi);
  const std::size_t n = std::max<std::size_t>(model_ids.size(), 1);
  auto x_of = [&](std::size_t i) { return kLeft + (n == 1 ? plot_w / 2 : plot_w * static_cast<double>(i) / (n - 1)); };
  auto y_of = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };
  using report_detail::fixed;

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
      << kW << " " << kH << "\">\n"
      << "  <rect x=\"0\" y=\"0\" width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n"
      << "  <text x=\"" << kLeft << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
      << report_detail::xml_escape(title) << "</text>\n"
      << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n"
      << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    svg << "  <text x=\"" << kLeft - 6 << "\" y=\"" << fixed(y_of(v) + 4, 2)
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << fixed(v, 1) << "</text>\n";
  }
  for (std::size_t i = 0; i < model_ids.size(); ++i)
    svg << "  <text x=\"" << fixed(x_of(i), 2) << "\" y=\"" << kTop + plot_h + 16
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">"
        << report_detail::xml_escape(model_ids[i]) << "</text>\n";
  svg << "  <text x=\"14\" y=\"" << kTop + plot_h / 2
      << "\" font-family=\"sans-serif\" font-size=\"11\" transform=\"rotate(-90 14 " << kTop + plot_h / 2
      << ")\" text-anchor=\"middle\">SDR (dB)</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    std::string points;
    for (std::size_t i = 0; i < ser.values.size() && i < model_ids.size(); ++i) {
      if (!ser.values[i]) continue;
      if (!points.empty()) points += ' ';
      points += fixed(x_of(i), 2) + "," + fixed(y_of(*ser.values[i]), 2);
    }
    if (!points.empty())
      svg << "  <polyline fill=\"none\" stroke=\"" << ser.color << "\" stroke-width=\"2\" points=\"" << points
          << "\"/>\n";
    const double ly = kTop + 14.0 * static_cast<double>(s);
    svg << "  <line x1=\"" << kW - kRight + 12 << "\" y1=\"" << ly << "\" x2=\"" << kW - kRight + 32 << "\" y2=\""
        << ly << "\" stroke=\"" << ser.color << "\" stroke-width=\"2\"/>\n"
        << "  <text x=\"" << kW - kRight + 36 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << report_detail::xml_escape(ser.name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

// Results of one or two strategies over the same test sets.
struct ReportInputs {
  std::vector<double> unprocessed;
  std::optional<EvalMatrix> finetune;
  std::optional<EvalMatrix> seril;
};

inline const EvalMatrix& primary_matrix(const ReportInputs& in) {
  INCSE_CHECK(in.finetune || in.seril, ErrorCode::kInvalidArgument, "report needs at least one matrix");
  return in.seril ? *in.seril : *in.finetune;
}

inline nlohmann::json report_json(const ReportInputs& in) {
  const EvalMatrix& ref = primary_matrix(in);
  nlohmann::json j;
  j["format_version"] = kReportFormatVersion;
  j["metric"] = "sdr_stsa_db";
  j["testset_ids"] = ref.testset_ids;
  j["unprocessed_db"] = in.unprocessed;
  auto one = [&](const EvalMatrix& m, const EvalMatrix* cmp) {
    nlohmann::json s;
    s["matrix"] = matrix_to_json(m);
    s["forgetting"] = m.complete() && m.num_models() >= 2 ? forgetting_to_json(compute_forgetting(m, cmp))
                                                          : nlohmann::json(nullptr);
    return s;
  };
  nlohmann::json strategies = nlohmann::json::object();
  if (in.finetune) strategies["finetune"] = one(*in.finetune, nullptr);
  if (in.seril) {
    const bool cmp = in.finetune && in.finetune->complete() && in.finetune->num_models() >= 2;
    strategies["seril"] = one(*in.seril, cmp ? &*in.finetune : nullptr);
  }
  j["strategies"] = strategies;
  return j;
}

// Writes into out_dir:
//   matrix.csv (or matrix_<strategy>.csv when both are given), unprocessed.csv,
//   report.json, chart_<testset>.svg
inline void emit_report(const ReportInputs& raw, const std::filesystem::path& out_dir) {
  // Everything is derived from the values as written to the CSVs, so that a
  // report rebuilt from those files is byte-identical.
  ReportInputs in = raw;
  for (auto* m : {&in.finetune, &in.seril})
    if (*m) **m = matrix_from_csv(matrix_to_csv(**m));
  for (double& v : in.unprocessed) v = std::stod(report_detail::fixed(v));
  const EvalMatrix& ref = primary_matrix(in);
  INCSE_CHECK(in.unprocessed.size() == ref.num_testsets(), ErrorCode::kShapeMismatch,
              "unprocessed scores: expected one per test set");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  INCSE_CHECK(!ec, ErrorCode::kIo, "cannot create ", out_dir.string(), ": ", ec.message());

  const bool both = in.finetune && in.seril;
  if (in.finetune) report_detail::write_text(out_dir / (both ? "matrix_finetune.csv" : "matrix.csv"), matrix_to_csv(*in.finetune));
  if (in.seril) report_detail::write_text(out_dir / (both ? "matrix_seril.csv" : "matrix.csv"), matrix_to_csv(*in.seril));
  report_detail::write_text(out_dir / "unprocessed.csv", unprocessed_to_csv(ref.testset_ids, in.unprocessed));
  report_detail::write_text(out_dir / "report.json", report_json(in).dump(2) + "\n");

  for (std::size_t j = 0; j < ref.num_testsets(); ++j) {
    const std::size_t models = ref.num_models();
    std::vector<ChartSeries> series;
    series.push_back({"noisy", "#888888", std::vector<std::optional<double>>(models, in.unprocessed[j])});
    series.push_back({"M0", "#1f77b4", std::vector<std::optional<double>>(models, ref.scores[0][j])});
    auto column = [&](const EvalMatrix& m) {
      std::vector<std::optional<double>> v;
      for (std::size_t i = 0; i < m.num_models(); ++i) v.push_back(m.scores[i][j]);
      return v;
    };
    if (in.finetune) series.push_back({"finetune", "#d62728", column(*in.finetune)});
    if (in.seril) series.push_back({"seril", "#2ca02c", column(*in.seril)});
    report_detail::write_text(out_dir / ("chart_" + ref.testset_ids[j] + ".svg"),
                              render_chart_svg("Test set " + ref.testset_ids[j], ref.model_ids, series));
  }
}

}  // namespace incse::harness

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dartk/error.hpp"
#include "dartk/eval.hpp"
#include "dartk/psd.hpp"
#include "dartk/saliency.hpp"

namespace dartk {

// Published scores of competing architectures on the same task, rendered for
// side-by-side comparison only; none of these models is implemented here.
struct ReferenceModelRow {
  const char* model;
  double mae;
  double cosine;
  double snr_gain_db;
};

inline const std::vector<ReferenceModelRow>& reference_model_rows() {
  static const std::vector<ReferenceModelRow> rows = {
      {"BiLSTM", 0.0121, 0.8325, 9.24},
      {"ResNet1D", 0.0102, 0.8596, 10.32},
      {"Transformer", 0.0087, 0.8831, 11.56},
      {"TCN", 0.0109, 0.8490, 9.98},
      {"1D U-Net", 0.0061, 0.9052, 12.67},
      {"MSDCNet", 0.0093, 0.8744, 10.94},
      {"WaveNet", 0.0075, 0.8905, 11.82},
      {"Attention U-Net 1D", 0.0068, 0.8979, 12.13},
  };
  return rows;
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), Errc::IoFailure,
          "cannot open '" + path.string() + "' for write");
  return f;
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec && std::filesystem::is_directory(dir), Errc::IoFailure,
          "cannot create output directory '" + dir.string() + "'");
}

inline void close_out(std::ofstream& f, const std::filesystem::path& path) {
  f.flush();
  require(f.good(), Errc::IoFailure, "short write to '" + path.string() + "'");
}

// Least-squares line y = intercept + slope * x.
inline std::pair<double, double> fit_line(const std::vector<double>& x,
                                          const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, Errc::TooFew,
          "line fit needs two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return {slope, my - slope * mx};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Minimal SVG plotting, enough for line overlays, scatters, bars, and boxes.

namespace svg {

struct Series {
  std::string label;
  std::vector<double> y;  // x is the sample index
};

namespace detail {

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b"};
  return colors[i % 6];
}

struct Frame {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  double left = 64.0, right = 776.0, top = 48.0, bottom = 356.0;

  void pad_degenerate() {
    if (x1 <= x0) x1 = x0 + 1.0;
    if (y1 <= y0) {
      y0 -= 1.0;
      y1 += 1.0;
    }
  }
  double X(double x) const {
    return left + (x - x0) / (x1 - x0) * (right - left);
  }
  double Y(double y) const {
    return bottom - (y - y0) / (y1 - y0) * (bottom - top);
  }
};

inline void header(std::ofstream& f, const std::string& title) {
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" "
       "height=\"400\" viewBox=\"0 0 800 400\">\n"
    << "<rect width=\"800\" height=\"400\" fill=\"white\"/>\n"
    << "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
       "font-family=\"sans-serif\">"
    << title << "</text>\n";
}

inline void axes(std::ofstream& f, const Frame& fr, const std::string& xlab,
                 const std::string& ylab) {
  f << "<rect x=\"" << fr.left << "\" y=\"" << fr.top << "\" width=\""
    << fr.right - fr.left << "\" height=\"" << fr.bottom - fr.top
    << "\" fill=\"none\" stroke=\"#333\"/>\n";
  f << "<text x=\"" << fr.left << "\" y=\"390\" font-size=\"11\" "
       "font-family=\"sans-serif\">"
    << dartk::detail::fmt(fr.x0) << "</text>\n";
  f << "<text x=\"" << fr.right << "\" y=\"390\" text-anchor=\"end\" "
       "font-size=\"11\" font-family=\"sans-serif\">"
    << dartk::detail::fmt(fr.x1) << "</text>\n";
  f << "<text x=\"8\" y=\"" << fr.bottom << "\" font-size=\"11\" "
       "font-family=\"sans-serif\">"
    << dartk::detail::fmt(fr.y0) << "</text>\n";
  f << "<text x=\"8\" y=\"" << fr.top + 4 << "\" font-size=\"11\" "
       "font-family=\"sans-serif\">"
    << dartk::detail::fmt(fr.y1) << "</text>\n";
  f << "<text x=\"400\" y=\"390\" text-anchor=\"middle\" font-size=\"12\" "
       "font-family=\"sans-serif\">"
    << xlab << "</text>\n";
  f << "<text x=\"16\" y=\"200\" font-size=\"12\" font-family=\"sans-serif\" "
       "transform=\"rotate(-90 16 200)\" text-anchor=\"middle\">"
    << ylab << "</text>\n";
}

}  // namespace detail

inline void line_plot(const std::filesystem::path& path,
                      const std::string& title, const std::string& xlab,
                      const std::string& ylab,
                      const std::vector<Series>& series) {
  require(!series.empty(), Errc::Empty, "line plot needs a series");
  detail::Frame fr;
  fr.x0 = 0.0;
  fr.x1 = 1.0;
  bool first = true;
  for (const auto& s : series) {
    fr.x1 = std::max(fr.x1, static_cast<double>(
                                s.y.empty() ? 1 : s.y.size() - 1));
    for (double v : s.y) {
      if (first) {
        fr.y0 = fr.y1 = v;
        first = false;
      }
      fr.y0 = std::min(fr.y0, v);
      fr.y1 = std::max(fr.y1, v);
    }
  }
  fr.pad_degenerate();

  auto f = dartk::detail::open_out(path);
  detail::header(f, title);
  detail::axes(f, fr, xlab, ylab);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    if (s.y.empty()) continue;
    f << "<polyline fill=\"none\" stroke=\"" << detail::palette(i)
      << "\" stroke-width=\"1\" points=\"";
    for (std::size_t t = 0; t < s.y.size(); ++t)
      f << fr.X(static_cast<double>(t)) << "," << fr.Y(s.y[t]) << " ";
    f << "\"/>\n";
    f << "<text x=\"" << fr.right - 150 << "\" y=\""
      << fr.top + 16.0 * static_cast<double>(i + 1) << "\" fill=\""
      << detail::palette(i) << "\" font-size=\"12\" "
      << "font-family=\"sans-serif\">" << s.label << "</text>\n";
  }
  f << "</svg>\n";
  dartk::detail::close_out(f, path);
}

// Scatter with the identity line and an annotated least-squares fit; the fit
// is exposed through data-slope / data-intercept attributes.
inline void scatter_plot(const std::filesystem::path& path,
                         const std::string& title, const std::string& xlab,
                         const std::string& ylab,
                         const std::vector<double>& x,
                         const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, Errc::TooFew,
          "scatter needs two points");
  detail::Frame fr;
  fr.x0 = *std::min_element(x.begin(), x.end());
  fr.x1 = *std::max_element(x.begin(), x.end());
  fr.y0 = *std::min_element(y.begin(), y.end());
  fr.y1 = *std::max_element(y.begin(), y.end());
  // shared square range so the identity line is the diagonal
  fr.x0 = fr.y0 = std::min(fr.x0, fr.y0);
  fr.x1 = fr.y1 = std::max(fr.x1, fr.y1);
  fr.pad_degenerate();

  const auto [slope, intercept] = dartk::detail::fit_line(x, y);

  auto f = dartk::detail::open_out(path);
  detail::header(f, title);
  detail::axes(f, fr, xlab, ylab);
  for (std::size_t i = 0; i < x.size(); ++i)
    f << "<circle cx=\"" << fr.X(x[i]) << "\" cy=\"" << fr.Y(y[i])
      << "\" r=\"1.5\" fill=\"#1f77b4\" fill-opacity=\"0.5\"/>\n";
  f << "<line x1=\"" << fr.X(fr.x0) << "\" y1=\"" << fr.Y(fr.x0)
    << "\" x2=\"" << fr.X(fr.x1) << "\" y2=\"" << fr.Y(fr.x1)
    << "\" stroke=\"#d62728\" stroke-dasharray=\"6 4\"/>\n";
  f << "<line x1=\"" << fr.X(fr.x0) << "\" y1=\""
    << fr.Y(intercept + slope * fr.x0) << "\" x2=\"" << fr.X(fr.x1)
    << "\" y2=\"" << fr.Y(intercept + slope * fr.x1)
    << "\" stroke=\"#2ca02c\"/>\n";
  f << "<text x=\"" << fr.left + 8 << "\" y=\"" << fr.top + 16
    << "\" font-size=\"12\" font-family=\"sans-serif\" data-slope=\""
    << dartk::detail::fmt(slope) << "\" data-intercept=\""
    << dartk::detail::fmt(intercept) << "\">fit: slope "
    << dartk::detail::fmt(slope) << ", intercept "
    << dartk::detail::fmt(intercept) << "</text>\n";
  f << "</svg>\n";
  dartk::detail::close_out(f, path);
}

inline void bar_plot(const std::filesystem::path& path,
                     const std::string& title, const std::string& xlab,
                     const std::string& ylab,
                     const std::vector<std::string>& labels,
                     const std::vector<double>& values) {
  require(labels.size() == values.size() && !values.empty(),
          Errc::LengthMismatch, "bar plot needs one label per value");
  detail::Frame fr;
  fr.x0 = 0.0;
  fr.x1 = static_cast<double>(values.size());
  fr.y0 = std::min(0.0, *std::min_element(values.begin(), values.end()));
  fr.y1 = std::max(0.0, *std::max_element(values.begin(), values.end()));
  fr.pad_degenerate();

  auto f = dartk::detail::open_out(path);
  detail::header(f, title);
  detail::axes(f, fr, xlab, ylab);
  const double slot = (fr.right - fr.left) / static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = fr.left + slot * (static_cast<double>(i) + 0.15);
    const double y_top = fr.Y(std::max(values[i], 0.0));
    const double y_bot = fr.Y(std::min(values[i], 0.0));
    f << "<rect x=\"" << x << "\" y=\"" << y_top << "\" width=\""
      << slot * 0.7 << "\" height=\"" << std::max(y_bot - y_top, 0.5)
      << "\" fill=\"#1f77b4\"/>\n";
    f << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << fr.bottom + 14
      << "\" text-anchor=\"middle\" font-size=\"10\" "
         "font-family=\"sans-serif\">"
      << labels[i] << "</text>\n";
  }
  f << "</svg>\n";
  dartk::detail::close_out(f, path);
}

// One box per group: quartile box, median line, min/max whiskers.
inline void box_plot(
    const std::filesystem::path& path, const std::string& title,
    const std::string& ylab,
    const std::vector<std::pair<std::string, std::vector<double>>>& groups) {
  require(!groups.empty(), Errc::Empty, "box plot needs a group");
  detail::Frame fr;
  fr.x0 = 0.0;
  fr.x1 = static_cast<double>(groups.size());
  bool first = true;
  for (const auto& g : groups) {
    require(!g.second.empty(), Errc::Empty, "box plot group is empty");
    for (double v : g.second) {
      if (first) {
        fr.y0 = fr.y1 = v;
        first = false;
      }
      fr.y0 = std::min(fr.y0, v);
      fr.y1 = std::max(fr.y1, v);
    }
  }
  fr.pad_degenerate();

  auto f = dartk::detail::open_out(path);
  detail::header(f, title);
  detail::axes(f, fr, "", ylab);
  const double slot = (fr.right - fr.left) / static_cast<double>(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& v = groups[i].second;
    const double lo = *std::min_element(v.begin(), v.end());
    const double hi = *std::max_element(v.begin(), v.end());
    const double q1 = quantile(v, 0.25);
    const double q2 = quantile(v, 0.50);
    const double q3 = quantile(v, 0.75);
    const double cx = fr.left + slot * (static_cast<double>(i) + 0.5);
    const double half = slot * 0.25;
    f << "<line x1=\"" << cx << "\" y1=\"" << fr.Y(lo) << "\" x2=\"" << cx
      << "\" y2=\"" << fr.Y(hi) << "\" stroke=\"#333\"/>\n";
    f << "<rect x=\"" << cx - half << "\" y=\"" << fr.Y(q3) << "\" width=\""
      << 2 * half << "\" height=\"" << std::max(fr.Y(q1) - fr.Y(q3), 0.5)
      << "\" fill=\"#aec7e8\" stroke=\"#1f77b4\"/>\n";
    f << "<line x1=\"" << cx - half << "\" y1=\"" << fr.Y(q2) << "\" x2=\""
      << cx + half << "\" y2=\"" << fr.Y(q2)
      << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    f << "<text x=\"" << cx << "\" y=\"" << fr.bottom + 14
      << "\" text-anchor=\"middle\" font-size=\"11\" "
         "font-family=\"sans-serif\">"
      << groups[i].first << "</text>\n";
  }
  f << "</svg>\n";
  dartk::detail::close_out(f, path);
}

}  // namespace svg

// ---------------------------------------------------------------------------
// JSON snapshots.

inline nlohmann::json to_json(const MetricSummary& s) {
  return {{"mean", s.mean},
          {"sd", s.sd},
          {"n", s.n},
          {"n_excluded", s.n_excluded},
          {"available", s.available}};
}

inline nlohmann::json to_json(const AggregateReport& a) {
  return {{"rmse", to_json(a.rmse)},
          {"nrmse", to_json(a.nrmse)},
          {"mae", to_json(a.mae)},
          {"pearson_r", to_json(a.pearson_r)},
          {"ssim", to_json(a.ssim)},
          {"cosine", to_json(a.cosine)},
          {"snr_db", to_json(a.snr_db)},
          {"snr_gain_db", to_json(a.snr_gain_db)}};
}

inline nlohmann::json to_json(const TrainConfig& t) {
  return {{"lr", t.lr},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"eps", t.eps},
          {"batch_size", t.batch_size},
          {"max_epochs", t.max_epochs},
          {"patience", t.patience},
          {"min_delta", t.min_delta},
          {"early_stopping", t.early_stopping},
          {"seed", t.seed}};
}

inline nlohmann::json to_json(const DarConfig& d) {
  return {{"variant", variant_name(d.variant)},
          {"enc0", d.enc0},
          {"enc1", d.enc1},
          {"dec0", d.dec0},
          {"dec1", d.dec1},
          {"kernel", d.kernel},
          {"padding", d.padding},
          {"output_activation",
           d.output_activation == OutputActivation::Tanh ? "tanh" : "none"}};
}

inline nlohmann::json to_json(const BaselineConfig& b) {
  return {{"aas_window", b.aas_window},
          {"aas_epoch_len", b.aas_epoch_len},
          {"obs_n_basis", b.obs_n_basis},
          {"obs_epoch_len", b.obs_epoch_len},
          {"pca_k", b.pca_k},
          {"ica_components", b.ica_components},
          {"ica_max_iter", b.ica_max_iter},
          {"ica_tol", b.ica_tol},
          {"ica_seed", b.ica_seed},
          {"ica_rule",
           {{"kurtosis_threshold", b.ica_rule.kurtosis_threshold},
            {"slice_hz", b.ica_rule.slice_hz},
            {"psd_fraction_threshold", b.ica_rule.psd_fraction_threshold},
            {"n_harmonics", b.ica_rule.n_harmonics},
            {"half_width_hz", b.ica_rule.half_width_hz}}}};
}

inline nlohmann::json to_json(const EvalConfig& c) {
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : c.methods) methods.push_back(method_name(m));
  return {{"train_frac", c.train_frac}, {"seed", c.seed},
          {"train", to_json(c.train)}, {"dar", to_json(c.dar)},
          {"baselines", to_json(c.baselines)}, {"methods", methods}};
}

inline nlohmann::json to_json(const SplitPlan& p) {
  return {{"kind", p.kind == SplitKind::Pooled ? "pooled" : "loso"},
          {"train_frac", p.train_frac},
          {"seed", p.seed},
          {"held_out", p.held_out},
          {"train_idx", p.train_idx},
          {"test_idx", p.test_idx}};
}

// ---------------------------------------------------------------------------
// Report emission. Every function returns the files it wrote (names relative
// to out_dir); emit_reports finishes with a machine-readable run manifest
// whose "files" array lists every other artifact.

namespace detail {

inline void metric_row(std::ofstream& f, const std::string& method,
                       const char* metric, const MetricSummary& s) {
  f << method << "," << metric << "," << fmt(s.mean) << "," << fmt(s.sd)
    << "," << s.n << "," << s.n_excluded << "," << (s.available ? 1 : 0)
    << "\n";
}

}  // namespace detail

inline std::vector<std::string> emit_reports(const EvalRun& run,
                                             const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  detail::ensure_dir(dir);
  const MethodResult* dar = detail::find_method(run.methods, Method::Dar);
  std::vector<std::string> files;

  {
    const fs::path p = dir / "per_segment_metrics.csv";
    auto f = detail::open_out(p);
    f << "method,segment,rmse,nrmse,mae,pearson_r,ssim,"
         "cosine,snr_db,snr_gain_db\n";
    for (const auto& m : run.methods)
      for (std::size_t i = 0; i < m.per_segment.size(); ++i) {
        const auto& r = m.per_segment[i];
        f << method_name(m.method) << "," << i << ","
          << detail::fmt(r.rmse) << ","
          << (r.nrmse_defined ? detail::fmt(r.nrmse) : "") << ","
          << detail::fmt(r.mae) << ","
          << (r.pearson_defined ? detail::fmt(r.pearson_r) : "") << ","
          << detail::fmt(r.ssim) << ","
          << (r.cosine_defined ? detail::fmt(r.cosine) : "") << ","
          << (r.snr_defined ? detail::fmt(r.snr_clean_vs_denoised_db) : "")
          << "," << (r.snr_defined ? detail::fmt(r.snr_gain_db) : "")
          << "\n";
      }
    detail::close_out(f, p);
    files.push_back("per_segment_metrics.csv");
  }

  {
    const fs::path p = dir / "metrics_summary.csv";
    auto f = detail::open_out(p);
    f << "method,metric,mean,sd,n,n_excluded,available\n";
    for (const auto& m : run.methods) {
      const std::string name = method_name(m.method);
      detail::metric_row(f, name, "rmse", m.aggregate.rmse);
      detail::metric_row(f, name, "nrmse", m.aggregate.nrmse);
      detail::metric_row(f, name, "mae", m.aggregate.mae);
      detail::metric_row(f, name, "pearson_r", m.aggregate.pearson_r);
      detail::metric_row(f, name, "ssim", m.aggregate.ssim);
      detail::metric_row(f, name, "cosine", m.aggregate.cosine);
      detail::metric_row(f, name, "snr_db", m.aggregate.snr_db);
      detail::metric_row(f, name, "snr_gain_db", m.aggregate.snr_gain_db);
    }
    detail::close_out(f, p);
    files.push_back("metrics_summary.csv");
  }

  {
    const fs::path p = dir / "method_comparison.csv";
    auto f = detail::open_out(p);
    f << "method,rmse_mean,rmse_sd,nrmse_mean,nrmse_sd,pearson_mean,"
         "pearson_sd,ssim_mean,ssim_sd\n";
    for (const auto& m : run.methods) {
      f << method_name(m.method) << "," << detail::fmt(m.aggregate.rmse.mean)
        << "," << detail::fmt(m.aggregate.rmse.sd) << ","
        << detail::fmt(m.aggregate.nrmse.mean) << ","
        << detail::fmt(m.aggregate.nrmse.sd) << ","
        << detail::fmt(m.aggregate.pearson_r.mean) << ","
        << detail::fmt(m.aggregate.pearson_r.sd) << ","
        << detail::fmt(m.aggregate.ssim.mean) << ","
        << detail::fmt(m.aggregate.ssim.sd) << "\n";
    }
    detail::close_out(f, p);
    files.push_back("method_comparison.csv");
  }

  if (dar) {
    const fs::path p = dir / "reference_models.csv";
    auto f = detail::open_out(p);
    f << "model,mae,cosine,snr_gain_db,source\n";
    f << "dar (this run)," << detail::fmt(dar->aggregate.mae.mean) << ","
      << detail::fmt(dar->aggregate.cosine.mean) << ","
      << detail::fmt(dar->aggregate.snr_gain_db.mean) << ",measured\n";
    for (const auto& r : reference_model_rows())
      f << r.model << "," << detail::fmt(r.mae) << "," << detail::fmt(r.cosine)
        << "," << detail::fmt(r.snr_gain_db) << ",published\n";
    detail::close_out(f, p);
    files.push_back("reference_models.csv");
  }

  {
    const fs::path p = dir / "significance.csv";
    auto f = detail::open_out(p);
    f << "metric,compared_method,t_statistic,p_value,cohens_d,dof,n,"
         "available\n";
    for (const auto& c : run.comparisons) {
      f << c.metric << "," << method_name(c.method) << ",";
      if (c.available)
        f << detail::fmt(c.test.t_statistic) << ","
          << detail::fmt(c.test.p_value) << "," << detail::fmt(c.test.cohens_d)
          << "," << detail::fmt(c.test.dof) << "," << c.test.n << ",1\n";
      else
        f << ",,,,,0\n";
    }
    detail::close_out(f, p);
    files.push_back("significance.csv");
  }

  if (run.exhibit_available) {
    const auto& noisy = run.exhibit.noisy;
    const auto& clean = run.exhibit.clean;
    const auto& den = run.exhibit_denoised;

    std::vector<svg::Series> overlay(3);
    overlay[0].label = "clean";
    overlay[1].label = "noisy";
    overlay[2].label = "denoised";
    overlay[0].y.assign(clean.channel(0), clean.channel(0) + clean.n_samples);
    overlay[1].y.assign(noisy.channel(0), noisy.channel(0) + noisy.n_samples);
    overlay[2].y.assign(den.channel(0), den.channel(0) + den.n_samples);
    svg::line_plot(dir / "waveform_overlay.svg",
                   "Held-out segment, channel 1", "sample",
                   "normalized amplitude", overlay);
    files.push_back("waveform_overlay.svg");

    svg::scatter_plot(dir / "amplitude_scatter.svg",
                      "Reference vs denoised amplitudes", "reference",
                      "denoised", clean.data, den.data);
    files.push_back("amplitude_scatter.svg");

    std::vector<std::string> labels;
    for (std::size_t c = 0; c < run.exhibit_saliency.n_channels; ++c)
      labels.push_back("ch" + std::to_string(c + 1));
    svg::bar_plot(dir / "saliency_channels.svg",
                  "Mean input-gradient magnitude per channel", "channel",
                  "mean |gradient|", labels,
                  run.exhibit_saliency.channel_means);
    files.push_back("saliency_channels.svg");
  }

  {
    nlohmann::json manifest;
    manifest["config"] = to_json(run.config);
    manifest["threads"] = run.threads;
    manifest["split"] = to_json(run.split);
    manifest["started_at"] = run.started_at;
    manifest["finished_at"] = run.finished_at;
    manifest["wall_seconds"] = run.wall_seconds;
    manifest["model_trained"] = run.model_trained;
    if (run.model_trained) {
      manifest["train"] = {{"best_epoch", run.train_report.best_epoch},
                           {"stopped_epoch", run.train_report.stopped_epoch},
                           {"train_loss", run.train_report.train_loss},
                           {"val_loss", run.train_report.val_loss}};
    }
    auto& aggregates = manifest["aggregates"] = nlohmann::json::object();
    for (const auto& m : run.methods)
      aggregates[method_name(m.method)] = to_json(m.aggregate);
    auto& comp = manifest["comparisons"] = nlohmann::json::array();
    for (const auto& c : run.comparisons) {
      nlohmann::json row = {{"metric", c.metric},
                            {"method", method_name(c.method)},
                            {"available", c.available}};
      if (c.available) {
        row["t_statistic"] = c.test.t_statistic;
        row["p_value"] = c.test.p_value;
        row["cohens_d"] = c.test.cohens_d;
        row["dof"] = c.test.dof;
        row["n"] = c.test.n;
      }
      comp.push_back(std::move(row));
    }
    manifest["files"] = files;

    const fs::path p = dir / "run_manifest.json";
    auto f = detail::open_out(p);
    f << manifest.dump(2) << "\n";
    detail::close_out(f, p);
    files.push_back("run_manifest.json");
  }
  return files;
}

inline std::vector<std::string> emit_ablation(
    const std::vector<AblationRow>& rows, const std::string& out_dir) {
  namespace fs = std::filesystem;
  detail::ensure_dir(fs::path(out_dir));
  const fs::path p = fs::path(out_dir) / "ablation.csv";
  auto f = detail::open_out(p);
  f << "variant,parameters,rmse,nrmse,pearson_r,ssim,epochs\n";
  for (const auto& r : rows)
    f << variant_name(r.variant) << "," << r.parameter_count << ","
      << detail::fmt(r.rmse) << "," << detail::fmt(r.nrmse) << ","
      << detail::fmt(r.pearson_r) << "," << detail::fmt(r.ssim) << ","
      << r.train_report.train_loss.size() << "\n";
  detail::close_out(f, p);
  return {"ablation.csv"};
}

inline std::vector<std::string> emit_loso(const LosoResult& result,
                                          const std::string& out_dir) {
  namespace fs = std::filesystem;
  detail::ensure_dir(fs::path(out_dir));
  const fs::path dir(out_dir);
  std::vector<std::string> files;

  {
    const fs::path p = dir / "loso_subjects.csv";
    auto f = detail::open_out(p);
    f << "subject,rmse,pearson_r,ssim,n_segments,best_epoch\n";
    for (const auto& fold : result.folds)
      f << fold.held_out << "," << detail::fmt(fold.rmse) << ","
        << detail::fmt(fold.pearson_r) << "," << detail::fmt(fold.ssim) << ","
        << fold.per_segment.size() << "," << fold.train_report.best_epoch
        << "\n";
    detail::close_out(f, p);
    files.push_back("loso_subjects.csv");
  }
  {
    const fs::path p = dir / "loso_summary.csv";
    auto f = detail::open_out(p);
    f << "metric,mean,sd,shapiro_w,shapiro_p,ci95_lower,ci95_upper\n";
    for (const auto& s : result.summary)
      f << s.metric << "," << detail::fmt(s.mean) << "," << detail::fmt(s.sd)
        << "," << detail::fmt(s.shapiro_w) << "," << detail::fmt(s.shapiro_p)
        << "," << detail::fmt(s.ci_lower) << "," << detail::fmt(s.ci_upper)
        << "\n";
    detail::close_out(f, p);
    files.push_back("loso_summary.csv");
  }
  {
    std::vector<std::pair<std::string, std::vector<double>>> groups;
    std::vector<double> rmse, corr, ssim;
    for (const auto& fold : result.folds) {
      rmse.push_back(fold.rmse);
      corr.push_back(fold.pearson_r);
      ssim.push_back(fold.ssim);
    }
    groups.emplace_back("rmse", rmse);
    groups.emplace_back("pearson_r", corr);
    groups.emplace_back("ssim", ssim);
    svg::box_plot(dir / "loso_boxplot.svg", "Held-out-subject metric spread",
                  "value", groups);
    files.push_back("loso_boxplot.svg");
  }
  {
    nlohmann::json manifest;
    auto& folds = manifest["folds"] = nlohmann::json::array();
    for (const auto& fold : result.folds)
      folds.push_back({{"held_out", fold.held_out},
                       {"rmse", fold.rmse},
                       {"pearson_r", fold.pearson_r},
                       {"ssim", fold.ssim},
                       {"n_segments", fold.per_segment.size()}});
    auto& summary = manifest["summary"] = nlohmann::json::array();
    for (const auto& s : result.summary)
      summary.push_back({{"metric", s.metric},
                         {"mean", s.mean},
                         {"sd", s.sd},
                         {"shapiro_w", s.shapiro_w},
                         {"shapiro_p", s.shapiro_p},
                         {"ci95_lower", s.ci_lower},
                         {"ci95_upper", s.ci_upper}});
    manifest["started_at"] = result.started_at;
    manifest["finished_at"] = result.finished_at;
    manifest["wall_seconds"] = result.wall_seconds;
    manifest["files"] = files;
    const fs::path p = dir / "loso_manifest.json";
    auto f = detail::open_out(p);
    f << manifest.dump(2) << "\n";
    detail::close_out(f, p);
    files.push_back("loso_manifest.json");
  }
  return files;
}

inline std::vector<std::string> emit_saliency(const SaliencyMap& map,
                                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  detail::ensure_dir(fs::path(out_dir));
  const fs::path dir(out_dir);
  std::vector<std::string> files;
  {
    const fs::path p = dir / "saliency.csv";
    auto f = detail::open_out(p);
    f << "channel,sample,abs_gradient\n";
    for (std::size_t c = 0; c < map.n_channels; ++c)
      for (std::size_t t = 0; t < map.n_samples; ++t)
        f << c + 1 << "," << t << "," << detail::fmt(map.channel(c)[t])
          << "\n";
    detail::close_out(f, p);
    files.push_back("saliency.csv");
  }
  {
    std::vector<std::string> labels;
    for (std::size_t c = 0; c < map.n_channels; ++c)
      labels.push_back("ch" + std::to_string(c + 1));
    svg::bar_plot(dir / "saliency_channels.svg",
                  "Mean input-gradient magnitude per channel", "channel",
                  "mean |gradient|", labels, map.channel_means);
    files.push_back("saliency_channels.svg");
  }
  return files;
}

inline std::vector<std::string> emit_psd(const PsdEstimate& psd,
                                         const std::string& out_dir,
                                         const std::string& stem = "psd") {
  namespace fs = std::filesystem;
  detail::ensure_dir(fs::path(out_dir));
  const fs::path dir(out_dir);
  std::vector<std::string> files;
  {
    const fs::path p = dir / (stem + ".csv");
    auto f = detail::open_out(p);
    f << "frequency_hz,power_density\n";
    for (std::size_t i = 0; i < psd.frequencies.size(); ++i)
      f << detail::fmt(psd.frequencies[i]) << "," << detail::fmt(psd.power[i])
        << "\n";
    detail::close_out(f, p);
    files.push_back(stem + ".csv");
  }
  {
    svg::Series s;
    s.label = stem;
    s.y = psd.power;
    svg::line_plot(dir / (stem + ".svg"), "Welch power spectral density",
                   "frequency bin", "power density", {s});
    files.push_back(stem + ".svg");
  }
  return files;
}

}  // namespace dartk

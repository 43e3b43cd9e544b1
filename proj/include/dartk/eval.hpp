#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dartk/baselines.hpp"
#include "dartk/dar.hpp"
#include "dartk/error.hpp"
#include "dartk/metrics.hpp"
#include "dartk/parallel.hpp"
#include "dartk/preprocess.hpp"
#include "dartk/saliency.hpp"
#include "dartk/split.hpp"
#include "dartk/stats.hpp"
#include "dartk/synth.hpp"

namespace dartk {

enum class Method { Dar, Aas, Obs, Pca, Ica };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::Dar: return "dar";
    case Method::Aas: return "aas";
    case Method::Obs: return "obs";
    case Method::Pca: return "pca";
    default: return "ica";
  }
}

inline Method method_from_name(const std::string& s) {
  if (s == "dar") return Method::Dar;
  if (s == "aas") return Method::Aas;
  if (s == "obs") return Method::Obs;
  if (s == "pca") return Method::Pca;
  if (s == "ica") return Method::Ica;
  fail(Errc::BadArgument, "unknown method '" + s + "'");
}

struct BaselineConfig {
  std::size_t aas_window = 25;
  std::size_t aas_epoch_len = 0;  // 0: median inter-marker gap
  std::size_t obs_n_basis = 4;
  std::size_t obs_epoch_len = 0;
  std::size_t pca_k = 3;
  std::size_t ica_components = 0;  // 0: one per channel
  std::size_t ica_max_iter = 500;
  double ica_tol = 1e-6;
  std::uint64_t ica_seed = 42;
  SelectionRule ica_rule;
};

// One subject's aligned continuous recordings plus the derived segment grid.
// Baselines consume the continuous noisy recording; DAR consumes the pairs.
struct SubjectData {
  std::string subject_id;
  Recording noisy;
  Recording clean;
  std::vector<SegmentPair> pairs;
};

inline SubjectData prepare_subject(const Recording& raw_noisy,
                                   const Recording& raw_clean,
                                   const PreprocessConfig& pcfg,
                                   const std::string& subject_id) {
  SubjectData s;
  s.subject_id = subject_id;
  s.noisy =
      bandpass_zero_phase(resample(raw_noisy, pcfg.target_hz), pcfg.filter);
  s.clean =
      bandpass_zero_phase(resample(raw_clean, pcfg.target_hz), pcfg.filter);
  s.pairs = segment(s.noisy, s.clean, pcfg.win, pcfg.stride, subject_id);
  return s;
}

// Each subject gets an independent artifact/EEG realization via a forked seed.
inline std::vector<SubjectData> make_synthetic_subjects(
    const SynthConfig& base, std::size_t n_subjects,
    const PreprocessConfig& pcfg) {
  require(n_subjects >= 1, Errc::InvalidConfig, "need at least one subject");
  std::vector<SubjectData> out;
  const Rng root(base.seed);
  for (std::size_t i = 0; i < n_subjects; ++i) {
    SynthConfig cfg = base;
    cfg.seed = root.fork(i).seed();
    const Recording clean = generate_clean(cfg);
    const Recording noisy = add_artifacts(clean, cfg);
    std::string sid = "s" + std::string(i + 1 < 10 ? "0" : "") +
                      std::to_string(i + 1);
    out.push_back(prepare_subject(noisy, clean, pcfg, sid));
  }
  return out;
}

inline Recording apply_baseline(Method m, const Recording& rec,
                                const BaselineConfig& b) {
  switch (m) {
    case Method::Aas: return aas(rec, b.aas_window, b.aas_epoch_len);
    case Method::Obs: return obs(rec, b.obs_n_basis, b.obs_epoch_len);
    case Method::Pca: return pca_denoise(rec, b.pca_k);
    case Method::Ica: {
      const std::size_t n =
          b.ica_components ? b.ica_components : rec.n_channels;
      auto model = fastica(rec, n, b.ica_max_iter, b.ica_tol, b.ica_seed);
      return ica_denoise(rec, model, b.ica_rule);
    }
    default:
      fail(Errc::InvalidConfig, "dar is not a marker-based baseline");
  }
}

struct EvalConfig {
  double train_frac = 0.8;
  std::uint64_t seed = 42;
  TrainConfig train;
  DarConfig dar = DarConfig::for_variant(DarVariant::Baseline);
  BaselineConfig baselines;
  std::vector<Method> methods = {Method::Dar, Method::Aas, Method::Obs,
                                 Method::Pca, Method::Ica};
};

struct MethodResult {
  Method method = Method::Dar;
  std::vector<MetricReport> per_segment;  // ordered like SplitPlan::test_idx
  AggregateReport aggregate;
};

// Table-5-shaped significance row: DAR against one other method.
struct ComparisonRow {
  std::string metric;  // "rmse" or "pearson_r"
  Method method = Method::Aas;
  PairedTestResult test;
  bool available = false;
};

struct EvalRun {
  EvalConfig config;
  std::size_t threads = 1;
  SplitPlan split;
  std::vector<MethodResult> methods;
  std::vector<ComparisonRow> comparisons;
  TrainReport train_report;
  Dar<double> model;
  bool model_trained = false;
  // First held-out pair, its reconstruction, and its saliency map; feeds the
  // waveform-overlay, scatter, and per-channel-saliency figures.
  SegmentPair exhibit;
  Segment exhibit_denoised;
  SaliencyMap exhibit_saliency;
  bool exhibit_available = false;
  double wall_seconds = 0.0;
  std::string started_at;
  std::string finished_at;
};

namespace detail {

inline std::string iso_utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[24];
  std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
  return buf;
}

inline const MethodResult* find_method(const std::vector<MethodResult>& all,
                                       Method m) {
  for (const auto& r : all)
    if (r.method == m) return &r;
  return nullptr;
}

// Paired vectors restricted to segments where both sides are defined.
inline void paired_metric(const MethodResult& a, const MethodResult& b,
                          bool use_pearson, std::vector<double>& va,
                          std::vector<double>& vb) {
  va.clear();
  vb.clear();
  for (std::size_t i = 0; i < a.per_segment.size(); ++i) {
    const auto& ra = a.per_segment[i];
    const auto& rb = b.per_segment[i];
    if (use_pearson) {
      if (ra.pearson_defined && rb.pearson_defined) {
        va.push_back(ra.pearson_r);
        vb.push_back(rb.pearson_r);
      }
    } else {
      va.push_back(ra.rmse);
      vb.push_back(rb.rmse);
    }
  }
}

}  // namespace detail

// Pooled 80/20 experiment: train DAR on the training split, apply every
// requested method to the held-out segments, aggregate, and compare.
inline EvalRun run_pooled(const std::vector<SubjectData>& subjects,
                          const EvalConfig& ecfg) {
  std::vector<SegmentPair> pairs;
  for (const auto& s : subjects)
    pairs.insert(pairs.end(), s.pairs.begin(), s.pairs.end());
  require(subject_ids(pairs).size() >= 2, Errc::TooFewSubjects,
          "pooled evaluation needs pairs from at least two subjects");

  EvalRun run;
  run.config = ecfg;
  run.threads = static_cast<std::size_t>(threads());
  run.started_at = detail::iso_utc_now();
  const auto t0 = std::chrono::steady_clock::now();

  run.split = pooled_split(pairs.size(), ecfg.train_frac, ecfg.seed);
  const auto train_pairs = gather_pairs(pairs, run.split.train_idx);
  const auto test_pairs = gather_pairs(pairs, run.split.test_idx);

  const bool wants_dar =
      std::find(ecfg.methods.begin(), ecfg.methods.end(), Method::Dar) !=
      ecfg.methods.end();
  if (wants_dar) {
    run.model = Dar<double>::build(ecfg.dar, ecfg.train.seed);
    run.train_report =
        train_dar(run.model, train_pairs, test_pairs, ecfg.train);
    run.model_trained = true;
    run.exhibit = test_pairs.front();
    run.exhibit_denoised = denoise(run.model, run.exhibit.noisy);
    run.exhibit_saliency = saliency(run.model, run.exhibit.noisy);
    run.exhibit_available = true;
  }

  // Baselines operate on each continuous recording once; their outputs are
  // sliced and normalized on the same grid as the DAR segments.
  std::set<std::string> test_subjects;
  for (const auto& p : test_pairs) test_subjects.insert(p.noisy.subject_id);

  for (Method m : ecfg.methods) {
    MethodResult res;
    res.method = m;
    if (m == Method::Dar) {
      for (const auto& pair : test_pairs) {
        const Segment denoised = denoise(run.model, pair.noisy);
        res.per_segment.push_back(compute_metrics(
            pair.clean.data, pair.noisy.data, denoised.data));
      }
    } else {
      std::map<std::string, Recording> corrected;
      for (const auto& s : subjects)
        if (test_subjects.count(s.subject_id))
          corrected.emplace(s.subject_id,
                            apply_baseline(m, s.noisy, ecfg.baselines));
      for (const auto& pair : test_pairs) {
        const Recording& rec = corrected.at(pair.noisy.subject_id);
        const Segment pred =
            cut_window(rec, pair.noisy.source_offset, pair.noisy.n_samples,
                       pair.noisy.subject_id);
        res.per_segment.push_back(
            compute_metrics(pair.clean.data, pair.noisy.data, pred.data));
      }
    }
    res.aggregate = aggregate(res.per_segment);
    run.methods.push_back(std::move(res));
  }

  const MethodResult* dar = detail::find_method(run.methods, Method::Dar);
  if (dar) {
    std::vector<double> va, vb;
    for (const auto& other : run.methods) {
      if (other.method == Method::Dar) continue;
      for (bool use_pearson : {false, true}) {
        ComparisonRow row;
        row.metric = use_pearson ? "pearson_r" : "rmse";
        row.method = other.method;
        detail::paired_metric(*dar, other, use_pearson, va, vb);
        try {
          row.test = paired_ttest(va, vb);
          row.available = true;
        } catch (const Error&) {
          row.available = false;
        }
        run.comparisons.push_back(std::move(row));
      }
    }
  }

  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  run.finished_at = detail::iso_utc_now();
  return run;
}

// ---------------------------------------------------------------------------

struct LosoFold {
  std::string held_out;
  SplitPlan split;
  TrainReport train_report;
  std::vector<MetricReport> per_segment;
  AggregateReport aggregate;
  double rmse = 0.0;       // per-fold means: one Table-7 row
  double pearson_r = 0.0;
  double ssim = 0.0;
};

struct LosoMetricSummary {
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;
  double shapiro_w = 0.0;
  double shapiro_p = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
};

struct LosoResult {
  std::vector<LosoFold> folds;
  std::vector<LosoMetricSummary> summary;  // rmse, pearson_r, ssim
  double wall_seconds = 0.0;
  std::string started_at;
  std::string finished_at;
};

// One fold per subject; the inner 80/20 split of the remaining subjects'
// segments drives early stopping so the held-out subject stays untouched.
inline LosoResult run_loso(const std::vector<SubjectData>& subjects,
                           const EvalConfig& ecfg) {
  std::vector<SegmentPair> pairs;
  for (const auto& s : subjects)
    pairs.insert(pairs.end(), s.pairs.begin(), s.pairs.end());
  const auto folds = loso_folds(pairs);

  LosoResult result;
  result.started_at = detail::iso_utc_now();
  const auto t0 = std::chrono::steady_clock::now();

  for (const auto& plan : folds) {
    LosoFold fold;
    fold.held_out = plan.held_out;
    fold.split = plan;

    const auto pool = gather_pairs(pairs, plan.train_idx);
    const auto inner = pooled_split(pool.size(), ecfg.train_frac, ecfg.seed);
    const auto train = gather_pairs(pool, inner.train_idx);
    const auto val = gather_pairs(pool, inner.test_idx);

    Dar<double> model = Dar<double>::build(ecfg.dar, ecfg.train.seed);
    fold.train_report = train_dar(model, train, val, ecfg.train);

    for (std::size_t idx : plan.test_idx) {
      const auto& pair = pairs[idx];
      const Segment denoised = denoise(model, pair.noisy);
      fold.per_segment.push_back(
          compute_metrics(pair.clean.data, pair.noisy.data, denoised.data));
    }
    fold.aggregate = aggregate(fold.per_segment);
    fold.rmse = fold.aggregate.rmse.mean;
    fold.pearson_r = fold.aggregate.pearson_r.mean;
    fold.ssim = fold.aggregate.ssim.mean;
    result.folds.push_back(std::move(fold));
  }

  const auto summarize = [&](const std::string& name, auto selector) {
    std::vector<double> v;
    for (const auto& f : result.folds) v.push_back(selector(f));
    LosoMetricSummary s;
    s.metric = name;
    const auto ms = detail::summarize(v, 0);
    s.mean = ms.mean;
    s.sd = ms.sd;
    const auto sw = shapiro_wilk(v);
    s.shapiro_w = sw.w;
    s.shapiro_p = sw.p_value;
    const auto ci = bootstrap_ci(v, ecfg.seed, 1000);
    s.ci_lower = ci.lower;
    s.ci_upper = ci.upper;
    result.summary.push_back(std::move(s));
  };
  summarize("rmse", [](const LosoFold& f) { return f.rmse; });
  summarize("pearson_r", [](const LosoFold& f) { return f.pearson_r; });
  summarize("ssim", [](const LosoFold& f) { return f.ssim; });

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  result.finished_at = detail::iso_utc_now();
  return result;
}

// ---------------------------------------------------------------------------

struct AblationRow {
  DarVariant variant = DarVariant::Baseline;
  std::size_t parameter_count = 0;
  double rmse = 0.0;
  double nrmse = 0.0;
  double pearson_r = 0.0;
  double ssim = 0.0;
  TrainReport train_report;
};

// Fixed-epoch sweep across architectural variants on one shared split.
inline std::vector<AblationRow> run_ablation(
    const std::vector<SegmentPair>& pairs,
    const std::vector<DarVariant>& variants, const EvalConfig& ecfg,
    std::size_t epochs = 50) {
  const auto split = pooled_split(pairs.size(), ecfg.train_frac, ecfg.seed);
  const auto train = gather_pairs(pairs, split.train_idx);
  const auto test = gather_pairs(pairs, split.test_idx);

  TrainConfig tcfg = ecfg.train;
  tcfg.max_epochs = epochs;
  tcfg.early_stopping = false;

  std::vector<AblationRow> rows;
  for (DarVariant v : variants) {
    AblationRow row;
    row.variant = v;
    Dar<double> model =
        Dar<double>::build(DarConfig::for_variant(v), tcfg.seed);
    row.parameter_count = model.parameter_count();
    row.train_report = train_dar(model, train, test, tcfg);

    std::vector<MetricReport> reports;
    for (const auto& pair : test) {
      const Segment denoised = denoise(model, pair.noisy);
      reports.push_back(
          compute_metrics(pair.clean.data, pair.noisy.data, denoised.data));
    }
    const auto agg = aggregate(reports);
    row.rmse = agg.rmse.mean;
    row.nrmse = agg.nrmse.mean;
    row.pearson_r = agg.pearson_r.mean;
    row.ssim = agg.ssim.mean;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace dartk

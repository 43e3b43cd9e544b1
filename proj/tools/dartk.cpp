#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dartk/baselines.hpp"
#include "dartk/brainvision.hpp"
#include "dartk/dar.hpp"
#include "dartk/error.hpp"
#include "dartk/eval.hpp"
#include "dartk/fir.hpp"
#include "dartk/interchange.hpp"
#include "dartk/metrics.hpp"
#include "dartk/parallel.hpp"
#include "dartk/preprocess.hpp"
#include "dartk/psd.hpp"
#include "dartk/recording.hpp"
#include "dartk/report.hpp"
#include "dartk/rng.hpp"
#include "dartk/saliency.hpp"
#include "dartk/split.hpp"
#include "dartk/stats.hpp"
#include "dartk/synth.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dartk;

constexpr const char* kVersion = "dartk 0.1.0";

void note(const std::string& cmd, const std::string& msg) {
  std::cerr << "[dartk:" << cmd << "] " << msg << "\n";
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), Errc::IoFailure,
          "cannot create output directory '" + dir.string() + "'");
}

json read_json_file(const fs::path& path) {
  std::ifstream f(path);
  require(f.good(), Errc::IoFailure, "cannot open '" + path.string() + "'");
  try {
    json j;
    f >> j;
    return j;
  } catch (const json::exception& e) {
    fail(Errc::CorruptFile, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

// One registration per option gives config-file merge (flag > file > default),
// unknown-key rejection, and the effective-config block of the run manifest.
class ConfigBinder {
public:
  explicit ConfigBinder(CLI::App* cmd) : cmd_(cmd) {}

  template <typename V>
  void bind(const std::string& flag, const std::string& key, V& target) {
    merge_only(flag, key, target);
    emitters_.push_back([key, &target](json& out) { out[key] = target; });
  }

  // Honors the key without echoing it into the manifest; the output
  // directory is wherever the manifest sits, so recording it would make
  // otherwise identical runs compare unequal.
  template <typename V>
  void merge_only(const std::string& flag, const std::string& key, V& target) {
    keys_.insert(key);
    appliers_.push_back([this, flag, key, &target](const json& cfg) {
      if (cmd_->count(flag) > 0 || !cfg.contains(key)) return;
      try {
        target = cfg.at(key).get<V>();
      } catch (const json::exception&) {
        fail(Errc::BadArgument, "config key '" + key + "' has the wrong type");
      }
    });
  }

  void apply(const std::string& config_path) const {
    if (config_path.empty()) return;
    const json cfg = read_json_file(config_path);
    require(cfg.is_object(), Errc::CorruptFile,
            "config file must hold a JSON object");
    for (const auto& [key, value] : cfg.items()) {
      (void)value;
      require(keys_.count(key) > 0, Errc::UnknownKey,
              "unknown config key '" + key + "' for subcommand '" +
                  cmd_->get_name() + "'");
    }
    for (const auto& fn : appliers_) fn(cfg);
  }

  json effective() const {
    json out = json::object();
    for (const auto& fn : emitters_) fn(out);
    return out;
  }

private:
  CLI::App* cmd_;
  std::set<std::string> keys_;
  std::vector<std::function<void(const json&)>> appliers_;
  std::vector<std::function<void(json&)>> emitters_;
};

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 42;
  int threads = 1;
};

void attach_common(CLI::App* cmd, ConfigBinder& bind, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file merged under CLI flags");
  cmd->add_option("-o,--out-dir", c.out_dir, "directory for all outputs");
  cmd->add_option("--seed", c.seed, "root random seed");
  cmd->add_option("--threads", c.threads, "cap for parallel sections");
  bind.merge_only("--out-dir", "out_dir", c.out_dir);
  bind.bind("--seed", "seed", c.seed);
  bind.bind("--threads", "threads", c.threads);
}

// Merges the config file, pins the thread cap, and prepares the output dir.
void finalize(const ConfigBinder& bind, const Common& c) {
  bind.apply(c.config_path);
  set_threads(c.threads);
  ensure_dir(c.out_dir);
}

void write_cli_manifest(const Common& c, const std::string& command,
                        const json& effective,
                        const std::vector<std::string>& files,
                        const json& extra = json::object()) {
  json m;
  m["tool"] = "dartk";
  m["version"] = kVersion;
  m["command"] = command;
  m["threads"] = threads();
  m["config"] = effective;
  m["files"] = files;
  for (const auto& [k, v] : extra.items()) m[k] = v;
  const fs::path path = fs::path(c.out_dir) / "manifest.json";
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), Errc::IoFailure, "cannot write '" + path.string() + "'");
  f << m.dump(2) << "\n";
  require(f.good(), Errc::IoFailure, "short write to '" + path.string() + "'");
}

Recording read_recording(const std::string& path) {
  require(fs::exists(path), Errc::IoFailure, "cannot open input '" + path + "'");
  if (fs::path(path).extension() == ".vhdr") return parse_brainvision(path);
  return read_interchange(path);
}

std::vector<double> read_number_file(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), Errc::IoFailure, "cannot open '" + path + "'");
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(line, &pos));
      if (line.find_first_not_of(" \t\r", pos) != std::string::npos)
        throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      fail(Errc::CorruptFile, "'" + path + "' line " + std::to_string(lineno) +
                                  " is not a number");
    }
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

// Subjects as written by `synth`: a manifest listing paired recordings.
std::vector<SubjectData> load_subject_dir(const std::string& dir,
                                          const PreprocessConfig& pcfg) {
  const fs::path mpath = fs::path(dir) / "manifest.json";
  require(fs::exists(mpath), Errc::IoFailure,
          "cannot open '" + mpath.string() + "'");
  const json m = read_json_file(mpath);
  require(m.contains("subjects") && m["subjects"].is_array() &&
              !m["subjects"].empty(),
          Errc::CorruptFile, "'" + mpath.string() + "' lists no subjects");
  std::vector<SubjectData> out;
  for (const auto& e : m["subjects"]) {
    const std::string id = e.at("id").get<std::string>();
    const Recording noisy =
        read_interchange((fs::path(dir) / e.at("noisy").get<std::string>()).string());
    const Recording clean =
        read_interchange((fs::path(dir) / e.at("clean").get<std::string>()).string());
    out.push_back(prepare_subject(noisy, clean, pcfg, id));
  }
  return out;
}

std::vector<SegmentPair> flatten_pairs(const SegmentStore& store) {
  std::vector<SegmentPair> pairs;
  for (const auto& s : store.subjects)
    pairs.insert(pairs.end(), s.pairs.begin(), s.pairs.end());
  require(!pairs.empty(), Errc::Empty, "segment store holds no pairs");
  return pairs;
}

// --- subcommand option bundles -------------------------------------------

struct PreprocFlags {
  double target_hz = 250.0;
  double f_low = 1.0;
  double f_high = 40.0;
  std::size_t taps = 825;
  bool forward_backward = false;
  std::size_t win = 500;
  std::size_t stride = 250;

  void attach(CLI::App* cmd, ConfigBinder& bind) {
    cmd->add_option("--target-hz", target_hz, "resampling target rate");
    cmd->add_option("--f-low", f_low, "bandpass low edge in Hz");
    cmd->add_option("--f-high", f_high, "bandpass high edge in Hz");
    cmd->add_option("--taps", taps, "FIR tap count");
    cmd->add_flag("--forward-backward", forward_backward,
                  "filter twice, reversing in between");
    cmd->add_option("--win", win, "segment length in samples");
    cmd->add_option("--stride", stride, "segment hop in samples");
    bind.bind("--target-hz", "target_hz", target_hz);
    bind.bind("--f-low", "f_low", f_low);
    bind.bind("--f-high", "f_high", f_high);
    bind.bind("--taps", "taps", taps);
    bind.bind("--forward-backward", "forward_backward", forward_backward);
    bind.bind("--win", "win", win);
    bind.bind("--stride", "stride", stride);
  }

  PreprocessConfig config() const {
    PreprocessConfig p;
    p.target_hz = target_hz;
    p.filter = FilterSpec{f_low, f_high, taps, forward_backward};
    p.win = win;
    p.stride = stride;
    return p;
  }
};

struct TrainFlags {
  std::string variant = "baseline";
  std::size_t epochs = 200;
  std::size_t batch = 32;
  double lr = 1e-3;
  std::size_t patience = 20;
  double min_delta = 1e-5;
  double train_frac = 0.8;
  bool early_stopping = true;

  void attach(CLI::App* cmd, ConfigBinder& bind) {
    cmd->add_option("--variant", variant,
                    "baseline | small-kernel | half-channels | no-tanh");
    cmd->add_option("--epochs", epochs, "maximum training epochs");
    cmd->add_option("--batch", batch, "minibatch size in channel rows");
    cmd->add_option("--lr", lr, "Adam learning rate");
    cmd->add_option("--patience", patience, "epochs without improvement before stopping");
    cmd->add_option("--min-delta", min_delta, "improvement below this does not reset patience");
    cmd->add_option("--train-frac", train_frac, "fraction of segments used for training");
    cmd->add_flag("--no-early-stopping{false}", early_stopping,
                  "run every epoch and keep the final model");
    bind.bind("--variant", "variant", variant);
    bind.bind("--epochs", "epochs", epochs);
    bind.bind("--batch", "batch", batch);
    bind.bind("--lr", "lr", lr);
    bind.bind("--patience", "patience", patience);
    bind.bind("--min-delta", "min_delta", min_delta);
    bind.bind("--train-frac", "train_frac", train_frac);
    bind.bind("--no-early-stopping", "early_stopping", early_stopping);
  }

  TrainConfig config(std::uint64_t seed) const {
    TrainConfig t;
    t.lr = lr;
    t.batch_size = batch;
    t.max_epochs = epochs;
    t.patience = patience;
    t.min_delta = min_delta;
    t.early_stopping = early_stopping;
    t.seed = seed;
    return t;
  }
};

struct BaselineFlags {
  std::size_t aas_window = 25;
  std::size_t obs_basis = 4;
  std::size_t pca_k = 3;
  std::size_t ica_components = 0;
  std::size_t ica_max_iter = 500;
  double ica_tol = 1e-6;
  double slice_hz = 0.0;
  double kurtosis = 5.0;
  double psd_fraction = 0.30;

  void attach(CLI::App* cmd, ConfigBinder& bind) {
    cmd->add_option("--aas-window", aas_window, "sliding template width in epochs");
    cmd->add_option("--obs-basis", obs_basis, "principal components per cardiac template");
    cmd->add_option("--pca-k", pca_k, "components removed by PCA denoising");
    cmd->add_option("--ica-components", ica_components, "extracted sources (0: one per channel)");
    cmd->add_option("--ica-max-iter", ica_max_iter, "FastICA iteration cap");
    cmd->add_option("--ica-tol", ica_tol, "FastICA convergence tolerance");
    cmd->add_option("--slice-hz", slice_hz, "slice frequency for spectral component rejection");
    cmd->add_option("--kurtosis", kurtosis, "kurtosis threshold for component rejection");
    cmd->add_option("--psd-fraction", psd_fraction, "band-power fraction that flags a component");
    bind.bind("--aas-window", "aas_window", aas_window);
    bind.bind("--obs-basis", "obs_basis", obs_basis);
    bind.bind("--pca-k", "pca_k", pca_k);
    bind.bind("--ica-components", "ica_components", ica_components);
    bind.bind("--ica-max-iter", "ica_max_iter", ica_max_iter);
    bind.bind("--ica-tol", "ica_tol", ica_tol);
    bind.bind("--slice-hz", "slice_hz", slice_hz);
    bind.bind("--kurtosis", "kurtosis", kurtosis);
    bind.bind("--psd-fraction", "psd_fraction", psd_fraction);
  }

  BaselineConfig config(std::uint64_t seed) const {
    BaselineConfig b;
    b.aas_window = aas_window;
    b.obs_n_basis = obs_basis;
    b.pca_k = pca_k;
    b.ica_components = ica_components;
    b.ica_max_iter = ica_max_iter;
    b.ica_tol = ica_tol;
    b.ica_seed = seed;
    b.ica_rule.kurtosis_threshold = kurtosis;
    b.ica_rule.slice_hz = slice_hz;
    b.ica_rule.psd_fraction_threshold = psd_fraction;
    return b;
  }
};

// --- subcommands -----------------------------------------------------------

void add_ingest(CLI::App& app) {
  auto opt = std::make_shared<Common>();
  auto in = std::make_shared<std::string>();
  auto name = std::make_shared<std::string>();
  auto* cmd = app.add_subcommand("ingest", "Convert a recording to the interchange format");
  auto bind = std::make_shared<ConfigBinder>(cmd);
  cmd->add_option("--in", *in, "input recording (.vhdr header or interchange file)")->required();
  cmd->add_option("--name", *name, "output basename (default: input stem)");
  bind->bind("--in", "in", *in);
  bind->bind("--name", "name", *name);
  attach_common(cmd, *bind, *opt);
  cmd->callback([opt, in, name, bind] {
    finalize(*bind, *opt);
    const Recording rec = read_recording(*in);
    const std::string base =
        name->empty() ? fs::path(*in).stem().string() : *name;
    const std::string fname = base + ".dartk";
    write_interchange(rec, (fs::path(opt->out_dir) / fname).string());
    json extra;
    extra["recording"] = {{"channels", rec.n_channels},
                          {"samples", rec.n_samples},
                          {"sampling_rate", rec.sampling_rate},
                          {"markers", rec.markers.size()},
                          {"labels", rec.channel_labels}};
    write_cli_manifest(*opt, "ingest", bind->effective(), {fname}, extra);
    note("ingest", *in + " -> " + fname + " (" + std::to_string(rec.n_channels) +
                        " ch, " + std::to_string(rec.n_samples) + " samples @ " +
                        fmt(rec.sampling_rate) + " Hz, " +
                        std::to_string(rec.markers.size()) + " markers)");
  });
}

void add_synth(CLI::App& app) {
  struct Opt {
    Common c;
    std::size_t subjects = 5;
    SynthConfig base;
  };
  auto opt = std::make_shared<Opt>();
  auto* cmd = app.add_subcommand("synth", "Generate paired clean/noisy recordings");
  auto bind = std::make_shared<ConfigBinder>(cmd);
  cmd->add_option("--subjects", opt->subjects, "number of independent subjects");
  cmd->add_option("--channels", opt->base.n_channels, "EEG channels per subject");
  cmd->add_option("--duration", opt->base.duration_s, "recording length in seconds");
  cmd->add_option("--rate", opt->base.sampling_rate, "sampling rate in Hz");
  cmd->add_option("--tr", opt->base.ga.tr_s, "gradient repetition period in seconds");
  cmd->add_option("--ga-ratio", opt->base.ga.amplitude_ratio, "gradient artifact peak over EEG RMS");
  cmd->add_option("--bcg-ratio", opt->base.bcg.amplitude_ratio, "pulse artifact peak over EEG RMS");
  cmd->add_option("--heart-rate", opt->base.bcg.heart_rate_bpm, "mean heart rate in BPM");
  bind->bind("--subjects", "subjects", opt->subjects);
  bind->bind("--channels", "channels", opt->base.n_channels);
  bind->bind("--duration", "duration_s", opt->base.duration_s);
  bind->bind("--rate", "sampling_rate", opt->base.sampling_rate);
  bind->bind("--tr", "tr_s", opt->base.ga.tr_s);
  bind->bind("--ga-ratio", "ga_ratio", opt->base.ga.amplitude_ratio);
  bind->bind("--bcg-ratio", "bcg_ratio", opt->base.bcg.amplitude_ratio);
  bind->bind("--heart-rate", "heart_rate_bpm", opt->base.bcg.heart_rate_bpm);
  attach_common(cmd, *bind, opt->c);
  cmd->callback([opt, bind] {
    finalize(*bind, opt->c);
    require(opt->subjects >= 1, Errc::InvalidConfig, "need at least one subject");
    opt->base.seed = opt->c.seed;
    const Rng root(opt->base.seed);
    std::vector<std::string> files;
    json subjects = json::array();
    for (std::size_t i = 0; i < opt->subjects; ++i) {
      SynthConfig cfg = opt->base;
      cfg.seed = root.fork(i).seed();
      const Recording clean = generate_clean(cfg);
      const Recording noisy = add_artifacts(clean, cfg);
      const std::string sid =
          "s" + std::string(i + 1 < 10 ? "0" : "") + std::to_string(i + 1);
      const std::string cfile = sid + "_clean.dartk";
      const std::string nfile = sid + "_noisy.dartk";
      write_interchange(clean, (fs::path(opt->c.out_dir) / cfile).string());
      write_interchange(noisy, (fs::path(opt->c.out_dir) / nfile).string());
      files.push_back(cfile);
      files.push_back(nfile);
      subjects.push_back(
          {{"id", sid}, {"clean", cfile}, {"noisy", nfile}, {"seed", cfg.seed}});
    }
    write_cli_manifest(opt->c, "synth", bind->effective(), files,
                       {{"subjects", subjects}});
    note("synth", std::to_string(opt->subjects) + " subjects, " +
                      fmt(opt->base.duration_s) + " s @ " +
                      fmt(opt->base.sampling_rate) + " Hz -> " + opt->c.out_dir);
  });
}

void add_preprocess(CLI::App& app) {
  struct Opt {
    Common c;
    std::string in_dir;
    PreprocFlags pre;
  };
  auto opt = std::make_shared<Opt>();
  auto* cmd = app.add_subcommand("preprocess", "Resample, bandpass, and segment paired recordings");
  auto bind = std::make_shared<ConfigBinder>(cmd);
  cmd->add_option("--in-dir", opt->in_dir, "directory written by synth or ingest")->required();
  bind->bind("--in-dir", "in_dir", opt->in_dir);
  opt->pre.attach(cmd, *bind);
  attach_common(cmd, *bind, opt->c);
  cmd->callback([opt, bind] {
    finalize(*bind, opt->c);
    const PreprocessConfig pcfg = opt->pre.config();
    const auto subjects = load_subject_dir(opt->in_dir, pcfg);
    SegmentStore store;
    store.win = pcfg.win;
    store.stride = pcfg.stride;
    store.sampling_rate = pcfg.target_hz;
    store.n_channels = subjects.front().noisy.n_channels;
    for (const auto& s : subjects)
      store.subjects.push_back({s.subject_id, "default", s.pairs});
    save_segment_store(store, opt->c.out_dir);
    std::vector<std::string> files = {"index.json"};
    for (const auto& s : store.subjects)
      files.push_back(s.subject_id + "_default.seg");
    write_cli_manifest(opt->c, "preprocess", bind->effective(), files,
                       {{"total_pairs", store.total_pairs()}});
    note("preprocess", std::to_string(subjects.size()) + " subjects -> " +
                           std::to_string(store.total_pairs()) +
                           " segment pairs of " + std::to_string(store.win) +
                           " samples");
  });
}

void add_train(CLI::App& app) {
  struct Opt {
    Common c;
    std::string store_dir;
    TrainFlags train;
  };
  auto opt = std::make_shared<Opt>();
  auto* cmd = app.add_subcommand("train", "Fit the denoising autoencoder on a segment store");
  auto bind = std::make_shared<ConfigBinder>(cmd);
  cmd->add_option("--store", opt->store_dir, "segment store directory")->required();
  bind->bind("--store", "store", opt->store_dir);
  opt->train.attach(cmd, *bind);
  attach_common(cmd, *bind, opt->c);
  cmd->callback([opt, bind] {
    finalize(*bind, opt->c);
    const auto pairs = flatten_pairs(load_segment_store(opt->store_dir));
    const auto split =
        pooled_split(pairs.size(), opt->train.train_frac, opt->c.seed);
    const auto train_pairs = gather_pairs(pairs, split.train_idx);
    const auto val_pairs = gather_pairs(pairs, split.test_idx);
    auto model = Dar<double>::build(
        DarConfig::for_variant(variant_from_name(opt->train.variant)),
        opt->c.seed);
    const TrainConfig tcfg = opt->train.config(opt->c.seed);
    const TrainReport report = train_dar(model, train_pairs, val_pairs, tcfg);
    save_dar(model, fs::path(opt->c.out_dir) / "model.darw");
    json jr;
    jr["variant"] = opt->train.variant;
    jr["parameter_count"] = model.parameter_count();
    jr["train_pairs"] = train_pairs.size();
    jr["val_pairs"] = val_pairs.size();
    jr["best_epoch"] = report.best_epoch;
    jr["stopped_epoch"] = report.stopped_epoch;
    jr["wall_seconds"] = report.wall_seconds;
    jr["train_loss"] = report.train_loss;
    jr["val_loss"] = report.val_loss;
    {
      const fs::path p = fs::path(opt->c.out_dir) / "train_report.json";
      std::ofstream f(p, std::ios::trunc);
      require(f.good(), Errc::IoFailure, "cannot write '" + p.string() + "'");
      f << jr.dump(2) << "\n";
    }
    write_cli_manifest(opt->c, "train", bind->effective(),
                       {"model.darw", "train_report.json"});
    note("train", opt->train.variant + ": " + std::to_string(train_pairs.size()) +
                      " train / " + std::to_string(val_pairs.size()) +
                      " val pairs, best epoch " +
                      std::to_string(report.best_epoch) + ", val loss " +
                      fmt(report.val_loss.empty() ? 0.0 : report.val_loss[report.best_epoch - 1]) +
                      ", " + fmt(report.wall_seconds) + " s");
  });
}

void add_denoise(CLI::App& app) {
  struct Opt {
    Common c;
    std::string model_path;
    std::string store_dir;
  };
  auto opt = std::make_shared<Opt>();
  auto* cmd = app.add_subcommand("denoise", "Run a trained model over a segment store");
  auto bind = std::make_shared<ConfigBinder>(cmd);
  cmd->add_option("--model", opt->model_path, "weights written by train")->required();
  cmd->add_option("--store", opt->store_dir, "segment store directory")->required();
  bind->bind("--model", "model", opt->model_path);
  bind->bind("--store", "store", opt->store_dir);
  attach_common(cmd, *bind, opt->c);
  cmd->callback([opt, bind] {
    finalize(*bind, opt->c);
    require(fs::exists(opt->model_path), Errc::IoFailure,
            "cannot open input '" + opt->model_path + "'");
    auto model = load_dar<double>(opt->model_path);
    SegmentStore store = load_segment_store(opt->store_dir);
    const fs::path csv_path = fs::path(opt->c.out_dir) / "metrics.csv";
    std::ofstream csv(csv_path, std::ios::trunc);
    require(csv.good(), Errc::IoFailure, "cannot write '" + csv_path.string() + "'");
    csv << "subject,segment,rmse,nrmse,mae,pearson_r,ssim,cosine,snr_db,snr_gain_db\n";
    double rmse_sum = 0.0;
    std::size_t count = 0;
    for (auto& sub : store.subjects) {
      std::size_t idx = 0;
      for (auto& pr : sub.pairs) {
        const Segment denoised = denoise(model, pr.noisy);
        const MetricReport r =
            compute_metrics(pr.clean.data, pr.noisy.data, denoised.data);
        csv << sub.subject_id << "," << idx << "," << r.rmse << ","
            << (r.nrmse_defined ? fmt(r.nrmse) : "") << "," << r.mae << ","
            << (r.pearson_defined ? fmt(r.pearson_r) : "") << "," << r.ssim
            << "," << (r.cosine_defined ? fmt(r.cosine) : "") << ","
            << (r.snr_defined ? fmt(r.snr_clean_vs_denoised_db) : "") << ","
            << (r.snr_defined ? fmt(r.snr_gain_db) : "") << "\n";
        rmse_sum += r.rmse;
        ++count;
        pr.noisy = denoised;
        ++idx;
      }
    }
    const std::string store_out = (fs::path(opt->c.out_dir) / "denoised").string();
    save_segment_store(store, store_out);
    write_cli_manifest(opt->c, "denoise", bind->effective(),
                       {"metrics.csv", "denoised/index.json"});
    note("denoise", std::to_string(count) + " segments, mean RMSE " +
                        fmt(count ? rmse_sum / static_cast<double>(count) : 0.0));
  });
}

void add_baseline(CLI::App& app) {
  struct Opt {
    Common c;
    std::string in;
    std::string method;
    BaselineFlags base;
  };
  auto opt = std::make_shared<Opt>();
  auto* cmd = app.add_subcommand("baseline", "Apply a classical artifact-removal method");
  auto bind = std::make_shared<ConfigBinder>(cmd);
  cmd->add_option("--in", opt->in, "continuous recording (interchange format)")->required();
  cmd->add_option("--method", opt->method, "aas | obs | pca | ica")->required();
  bind->bind("--in", "in", opt->in);
  bind->bind("--method", "method", opt->method);
  opt->base.attach(cmd, *bind);
  attach_common(cmd, *bind, opt->c);
  cmd->callback([opt, bind] {
    finalize(*bind, opt->c);
    const Recording rec = read_recording(opt->in);
    const Method m = method_from_name(opt->method);
    const BaselineConfig bc = opt->base.config(opt->c.seed);
    json extra = json::object();
    Recording out;
    if (m == Method::Ica) {
      const std::size_t n = bc.ica_components ? bc.ica_components : rec.n_channels;
      UnmixingModel um = fastica(rec, n, bc.ica_max_iter, bc.ica_tol, bc.ica_seed);
      out = ica_denoise(rec, um, bc.ica_rule);
      std::size_t removed = 0;
      for (bool r : um.mask) removed += r ? 1 : 0;
      extra["ica"] = {{"converged", um.converged},
                      {"iterations", um.iterations},
                      {"components", n},
                      {"removed", removed},
                      {"mask", um.mask}};
    } else {
      out = apply_baseline(m, rec, bc);
    }
    write_interchange(out, (fs::path(opt->c.out_dir) / "denoised.dartk").string());
    write_cli_manifest(opt->c, "baseline", bind->effective(),
                       {"denoised.dartk"}, extra);
    note("baseline", opt->method + ": " + std::to_string(rec.n_channels) +
                         " ch, " + std::to_string(rec.n_samples) +
                         " samples -> denoised.dartk");
  });
}

struct EvalOpt {
  Common c;
  std::string in_dir;
  PreprocFlags pre;
  TrainFlags train;
  BaselineFlags base;
  std::string methods = "dar,aas,obs,pca,ica";

  EvalConfig config() const {
    EvalConfig e;
    e.train_frac = train.train_frac;
    e.seed = c.seed;
    e.train = train.config(c.seed);
    e.dar = DarConfig::for_variant(variant_from_name(train.variant));
    e.baselines = base.config(c.seed);
    e.methods.clear();
    std::stringstream ss(methods);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) e.methods.push_back(method_from_name(tok));
    require(!e.methods.empty(), Errc::BadArgument, "no methods requested");
    return e;
  }
};

void attach_eval(CLI::App* cmd, ConfigBinder& bind, EvalOpt& opt,
                 bool with_methods) {
  cmd->add_option("--in-dir", opt.in_dir, "directory written by synth")->required();
  bind.bind("--in-dir", "in_dir", opt.in_dir);
  if (with_methods) {
    cmd->add_option("--methods", opt.methods, "comma-separated method list");
    bind.bind("--methods", "methods", opt.methods);
  }
  opt.pre.attach(cmd, bind);
  opt.train.attach(cmd, bind);
  opt.base.attach(cmd, bind);
  attach_common(cmd, bind, opt.c);
}

void add_eval(CLI::App& app) {
  auto opt = std::make_shared<EvalOpt>();
  auto* cmd = app.add_subcommand("eval", "Pooled split: train, denoise, compare against references");
  auto bind = std::make_shared<ConfigBinder>(cmd);
  attach_eval(cmd, *bind, *opt, true);
  cmd->callback([opt, bind] {
    finalize(*bind, opt->c);
    const auto subjects = load_subject_dir(opt->in_dir, opt->pre.config());
    const EvalRun run = run_pooled(subjects, opt->config());
    auto files = emit_reports(run, opt->c.out_dir);
    write_cli_manifest(opt->c, "eval", bind->effective(), files);
    for (const auto& mr : run.methods)
      note("eval", std::string(method_name(mr.method)) + ": mean RMSE " +
                       fmt(mr.aggregate.rmse.mean) + " over " +
                       std::to_string(mr.aggregate.rmse.n) + " segments");
    note("eval", "reports in " + opt->c.out_dir + " (" + fmt(run.wall_seconds) + " s)");
  });
}

void add_loso(CLI::App& app) {
  auto opt = std::make_shared<EvalOpt>();
  auto* cmd = app.add_subcommand("loso", "Leave-one-subject-out evaluation of the autoencoder");
  auto bind = std::make_shared<ConfigBinder>(cmd);
  attach_eval(cmd, *bind, *opt, false);
  cmd->callback([opt, bind] {
    finalize(*bind, opt->c);
    const auto subjects = load_subject_dir(opt->in_dir, opt->pre.config());
    const LosoResult result = run_loso(subjects, opt->config());
    auto files = emit_loso(result, opt->c.out_dir);
    write_cli_manifest(opt->c, "loso", bind->effective(), files);
    for (const auto& f : result.folds)
      note("loso", f.held_out + ": RMSE " + fmt(f.rmse) + ", r " +
                       fmt(f.pearson_r) + ", SSIM " + fmt(f.ssim));
    note("loso", std::to_string(result.folds.size()) + " folds in " +
                     fmt(result.wall_seconds) + " s");
  });
}

void add_ablate(CLI::App& app) {
  struct Opt {
    Common c;
    std::string store_dir;
    TrainFlags train;
    std::size_t epochs = 50;
  };
  auto opt = std::make_shared<Opt>();
  auto* cmd = app.add_subcommand("ablate", "Train every model variant for a fixed epoch budget");
  auto bind = std::make_shared<ConfigBinder>(cmd);
  cmd->add_option("--store", opt->store_dir, "segment store directory")->required();
  cmd->add_option("--epochs", opt->epochs, "epochs per variant");
  bind->bind("--store", "store", opt->store_dir);
  bind->bind("--epochs", "epochs", opt->epochs);
  cmd->add_option("--batch", opt->train.batch, "minibatch size in channel rows");
  cmd->add_option("--lr", opt->train.lr, "Adam learning rate");
  cmd->add_option("--train-frac", opt->train.train_frac, "fraction of segments used for training");
  bind->bind("--batch", "batch", opt->train.batch);
  bind->bind("--lr", "lr", opt->train.lr);
  bind->bind("--train-frac", "train_frac", opt->train.train_frac);
  attach_common(cmd, *bind, opt->c);
  cmd->callback([opt, bind] {
    finalize(*bind, opt->c);
    const auto pairs = flatten_pairs(load_segment_store(opt->store_dir));
    EvalConfig ecfg;
    ecfg.train_frac = opt->train.train_frac;
    ecfg.seed = opt->c.seed;
    ecfg.train = opt->train.config(opt->c.seed);
    const auto rows = run_ablation(
        pairs,
        {DarVariant::Baseline, DarVariant::SmallKernel,
         DarVariant::HalfChannels, DarVariant::NoTanh},
        ecfg, opt->epochs);
    auto files = emit_ablation(rows, opt->c.out_dir);
    write_cli_manifest(opt->c, "ablate", bind->effective(), files);
    for (const auto& r : rows)
      note("ablate", std::string(variant_name(r.variant)) + ": " +
                         std::to_string(r.parameter_count) + " params, RMSE " +
                         fmt(r.rmse) + ", SSIM " + fmt(r.ssim));
  });
}

void add_saliency(CLI::App& app) {
  struct Opt {
    Common c;
    std::string model_path;
    std::string store_dir;
    std::size_t index = 0;
    bool loss = false;
  };
  auto opt = std::make_shared<Opt>();
  auto* cmd = app.add_subcommand("saliency", "Input-gradient map for one stored segment");
  auto bind = std::make_shared<ConfigBinder>(cmd);
  cmd->add_option("--model", opt->model_path, "weights written by train")->required();
  cmd->add_option("--store", opt->store_dir, "segment store directory")->required();
  cmd->add_option("--index", opt->index, "segment index across all subjects");
  cmd->add_flag("--loss", opt->loss, "differentiate the reconstruction loss instead of the output sum");
  bind->bind("--model", "model", opt->model_path);
  bind->bind("--store", "store", opt->store_dir);
  bind->bind("--index", "index", opt->index);
  bind->bind("--loss", "loss", opt->loss);
  attach_common(cmd, *bind, opt->c);
  cmd->callback([opt, bind] {
    finalize(*bind, opt->c);
    require(fs::exists(opt->model_path), Errc::IoFailure,
            "cannot open input '" + opt->model_path + "'");
    auto model = load_dar<double>(opt->model_path);
    const auto pairs = flatten_pairs(load_segment_store(opt->store_dir));
    require(opt->index < pairs.size(), Errc::BadArgument,
            "segment index " + std::to_string(opt->index) + " out of range (" +
                std::to_string(pairs.size()) + " pairs)");
    const SegmentPair& pr = pairs[opt->index];
    const SaliencyMap map = opt->loss
                                ? saliency_loss(model, pr.noisy, pr.clean)
                                : saliency(model, pr.noisy);
    auto files = emit_saliency(map, opt->c.out_dir);
    write_cli_manifest(opt->c, "saliency", bind->effective(), files);
    double peak = 0.0;
    for (double v : map.values) peak = std::max(peak, v);
    note("saliency", "segment " + std::to_string(opt->index) + " (" +
                         map.subject_id + "), peak |grad| " + fmt(peak));
  });
}

void add_stats(CLI::App& app) {
  struct Opt {
    Common c;
    std::string a_path;
    std::string b_path;
    std::size_t resamples = 1000;
    double level = 0.95;
  };
  auto opt = std::make_shared<Opt>();
  auto* cmd = app.add_subcommand("stats", "Paired comparison of two per-item score files");
  auto bind = std::make_shared<ConfigBinder>(cmd);
  cmd->add_option("--a", opt->a_path, "first score file, one number per line")->required();
  cmd->add_option("--b", opt->b_path, "second score file, matched line for line")->required();
  cmd->add_option("--resamples", opt->resamples, "bootstrap resample count");
  cmd->add_option("--level", opt->level, "bootstrap confidence level");
  bind->bind("--a", "a", opt->a_path);
  bind->bind("--b", "b", opt->b_path);
  bind->bind("--resamples", "resamples", opt->resamples);
  bind->bind("--level", "level", opt->level);
  attach_common(cmd, *bind, opt->c);
  cmd->callback([opt, bind] {
    finalize(*bind, opt->c);
    const auto a = read_number_file(opt->a_path);
    const auto b = read_number_file(opt->b_path);
    const PairedTestResult t = paired_ttest(a, b);
    std::vector<double> diffs(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];
    json js;
    js["n"] = t.n;
    js["t_statistic"] = t.t_statistic;
    js["p_value"] = t.p_value;
    js["dof"] = t.dof;
    js["cohens_d"] = t.cohens_d;
    try {
      const ShapiroWilkResult sw = shapiro_wilk(diffs);
      js["shapiro"] = {{"available", true}, {"w", sw.w}, {"p_value", sw.p_value}};
    } catch (const Error& e) {
      js["shapiro"] = {{"available", false}, {"reason", e.what()}};
    }
    const BootstrapCi ci =
        bootstrap_ci(diffs, opt->c.seed, opt->resamples, opt->level);
    js["bootstrap"] = {{"lower", ci.lower},
                       {"upper", ci.upper},
                       {"level", ci.level},
                       {"n_resamples", ci.n_resamples},
                       {"seed", ci.seed}};
    const fs::path p = fs::path(opt->c.out_dir) / "stats.json";
    std::ofstream f(p, std::ios::trunc);
    require(f.good(), Errc::IoFailure, "cannot write '" + p.string() + "'");
    f << js.dump(2) << "\n";
    write_cli_manifest(opt->c, "stats", bind->effective(), {"stats.json"});
    note("stats", "n=" + std::to_string(t.n) + " t=" + fmt(t.t_statistic) +
                      " p=" + fmt(t.p_value) + " d=" + fmt(t.cohens_d));
  });
}

void add_psd(CLI::App& app) {
  struct Opt {
    Common c;
    std::string in;
    std::size_t channel = 1;
    std::size_t nperseg = 256;
    double overlap = 0.5;
  };
  auto opt = std::make_shared<Opt>();
  auto* cmd = app.add_subcommand("psd", "Welch power spectral density of one channel");
  auto bind = std::make_shared<ConfigBinder>(cmd);
  cmd->add_option("--in", opt->in, "recording (interchange format or .vhdr)")->required();
  cmd->add_option("--channel", opt->channel, "1-based channel index");
  cmd->add_option("--nperseg", opt->nperseg, "samples per Welch segment");
  cmd->add_option("--overlap", opt->overlap, "segment overlap fraction");
  bind->bind("--in", "in", opt->in);
  bind->bind("--channel", "channel", opt->channel);
  bind->bind("--nperseg", "nperseg", opt->nperseg);
  bind->bind("--overlap", "overlap", opt->overlap);
  attach_common(cmd, *bind, opt->c);
  cmd->callback([opt, bind] {
    finalize(*bind, opt->c);
    const Recording rec = read_recording(opt->in);
    require(opt->channel >= 1 && opt->channel <= rec.n_channels,
            Errc::BadArgument,
            "channel " + std::to_string(opt->channel) + " out of range (1.." +
                std::to_string(rec.n_channels) + ")");
    const double* ch = rec.channel(opt->channel - 1);
    const std::vector<double> x(ch, ch + rec.n_samples);
    const PsdEstimate psd =
        welch_psd(x, rec.sampling_rate, opt->nperseg, opt->overlap);
    auto files = emit_psd(psd, opt->c.out_dir);
    write_cli_manifest(opt->c, "psd", bind->effective(), files);
    note("psd", "channel " + std::to_string(opt->channel) + ", peak at " +
                    fmt(psd.frequencies[psd.argmax()]) + " Hz");
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dartk: EEG artifact removal toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  add_ingest(app);
  add_synth(app);
  add_preprocess(app);
  add_train(app);
  add_denoise(app);
  add_baseline(app);
  add_eval(app);
  add_loso(app);
  add_ablate(app);
  add_saliency(app);
  add_stats(app);
  add_psd(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const dartk::Error& e) {
    std::cerr << "[dartk] error: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "[dartk] error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

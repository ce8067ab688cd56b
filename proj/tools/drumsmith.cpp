// drumsmith: drum accompaniment pipeline CLI. Every subcommand is
// deterministic given (seed, config, inputs) and writes a manifest next to
// its outputs.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "drumsmith/config.hpp"
#include "drumsmith/decode.hpp"
#include "drumsmith/metrics.hpp"
#include "drumsmith/models/io.hpp"
#include "drumsmith/models/training.hpp"
#include "drumsmith/parallel.hpp"
#include "drumsmith/sample_io.hpp"
#include "drumsmith/tokenizer.hpp"

namespace fs = std::filesystem;
using namespace drumsmith;

namespace {

constexpr const char* kVersion = "drumsmith 0.1.0";

struct GlobalArgs {
  uint64_t seed = 7;
  bool seed_given = false;
  std::string config_path;
  int threads = 0;
  bool verbose = false;
};

AppConfig effective_config(const GlobalArgs& g) {
  AppConfig cfg = g.config_path.empty() ? AppConfig{} : AppConfig::load_file(g.config_path);
  if (g.seed_given) cfg.seed = g.seed;  // flags override config
  return cfg;
}

std::string hex64(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out.good()) throw IoFailure("write failed on " + path.string());
}

// No timestamps here: repeated runs must produce byte-identical files.
void write_manifest(const fs::path& path, const std::string& command, const AppConfig& cfg,
                    const std::vector<std::string>& outputs,
                    const nlohmann::json& stats = nlohmann::json::object()) {
  write_json(path, nlohmann::json{{"command", command},
                                  {"version", kVersion},
                                  {"seed", cfg.seed},
                                  {"config_hash", hex64(cfg.hash())},
                                  {"outputs", outputs},
                                  {"stats", stats}});
}

std::vector<SongFeatures> load_song_features(const fs::path& dir) {
  std::vector<SongFeatures> songs;
  for (const auto& path : list_files(dir, ".drsp")) {
    auto pairs = load_pairs(path);
    if (!pairs.empty()) songs.push_back(concat_pairs(pairs));
  }
  if (songs.empty()) throw EmptyDataset("no non-empty .drsp files in " + dir.string());
  return songs;
}

// PASamples for metric evaluation, from .drsp or percussion-only .drpr files
std::vector<PASample> load_pa_samples(const fs::path& dir) {
  std::vector<PASample> out;
  for (const auto& path : list_files(dir, ".drsp")) {
    for (auto& pair : load_pairs(path)) out.push_back(std::move(pair.pa));
  }
  const PercussionMergeMap map = PercussionMergeMap::defaults();
  for (const auto& path : list_files(dir, ".drpr")) {
    MultiTrackPianoroll song = load_song(path);
    if (song.resolution != kGridResolution) {
      throw BadResolution(path.string() + ": evaluate expects resolution-8 containers");
    }
    const ByteGrid grid = binarize(merge_percussion(song, map));
    const int segments = grid.rows / kSampleTimesteps;
    for (int s = 0; s < segments; ++s) {
      PASample pa;
      std::copy(grid.row(s * kSampleTimesteps),
                grid.row(s * kSampleTimesteps) + static_cast<size_t>(kSampleTimesteps) * kNumLanes,
                pa.grid.data.begin());
      out.push_back(std::move(pa));
    }
  }
  if (out.empty()) throw EmptyDataset("no samples in " + dir.string());
  return out;
}

void write_csv_row_file(const fs::path& path, const std::string& header,
                        std::span<const double> values) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << header << '\n';
  out.precision(12);
  for (size_t i = 0; i < values.size(); ++i) out << i << ',' << values[i] << '\n';
}

// minimal standalone bar chart
void write_svg_bars(const fs::path& path, const std::string& title,
                    std::span<const double> values) {
  const int w = 640, h = 240, pad = 24;
  double mx = 1e-12;
  for (double v : values) mx = std::max(mx, v);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  out << "<text x='8' y='16' font-family='monospace' font-size='12'>" << title << "</text>\n";
  const double bw = static_cast<double>(w - 2 * pad) / static_cast<double>(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    const double bh = (h - 2 * pad) * values[i] / mx;
    out << "<rect x='" << pad + bw * static_cast<double>(i) << "' y='" << h - pad - bh
        << "' width='" << bw * 0.9 << "' height='" << bh << "' fill='#4477aa'/>\n";
  }
  out << "</svg>\n";
}

nn::CheckpointMeta meta_for(const AppConfig& cfg, const TrainResult& r) {
  nn::CheckpointMeta meta;
  meta.step = r.steps;
  meta.epoch = r.epochs_run;
  meta.lr = r.final_lr;
  meta.seed = cfg.seed;
  return meta;
}

nlohmann::json report_json(const ClassificationReport& r) {
  auto num = [](double v, bool defined) {
    return defined ? nlohmann::json(v) : nlohmann::json();
  };
  return {{"precision", num(r.precision, r.precision_defined)},
          {"recall", num(r.recall, r.recall_defined)},
          {"accuracy", r.accuracy},
          {"f1", num(r.f1, r.f1_defined)}};
}

// ---- subcommand bodies ------------------------------------------------------

int cmd_preprocess(const GlobalArgs& g, const std::string& in_dir, const std::string& out_dir,
                   const std::string& merge_map_path) {
  const AppConfig cfg = effective_config(g);
  const PercussionMergeMap map = merge_map_path.empty()
                                     ? PercussionMergeMap::defaults()
                                     : PercussionMergeMap::from_json_file(merge_map_path);
  fs::create_directories(out_dir);
  auto inputs = list_files(in_dir, ".drpr");
  if (inputs.empty()) throw EmptyDataset("no .drpr files in " + in_dir);

  // per-song work is independent; results land in slots indexed by song
  struct SongResult {
    nlohmann::json entry;
    std::string output;
    int pairs = 0;
    int discarded = 0;
    bool skipped = false;
    std::exception_ptr error;
  };
  std::vector<SongResult> results(inputs.size());
  parallel_for(inputs.size(), [&](size_t i) {
    const std::string song_id = inputs[i].stem().string();
    SongResult& r = results[i];
    r.entry["song"] = song_id;
    try {
      MultiTrackPianoroll song = load_song(inputs[i]);
      ProcessedSong processed = preprocess_song(song, map, song_id);
      auto pairs = segment_11_bars(processed);
      r.pairs = static_cast<int>(pairs.size());
      r.discarded = processed.bars() - r.pairs * kSampleBars;
      const fs::path out_path = fs::path(out_dir) / (song_id + ".drsp");
      save_pairs(pairs, out_path);
      r.output = out_path.string();
      r.entry["pairs"] = r.pairs;
      r.entry["discarded_bars"] = r.discarded;
    } catch (const EmptySong&) {
      r.entry["skipped"] = "empty song";
      r.skipped = true;
    } catch (...) {
      r.error = std::current_exception();
    }
  });

  std::vector<std::string> outputs;
  nlohmann::json per_song = nlohmann::json::array();
  int total_pairs = 0, total_discarded_bars = 0, skipped_songs = 0;
  for (auto& r : results) {
    if (r.error) std::rethrow_exception(r.error);
    if (!r.output.empty()) outputs.push_back(r.output);
    per_song.push_back(r.entry);
    total_pairs += r.pairs;
    total_discarded_bars += r.discarded;
    skipped_songs += r.skipped;
  }
  write_manifest(fs::path(out_dir) / "manifest.json", "preprocess", cfg, outputs,
                 {{"songs", inputs.size()},
                  {"skipped_songs", skipped_songs},
                  {"pairs", total_pairs},
                  {"discarded_bars", total_discarded_bars},
                  {"per_song", per_song}});
  std::cout << "preprocessed " << inputs.size() << " songs -> " << total_pairs << " pairs\n";
  return 0;
}

int cmd_tokens(bool dump) {
  if (dump) std::cout << tokens::vocab_json() << '\n';
  return 0;
}

int cmd_novelty(const GlobalArgs& g, const std::string& in_file, const std::string& csv_out) {
  const AppConfig cfg = effective_config(g);
  auto pairs = load_pairs(in_file);
  SongFeatures song = concat_pairs(pairs);
  NoveltyProfile profile = novelty_profile(song.pa, song.song_id, cfg.novelty.peak_margin);
  std::ofstream out(csv_out, std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + csv_out);
  out << "bar,value,is_peak\n";
  out.precision(12);
  for (int b = 0; b < profile.total_bars; ++b) {
    const bool peak = std::find(profile.peaks.begin(), profile.peaks.end(), b) !=
                      profile.peaks.end();
    out << b << ',';
    if (profile.has_value(b)) out << profile.value(b);
    out << ',' << (peak ? 1 : 0) << '\n';
  }
  write_manifest(fs::path(csv_out).string() + ".manifest.json", "novelty", cfg, {csv_out},
                 {{"bars", profile.total_bars}, {"peaks", profile.peaks.size()}});
  std::cout << "novelty: " << profile.peaks.size() << " peaks over " << profile.total_bars
            << " bars\n";
  return 0;
}

int cmd_dataset(const GlobalArgs& g, const std::string& in_dir, const std::string& out_file) {
  const AppConfig cfg = effective_config(g);
  auto songs = load_song_features(in_dir);
  LocationDataset ds = build_location_dataset(songs, cfg.novelty, cfg.seed);
  save_location_dataset(ds, out_file);
  write_manifest(out_file + ".manifest.json", "dataset", cfg, {out_file},
                 {{"entries", ds.entries.size()},
                  {"songs_used", ds.songs_used},
                  {"songs_skipped", ds.songs_skipped},
                  {"rng_seed", ds.seed}});
  std::cout << "location dataset: " << ds.entries.size() << " entries from " << ds.songs_used
            << " songs\n";
  return 0;
}

int cmd_train_basic(const GlobalArgs& g, const std::string& in_dir, const std::string& out_ckpt,
                    int epochs_override) {
  AppConfig cfg = effective_config(g);
  if (epochs_override >= 0) cfg.train.epochs = epochs_override;
  std::vector<SamplePair> pairs;
  for (const auto& path : list_files(in_dir, ".drsp")) {
    auto file_pairs = load_pairs(path);
    pairs.insert(pairs.end(), file_pairs.begin(), file_pairs.end());
  }
  BasicGenDataset ds = basicgen_dataset(pairs);
  BasicDrumGen model(cfg.basic, cfg.seed);
  TrainResult r;
  if (cfg.train.epochs > 0) {
    r = train_basicgen(model, ds, cfg.train, cfg.augment, cfg.seed, g.verbose);
  }
  save_basic(out_ckpt, model, meta_for(cfg, r));
  write_json(out_ckpt + ".log.json", r.log);
  write_manifest(out_ckpt + ".manifest.json", "train-basic", cfg,
                 {out_ckpt, out_ckpt + ".log.json"},
                 {{"samples", ds.ma.size()},
                  {"epochs_run", r.epochs_run},
                  {"train_nll", r.train_loss},
                  {"val_nll", r.val_loss}});
  std::cout << "train-basic: " << r.epochs_run << " epochs, train NLL " << r.train_loss
            << ", val NLL " << r.val_loss << '\n';
  return 0;
}

int cmd_train_locator(const GlobalArgs& g, const std::string& in_file,
                      const std::string& out_ckpt, int epochs_override) {
  AppConfig cfg = effective_config(g);
  if (epochs_override >= 0) cfg.train.epochs = epochs_override;
  LocationDataset ds = load_location_dataset(in_file);
  ImprovLocator model(cfg.locator, cfg.seed);
  TrainResult r;
  if (cfg.train.epochs > 0) {
    r = train_locator(model, ds, cfg.train, cfg.augment, cfg.seed, g.verbose);
  }
  save_locator(out_ckpt, model, meta_for(cfg, r));
  write_json(out_ckpt + ".log.json", r.log);
  write_manifest(out_ckpt + ".manifest.json", "train-locator", cfg,
                 {out_ckpt, out_ckpt + ".log.json"},
                 {{"entries", ds.entries.size()},
                  {"epochs_run", r.epochs_run},
                  {"train", report_json(r.train_report)},
                  {"val", report_json(r.val_report)}});
  std::cout << "train-locator: " << r.epochs_run << " epochs, val accuracy "
            << r.val_report.accuracy << '\n';
  return 0;
}

int cmd_train_infill(const GlobalArgs& g, const std::string& in_dir, const std::string& out_ckpt,
                     int epochs_override, const std::string& variant) {
  AppConfig cfg = effective_config(g);
  if (epochs_override >= 0) cfg.train.epochs = epochs_override;
  if (!variant.empty()) cfg.infill.variant = infill_variant_from_string(variant);
  auto songs = load_song_features(in_dir);
  InfillDataset ds = infill_dataset(songs, cfg.novelty);
  ImprovInfill model(cfg.infill, cfg.seed);
  TrainResult r;
  if (cfg.train.epochs > 0) {
    r = train_infill(model, ds, cfg.train, cfg.augment, cfg.seed, g.verbose);
  }
  save_infill(out_ckpt, model, meta_for(cfg, r));
  write_json(out_ckpt + ".log.json", r.log);
  write_manifest(out_ckpt + ".manifest.json", "train-infill", cfg,
                 {out_ckpt, out_ckpt + ".log.json"},
                 {{"windows", ds.ma.size()},
                  {"variant", to_string(cfg.infill.variant)},
                  {"epochs_run", r.epochs_run},
                  {"train", report_json(r.train_report)},
                  {"val", report_json(r.val_report)}});
  std::cout << "train-infill(" << to_string(cfg.infill.variant) << "): " << r.epochs_run
            << " epochs, val F1 " << (r.val_report.f1_defined ? r.val_report.f1 : -1.0) << '\n';
  return 0;
}

int cmd_generate(const GlobalArgs& g, const std::string& ma_file, const std::string& ckpt_dir,
                 const std::string& strategy, const std::string& out_file) {
  AppConfig cfg = effective_config(g);
  if (!strategy.empty()) cfg.pipeline.strategy = strategy;
  const DecodeStrategy strat = decode_strategy_from_string(cfg.pipeline.strategy);
  auto model = load_basic(fs::path(ckpt_dir) / "basic.ckpt");
  auto pairs = load_pairs(ma_file);
  if (pairs.empty()) throw EmptyDataset("no segments in " + ma_file);
  Rng rng(cfg.seed);
  ByteGrid track(static_cast<int>(pairs.size()) * kSampleTimesteps, kNumLanes);
  for (size_t s = 0; s < pairs.size(); ++s) {
    Rng seg_rng = rng.fork(s);
    PASample pa = generate_pa(*model, pairs[s].ma, strat, seg_rng, cfg.pipeline.max_tokens);
    std::copy(pa.grid.data.begin(), pa.grid.data.end(),
              track.row(static_cast<int>(s) * kSampleTimesteps));
  }
  save_song(percussion_only_song(track), out_file);
  write_json(out_file + ".sidecar.json", {{"song", pairs.front().song_id},
                                          {"segments", pairs.size()},
                                          {"strategy", cfg.pipeline.strategy},
                                          {"flagged_bars", nlohmann::json::array()},
                                          {"infilled_bars", nlohmann::json::array()}});
  write_manifest(out_file + ".manifest.json", "generate", cfg,
                 {out_file, out_file + ".sidecar.json"}, {{"segments", pairs.size()}});
  std::cout << "generated " << pairs.size() << " segments -> " << out_file << '\n';
  return 0;
}

int cmd_pipeline(const GlobalArgs& g, const std::string& in_dir, const std::string& ckpt_dir,
                 const std::string& out_dir) {
  const AppConfig cfg = effective_config(g);
  auto basic = load_basic(fs::path(ckpt_dir) / "basic.ckpt");
  auto locator = load_locator(fs::path(ckpt_dir) / "locator.ckpt");
  auto infill = load_infill(fs::path(ckpt_dir) / "infill.ckpt");
  fs::create_directories(out_dir);
  auto songs = load_song_features(in_dir);
  Rng rng(cfg.seed);
  std::vector<std::string> outputs;
  int total_flagged = 0;
  for (size_t i = 0; i < songs.size(); ++i) {
    Rng song_rng = rng.fork(i);
    PipelineResult r = run_pipeline(songs[i], *basic, *locator, *infill, cfg.pipeline, song_rng);
    const fs::path out_path = fs::path(out_dir) / (songs[i].song_id + ".drpr");
    save_song(percussion_only_song(r.pa), out_path);
    write_json(out_path.string() + ".sidecar.json",
               {{"song", songs[i].song_id},
                {"covered_bars", r.covered_bars},
                {"flagged_bars", r.flagged_bars},
                {"infilled_bars", r.flagged_bars}});
    outputs.push_back(out_path.string());
    total_flagged += static_cast<int>(r.flagged_bars.size());
  }
  write_manifest(fs::path(out_dir) / "manifest.json", "pipeline", cfg, outputs,
                 {{"songs", songs.size()}, {"flagged_bars", total_flagged}});
  std::cout << "pipeline: " << songs.size() << " songs, " << total_flagged
            << " bars in-filled\n";
  return 0;
}

int cmd_evaluate(const GlobalArgs& g, const std::string& gen_dir, const std::string& ref_dir,
                 const std::string& report_path, const std::string& plots_dir, bool apply_filter) {
  const AppConfig cfg = effective_config(g);
  std::vector<PASample> gen = load_pa_samples(gen_dir);
  const std::vector<PASample> ref = load_pa_samples(ref_dir);

  nlohmann::json report;
  if (apply_filter) {
    FilterReport fr;
    gen = filter_samples(gen, cfg.filter, &fr);
    if (gen.empty()) throw EmptyDataset("filtering dropped every generated sample");
    report["filter"] = {{"kept", fr.kept},
                        {"dropped_silent", fr.dropped_silent},
                        {"dropped_density", fr.dropped_density}};
  }

  auto bars_of = [](const std::vector<PASample>& samples) {
    std::vector<Bar> bars;
    bars.reserve(samples.size() * kSampleBars);
    for (const auto& s : samples) {
      for (int b = 0; b < kSampleBars; ++b) bars.push_back(slice_bar(s, b));
    }
    return bars;
  };
  const auto gen_hist = onset_position_histogram(bars_of(gen));
  const auto ref_hist = onset_position_histogram(bars_of(ref));
  report["onset_position"] = {{"overlap_area", overlap_area(gen_hist, ref_hist)}};

  auto consistency_values = [](const std::vector<PASample>& samples) {
    std::vector<double> v;
    v.reserve(samples.size() * (kSampleBars - 1));
    for (const auto& s : samples) {
      for (double d : pattern_consistency(s)) v.push_back(d);
    }
    return v;
  };
  const auto gen_pc = consistency_values(gen);
  const auto ref_pc = consistency_values(ref);
  double lo = 0.0, hi = 0.0;
  for (double v : gen_pc) hi = std::max(hi, v);
  for (double v : ref_pc) hi = std::max(hi, v);
  const int bins = 50;
  const auto gen_pc_hist = histogram(gen_pc, lo, hi, bins);
  const auto ref_pc_hist = histogram(ref_pc, lo, hi, bins);
  report["pattern_consistency"] = {
      {"overlap_area", overlap_area(gen_pc_hist, ref_pc_hist)},
      {"bins", bins}};

  auto ic_changes = [](const std::vector<PASample>& samples) {
    std::vector<double> v;
    for (const auto& s : samples) {
      for (int b = 1; b < kSampleBars; ++b) v.push_back(ic_change(s, b));
    }
    return v;
  };
  const auto gen_icc = ic_changes(gen);
  const auto ref_icc = ic_changes(ref);
  const auto gen_icc_hist = histogram(gen_icc, -16.0, 16.0, 33);
  const auto ref_icc_hist = histogram(ref_icc, -16.0, 16.0, 33);
  report["ic_change"] = {{"overlap_area", overlap_area(gen_icc_hist, ref_icc_hist)}};

  if (gen.size() == ref.size()) {
    const ICDeviation dev = ic_deviation_report(gen, ref);
    report["ic_deviation"] = {{"exact_match_frac", dev.exact_match_frac},
                              {"within_1_frac", dev.within_1_frac}};
  } else {
    report["ic_deviation"] = "skipped: sample counts differ";
  }

  std::vector<std::string> outputs{report_path};
  if (!plots_dir.empty()) {
    fs::create_directories(plots_dir);
    const fs::path pd(plots_dir);
    write_csv_row_file(pd / "onset_generated.csv", "timestep,frac", gen_hist);
    write_csv_row_file(pd / "onset_reference.csv", "timestep,frac", ref_hist);
    write_csv_row_file(pd / "pattern_consistency_generated.csv", "bin,frac", gen_pc_hist);
    write_csv_row_file(pd / "pattern_consistency_reference.csv", "bin,frac", ref_pc_hist);
    write_svg_bars(pd / "onset_generated.svg", "onset position (generated)", gen_hist);
    write_svg_bars(pd / "onset_reference.svg", "onset position (reference)", ref_hist);
    write_svg_bars(pd / "pattern_consistency_generated.svg", "pattern consistency (generated)",
                   gen_pc_hist);
    write_svg_bars(pd / "pattern_consistency_reference.svg", "pattern consistency (reference)",
                   ref_pc_hist);
    for (const auto& name :
         {"onset_generated.csv", "onset_reference.csv", "pattern_consistency_generated.csv",
          "pattern_consistency_reference.csv", "onset_generated.svg", "onset_reference.svg",
          "pattern_consistency_generated.svg", "pattern_consistency_reference.svg"}) {
      outputs.push_back((pd / name).string());
    }
  }
  write_json(report_path, report);
  write_manifest(report_path + ".manifest.json", "evaluate", cfg, outputs,
                 {{"generated_samples", gen.size()}, {"reference_samples", ref.size()}});
  std::cout << "evaluate: onset overlap "
            << report["onset_position"]["overlap_area"].get<double>() << ", consistency overlap "
            << report["pattern_consistency"]["overlap_area"].get<double>() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"drum accompaniment pipeline: preprocessing, novelty analysis, model training, "
               "generation and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.failure_message(CLI::FailureMessage::help);

  GlobalArgs g;
  app.add_option("--seed", g.seed, "global RNG seed (overrides config)")
      ->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--threads", g.threads, "bound on worker threads (default: cores)");
  app.add_flag("--verbose", g.verbose, "log per-epoch metrics to stderr");

  std::string in_path, out_path, merge_map, csv_out, ma_file, ckpt_dir, strategy, variant;
  std::string gen_dir, ref_dir, report_path, plots_dir;
  int epochs = -1;
  bool dump_tokens = false, apply_filter = false, locations = false;

  auto* preprocess = app.add_subcommand("preprocess", "raw songs to 11-bar sample pairs");
  preprocess->add_option("--in", in_path, "directory of .drpr songs")->required();
  preprocess->add_option("--out", out_path, "output directory for .drsp files")->required();
  preprocess->add_option("--merge-map", merge_map, "percussion merge map JSON");

  auto* tokens_cmd = app.add_subcommand("tokens", "token vocabulary utilities");
  tokens_cmd->add_flag("--dump", dump_tokens, "print the 18-token vocabulary as JSON");

  auto* novelty_cmd = app.add_subcommand("novelty", "per-bar novelty profile of one song");
  novelty_cmd->add_option("--in", in_path, "a .drsp file")->required();
  novelty_cmd->add_option("--csv", csv_out, "output CSV (bar,value,is_peak)")->required();

  auto* dataset = app.add_subcommand("dataset", "build training datasets");
  dataset->add_flag("--locations", locations, "balanced improvisation-location dataset");
  dataset->add_option("--in", in_path, "directory of .drsp files")->required();
  dataset->add_option("--out", out_path, "output .drld file")->required();

  auto* train_basic = app.add_subcommand("train-basic", "train the basic drum generator");
  train_basic->add_option("--in", in_path, "directory of .drsp files")->required();
  train_basic->add_option("--out", out_path, "checkpoint path")->required();
  train_basic->add_option("--epochs", epochs, "override config epochs");

  auto* train_locator_cmd = app.add_subcommand("train-locator", "train the location classifier");
  train_locator_cmd->add_option("--in", in_path, "a .drld dataset file")->required();
  train_locator_cmd->add_option("--out", out_path, "checkpoint path")->required();
  train_locator_cmd->add_option("--epochs", epochs, "override config epochs");

  auto* train_infill_cmd = app.add_subcommand("train-infill", "train the in-filling model");
  train_infill_cmd->add_option("--in", in_path, "directory of .drsp files")->required();
  train_infill_cmd->add_option("--out", out_path, "checkpoint path")->required();
  train_infill_cmd->add_option("--epochs", epochs, "override config epochs");
  train_infill_cmd->add_option("--variant", variant, "decoder: mlp|mixer|conv1d");

  auto* generate = app.add_subcommand("generate", "basic drum pattern for one song");
  generate->add_option("--ma", ma_file, "a .drsp file providing the MA")->required();
  generate->add_option("--ckpt-dir", ckpt_dir, "directory holding basic.ckpt")->required();
  generate->add_option("--strategy", strategy, "greedy|sample");
  generate->add_option("--out", out_path, "output .drpr (percussion only)")->required();

  auto* pipeline = app.add_subcommand("pipeline", "generate + locate + in-fill for a corpus");
  pipeline->add_option("--in", in_path, "directory of .drsp files")->required();
  pipeline->add_option("--ckpt-dir", ckpt_dir,
                       "directory with basic.ckpt, locator.ckpt, infill.ckpt")
      ->required();
  pipeline->add_option("--out", out_path, "output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "objective metric suite");
  evaluate->add_option("--generated", gen_dir, "directory of generated samples")->required();
  evaluate->add_option("--reference", ref_dir, "directory of reference samples")->required();
  evaluate->add_option("--report", report_path, "output JSON report")->required();
  evaluate->add_option("--plots", plots_dir, "directory for CSV/SVG plots");
  evaluate->add_flag("--filter", apply_filter, "screen generated samples first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;  // usage error
  }

  try {
    if (g.threads > 0) set_thread_limit(g.threads);
    if (preprocess->parsed()) return cmd_preprocess(g, in_path, out_path, merge_map);
    if (tokens_cmd->parsed()) return cmd_tokens(dump_tokens);
    if (novelty_cmd->parsed()) return cmd_novelty(g, in_path, csv_out);
    if (dataset->parsed()) {
      if (!locations) throw Error("dataset: only --locations is supported");
      return cmd_dataset(g, in_path, out_path);
    }
    if (train_basic->parsed()) return cmd_train_basic(g, in_path, out_path, epochs);
    if (train_locator_cmd->parsed()) return cmd_train_locator(g, in_path, out_path, epochs);
    if (train_infill_cmd->parsed()) {
      return cmd_train_infill(g, in_path, out_path, epochs, variant);
    }
    if (generate->parsed()) return cmd_generate(g, ma_file, ckpt_dir, strategy, out_path);
    if (pipeline->parsed()) return cmd_pipeline(g, in_path, ckpt_dir, out_path);
    if (evaluate->parsed()) {
      return cmd_evaluate(g, gen_dir, ref_dir, report_path, plots_dir, apply_filter);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#include "drumsmith/models/training.hpp"

#include <algorithm>
#include <iostream>

#include "drumsmith/nn/adam.hpp"

namespace drumsmith {

using nn::Var;

BasicGenDataset basicgen_dataset(std::span<const SamplePair> pairs) {
  BasicGenDataset ds;
  ds.ma.reserve(pairs.size());
  ds.tokens.reserve(pairs.size());
  for (const auto& p : pairs) {
    ds.ma.push_back(p.ma);
    ds.tokens.push_back(encode(p.pa).ids);
  }
  return ds;
}

InfillDataset infill_dataset(std::span<const SongFeatures> songs,
                             const LocationDatasetOptions& opt) {
  InfillDataset ds;
  for (const auto& song : songs) {
    if (song.bars() < kSampleBars) continue;
    NoveltyProfile profile = novelty_profile(song.pa, song.song_id, opt.peak_margin);
    for (int b : profile.peaks) {
      ds.ma.push_back(ma_window(song.ma, b));
      PASample pa = pa_window(song.pa, b);
      const Bar middle = slice_bar(pa, kSampleBars / 2);
      ds.pa_masked.push_back(mask_middle_bar(std::move(pa)));
      std::vector<float> target(middle.grid.data.size());
      for (size_t i = 0; i < target.size(); ++i) target[i] = middle.grid.data[i];
      ds.target.push_back(std::move(target));
    }
  }
  return ds;
}

namespace {

struct Split {
  std::vector<size_t> train, val;
};

Split split_indices(size_t n, double val_fraction, Rng& rng) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(idx);
  Split s;
  const size_t val_n = static_cast<size_t>(val_fraction * static_cast<double>(n));
  s.val.assign(idx.begin(), idx.begin() + val_n);
  s.train.assign(idx.begin() + val_n, idx.end());
  if (s.train.empty()) throw EmptyDataset("no training samples after split");
  return s;
}

MASample augment_ma(const MASample& ma, const AugmentConfig& aug, Rng& rng) {
  MASample out = apply_instrument_masking(ma, rng, aug.instrument_mask_frac);
  return mask_timesteps(std::move(out), aug.timestep_mask_frac, rng);
}

void log_line(bool verbose, const nlohmann::json& entry) {
  if (verbose) std::cerr << entry.dump() << '\n';
}

}  // namespace

TrainResult train_basicgen(BasicDrumGen& model, const BasicGenDataset& ds,
                           const TrainOptions& opt, const AugmentConfig& aug, uint64_t seed,
                           bool verbose) {
  return train_basicgen(model, ds, opt, aug, seed, verbose, StopCondition{});
}

TrainResult train_basicgen(BasicDrumGen& model, const BasicGenDataset& ds,
                           const TrainOptions& opt, const AugmentConfig& aug, uint64_t seed,
                           bool verbose, const StopCondition& stop) {
  if (ds.ma.empty()) throw EmptyDataset("basic-gen dataset is empty");
  Rng rng(seed);
  Split split = split_indices(ds.ma.size(), opt.val_fraction, rng);
  nn::AdamConfig adam_cfg{opt.lr_start, opt.lr_end};
  nn::Adam<float> adam(model.params(), adam_cfg);
  const bool use_aug = opt.augment && aug.enabled;

  // mean NLL per token over the index set; trains when adam != nullptr
  auto run_pass = [&](std::span<const size_t> indices, bool train_mode, double lr,
                      Rng& pass_rng) -> double {
    double loss_sum = 0.0;
    int64_t token_count = 0;
    for (size_t start = 0; start < indices.size(); start += opt.batch_size) {
      const size_t bn = std::min(static_cast<size_t>(opt.batch_size), indices.size() - start);
      size_t max_len = 0;
      for (size_t i = 0; i < bn; ++i) {
        max_len = std::max(max_len, ds.tokens[indices[start + i]].size());
      }
      std::vector<MASample> mas(bn);
      std::vector<std::vector<int>> dec_inputs(bn);
      std::vector<int> targets(bn * max_len, -1);
      int64_t batch_tokens = 0;
      for (size_t i = 0; i < bn; ++i) {
        const size_t idx = indices[start + i];
        Rng sample_rng = pass_rng.fork(idx);
        mas[i] = train_mode && use_aug ? augment_ma(ds.ma[idx], aug, sample_rng) : ds.ma[idx];
        const auto& toks = ds.tokens[idx];
        auto& inp = dec_inputs[i];
        inp.assign(max_len, BasicDrumGen::kBosId);
        for (size_t t = 0; t + 1 < toks.size(); ++t) inp[t + 1] = toks[t];
        for (size_t t = 0; t < toks.size(); ++t) targets[i * max_len + t] = toks[t];
        batch_tokens += static_cast<int64_t>(toks.size());
      }
      Var<float> logits = model.forward(mas, dec_inputs);
      Var<float> flat = nn::reshape(
          logits, {static_cast<int>(bn * max_len), model.options().vocab});
      Var<float> loss = nn::cross_entropy_logits(flat, targets, -1);
      loss_sum += static_cast<double>(loss.item()) * static_cast<double>(batch_tokens);
      token_count += batch_tokens;
      if (train_mode) {
        loss.backward();
        adam.step(lr);
        adam.zero_grads();
      }
    }
    return token_count > 0 ? loss_sum / static_cast<double>(token_count) : 0.0;
  };

  TrainResult result;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    const double lr = nn::scheduled_lr(adam_cfg, epoch, opt.epochs);
    Rng epoch_rng = rng.fork(1000 + epoch);
    std::vector<size_t> order = split.train;
    epoch_rng.shuffle(order);
    result.train_loss = run_pass(order, true, lr, epoch_rng);
    if (!split.val.empty()) {
      nn::NoGradGuard ng;
      Rng val_rng = rng.fork(2000 + epoch);
      result.val_loss = run_pass(split.val, false, lr, val_rng);
    }
    result.epochs_run = epoch + 1;
    result.final_lr = lr;
    nlohmann::json entry{{"epoch", epoch}, {"lr", lr}, {"train_nll", result.train_loss}};
    entry["val_nll"] = split.val.empty() ? nlohmann::json() : nlohmann::json(result.val_loss);
    result.log.push_back(entry);
    log_line(verbose, entry);
    if (stop.train_loss_below > 0 && result.train_loss < stop.train_loss_below) break;
  }
  result.steps = adam.step_count();
  return result;
}

namespace {

// shared epoch driver for the two Huber-trained classifiers
template <class ForwardFn, class PredictFn>
TrainResult run_huber_training(size_t n_samples, const TrainOptions& opt, uint64_t seed,
                               bool verbose, nn::ParamRegistry<float>& params,
                               ForwardFn&& forward_loss, PredictFn&& predict) {
  Rng rng(seed);
  Split split = split_indices(n_samples, opt.val_fraction, rng);
  nn::AdamConfig adam_cfg{opt.lr_start, opt.lr_end};
  nn::Adam<float> adam(params, adam_cfg);

  TrainResult result;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    const double lr = nn::scheduled_lr(adam_cfg, epoch, opt.epochs);
    Rng epoch_rng = rng.fork(1000 + epoch);
    std::vector<size_t> order = split.train;
    epoch_rng.shuffle(order);

    double train_loss = 0.0;
    int64_t batches = 0;
    for (size_t start = 0; start < order.size(); start += opt.batch_size) {
      const size_t bn = std::min(static_cast<size_t>(opt.batch_size), order.size() - start);
      Var<float> loss = forward_loss(std::span<const size_t>(order).subspan(start, bn),
                                     /*train_mode=*/true, epoch_rng);
      train_loss += loss.item();
      ++batches;
      loss.backward();
      adam.step(lr);
      adam.zero_grads();
    }
    result.train_loss = batches ? train_loss / static_cast<double>(batches) : 0.0;

    {
      nn::NoGradGuard ng;
      result.train_report = predict(split.train);
      if (!split.val.empty()) {
        Rng val_rng = rng.fork(2000 + epoch);
        double val_loss = 0.0;
        int64_t val_batches = 0;
        for (size_t start = 0; start < split.val.size(); start += opt.batch_size) {
          const size_t bn =
              std::min(static_cast<size_t>(opt.batch_size), split.val.size() - start);
          val_loss += forward_loss(std::span<const size_t>(split.val).subspan(start, bn), false,
                                   val_rng)
                          .item();
          ++val_batches;
        }
        result.val_loss = val_batches ? val_loss / static_cast<double>(val_batches) : 0.0;
        result.val_report = predict(split.val);
      }
    }
    result.epochs_run = epoch + 1;
    result.final_lr = lr;
    nlohmann::json entry{{"epoch", epoch},
                         {"lr", lr},
                         {"train_loss", result.train_loss},
                         {"train_accuracy", result.train_report.accuracy}};
    if (!split.val.empty()) {
      entry["val_loss"] = result.val_loss;
      entry["val_accuracy"] = result.val_report.accuracy;
      entry["val_f1"] = result.val_report.f1_defined ? result.val_report.f1 : -1.0;
    }
    result.log.push_back(entry);
    log_line(verbose, entry);
    if (opt.early_stop_val_accuracy > 0 && !split.val.empty() &&
        result.val_report.accuracy >= opt.early_stop_val_accuracy) {
      break;
    }
    if (opt.early_stop_train_accuracy > 0 &&
        result.train_report.accuracy >= opt.early_stop_train_accuracy) {
      break;
    }
    if (opt.early_stop_train_f1 > 0 && result.train_report.f1_defined &&
        result.train_report.f1 >= opt.early_stop_train_f1) {
      break;
    }
  }
  result.steps = adam.step_count();
  return result;
}

}  // namespace

TrainResult train_locator(ImprovLocator& model, const LocationDataset& ds,
                          const TrainOptions& opt, const AugmentConfig& aug, uint64_t seed,
                          bool verbose) {
  if (ds.entries.empty()) throw EmptyDataset("location dataset is empty");
  const bool use_aug = opt.augment && aug.enabled;

  auto forward_loss = [&](std::span<const size_t> idx, bool train_mode, Rng& pass_rng) {
    std::vector<MASample> mas(idx.size());
    std::vector<float> target(idx.size() * 2);
    for (size_t i = 0; i < idx.size(); ++i) {
      const auto& e = ds.entries[idx[i]];
      Rng sample_rng = pass_rng.fork(idx[i]);
      mas[i] = train_mode && use_aug ? augment_ma(e.ma, aug, sample_rng) : e.ma;
      target[2 * i] = e.label ? 0.f : 1.f;
      target[2 * i + 1] = e.label ? 1.f : 0.f;
    }
    Var<float> probs = model.forward(mas);
    return nn::huber(probs, std::move(target), static_cast<float>(opt.huber_delta));
  };

  auto predict = [&](std::span<const size_t> idx) {
    std::vector<int> preds, labels;
    preds.reserve(idx.size());
    labels.reserve(idx.size());
    std::vector<MASample> windows;
    windows.reserve(idx.size());
    for (size_t i : idx) windows.push_back(ds.entries[i].ma);
    std::vector<float> p = model.predict(windows, opt.batch_size);
    for (size_t i = 0; i < idx.size(); ++i) {
      preds.push_back(p[i] > 0.5f ? 1 : 0);
      labels.push_back(ds.entries[idx[i]].label);
    }
    return classification_report(preds, labels);
  };

  return run_huber_training(ds.entries.size(), opt, seed, verbose, model.params(), forward_loss,
                            predict);
}

TrainResult train_infill(ImprovInfill& model, const InfillDataset& ds, const TrainOptions& opt,
                         const AugmentConfig& aug, uint64_t seed, bool verbose) {
  if (ds.ma.empty()) throw EmptyDataset("in-fill dataset is empty");
  const bool use_aug = opt.augment && aug.enabled;

  auto assemble = [&](std::span<const size_t> idx, bool train_mode, Rng& pass_rng,
                      std::vector<MASample>& mas, std::vector<PASample>& pas) {
    mas.resize(idx.size());
    pas.resize(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
      Rng sample_rng = pass_rng.fork(idx[i]);
      if (train_mode && use_aug) {
        MASample ma = augment_ma(ds.ma[idx[i]], aug, sample_rng);
        PASample pa = drum_noise(ds.pa_masked[idx[i]], sample_rng, aug.drum_noise_max_density_delta);
        pa = mask_middle_bar(std::move(pa));  // keep the masked bar clean
        std::tie(mas[i], pas[i]) =
            drop_input(std::move(ma), std::move(pa), sample_rng, aug.input_drop_frac);
      } else {
        mas[i] = ds.ma[idx[i]];
        pas[i] = ds.pa_masked[idx[i]];
      }
    }
  };

  auto forward_loss = [&](std::span<const size_t> idx, bool train_mode, Rng& pass_rng) {
    std::vector<MASample> mas;
    std::vector<PASample> pas;
    assemble(idx, train_mode, pass_rng, mas, pas);
    std::vector<float> target;
    target.reserve(idx.size() * ds.target.front().size());
    for (size_t i : idx) target.insert(target.end(), ds.target[i].begin(), ds.target[i].end());
    Var<float> probs = model.forward(mas, pas);
    return nn::huber(probs, std::move(target), static_cast<float>(opt.huber_delta));
  };

  auto predict = [&](std::span<const size_t> idx) {
    std::vector<int> preds, labels;
    for (size_t start = 0; start < idx.size(); start += opt.batch_size) {
      const size_t bn = std::min(static_cast<size_t>(opt.batch_size), idx.size() - start);
      std::vector<MASample> mas(bn);
      std::vector<PASample> pas(bn);
      for (size_t i = 0; i < bn; ++i) {
        mas[i] = ds.ma[idx[start + i]];
        pas[i] = ds.pa_masked[idx[start + i]];
      }
      Var<float> probs = model.forward(mas, pas);
      for (size_t i = 0; i < bn; ++i) {
        const auto& target = ds.target[idx[start + i]];
        const float* p = probs.value().data() + i * target.size();
        for (size_t c = 0; c < target.size(); ++c) {
          preds.push_back(p[c] > 0.5f ? 1 : 0);
          labels.push_back(target[c] > 0.5f ? 1 : 0);
        }
      }
    }
    return classification_report(preds, labels);
  };

  return run_huber_training(ds.ma.size(), opt, seed, verbose, model.params(), forward_loss,
                            predict);
}

}  // namespace drumsmith

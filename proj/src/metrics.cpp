#include "drumsmith/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "drumsmith/novelty.hpp"

namespace drumsmith {

std::array<double, kBarTimesteps> onset_position_histogram(std::span<const Bar> bars) {
  std::array<double, kBarTimesteps> hist{};
  double total = 0;
  for (const Bar& bar : bars) {
    for (int t = 0; t < kBarTimesteps; ++t) {
      const uint8_t* row = bar.grid.row(t);
      for (int l = 0; l < kNumLanes; ++l) {
        hist[t] += row[l];
        total += row[l];
      }
    }
  }
  if (total == 0) throw EmptyInput("onset histogram of onset-free bars");
  for (double& h : hist) h /= total;
  return hist;
}

int instrument_count(const Bar& bar) {
  int count = 0;
  for (int l = 0; l < kNumLanes; ++l) {
    for (int t = 0; t < kBarTimesteps; ++t) {
      if (bar.grid.at(t, l)) {
        ++count;
        break;
      }
    }
  }
  return count;
}

ICDeviation ic_deviation_report(std::span<const PASample> generated,
                                std::span<const PASample> reference) {
  if (generated.size() != reference.size()) {
    throw LengthMismatch("generated " + std::to_string(generated.size()) + " vs reference " +
                         std::to_string(reference.size()) + " samples");
  }
  if (generated.empty()) throw EmptyInput("no samples");
  int64_t exact = 0, within1 = 0, total = 0;
  for (size_t i = 0; i < generated.size(); ++i) {
    for (int b = 0; b < kSampleBars; ++b) {
      const int d = std::abs(instrument_count(slice_bar(generated[i], b)) -
                             instrument_count(slice_bar(reference[i], b)));
      exact += d == 0;
      within1 += d <= 1;
      ++total;
    }
  }
  return {static_cast<double>(exact) / total, static_cast<double>(within1) / total};
}

std::array<double, kSampleBars - 1> pattern_consistency(const PASample& sample) {
  std::array<double, kSampleBars - 1> out{};
  for (int b = 0; b + 1 < kSampleBars; ++b) {
    out[b] = bar_dissimilarity(slice_bar(sample, b), slice_bar(sample, b + 1), 1.0);
  }
  return out;
}

int ic_change(const PASample& sample, int bar_index) {
  if (bar_index < 1 || bar_index >= kSampleBars) {
    throw IndexOutOfRange("ic_change needs bar_index in [1,11), got " +
                          std::to_string(bar_index));
  }
  return instrument_count(slice_bar(sample, bar_index)) -
         instrument_count(slice_bar(sample, bar_index - 1));
}

double overlap_area(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw BinMismatch("distributions have " + std::to_string(p.size()) + " vs " +
                      std::to_string(q.size()) + " bins");
  }
  double area = 0;
  for (size_t i = 0; i < p.size(); ++i) area += std::min(p[i], q[i]);
  return area;
}

ClassificationReport classification_report(std::span<const int> preds,
                                           std::span<const int> labels) {
  if (preds.size() != labels.size()) {
    throw LengthMismatch("preds " + std::to_string(preds.size()) + " vs labels " +
                         std::to_string(labels.size()));
  }
  if (preds.empty()) throw EmptyInput("empty classification report");
  int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] != 0, l = labels[i] != 0;
    tp += p && l;
    fp += p && !l;
    tn += !p && !l;
    fn += !p && l;
  }
  ClassificationReport r;
  r.accuracy = static_cast<double>(tp + tn) / static_cast<double>(preds.size());
  if (tp + fp == 0) {
    r.precision_defined = false;
    r.precision = std::nan("");
  } else {
    r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    r.recall_defined = false;
    r.recall = std::nan("");
  } else {
    r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  if (!r.precision_defined || !r.recall_defined || r.precision + r.recall == 0) {
    r.f1_defined = false;
    r.f1 = std::nan("");
  } else {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

std::vector<double> histogram(std::span<const double> values, double lo, double hi, int bins) {
  if (bins <= 0) throw BinMismatch("bins must be positive");
  if (values.empty()) throw EmptyInput("histogram of no values");
  std::vector<double> h(bins, 0.0);
  const double width = hi > lo ? (hi - lo) / bins : 1.0;
  for (double v : values) {
    int b = static_cast<int>((v - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    h[b] += 1.0;
  }
  for (double& x : h) x /= static_cast<double>(values.size());
  return h;
}

}  // namespace drumsmith

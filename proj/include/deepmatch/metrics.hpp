#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "deepmatch/dataset.hpp"

namespace deepmatch {

/// One scored impression ready for evaluation. Keys are canonical text keys
/// (query text; concatenated ad text; the pair key is derived from both).
struct ScoredImpression {
  double score = 0.0;
  int click = 0;
  std::string query_key;
  std::string ad_key;
  Device device = Device::unknown;
};

/// Canonical keys from a record plus its model score.
ScoredImpression make_impression(const QueryAdRecord& record, double score);

std::string pair_key(const std::string& query_key, const std::string& ad_key);

/// Probability that a random positive outranks a random negative, ties
/// counted 1/2; rank-sum computation in O(n log n). Undefined (nullopt)
/// unless both classes are present.
std::optional<double> auc_scores(std::span<const double> scores,
                                 std::span<const int> clicks);
std::optional<double> auc(std::span<const ScoredImpression> impressions);

/// Sum of scores over sum of observed clicks; undefined without any click.
std::optional<double> calibration(std::span<const ScoredImpression> impressions);

/// (|1-cal_external| - |1-cal_model|) / |1-cal_external|; undefined when the
/// external scorer is already perfectly calibrated.
std::optional<double> calibration_gain(double cal_external, double cal_model);

enum class FreqDimension { query, ad, pair };
enum class FreqSlice { tail, torso, head };

std::string freq_dimension_name(FreqDimension dimension);
std::string freq_slice_name(FreqSlice slice);

/// nf < 1e-6 tail; 1e-6 <= nf < 1e-2 torso; nf >= 1e-2 head.
FreqSlice classify_nf(double nf);

/// Impression counts per canonical key over a reference period, one map per
/// dimension. Normalized frequency nf = count / max count in (0,1]; unseen
/// keys report 0 (colder than anything observed).
class FrequencyIndex {
 public:
  static FrequencyIndex build(std::span<const QueryAdRecord> reference);

  void add(const std::string& query_key, const std::string& ad_key);
  std::size_t total() const { return total_; }
  double nf(FreqDimension dimension, const std::string& key) const;
  double nf_of(FreqDimension dimension, const ScoredImpression& imp) const;

 private:
  std::array<std::unordered_map<std::string, std::size_t>, 3> counts_;
  std::array<std::size_t, 3> max_{};
  std::size_t total_ = 0;
};

/// Index partition of `impressions` into {tail, torso, head} along one
/// dimension. The three sets are disjoint and cover the input.
std::array<std::vector<std::size_t>, 3> slice_tail_torso_head(
    std::span<const ScoredImpression> impressions, const FrequencyIndex& index,
    FreqDimension dimension);

struct CurvePoint {
  double edge = 0.0;
  std::size_t count = 0;
  std::optional<double> auc;
};

/// For each edge x: AUC over impressions with nf < x. Undefined bins are
/// flagged, never interpolated.
std::vector<CurvePoint> cumulative_auc_curve(
    std::span<const ScoredImpression> impressions, const FrequencyIndex& index,
    FreqDimension dimension, std::span<const double> edges);

struct SliceMetrics {
  std::size_t count = 0;
  std::optional<double> auc;
  std::optional<double> calibration;
  // Present only when external scores are supplied:
  std::optional<double> combined_auc;
  std::optional<double> rel_auc_improvement_pct;
  std::optional<double> combined_calibration;
  std::optional<double> calibration_gain;  // of combined vs external
};

struct DimensionReport {
  SliceMetrics tail, torso, head;
  std::vector<CurvePoint> cumulative;
};

struct EvalReport {
  std::size_t impressions = 0;
  std::optional<double> auc_all;
  std::optional<double> auc_desktop;
  std::optional<double> auc_mobile;
  std::optional<double> calibration_all;

  bool has_external = false;
  std::optional<double> external_auc;
  std::optional<double> external_calibration;
  std::optional<double> combined_auc;          // scores averaged with external
  std::optional<double> combined_calibration;
  std::optional<double> rel_auc_improvement_pct;  // 100*(comb-ext)/ext
  std::optional<double> calibration_gain_model;
  std::optional<double> calibration_gain_combined;

  DimensionReport by_query, by_ad, by_pair;
};

/// Default nf edges for the cumulative curves (last edge is a sentinel above
/// every attainable nf, so the final point equals the overall AUC).
std::span<const double> default_curve_edges();

/// Assembles every metric. `external_scores`, when given, must align with
/// `impressions`; combined scores are the per-impression average.
EvalReport make_report(std::span<const ScoredImpression> impressions,
                       const FrequencyIndex& index,
                       const std::vector<double>* external_scores);

/// Tab-separated report; `undefined` marks metrics with no defined value.
std::string report_to_tsv(const EvalReport& report);
/// JSON twin carrying the same values (null for undefined).
std::string report_to_json(const EvalReport& report);
void write_report_files(const EvalReport& report, const std::string& tsv_path,
                        const std::string& json_path);

}  // namespace deepmatch

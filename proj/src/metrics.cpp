#include "deepmatch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "deepmatch/errors.hpp"
#include "deepmatch/text.hpp"

namespace deepmatch {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt(*v) : "undefined";
}

nlohmann::json json_opt(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

std::vector<ScoredImpression> gather(
    std::span<const ScoredImpression> impressions,
    const std::vector<std::size_t>& idx) {
  std::vector<ScoredImpression> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(impressions[i]);
  return out;
}

SliceMetrics slice_metrics(std::span<const ScoredImpression> impressions,
                           const std::vector<std::size_t>& idx,
                           const std::vector<double>* external_scores) {
  SliceMetrics metrics;
  metrics.count = idx.size();
  const std::vector<ScoredImpression> subset = gather(impressions, idx);
  metrics.auc = auc(subset);
  metrics.calibration = calibration(subset);
  if (external_scores != nullptr) {
    std::vector<ScoredImpression> combined = subset;
    std::vector<ScoredImpression> external = subset;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const double ext = (*external_scores)[idx[j]];
      external[j].score = ext;
      combined[j].score = (subset[j].score + ext) / 2.0;
    }
    metrics.combined_auc = auc(combined);
    metrics.combined_calibration = calibration(combined);
    const std::optional<double> external_auc = auc(external);
    if (metrics.combined_auc && external_auc && *external_auc > 0.0) {
      metrics.rel_auc_improvement_pct =
          100.0 * (*metrics.combined_auc - *external_auc) / *external_auc;
    }
    const std::optional<double> external_cal = calibration(external);
    if (metrics.combined_calibration && external_cal) {
      metrics.calibration_gain =
          calibration_gain(*external_cal, *metrics.combined_calibration);
    }
  }
  return metrics;
}

void slice_tsv(std::ostream& out, const std::string& dimension,
               const std::string& name, const SliceMetrics& m,
               bool has_external) {
  out << dimension << '\t' << name << '\t' << m.count << '\t'
      << fmt_opt(m.auc) << '\t' << fmt_opt(m.calibration);
  if (has_external) {
    out << '\t' << fmt_opt(m.combined_auc) << '\t'
        << fmt_opt(m.rel_auc_improvement_pct) << '\t'
        << fmt_opt(m.combined_calibration) << '\t'
        << fmt_opt(m.calibration_gain);
  }
  out << '\n';
}

nlohmann::json slice_json(const SliceMetrics& m, bool has_external) {
  nlohmann::json j;
  j["count"] = m.count;
  j["auc"] = json_opt(m.auc);
  j["calibration"] = json_opt(m.calibration);
  if (has_external) {
    j["combined_auc"] = json_opt(m.combined_auc);
    j["rel_auc_improvement_pct"] = json_opt(m.rel_auc_improvement_pct);
    j["combined_calibration"] = json_opt(m.combined_calibration);
    j["calibration_gain"] = json_opt(m.calibration_gain);
  }
  return j;
}

}  // namespace

ScoredImpression make_impression(const QueryAdRecord& record, double score) {
  ScoredImpression imp;
  imp.score = score;
  imp.click = record.click;
  imp.query_key = canonicalize(record.query);
  imp.ad_key = canonicalize(concat_ad_fields(record.ad_title,
                                             record.ad_description,
                                             record.ad_display_url));
  imp.device = record.device;
  return imp;
}

std::string pair_key(const std::string& query_key, const std::string& ad_key) {
  return query_key + '\t' + ad_key;
}

std::optional<double> auc_scores(std::span<const double> scores,
                                 std::span<const int> clicks) {
  if (scores.size() != clicks.size()) {
    throw ShapeError("auc: score/click length mismatch");
  }
  const std::size_t n = scores.size();
  std::size_t positives = 0;
  for (int c : clicks) {
    if (c != 0 && c != 1) {
      throw ShapeError("auc: click outside {0,1}");
    }
    positives += static_cast<std::size_t>(c);
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Rank sum of the positives with average ranks over score ties.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t t = i; t < j; ++t) {
      if (clicks[order[t]] == 1) positive_rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(positives);
  const double nn = static_cast<double>(negatives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::optional<double> auc(std::span<const ScoredImpression> impressions) {
  std::vector<double> scores(impressions.size());
  std::vector<int> clicks(impressions.size());
  for (std::size_t i = 0; i < impressions.size(); ++i) {
    scores[i] = impressions[i].score;
    clicks[i] = impressions[i].click;
  }
  return auc_scores(scores, clicks);
}

std::optional<double> calibration(
    std::span<const ScoredImpression> impressions) {
  double expected = 0.0;
  double observed = 0.0;
  for (const ScoredImpression& imp : impressions) {
    expected += imp.score;
    observed += static_cast<double>(imp.click);
  }
  if (observed <= 0.0) return std::nullopt;
  return expected / observed;
}

std::optional<double> calibration_gain(double cal_external, double cal_model) {
  const double external_error = std::abs(1.0 - cal_external);
  if (external_error == 0.0) return std::nullopt;
  return (external_error - std::abs(1.0 - cal_model)) / external_error;
}

std::string freq_dimension_name(FreqDimension dimension) {
  switch (dimension) {
    case FreqDimension::query: return "query";
    case FreqDimension::ad: return "ad";
    case FreqDimension::pair: return "pair";
  }
  return "?";
}

std::string freq_slice_name(FreqSlice slice) {
  switch (slice) {
    case FreqSlice::tail: return "tail";
    case FreqSlice::torso: return "torso";
    case FreqSlice::head: return "head";
  }
  return "?";
}

FreqSlice classify_nf(double nf) {
  if (nf < 1e-6) return FreqSlice::tail;
  if (nf < 1e-2) return FreqSlice::torso;
  return FreqSlice::head;
}

FrequencyIndex FrequencyIndex::build(
    std::span<const QueryAdRecord> reference) {
  if (reference.empty()) {
    throw ConfigError("frequency index: empty reference stream");
  }
  FrequencyIndex index;
  for (const QueryAdRecord& record : reference) {
    index.add(canonicalize(record.query),
              canonicalize(concat_ad_fields(record.ad_title,
                                            record.ad_description,
                                            record.ad_display_url)));
  }
  return index;
}

void FrequencyIndex::add(const std::string& query_key,
                         const std::string& ad_key) {
  const std::string pair = pair_key(query_key, ad_key);
  const std::string* keys[3] = {&query_key, &ad_key, &pair};
  for (int d = 0; d < 3; ++d) {
    const std::size_t count = ++counts_[d][*keys[d]];
    max_[d] = std::max(max_[d], count);
  }
  ++total_;
}

double FrequencyIndex::nf(FreqDimension dimension,
                          const std::string& key) const {
  const auto d = static_cast<std::size_t>(dimension);
  const auto it = counts_[d].find(key);
  if (it == counts_[d].end() || max_[d] == 0) return 0.0;
  return static_cast<double>(it->second) / static_cast<double>(max_[d]);
}

double FrequencyIndex::nf_of(FreqDimension dimension,
                             const ScoredImpression& imp) const {
  switch (dimension) {
    case FreqDimension::query: return nf(dimension, imp.query_key);
    case FreqDimension::ad: return nf(dimension, imp.ad_key);
    case FreqDimension::pair:
      return nf(dimension, pair_key(imp.query_key, imp.ad_key));
  }
  return 0.0;
}

std::array<std::vector<std::size_t>, 3> slice_tail_torso_head(
    std::span<const ScoredImpression> impressions, const FrequencyIndex& index,
    FreqDimension dimension) {
  std::array<std::vector<std::size_t>, 3> slices;
  for (std::size_t i = 0; i < impressions.size(); ++i) {
    const double nf = index.nf_of(dimension, impressions[i]);
    slices[static_cast<std::size_t>(classify_nf(nf))].push_back(i);
  }
  return slices;
}

std::vector<CurvePoint> cumulative_auc_curve(
    std::span<const ScoredImpression> impressions, const FrequencyIndex& index,
    FreqDimension dimension, std::span<const double> edges) {
  std::vector<double> nfs(impressions.size());
  for (std::size_t i = 0; i < impressions.size(); ++i) {
    nfs[i] = index.nf_of(dimension, impressions[i]);
  }
  std::vector<CurvePoint> curve;
  curve.reserve(edges.size());
  for (double edge : edges) {
    std::vector<ScoredImpression> subset;
    for (std::size_t i = 0; i < impressions.size(); ++i) {
      if (nfs[i] < edge) subset.push_back(impressions[i]);
    }
    CurvePoint point;
    point.edge = edge;
    point.count = subset.size();
    point.auc = auc(subset);
    curve.push_back(std::move(point));
  }
  return curve;
}

std::span<const double> default_curve_edges() {
  static const double edges[] = {1e-7, 1e-6, 1e-5, 1e-4,
                                 1e-3, 1e-2, 1e-1, 1.0 + 1e-9};
  return edges;
}

EvalReport make_report(std::span<const ScoredImpression> impressions,
                       const FrequencyIndex& index,
                       const std::vector<double>* external_scores) {
  if (external_scores != nullptr &&
      external_scores->size() != impressions.size()) {
    throw ShapeError("make_report: external scores misaligned");
  }

  EvalReport report;
  report.impressions = impressions.size();
  report.auc_all = auc(impressions);
  report.calibration_all = calibration(impressions);

  std::vector<ScoredImpression> desktop, mobile;
  for (const ScoredImpression& imp : impressions) {
    if (imp.device == Device::desktop) desktop.push_back(imp);
    if (imp.device == Device::mobile) mobile.push_back(imp);
  }
  if (!desktop.empty()) report.auc_desktop = auc(desktop);
  if (!mobile.empty()) report.auc_mobile = auc(mobile);

  report.has_external = external_scores != nullptr;
  if (report.has_external) {
    std::vector<ScoredImpression> external(impressions.begin(),
                                           impressions.end());
    std::vector<ScoredImpression> combined(impressions.begin(),
                                           impressions.end());
    for (std::size_t i = 0; i < impressions.size(); ++i) {
      external[i].score = (*external_scores)[i];
      combined[i].score = (impressions[i].score + (*external_scores)[i]) / 2.0;
    }
    report.external_auc = auc(external);
    report.external_calibration = calibration(external);
    report.combined_auc = auc(combined);
    report.combined_calibration = calibration(combined);
    if (report.combined_auc && report.external_auc &&
        *report.external_auc > 0.0) {
      report.rel_auc_improvement_pct =
          100.0 * (*report.combined_auc - *report.external_auc) /
          *report.external_auc;
    }
    if (report.external_calibration) {
      if (report.calibration_all) {
        report.calibration_gain_model = calibration_gain(
            *report.external_calibration, *report.calibration_all);
      }
      if (report.combined_calibration) {
        report.calibration_gain_combined = calibration_gain(
            *report.external_calibration, *report.combined_calibration);
      }
    }
  }

  DimensionReport* dims[3] = {&report.by_query, &report.by_ad,
                              &report.by_pair};
  for (int d = 0; d < 3; ++d) {
    const auto dimension = static_cast<FreqDimension>(d);
    const auto slices = slice_tail_torso_head(impressions, index, dimension);
    dims[d]->tail = slice_metrics(impressions, slices[0], external_scores);
    dims[d]->torso = slice_metrics(impressions, slices[1], external_scores);
    dims[d]->head = slice_metrics(impressions, slices[2], external_scores);
    dims[d]->cumulative = cumulative_auc_curve(impressions, index, dimension,
                                               default_curve_edges());
  }
  return report;
}

std::string report_to_tsv(const EvalReport& report) {
  std::ostringstream out;
  out << "# overall\n";
  out << "impressions\t" << report.impressions << '\n';
  out << "auc\t" << fmt_opt(report.auc_all) << '\n';
  out << "auc_desktop\t" << fmt_opt(report.auc_desktop) << '\n';
  out << "auc_mobile\t" << fmt_opt(report.auc_mobile) << '\n';
  out << "calibration\t" << fmt_opt(report.calibration_all) << '\n';
  if (report.has_external) {
    out << "# external\n";
    out << "external_auc\t" << fmt_opt(report.external_auc) << '\n';
    out << "external_calibration\t" << fmt_opt(report.external_calibration)
        << '\n';
    out << "combined_auc\t" << fmt_opt(report.combined_auc) << '\n';
    out << "combined_calibration\t" << fmt_opt(report.combined_calibration)
        << '\n';
    out << "rel_auc_improvement_pct\t"
        << fmt_opt(report.rel_auc_improvement_pct) << '\n';
    out << "calibration_gain_model\t"
        << fmt_opt(report.calibration_gain_model) << '\n';
    out << "calibration_gain_combined\t"
        << fmt_opt(report.calibration_gain_combined) << '\n';
  }

  out << "# slices\n";
  out << "dimension\tslice\tcount\tauc\tcalibration";
  if (report.has_external) {
    out << "\tcombined_auc\trel_auc_improvement_pct\tcombined_calibration"
           "\tcalibration_gain";
  }
  out << '\n';
  const DimensionReport* dims[3] = {&report.by_query, &report.by_ad,
                                    &report.by_pair};
  for (int d = 0; d < 3; ++d) {
    const std::string name =
        freq_dimension_name(static_cast<FreqDimension>(d));
    slice_tsv(out, name, "tail", dims[d]->tail, report.has_external);
    slice_tsv(out, name, "torso", dims[d]->torso, report.has_external);
    slice_tsv(out, name, "head", dims[d]->head, report.has_external);
  }

  out << "# cumulative\n";
  out << "dimension\tnf_edge\tcount\tauc\n";
  for (int d = 0; d < 3; ++d) {
    const std::string name =
        freq_dimension_name(static_cast<FreqDimension>(d));
    for (const CurvePoint& point : dims[d]->cumulative) {
      out << name << '\t' << fmt(point.edge) << '\t' << point.count << '\t'
          << fmt_opt(point.auc) << '\n';
    }
  }
  return out.str();
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["impressions"] = report.impressions;
  j["auc"] = json_opt(report.auc_all);
  j["auc_desktop"] = json_opt(report.auc_desktop);
  j["auc_mobile"] = json_opt(report.auc_mobile);
  j["calibration"] = json_opt(report.calibration_all);
  if (report.has_external) {
    j["external_auc"] = json_opt(report.external_auc);
    j["external_calibration"] = json_opt(report.external_calibration);
    j["combined_auc"] = json_opt(report.combined_auc);
    j["combined_calibration"] = json_opt(report.combined_calibration);
    j["rel_auc_improvement_pct"] = json_opt(report.rel_auc_improvement_pct);
    j["calibration_gain_model"] = json_opt(report.calibration_gain_model);
    j["calibration_gain_combined"] =
        json_opt(report.calibration_gain_combined);
  }
  const DimensionReport* dims[3] = {&report.by_query, &report.by_ad,
                                    &report.by_pair};
  for (int d = 0; d < 3; ++d) {
    const std::string name =
        freq_dimension_name(static_cast<FreqDimension>(d));
    nlohmann::json slices;
    slices["tail"] = slice_json(dims[d]->tail, report.has_external);
    slices["torso"] = slice_json(dims[d]->torso, report.has_external);
    slices["head"] = slice_json(dims[d]->head, report.has_external);
    nlohmann::json curve = nlohmann::json::array();
    for (const CurvePoint& point : dims[d]->cumulative) {
      nlohmann::json p;
      p["nf_edge"] = point.edge;
      p["count"] = point.count;
      p["auc"] = json_opt(point.auc);
      curve.push_back(p);
    }
    j["slices"][name] = slices;
    j["cumulative"][name] = curve;
  }
  return j.dump(2);
}

void write_report_files(const EvalReport& report, const std::string& tsv_path,
                        const std::string& json_path) {
  std::ofstream tsv(tsv_path, std::ios::binary);
  if (!tsv) throw Error("report: cannot write " + tsv_path);
  tsv << report_to_tsv(report);
  std::ofstream json(json_path, std::ios::binary);
  if (!json) throw Error("report: cannot write " + json_path);
  json << report_to_json(report) << '\n';
}

}  // namespace deepmatch

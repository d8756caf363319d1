#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qcap/capability.hpp"

namespace qcap {

// Mean over circuits of the binary KL divergence KL(label || prediction),
// each value treated as a two-outcome distribution; logs clamped at 1e-12.
double kl_divergence(const std::vector<double>& labels, const std::vector<double>& predictions);

// Mean absolute difference.
double l1_error(const std::vector<double>& labels, const std::vector<double>& predictions);

// Sample Pearson correlation; empty when either list is constant.
std::optional<double> pearson_r(const std::vector<double>& labels,
                                const std::vector<double>& predictions);

struct DeltaRow {
  std::string id;
  std::string kind;
  int width = 0;
  int depth = 0;
  double s_hat = 0.0;    // data estimate
  double s_model = 0.0;  // model prediction
  double delta = 0.0;    // s_hat - s_model
};

// Per-circuit prediction errors delta(c) = label - prediction over one
// split of a dataset.
std::vector<DeltaRow> prediction_errors(const CapabilityDataset& ds, const std::string& split,
                                        const std::function<double(const Circuit&)>& predict);

struct MetricsReport {
  std::string dataset_id;
  std::string model_id;
  std::string split;
  size_t n = 0;
  double d_kl = 0.0;
  double d_l1 = 0.0;
  std::optional<double> r;
  std::vector<DeltaRow> rows;
  // (kind, width, depth) -> (count, mean |delta|)
  std::map<std::string, std::pair<size_t, double>> by_kind;
  std::map<int, std::pair<size_t, double>> by_width;
  std::map<int, std::pair<size_t, double>> by_depth;
};

MetricsReport build_report(const CapabilityDataset& ds, const std::string& split,
                           const std::function<double(const Circuit&)>& predict,
                           const std::string& dataset_id, const std::string& model_id);

// Stability baseline: the second pass's labels are the predictions for the
// first pass's labels, matched by record id. Throws DataError when the two
// datasets do not share every id.
MetricsReport sbm_metrics(const CapabilityDataset& pass1, const CapabilityDataset& pass2);

std::string report_to_text(const MetricsReport& r);
// one row per circuit: id,kind,width,depth,s_hat,s_model,delta
std::string report_to_csv(const MetricsReport& r);
void save_report(const MetricsReport& r, const std::string& text_path,
                 const std::string& csv_path);

}  // namespace qcap

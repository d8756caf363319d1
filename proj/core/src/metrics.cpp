#include "qcap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qcap/errors.hpp"

namespace qcap {

namespace {

void check_pair(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DataError("metric input lists have different lengths");
  if (a.empty()) throw DataError("metric input lists are empty");
  for (const double x : a)
    if (!(x >= 0.0 && x <= 1.0)) throw DataError("metric value outside [0, 1]");
  for (const double x : b)
    if (!(x >= 0.0 && x <= 1.0)) throw DataError("metric value outside [0, 1]");
}

double clamped_log(double x) { return std::log(std::max(x, 1e-12)); }

}  // namespace

double kl_divergence(const std::vector<double>& labels, const std::vector<double>& predictions) {
  check_pair(labels, predictions);
  double total = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    const double p = labels[i], q = predictions[i];
    double term = 0.0;
    if (p > 0.0) term += p * (clamped_log(p) - clamped_log(q));
    if (p < 1.0) term += (1.0 - p) * (clamped_log(1.0 - p) - clamped_log(1.0 - q));
    total += term;
  }
  return total / static_cast<double>(labels.size());
}

double l1_error(const std::vector<double>& labels, const std::vector<double>& predictions) {
  check_pair(labels, predictions);
  double total = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) total += std::abs(labels[i] - predictions[i]);
  return total / static_cast<double>(labels.size());
}

std::optional<double> pearson_r(const std::vector<double>& labels,
                                const std::vector<double>& predictions) {
  check_pair(labels, predictions);
  if (labels.size() < 2) throw DataError("correlation needs at least two points");
  const double n = static_cast<double>(labels.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    ma += labels[i];
    mb += predictions[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    const double da = labels[i] - ma, db = predictions[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

std::vector<DeltaRow> prediction_errors(const CapabilityDataset& ds, const std::string& split,
                                        const std::function<double(const Circuit&)>& predict) {
  std::vector<DeltaRow> rows;
  for (const auto& r : ds.records) {
    if (r.split != split) continue;
    DeltaRow row;
    row.id = r.id;
    row.kind = r.kind;
    row.width = r.circuit.width();
    row.depth = r.circuit.depth();
    row.s_hat = r.s_hat;
    row.s_model = predict(r.circuit);
    row.delta = row.s_hat - row.s_model;
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

MetricsReport report_from_rows(std::vector<DeltaRow> rows) {
  MetricsReport rep;
  rep.rows = std::move(rows);
  rep.n = rep.rows.size();
  std::vector<double> labels, preds;
  for (const auto& row : rep.rows) {
    labels.push_back(row.s_hat);
    preds.push_back(row.s_model);
    auto& bk = rep.by_kind[row.kind];
    bk.first += 1;
    bk.second += std::abs(row.delta);
    auto& bw = rep.by_width[row.width];
    bw.first += 1;
    bw.second += std::abs(row.delta);
    auto& bd = rep.by_depth[row.depth];
    bd.first += 1;
    bd.second += std::abs(row.delta);
  }
  for (auto& [k, v] : rep.by_kind) v.second /= static_cast<double>(v.first);
  for (auto& [k, v] : rep.by_width) v.second /= static_cast<double>(v.first);
  for (auto& [k, v] : rep.by_depth) v.second /= static_cast<double>(v.first);
  rep.d_kl = kl_divergence(labels, preds);
  rep.d_l1 = l1_error(labels, preds);
  rep.r = labels.size() >= 2 ? pearson_r(labels, preds) : std::nullopt;
  return rep;
}

}  // namespace

MetricsReport build_report(const CapabilityDataset& ds, const std::string& split,
                           const std::function<double(const Circuit&)>& predict,
                           const std::string& dataset_id, const std::string& model_id) {
  auto rows = prediction_errors(ds, split, predict);
  if (rows.empty()) throw DataError("no records in split '" + split + "'");
  MetricsReport rep = report_from_rows(std::move(rows));
  rep.dataset_id = dataset_id;
  rep.model_id = model_id;
  rep.split = split;
  return rep;
}

MetricsReport sbm_metrics(const CapabilityDataset& pass1, const CapabilityDataset& pass2) {
  std::map<std::string, const CapabilityRecord*> second;
  for (const auto& r : pass2.records) second[r.id] = &r;
  std::vector<DeltaRow> rows;
  for (const auto& r : pass1.records) {
    const auto it = second.find(r.id);
    if (it == second.end())
      throw DataError("stability baseline: id '" + r.id + "' missing from the second pass");
    DeltaRow row;
    row.id = r.id;
    row.kind = r.kind;
    row.width = r.circuit.width();
    row.depth = r.circuit.depth();
    row.s_hat = r.s_hat;
    row.s_model = it->second->s_hat;
    row.delta = row.s_hat - row.s_model;
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("stability baseline: first pass has no records");
  MetricsReport rep = report_from_rows(std::move(rows));
  rep.dataset_id = "pass1";
  rep.model_id = "pass2-relabel";
  rep.split = "all";
  return rep;
}

std::string report_to_text(const MetricsReport& r) {
  std::ostringstream out;
  out << "dataset: " << r.dataset_id << "\n";
  out << "model: " << r.model_id << "\n";
  out << "split: " << r.split << " (" << r.n << " circuits)\n";
  out << std::setprecision(6);
  out << "d_KL: " << r.d_kl << "\n";
  out << "d_L1: " << r.d_l1 << "\n";
  if (r.r)
    out << "pearson_r: " << *r.r << "\n";
  else
    out << "pearson_r: undefined (constant list)\n";
  out << "mean |delta| by kind:\n";
  for (const auto& [k, v] : r.by_kind)
    out << "  " << k << ": " << v.second << " (" << v.first << ")\n";
  out << "mean |delta| by width:\n";
  for (const auto& [k, v] : r.by_width)
    out << "  " << k << ": " << v.second << " (" << v.first << ")\n";
  out << "mean |delta| by depth:\n";
  for (const auto& [k, v] : r.by_depth)
    out << "  " << k << ": " << v.second << " (" << v.first << ")\n";
  return out.str();
}

std::string report_to_csv(const MetricsReport& r) {
  std::ostringstream out;
  out << "id,kind,width,depth,s_hat,s_model,delta\n";
  out << std::setprecision(17);
  for (const auto& row : r.rows)
    out << row.id << "," << row.kind << "," << row.width << "," << row.depth << "," << row.s_hat
        << "," << row.s_model << "," << row.delta << "\n";
  return out.str();
}

void save_report(const MetricsReport& r, const std::string& text_path,
                 const std::string& csv_path) {
  std::ofstream t(text_path, std::ios::binary);
  if (!t) throw DataError("cannot write report file: " + text_path);
  t << report_to_text(r);
  std::ofstream c(csv_path, std::ios::binary);
  if (!c) throw DataError("cannot write report file: " + csv_path);
  c << report_to_csv(r);
}

}  // namespace qcap

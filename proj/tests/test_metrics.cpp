#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "qcap/capability.hpp"
#include "qcap/device.hpp"
#include "qcap/erm.hpp"
#include "qcap/errors.hpp"
#include "qcap/metrics.hpp"
#include "qcap/mirror.hpp"
#include "qcap/pipeline.hpp"
#include "qcap/rng.hpp"

using namespace qcap;

namespace {

// Straight-line reimplementation of the metric formulas.
double naive_kl(const std::vector<double>& y, const std::vector<double>& p) {
  double total = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    auto lg = [](double x) { return std::log(std::max(x, 1e-12)); };
    double term = 0.0;
    if (y[i] > 0) term += y[i] * (lg(y[i]) - lg(p[i]));
    if (y[i] < 1) term += (1 - y[i]) * (lg(1 - y[i]) - lg(1 - p[i]));
    total += term;
  }
  return total / static_cast<double>(y.size());
}

CapabilityDataset labelled_dataset(size_t n, uint64_t seed) {
  const DeviceGraph dev = t5_device();
  Rng model_rng(seed);
  const ErrorModel m = sample_biased_lps(dev, model_rng);
  std::vector<Circuit> circuits;
  std::vector<std::string> kinds;
  for (size_t i = 0; i < n; ++i) {
    SamplerConfig cfg;
    Rng pick(seed + 10 * i);
    cfg.qubits = sample_connected_subset(dev, 2 + static_cast<int>(i % 4), pick);
    cfg.depth = 4 + 4 * static_cast<int>(i % 3);
    Rng crng(seed + 100 + i);
    circuits.push_back(sample_randomized_mirror_circuit(dev, cfg, crng));
    kinds.push_back(i % 3 == 0 ? "pmc" : "rmc");
  }
  return build_dataset(dev, circuits, kinds, m, 0, SplitFractions{}, Rng(seed + 1));
}

}  // namespace

TEST_CASE("kl divergence identities") {
  CHECK(kl_divergence({1.0}, {0.5}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(kl_divergence({0.0}, {0.5}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(kl_divergence({0.3}, {0.3}) == doctest::Approx(0.0));
  CHECK(kl_divergence({0.9, 0.1}, {0.9, 0.1}) == doctest::Approx(0.0));
  // Clamped logs keep extreme pairs finite.
  CHECK(std::isfinite(kl_divergence({1.0}, {0.0})));

  Rng rng(3);
  std::vector<double> y, p;
  for (int i = 0; i < 50; ++i) {
    y.push_back(rng.uniform(0.01, 0.99));
    p.push_back(rng.uniform(0.01, 0.99));
  }
  CHECK(kl_divergence(y, p) == doctest::Approx(naive_kl(y, p)).epsilon(1e-12));
  CHECK(kl_divergence(y, p) > 0.0);
}

TEST_CASE("l1 error is the mean absolute difference") {
  CHECK(l1_error({0.5, 0.8}, {0.4, 0.6}) == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(l1_error({0.2}, {0.2}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(l1_error({0.1}, {0.1, 0.2}), DataError);
  CHECK_THROWS_AS(l1_error({}, {}), DataError);
}

TEST_CASE("pearson handles affine and degenerate inputs") {
  const std::vector<double> x{0.1, 0.4, 0.2, 0.9, 0.6};
  std::vector<double> pos, neg;
  for (double v : x) {
    pos.push_back(0.5 * v + 0.2);
    neg.push_back(0.9 - 0.8 * v);
  }
  CHECK(pearson_r(x, pos).value() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson_r(x, neg).value() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_FALSE(pearson_r(x, {0.5, 0.5, 0.5, 0.5, 0.5}).has_value());
  CHECK_FALSE(pearson_r({0.2, 0.2, 0.2, 0.2, 0.2}, x).has_value());

  // Textbook 4-point cross-check.
  const std::vector<double> a{0.1, 0.2, 0.3, 0.4};
  const std::vector<double> b{0.2, 0.1, 0.4, 0.3};
  CHECK(pearson_r(a, b).value() == doctest::Approx(0.6).epsilon(1e-12));

  CHECK_THROWS_AS(pearson_r({0.1}, {0.5}), DataError);
  CHECK_THROWS_AS(pearson_r({0.1, 1.4}, {0.5, 0.5}), DataError);
}

TEST_CASE("spearman is rank pearson with average ranks for ties") {
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  const std::vector<double> up{10, 20, 30, 40};
  const std::vector<double> down{5, 4, 3, 2};
  CHECK(spearman_rho(x, up) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spearman_rho(x, down) == doctest::Approx(-1.0).epsilon(1e-12));

  // One swapped neighbour pair on 4 points: rho = 1 - 6*2/(4*15) = 0.8.
  const std::vector<double> swapped{10, 30, 20, 40};
  CHECK(spearman_rho(x, swapped) == doctest::Approx(0.8).epsilon(1e-12));

  // Nonlinear but monotone stays exactly 1.
  const std::vector<double> exp_up{1.0, 2.7, 7.4, 20.1};
  CHECK(spearman_rho(x, exp_up) == doctest::Approx(1.0).epsilon(1e-12));

  // Ties get average ranks: with y = (1, 1, 2), x = (1, 2, 3),
  // rank(y) = (1.5, 1.5, 3), rho = corr((1,2,3), (1.5,1.5,3)) = sqrt(3)/2.
  const std::vector<double> xt{1, 2, 3};
  const std::vector<double> yt{1, 1, 2};
  CHECK(spearman_rho(xt, yt) == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-12));

  CHECK_THROWS_AS(spearman_rho({1, 1, 1}, {1, 2, 3}), NumericalError);
  CHECK_THROWS_AS(spearman_rho({1}, {2}), DataError);
  CHECK_THROWS_AS(spearman_rho({1, 2}, {2}), DataError);
}

TEST_CASE("prediction errors carry signed deltas") {
  const CapabilityDataset ds = labelled_dataset(30, 7);
  const auto rows = prediction_errors(ds, "train", [](const Circuit&) { return 0.5; });
  CHECK(rows.size() == ds.split_indices("train").size());
  for (const auto& row : rows) {
    CHECK(row.s_model == 0.5);
    CHECK(row.delta == doctest::Approx(row.s_hat - 0.5).epsilon(1e-15));
    CHECK(row.width > 0);
    CHECK(row.depth > 0);
    CHECK((row.kind == "rmc" || row.kind == "pmc"));
  }
}

TEST_CASE("build_report aggregates by kind width and depth") {
  const CapabilityDataset ds = labelled_dataset(40, 11);
  const DeviceGraph dev = ds.device;
  const MetricsReport rep = build_report(
      ds, "train", [](const Circuit&) { return 0.8; }, "ds-id", "model-id");
  CHECK(rep.dataset_id == "ds-id");
  CHECK(rep.model_id == "model-id");
  CHECK(rep.split == "train");
  CHECK(rep.n == rep.rows.size());
  CHECK(rep.n == ds.split_indices("train").size());

  std::vector<double> y, p;
  for (const auto& row : rep.rows) {
    y.push_back(row.s_hat);
    p.push_back(row.s_model);
  }
  CHECK(rep.d_kl == doctest::Approx(kl_divergence(y, p)).epsilon(1e-12));
  CHECK(rep.d_l1 == doctest::Approx(l1_error(y, p)).epsilon(1e-12));

  size_t total = 0;
  for (const auto& [kind, agg] : rep.by_kind) {
    total += agg.first;
    double sum = 0.0;
    size_t n = 0;
    for (const auto& row : rep.rows)
      if (row.kind == kind) {
        sum += std::abs(row.delta);
        ++n;
      }
    CHECK(agg.first == n);
    CHECK(agg.second == doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));
  }
  CHECK(total == rep.n);

  size_t width_total = 0, depth_total = 0;
  for (const auto& [w, agg] : rep.by_width) width_total += agg.first;
  for (const auto& [d, agg] : rep.by_depth) depth_total += agg.first;
  CHECK(width_total == rep.n);
  CHECK(depth_total == rep.n);
}

TEST_CASE("reports for different splits do not overlap") {
  const CapabilityDataset ds = labelled_dataset(30, 13);
  const auto train = build_report(ds, "train", [](const Circuit&) { return 0.9; }, "d", "m");
  const auto test = build_report(ds, "test", [](const Circuit&) { return 0.9; }, "d", "m");
  CHECK(train.n + test.n <= ds.records.size());
  for (const auto& tr : train.rows)
    for (const auto& te : test.rows) CHECK(tr.id != te.id);
}

TEST_CASE("sbm matches ids not positions") {
  CapabilityDataset pass1 = labelled_dataset(20, 17);
  CapabilityDataset pass2 = pass1;
  Rng rng(19);
  for (auto& r : pass2.records) r.s_hat = r.s_hat * 0.9 + 0.05;

  const MetricsReport direct = sbm_metrics(pass1, pass2);
  CHECK(direct.n == 20);

  // Shuffling the second pass's record order changes nothing.
  std::vector<size_t> order(pass2.records.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  CapabilityDataset shuffled = pass2;
  shuffled.records.clear();
  for (size_t i : order) shuffled.records.push_back(pass2.records[i]);
  const MetricsReport mixed = sbm_metrics(pass1, shuffled);
  CHECK(mixed.d_kl == doctest::Approx(direct.d_kl).epsilon(1e-12));
  CHECK(mixed.d_l1 == doctest::Approx(direct.d_l1).epsilon(1e-12));

  // Identical passes are a perfect baseline.
  const MetricsReport self = sbm_metrics(pass1, pass1);
  CHECK(self.d_l1 == doctest::Approx(0.0));
  CHECK(self.d_kl == doctest::Approx(0.0));

  // Missing ids are an error.
  CapabilityDataset truncated = pass2;
  truncated.records.pop_back();
  CHECK_THROWS_AS(sbm_metrics(pass1, truncated), DataError);
  CapabilityDataset renamed = pass2;
  renamed.records[0].id = "zzz";
  CHECK_THROWS_AS(sbm_metrics(pass1, renamed), DataError);
}

TEST_CASE("report text and csv carry the rows") {
  const CapabilityDataset ds = labelled_dataset(12, 23);
  const MetricsReport rep = build_report(
      ds, "train", [](const Circuit& c) { return 1.0 / (1.0 + c.depth() * 0.01); }, "dsx", "mx");
  const std::string text = report_to_text(rep);
  CHECK(text.find("dsx") != std::string::npos);
  CHECK(text.find("mx") != std::string::npos);
  CHECK(text.find("train") != std::string::npos);

  const std::string csv = report_to_csv(rep);
  std::istringstream lines(csv);
  std::string line;
  size_t n_lines = 0;
  std::getline(lines, line);
  CHECK(line == "id,kind,width,depth,s_hat,s_model,delta");
  while (std::getline(lines, line))
    if (!line.empty()) ++n_lines;
  CHECK(n_lines == rep.rows.size());

  // Values survive the round trip at full precision.
  const std::string first_id = rep.rows[0].id;
  CHECK(csv.find(first_id) != std::string::npos);
  std::ostringstream prec;
  prec.precision(17);
  prec << rep.rows[0].delta;
  // A 17-digit delta should reparse to the identical double.
  CHECK(std::stod(prec.str()) == rep.rows[0].delta);
}

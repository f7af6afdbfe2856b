#include "hesskit/spikes.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

namespace hesskit {

const char* spike_label_name(SpikeLabel label) {
  switch (label) {
    case SpikeLabel::clear_spike: return "clear_spike";
    case SpikeLabel::borderline: return "borderline";
    case SpikeLabel::excluded: return "excluded";
  }
  return "?";
}

std::vector<SpikeLabel> classify_spikes(const std::vector<double>& eigenvalues,
                                        double bulk_median, double gap_factor) {
  for (std::size_t i = 0; i + 1 < eigenvalues.size(); ++i) {
    if (eigenvalues[i] < eigenvalues[i + 1]) {
      throw std::invalid_argument("classify_spikes: eigenvalues must be descending");
    }
  }
  const double threshold = gap_factor * bulk_median;
  std::vector<SpikeLabel> labels;
  labels.reserve(eigenvalues.size());
  for (double lambda : eigenvalues) {
    if (lambda < 0.0) labels.push_back(SpikeLabel::excluded);
    else if (lambda >= threshold) labels.push_back(SpikeLabel::clear_spike);
    else labels.push_back(SpikeLabel::borderline);
  }
  return labels;
}

SpectrumReport make_spectrum_report(const SpikeBasis& basis, double bulk_median,
                                    double gap_factor, int lanczos_order,
                                    const std::string& provenance,
                                    double elapsed_seconds) {
  SpectrumReport report;
  report.eigenvalues = basis.eigenvalues;
  report.labels = classify_spikes(basis.eigenvalues, bulk_median, gap_factor);
  if (!basis.eigenvalues.empty() && basis.eigenvalues.front() != 0.0) {
    for (double v : basis.eigenvalues) report.ratios_to_top.push_back(v / basis.eigenvalues.front());
  }
  report.bulk_median = bulk_median;
  report.gap_factor = gap_factor;
  report.orth_error = basis.orth_error;
  report.lanczos_order = lanczos_order;
  report.oracle_provenance = provenance;
  report.elapsed_seconds = elapsed_seconds;
  return report;
}

std::string SpectrumReport::to_json() const {
  nlohmann::json j;
  j["eigenvalues"] = eigenvalues;
  std::vector<std::string> names;
  names.reserve(labels.size());
  for (auto label : labels) names.emplace_back(spike_label_name(label));
  j["labels"] = names;
  j["ratios_to_top"] = ratios_to_top;
  j["bulk_median"] = bulk_median;
  j["gap_factor"] = gap_factor;
  j["orth_error"] = orth_error;
  j["lanczos_order"] = lanczos_order;
  j["oracle_provenance"] = oracle_provenance;
  j["elapsed_seconds"] = elapsed_seconds;
  return j.dump(2);
}

SpectrumReport SpectrumReport::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SpectrumReport report;
  report.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  for (const auto& name : j.at("labels")) {
    if (name == "clear_spike") report.labels.push_back(SpikeLabel::clear_spike);
    else if (name == "borderline") report.labels.push_back(SpikeLabel::borderline);
    else if (name == "excluded") report.labels.push_back(SpikeLabel::excluded);
    else throw std::invalid_argument("SpectrumReport: unknown label");
  }
  report.ratios_to_top = j.at("ratios_to_top").get<std::vector<double>>();
  report.bulk_median = j.at("bulk_median");
  report.gap_factor = j.at("gap_factor");
  report.orth_error = j.at("orth_error");
  report.lanczos_order = j.at("lanczos_order");
  report.oracle_provenance = j.at("oracle_provenance");
  report.elapsed_seconds = j.at("elapsed_seconds");
  return report;
}

}  // namespace hesskit

#pragma once

#include <string>
#include <vector>

#include "hesskit/lanczos.hpp"

namespace hesskit {

enum class SpikeLabel { clear_spike, borderline, excluded };

const char* spike_label_name(SpikeLabel label);

/// Labels each eigenvalue against the bulk: clear_spike when the value sits at
/// least gap_factor above the bulk median, borderline for small non-negative
/// values, excluded for negative ones (reported, never used).
std::vector<SpikeLabel> classify_spikes(const std::vector<double>& eigenvalues,
                                        double bulk_median, double gap_factor = 1e3);

/// Structured spectrum report: Ritz values with labels, orthogonality error,
/// oracle provenance and timing. Serializes to JSON losslessly.
struct SpectrumReport {
  std::vector<double> eigenvalues;
  std::vector<SpikeLabel> labels;
  std::vector<double> ratios_to_top;  // lambda_i / lambda_1
  double bulk_median = 0.0;
  double gap_factor = 0.0;
  double orth_error = 0.0;
  int lanczos_order = 0;
  std::string oracle_provenance;
  double elapsed_seconds = 0.0;

  std::string to_json() const;
  static SpectrumReport from_json(const std::string& text);
};

SpectrumReport make_spectrum_report(const SpikeBasis& basis, double bulk_median,
                                    double gap_factor, int lanczos_order,
                                    const std::string& provenance,
                                    double elapsed_seconds);

}  // namespace hesskit

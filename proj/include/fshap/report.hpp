#ifndef FSHAP_REPORT_HPP
#define FSHAP_REPORT_HPP

#include <string>
#include <vector>

#include "fshap/core.hpp"

namespace fshap {

/// Per-feature color intensity: display_i / max(display), 0 when all zero.
std::vector<double> render_intensities(const std::vector<double>& display);

/// Stable-key-order JSON document: {version, source_id, task, model_id,
/// splitter, comparator, mode, sampling_ratio, seed, coalition_count,
/// features: [{index, text, byte_start, byte_end, raw, display}],
/// output_text}. Round-trips losslessly through load_attribution_json.
std::string attribution_json(const AttributionResult& result);
void emit_json(const AttributionResult& result, const std::string& path);
AttributionResult load_attribution_json(const std::string& path);
AttributionResult parse_attribution_json(const std::string& text, const std::string& origin);

/// Self-contained HTML heat map: each feature's text in a span whose
/// background alpha is its intensity, with a percentage label
/// (display × 100, one decimal), the model output alongside, and no
/// external assets.
std::string attribution_html(const AttributionResult& result, const std::string& model_output);
void emit_html(const AttributionResult& result, const std::string& model_output,
               const std::string& path);

}  // namespace fshap

#endif  // FSHAP_REPORT_HPP

#include "fshap/report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace fshap {

using ordered_json = nlohmann::ordered_json;

std::vector<double> render_intensities(const std::vector<double>& display) {
    std::vector<double> out(display.size(), 0.0);
    const double max = display.empty()
                           ? 0.0
                           : *std::max_element(display.begin(), display.end());
    if (max <= 0.0) {
        return out;
    }
    for (std::size_t i = 0; i < display.size(); ++i) {
        out[i] = display[i] / max;
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

std::string attribution_json(const AttributionResult& result) {
    ordered_json doc;
    doc["version"] = 1;
    doc["source_id"] = result.partition.source_id;
    doc["task"] = task_name(result.task);
    doc["model_id"] = result.model_id;
    doc["splitter"] = result.partition.splitter_name;
    doc["comparator"] = result.comparator_name;
    doc["mode"] = mode_name(result.mode);
    doc["sampling_ratio"] = result.sampling_ratio;
    doc["seed"] = result.seed;
    doc["coalition_count"] = result.coalition_count;
    ordered_json features = ordered_json::array();
    for (std::size_t i = 0; i < result.partition.features.size(); ++i) {
        const Feature& f = result.partition.features[i];
        ordered_json jf;
        jf["index"] = f.index;
        jf["text"] = f.text;
        jf["byte_start"] = f.byte_start;
        jf["byte_end"] = f.byte_end;
        jf["raw"] = result.raw[i];
        jf["display"] = result.display[i];
        features.push_back(std::move(jf));
    }
    doc["features"] = std::move(features);
    doc["output_text"] = result.output_text;
    return doc.dump(2) + "\n";
}

void emit_json(const AttributionResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ReportError("cannot write report: " + path);
    }
    out << attribution_json(result);
    if (!out) {
        throw ReportError("write failed: " + path);
    }
}

AttributionResult parse_attribution_json(const std::string& text, const std::string& origin) {
    try {
        ordered_json doc = ordered_json::parse(text);
        AttributionResult result;
        result.partition.source_id = doc.at("source_id").get<std::string>();
        result.task = parse_task(doc.at("task").get<std::string>());
        result.model_id = doc.at("model_id").get<std::string>();
        result.partition.splitter_name = doc.at("splitter").get<std::string>();
        result.comparator_name = doc.at("comparator").get<std::string>();
        result.mode = parse_mode(doc.at("mode").get<std::string>());
        result.sampling_ratio = doc.at("sampling_ratio").get<double>();
        result.seed = doc.at("seed").get<std::uint64_t>();
        result.coalition_count = doc.at("coalition_count").get<std::size_t>();
        for (const auto& jf : doc.at("features")) {
            Feature f;
            f.index = jf.at("index").get<std::size_t>();
            f.text = jf.at("text").get<std::string>();
            f.byte_start = jf.at("byte_start").get<std::size_t>();
            f.byte_end = jf.at("byte_end").get<std::size_t>();
            result.partition.features.push_back(std::move(f));
            result.raw.push_back(jf.at("raw").get<double>());
            result.display.push_back(jf.at("display").get<double>());
        }
        result.output_text = doc.at("output_text").get<std::string>();
        return result;
    } catch (const std::exception& e) {
        throw ReportError(origin + ": " + e.what());
    }
}

AttributionResult load_attribution_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ReportError("cannot open report: " + path);
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_attribution_json(text, path);
}

// ---------------------------------------------------------------------------
// HTML
// ---------------------------------------------------------------------------

namespace {

std::string escape_html(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fixed(double x, int digits) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

}  // namespace

std::string attribution_html(const AttributionResult& result, const std::string& model_output) {
    const std::vector<double> intensities = render_intensities(result.display);

    std::string html;
    html += "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Attribution ";
    html += escape_html(result.partition.source_id);
    html += "</title>\n<style>\n";
    html += "body { font-family: sans-serif; margin: 2em; }\n";
    html += ".panes { display: flex; gap: 2em; align-items: flex-start; }\n";
    html += ".pane { flex: 1; border: 1px solid #ccc; padding: 1em; }\n";
    html += ".features { white-space: pre-wrap; font-family: monospace; }\n";
    html += ".feat { border-radius: 2px; }\n";
    html += ".pct { font-size: 0.7em; color: #333; background: #eee; border-radius: 2px; "
            "padding: 0 2px; margin-left: 2px; user-select: none; }\n";
    html += "pre { white-space: pre-wrap; font-family: monospace; margin: 0; }\n";
    html += "table { border-collapse: collapse; margin-top: 1em; }\n";
    html += "td, th { border: 1px solid #ccc; padding: 2px 8px; font-size: 0.85em; }\n";
    html += "</style>\n</head>\n<body>\n";

    html += "<h2>Feature attribution: " + escape_html(result.partition.source_id) + "</h2>\n";
    html += "<p>model " + escape_html(result.model_id) + " · splitter " +
            escape_html(result.partition.splitter_name) + " · comparator " +
            escape_html(result.comparator_name) + " · mode " + mode_name(result.mode) +
            " · coalitions " + std::to_string(result.coalition_count) + "</p>\n";

    html += "<div class=\"panes\">\n<div class=\"pane\">\n<h3>Input features</h3>\n";
    html += "<div class=\"features\">";
    for (std::size_t i = 0; i < result.partition.features.size(); ++i) {
        html += "<span class=\"feat\" style=\"background-color: rgba(46,160,67,";
        html += fixed(intensities[i], 4);
        html += ")\">";
        html += escape_html(result.partition.features[i].text);
        html += "<span class=\"pct\">";
        html += fixed(result.display[i] * 100.0, 1);
        html += "%</span></span>";
    }
    html += "</div>\n</div>\n<div class=\"pane\">\n<h3>Model output</h3>\n<pre>";
    html += escape_html(model_output);
    html += "</pre>\n</div>\n</div>\n";

    html += "<table>\n<tr><th>#</th><th>display</th><th>raw</th></tr>\n";
    for (std::size_t i = 0; i < result.display.size(); ++i) {
        html += "<tr><td>" + std::to_string(i) + "</td><td>" +
                fixed(result.display[i] * 100.0, 1) + "%</td><td>" +
                fixed(result.raw[i], 6) + "</td></tr>\n";
    }
    html += "</table>\n</body>\n</html>\n";
    return html;
}

void emit_html(const AttributionResult& result, const std::string& model_output,
               const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ReportError("cannot write report: " + path);
    }
    out << attribution_html(result, model_output);
    if (!out) {
        throw ReportError("write failed: " + path);
    }
}

}  // namespace fshap

#include "fshap/dataset.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fshap {

using nlohmann::json;

std::vector<InputDocument> read_dataset(std::istream& in, const std::string& origin) {
    std::vector<InputDocument> docs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ReportError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j.contains("task") || !j.contains("text"))
            throw ReportError(origin + ":" + std::to_string(lineno) +
                              ": expected object with id, task, text");
        try {
            InputDocument d;
            d.id = j.at("id").get<std::string>();
            d.task = parse_task(j.at("task").get<std::string>());
            d.text = j.at("text").get<std::string>();
            if (j.contains("language_hint") && !j.at("language_hint").is_null())
                d.language_hint = j.at("language_hint").get<std::string>();
            docs.push_back(std::move(d));
        } catch (const json::exception& e) {
            throw ReportError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const ContractViolation& e) {
            throw ReportError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return docs;
}

std::vector<InputDocument> load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ReportError("cannot open dataset: " + path);
    return read_dataset(in, path);
}

void write_dataset(const std::string& path, const std::vector<InputDocument>& docs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ReportError("cannot write dataset: " + path);
    for (const auto& d : docs) {
        json j{{"id", d.id}, {"task", task_name(d.task)}, {"text", d.text}};
        if (d.language_hint) j["language_hint"] = *d.language_hint;
        out << j.dump() << "\n";
    }
}

}  // namespace fshap

#ifndef FSHAP_DATASET_HPP
#define FSHAP_DATASET_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "fshap/core.hpp"

namespace fshap {

/// Reads one InputDocument per line: {"id","task","text"} plus optional
/// "language_hint". Blank lines are skipped; malformed lines raise ReportError
/// with the 1-based line number.
std::vector<InputDocument> load_dataset(const std::string& path);
std::vector<InputDocument> read_dataset(std::istream& in, const std::string& origin);

void write_dataset(const std::string& path, const std::vector<InputDocument>& docs);

}  // namespace fshap

#endif  // FSHAP_DATASET_HPP

#ifndef FSHAP_TOKENIZE_HPP
#define FSHAP_TOKENIZE_HPP

#include <string>
#include <vector>

namespace fshap {

/// Splits on runs of ASCII whitespace; no empty tokens.
std::vector<std::string> whitespace_tokens(const std::string& text);

/// Maximal runs of [A-Za-z0-9_]; everything else is a separator.
/// Case-sensitive.
std::vector<std::string> word_tokens(const std::string& text);

}  // namespace fshap

#endif  // FSHAP_TOKENIZE_HPP

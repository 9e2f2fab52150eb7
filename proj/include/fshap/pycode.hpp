#ifndef FSHAP_PYCODE_HPP
#define FSHAP_PYCODE_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fshap/core.hpp"

// Python source analysis used by the code splitter and the code-similarity
// comparator: a lexer, a top-level-statement scanner, and a lightweight
// syntax tree with def-use extraction. Hand-built; covers the statement and
// expression grammar that model-generated Python actually exercises.

namespace fshap::py {

class ParseFailure : public Error {
public:
    using Error::Error;
};

enum class TokKind { Identifier, Keyword, Number, String, Operator, Comment, Newline };

struct Token {
    TokKind kind;
    std::string text;
    std::size_t begin = 0;  // byte offset
    std::size_t end = 0;
};

bool is_keyword(const std::string& word);

/// Tokenizes Python source. Strict mode raises ParseFailure on unterminated
/// strings, stray characters, or unbalanced brackets; lenient mode recovers
/// and always returns a best-effort stream (used when scoring generated code).
std::vector<Token> lex(const std::string& src, bool strict);

/// Token texts for n-gram scoring: lenient lex with comments and newlines
/// dropped.
std::vector<std::string> bleu_tokens(const std::string& src);

/// Byte offsets where the top-level body statements of the first function
/// definition start. A leading docstring is folded into the declaration and
/// contributes no offset. Returns nullopt when no function definition is
/// found; raises ParseFailure only for input the strict lexer rejects.
std::optional<std::vector<std::size_t>> function_statement_starts(const std::string& src);

// --- syntax tree & dataflow -------------------------------------------------

/// Internal nodes carry a label; leaves carry normalized text (identifiers,
/// numbers and strings are collapsed to placeholders so structure, not
/// spelling, is compared).
struct SynNode {
    std::string label;
    std::string leaf;
    std::vector<SynNode> children;

    bool is_leaf() const { return label.empty(); }
};

/// One def-use link: a variable read at `use_site` reached by the textually
/// latest write at `def_site`. Sites are token ordinals; variable names are
/// replaced by first-appearance indices so consistent renames compare equal.
struct DataflowTriple {
    std::string var;
    std::size_t def_site = 0;
    std::size_t use_site = 0;

    bool operator==(const DataflowTriple&) const = default;
};

struct Analysis {
    SynNode root;
    std::vector<DataflowTriple> triples;
};

/// Parses the source into a syntax tree and def-use triples. Returns nullopt
/// on any lex or parse failure (callers treat that as an unparseable
/// candidate or an undefined reference component).
std::optional<Analysis> analyze(const std::string& src);

/// Serialized signatures of every internal node's subtree, for clipped
/// multiset matching.
std::vector<std::string> subtree_signatures(const SynNode& root);

}  // namespace fshap::py

#endif  // FSHAP_PYCODE_HPP

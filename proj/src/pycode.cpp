#include "fshap/pycode.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <unordered_map>
#include <unordered_set>

namespace fshap::py {

namespace {

const std::unordered_set<std::string>& keyword_set() {
    static const std::unordered_set<std::string> kw = {
        "False", "None",   "True",  "and",      "as",       "assert", "async",
        "await", "break",  "class", "continue", "def",      "del",    "elif",
        "else",  "except", "finally", "for",    "from",     "global", "if",
        "import", "in",    "is",    "lambda",   "nonlocal", "not",    "or",
        "pass",  "raise",  "return", "try",     "while",    "with",   "yield"};
    return kw;
}

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_cont(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool string_prefix(const std::string& word) {
    if (word.empty() || word.size() > 2) return false;
    for (char c : word) {
        char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (l != 'r' && l != 'b' && l != 'u' && l != 'f') return false;
    }
    return true;
}

// Multi-character operators, longest first so greedy matching works.
const std::array<const char*, 24> kMultiOps = {
    "**=", "//=", ">>=", "<<=", "...", "!=", ">=", "<=", "==", "->", ":=", "+=",
    "-=",  "*=",  "/=",  "%=",  "@=",  "&=", "|=", "^=", "<<", ">>", "**", "//"};

const char* kSingleOps = "+-*/%@<>=&|^~:;,.()[]{}";

}  // namespace

bool is_keyword(const std::string& word) { return keyword_set().count(word) > 0; }

std::vector<Token> lex(const std::string& src, bool strict) {
    std::vector<Token> out;
    std::vector<char> brackets;
    const std::size_t n = src.size();
    std::size_t i = 0;

    auto fail = [&](const std::string& msg, std::size_t at) {
        throw ParseFailure(msg + " at byte " + std::to_string(at));
    };

    auto lex_string_body = [&](std::size_t start) {
        // i sits on the opening quote; consumes through the closing quote.
        char q = src[i];
        bool triple = (i + 2 < n && src[i + 1] == q && src[i + 2] == q);
        i += triple ? 3 : 1;
        while (i < n) {
            if (src[i] == '\\') {
                i += 2;
                continue;
            }
            if (triple) {
                if (i + 3 <= n && src[i] == q && src[i + 1] == q && src[i + 2] == q) {
                    i += 3;
                    return;
                }
                ++i;
            } else {
                if (src[i] == q) {
                    ++i;
                    return;
                }
                if (src[i] == '\n') {
                    if (strict) fail("unterminated string", start);
                    return;  // lenient: close at newline
                }
                ++i;
            }
        }
        if (strict) fail("unterminated string", start);
    };

    while (i < n) {
        char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
            ++i;
            continue;
        }
        if (c == '\\' && i + 1 < n &&
            (src[i + 1] == '\n' || (src[i + 1] == '\r' && i + 2 < n && src[i + 2] == '\n'))) {
            i += src[i + 1] == '\r' ? 3 : 2;  // explicit line join
            continue;
        }
        if (c == '\n') {
            if (brackets.empty()) out.push_back({TokKind::Newline, "\n", i, i + 1});
            ++i;
            continue;
        }
        if (c == '#') {
            std::size_t start = i;
            while (i < n && src[i] != '\n') ++i;
            out.push_back({TokKind::Comment, src.substr(start, i - start), start, i});
            continue;
        }
        if (c == '\'' || c == '"') {
            std::size_t start = i;
            lex_string_body(start);
            out.push_back({TokKind::String, src.substr(start, i - start), start, i});
            continue;
        }
        if (ident_start(static_cast<unsigned char>(c))) {
            std::size_t start = i;
            while (i < n && ident_cont(static_cast<unsigned char>(src[i]))) ++i;
            std::string word = src.substr(start, i - start);
            if (string_prefix(word) && i < n && (src[i] == '\'' || src[i] == '"')) {
                lex_string_body(start);
                out.push_back({TokKind::String, src.substr(start, i - start), start, i});
            } else {
                out.push_back({is_keyword(word) ? TokKind::Keyword : TokKind::Identifier,
                               std::move(word), start, i});
            }
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            std::size_t start = i;
            if (c == '0' && i + 1 < n &&
                (std::tolower(static_cast<unsigned char>(src[i + 1])) == 'x' ||
                 std::tolower(static_cast<unsigned char>(src[i + 1])) == 'o' ||
                 std::tolower(static_cast<unsigned char>(src[i + 1])) == 'b')) {
                i += 2;
                while (i < n && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
            } else {
                while (i < n && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
                if (i < n && src[i] == '.') {
                    ++i;
                    while (i < n && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
                }
                if (i < n && (src[i] == 'e' || src[i] == 'E')) {
                    std::size_t save = i;
                    ++i;
                    if (i < n && (src[i] == '+' || src[i] == '-')) ++i;
                    if (i < n && std::isdigit(static_cast<unsigned char>(src[i]))) {
                        while (i < n && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
                    } else {
                        i = save;  // not an exponent: the 'e' starts the next token
                    }
                }
                if (i < n && (src[i] == 'j' || src[i] == 'J')) ++i;
            }
            out.push_back({TokKind::Number, src.substr(start, i - start), start, i});
            continue;
        }
        {
            bool matched = false;
            for (const char* op : kMultiOps) {
                std::size_t len = std::char_traits<char>::length(op);
                if (src.compare(i, len, op) == 0) {
                    out.push_back({TokKind::Operator, op, i, i + len});
                    i += len;
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
        }
        if (std::strchr(kSingleOps, c)) {
            if (c == '(' || c == '[' || c == '{') brackets.push_back(c);
            if (c == ')' || c == ']' || c == '}') {
                char open = c == ')' ? '(' : c == ']' ? '[' : '{';
                if (brackets.empty() || brackets.back() != open) {
                    if (strict) fail("unbalanced bracket", i);
                    if (!brackets.empty()) brackets.pop_back();
                } else {
                    brackets.pop_back();
                }
            }
            out.push_back({TokKind::Operator, std::string(1, c), i, i + 1});
            ++i;
            continue;
        }
        if (strict) fail("unexpected character", i);
        out.push_back({TokKind::Operator, std::string(1, c), i, i + 1});
        ++i;
    }
    if (strict && !brackets.empty()) fail("unclosed bracket", n);
    return out;
}

std::vector<std::string> bleu_tokens(const std::string& src) {
    std::vector<std::string> out;
    for (const Token& t : lex(src, /*strict=*/false))
        if (t.kind != TokKind::Comment && t.kind != TokKind::Newline) out.push_back(t.text);
    return out;
}

// ---------------------------------------------------------------------------
// Logical lines
// ---------------------------------------------------------------------------

namespace {

struct Line {
    std::string indent;       // exact leading whitespace of the first physical line
    std::vector<Token> toks;  // comments dropped
    bool comment_only = false;
};

std::vector<Line> logical_lines(const std::string& src, const std::vector<Token>& toks) {
    std::vector<Line> lines;
    std::size_t i = 0;
    while (i < toks.size()) {
        if (toks[i].kind == TokKind::Newline) {
            ++i;
            continue;
        }
        Line line;
        std::size_t first = toks[i].begin;
        std::size_t bol = first == 0 ? std::string::npos : src.rfind('\n', first - 1);
        bol = (bol == std::string::npos) ? 0 : bol + 1;
        line.indent = src.substr(bol, first - bol);
        bool any_code = false;
        while (i < toks.size() && toks[i].kind != TokKind::Newline) {
            if (toks[i].kind != TokKind::Comment) {
                line.toks.push_back(toks[i]);
                any_code = true;
            }
            ++i;
        }
        line.comment_only = !any_code;
        lines.push_back(std::move(line));
    }
    return lines;
}

bool indent_deeper(const std::string& outer, const std::string& inner) {
    return inner.size() > outer.size() && inner.compare(0, outer.size(), outer) == 0;
}

bool tok_is(const Token& t, TokKind k, const char* text) {
    return t.kind == k && t.text == text;
}

}  // namespace

// ---------------------------------------------------------------------------
// Top-level statement scanning for the code splitter
// ---------------------------------------------------------------------------

std::optional<std::vector<std::size_t>> function_statement_starts(const std::string& src) {
    std::vector<Token> toks = lex(src, /*strict=*/true);
    std::vector<Line> lines = logical_lines(src, toks);

    // Locate the first `def` / `async def`; decorators and comments above it
    // are prefix bytes the caller folds into the first feature.
    std::size_t def_line = lines.size();
    for (std::size_t li = 0; li < lines.size(); ++li) {
        if (lines[li].comment_only || lines[li].toks.empty()) continue;
        const Token& t0 = lines[li].toks.front();
        if (tok_is(t0, TokKind::Keyword, "def") ||
            (tok_is(t0, TokKind::Keyword, "async") && lines[li].toks.size() > 1 &&
             tok_is(lines[li].toks[1], TokKind::Keyword, "def"))) {
            def_line = li;
            break;
        }
    }
    if (def_line == lines.size()) return std::nullopt;

    const Line& header = lines[def_line];
    // First `:` at bracket depth 0 closes the signature (annotations and
    // lambda defaults live inside brackets).
    int depth = 0;
    std::size_t colon = header.toks.size();
    for (std::size_t ti = 0; ti < header.toks.size(); ++ti) {
        if (header.toks[ti].kind != TokKind::Operator) continue;
        const std::string& tx = header.toks[ti].text;
        if (tx == "(" || tx == "[" || tx == "{") ++depth;
        else if (tx == ")" || tx == "]" || tx == "}") --depth;
        else if (tx == ":" && depth == 0) {
            colon = ti;
            break;
        }
    }
    if (colon == header.toks.size()) return std::nullopt;

    std::vector<std::size_t> starts;
    auto add_line_statements = [&](const Line& line, std::size_t from_ti) {
        // Statements inside one logical line are separated by top-level `;`.
        bool expect_start = true;
        int d = 0;
        for (std::size_t ti = from_ti; ti < line.toks.size(); ++ti) {
            const Token& t = line.toks[ti];
            if (expect_start) {
                starts.push_back(t.begin);
                expect_start = false;
            }
            if (t.kind != TokKind::Operator) continue;
            if (t.text == "(" || t.text == "[" || t.text == "{") ++d;
            else if (t.text == ")" || t.text == "]" || t.text == "}") --d;
            else if (t.text == ";" && d == 0) expect_start = true;
        }
    };

    auto lone_string_statement = [&](const Line& line, std::size_t from_ti) {
        if (from_ti >= line.toks.size()) return false;
        if (line.toks[from_ti].kind != TokKind::String) return false;
        return from_ti + 1 >= line.toks.size() ||
               tok_is(line.toks[from_ti + 1], TokKind::Operator, ";");
    };

    bool docstring_first = false;
    if (colon + 1 < header.toks.size()) {
        // One-liner body: `def f(): stmt[; stmt]`.
        docstring_first = lone_string_statement(header, colon + 1);
        add_line_statements(header, colon + 1);
    } else {
        std::string body_indent;
        bool body_seen = false;
        for (std::size_t li = def_line + 1; li < lines.size(); ++li) {
            const Line& line = lines[li];
            if (line.comment_only || line.toks.empty()) continue;
            if (!body_seen) {
                if (!indent_deeper(header.indent, line.indent)) return std::nullopt;
                body_indent = line.indent;
                body_seen = true;
            }
            if (line.indent == body_indent) {
                const Token& t0 = line.toks.front();
                if (t0.kind == TokKind::Keyword &&
                    (t0.text == "elif" || t0.text == "else" || t0.text == "except" ||
                     t0.text == "finally"))
                    continue;  // clause of the preceding compound statement
                if (starts.empty()) docstring_first = lone_string_statement(line, 0);
                add_line_statements(line, 0);
            } else if (indent_deeper(body_indent, line.indent)) {
                continue;  // nested block of the current statement
            } else {
                break;  // dedent past the body: the function is over
            }
        }
        if (!body_seen) return std::nullopt;
    }

    // A leading lone string literal is the docstring; it belongs to the
    // declaration block and is not a statement of its own.
    if (docstring_first && !starts.empty()) starts.erase(starts.begin());
    return starts;
}

// ---------------------------------------------------------------------------
// Syntax tree + dataflow
// ---------------------------------------------------------------------------

namespace {

struct Event {
    std::string name;
    bool is_def;
    std::size_t ordinal;
};

SynNode leaf_node(std::string text) {
    SynNode n;
    n.leaf = std::move(text);
    return n;
}

SynNode inner(std::string label) {
    SynNode n;
    n.label = std::move(label);
    return n;
}

// Recursive-descent parser over logical lines. Covers the statement forms and
// operator grammar that generated Python exercises; anything outside that
// raises ParseFailure, which analyze() converts to "no analysis".
class Parser {
public:
    Parser(const std::string& src, std::vector<Token> toks)
        : toks_(std::move(toks)), lines_(logical_lines(src, toks_)) {
        // Ordinals index the comment-free token stream, so a consistent
        // rename leaves every site number unchanged.
        std::size_t ord = 0;
        for (const Line& line : lines_)
            for (const Token& t : line.toks) ordinals_[t.begin] = ord++;
    }

    SynNode parse_module() {
        SynNode mod = inner("module");
        std::string base_indent;
        bool have_base = false;
        while (li_ < lines_.size()) {
            if (skip_blank()) continue;
            if (!have_base) {
                base_indent = line().indent;
                have_base = true;
            }
            if (line().indent != base_indent) fail("inconsistent top-level indentation");
            parse_logical_line(mod.children, base_indent);
        }
        return mod;
    }

    std::vector<Event> take_events() { return std::move(events_); }

private:
    std::vector<Token> toks_;
    std::vector<Line> lines_;
    std::size_t li_ = 0;
    std::size_t ti_ = 0;
    std::unordered_map<std::size_t, std::size_t> ordinals_;
    std::vector<Event> events_;
    // Indices into events_ of bare-name atoms in the expression currently
    // being parsed; assignment handling flips them into defs.
    std::vector<std::size_t> bare_names_;
    bool target_ok_ = false;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseFailure("syntax: " + msg);
    }

    bool skip_blank() {
        if (li_ < lines_.size() && (lines_[li_].comment_only || lines_[li_].toks.empty())) {
            ++li_;
            return true;
        }
        return false;
    }

    const Line& line() const { return lines_[li_]; }
    bool at_line_end() const { return li_ >= lines_.size() || ti_ >= line().toks.size(); }
    const Token& peek() const {
        if (at_line_end()) fail("unexpected end of line");
        return line().toks[ti_];
    }
    const Token& peek2() const {
        if (li_ >= lines_.size() || ti_ + 1 >= line().toks.size()) fail("unexpected end of line");
        return line().toks[ti_ + 1];
    }
    bool have2() const { return li_ < lines_.size() && ti_ + 1 < line().toks.size(); }
    const Token& next() {
        const Token& t = peek();
        ++ti_;
        return t;
    }
    bool peek_is(TokKind k, const char* text) const {
        return !at_line_end() && tok_is(peek(), k, text);
    }
    bool accept(TokKind k, const char* text) {
        if (peek_is(k, text)) {
            ++ti_;
            return true;
        }
        return false;
    }
    void expect(TokKind k, const char* text) {
        if (!accept(k, text)) fail(std::string("expected '") + text + "'");
    }
    std::size_t ordinal(const Token& t) const { return ordinals_.at(t.begin); }

    void emit_use(const std::string& name, std::size_t ord) {
        if (target_ok_) bare_names_.push_back(events_.size());
        events_.push_back({name, false, ord});
    }
    void emit_def(const std::string& name, std::size_t ord) {
        events_.push_back({name, true, ord});
    }

    // Flip the bare-name events recorded since `mark` into defs. keep_use
    // leaves the read in place and appends a write (augmented assignment).
    void promote_targets(std::size_t mark, bool keep_use) {
        for (std::size_t bi = mark; bi < bare_names_.size(); ++bi) {
            Event& e = events_[bare_names_[bi]];
            if (keep_use)
                events_.push_back({e.name, true, e.ordinal});
            else
                e.is_def = true;
        }
        bare_names_.resize(mark);
    }

    // ---- statement layer ----

    bool compound_at_cursor() const {
        if (at_line_end()) return false;
        const Token& t = peek();
        if (t.kind == TokKind::Keyword) {
            static const std::unordered_set<std::string> kComp = {
                "if", "while", "for", "try", "with", "def", "class", "async"};
            return kComp.count(t.text) > 0;
        }
        return t.kind == TokKind::Identifier && t.text == "match" && line_has_trailing_colon();
    }

    bool line_has_trailing_colon() const {
        int depth = 0;
        for (std::size_t ti = ti_; ti < line().toks.size(); ++ti) {
            const Token& t = line().toks[ti];
            if (t.kind != TokKind::Operator) continue;
            if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
            else if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
            else if (t.text == ":" && depth == 0) return ti + 1 == line().toks.size();
        }
        return false;
    }

    // Parses one logical line at `indent`, consuming any indented blocks it
    // owns. Always leaves li_ at the next unparsed line.
    void parse_logical_line(std::vector<SynNode>& out, const std::string& indent) {
        ti_ = 0;
        while (true) {
            if (compound_at_cursor()) {
                out.push_back(parse_compound(indent));
                return;  // a compound statement closes its logical line
            }
            out.push_back(parse_simple());
            if (at_line_end()) break;
            expect(TokKind::Operator, ";");
            if (at_line_end()) break;
        }
        ++li_;
    }

    // Suite after a header's `:`: inline simple statements, or an indented
    // block on the following lines. Advances li_ past everything consumed.
    SynNode parse_suite(const std::string& header_indent) {
        SynNode block = inner("block");
        if (!at_line_end()) {
            while (true) {
                block.children.push_back(parse_simple());
                if (at_line_end()) break;
                expect(TokKind::Operator, ";");
                if (at_line_end()) break;
            }
            ++li_;
            return block;
        }
        ++li_;
        std::string child;
        bool have_child = false;
        while (li_ < lines_.size()) {
            if (skip_blank()) continue;
            if (!have_child) {
                if (!indent_deeper(header_indent, line().indent)) fail("expected indented block");
                child = line().indent;
                have_child = true;
            }
            if (line().indent == child) {
                parse_logical_line(block.children, child);
                continue;
            }
            if (indent_deeper(child, line().indent)) fail("unexpected indent");
            break;
        }
        if (!have_child) fail("expected indented block");
        return block;
    }

    bool clause_follows(const std::string& indent, const char* kw) const {
        std::size_t li = li_;
        while (li < lines_.size() && (lines_[li].comment_only || lines_[li].toks.empty())) ++li;
        if (li >= lines_.size()) return false;
        if (lines_[li].indent != indent) return false;
        return tok_is(lines_[li].toks.front(), TokKind::Keyword, kw);
    }

    void enter_clause() {
        while (skip_blank()) {
        }
        ti_ = 0;
    }

    SynNode parse_compound(const std::string& indent) {
        const std::string& kw = peek().text;
        if (kw == "if") return parse_if(indent);
        if (kw == "while") return parse_while(indent);
        if (kw == "for") return parse_for(indent);
        if (kw == "try") return parse_try(indent);
        if (kw == "with") return parse_with(indent);
        if (kw == "def") return parse_def(indent);
        if (kw == "class") return parse_class(indent);
        if (kw == "async") return parse_async(indent);
        return parse_match(indent);
    }

    SynNode parse_simple() {
        const Token& t0 = peek();
        if (t0.kind == TokKind::Keyword) {
            const std::string& kw = t0.text;
            if (kw == "return") return parse_return();
            if (kw == "pass") { next(); return inner("pass_stmt"); }
            if (kw == "break") { next(); return inner("break_stmt"); }
            if (kw == "continue") { next(); return inner("continue_stmt"); }
            if (kw == "raise") return parse_raise();
            if (kw == "assert") return parse_assert();
            if (kw == "del") return parse_del();
            if (kw == "global" || kw == "nonlocal") return parse_scope_decl();
            if (kw == "import" || kw == "from") return parse_import();
            if (kw != "lambda" && kw != "not" && kw != "await" && kw != "yield" &&
                kw != "True" && kw != "False" && kw != "None")
                fail("keyword '" + kw + "' cannot start a statement here");
        }
        if (t0.kind == TokKind::Operator && t0.text == "@") {
            next();
            SynNode d = inner("decorator");
            d.children.push_back(parse_namedexpr());
            return d;
        }
        return parse_expr_stmt();
    }

    SynNode parse_if(const std::string& indent) {
        next();
        SynNode node = inner("if_stmt");
        node.children.push_back(parse_namedexpr());
        expect(TokKind::Operator, ":");
        node.children.push_back(parse_suite(indent));
        while (clause_follows(indent, "elif")) {
            enter_clause();
            next();
            SynNode clause = inner("elif");
            clause.children.push_back(parse_namedexpr());
            expect(TokKind::Operator, ":");
            clause.children.push_back(parse_suite(indent));
            node.children.push_back(std::move(clause));
        }
        if (clause_follows(indent, "else")) {
            enter_clause();
            next();
            SynNode clause = inner("else");
            expect(TokKind::Operator, ":");
            clause.children.push_back(parse_suite(indent));
            node.children.push_back(std::move(clause));
        }
        return node;
    }

    SynNode parse_while(const std::string& indent) {
        next();
        SynNode node = inner("while_stmt");
        node.children.push_back(parse_namedexpr());
        expect(TokKind::Operator, ":");
        node.children.push_back(parse_suite(indent));
        if (clause_follows(indent, "else")) {
            enter_clause();
            next();
            SynNode clause = inner("else");
            expect(TokKind::Operator, ":");
            clause.children.push_back(parse_suite(indent));
            node.children.push_back(std::move(clause));
        }
        return node;
    }

    SynNode parse_for(const std::string& indent) {
        next();
        SynNode node = inner("for_stmt");
        node.children.push_back(parse_target_list());
        expect(TokKind::Keyword, "in");
        node.children.push_back(parse_testlist());
        expect(TokKind::Operator, ":");
        node.children.push_back(parse_suite(indent));
        if (clause_follows(indent, "else")) {
            enter_clause();
            next();
            SynNode clause = inner("else");
            expect(TokKind::Operator, ":");
            clause.children.push_back(parse_suite(indent));
            node.children.push_back(std::move(clause));
        }
        return node;
    }

    SynNode parse_try(const std::string& indent) {
        next();
        SynNode node = inner("try_stmt");
        expect(TokKind::Operator, ":");
        node.children.push_back(parse_suite(indent));
        while (clause_follows(indent, "except")) {
            enter_clause();
            next();
            SynNode clause = inner("except");
            if (!peek_is(TokKind::Operator, ":")) {
                accept(TokKind::Operator, "*");  // except* groups
                clause.children.push_back(parse_expr());
                if (accept(TokKind::Keyword, "as")) {
                    const Token& name = next();
                    if (name.kind != TokKind::Identifier) fail("expected name after 'as'");
                    emit_def(name.text, ordinal(name));
                    clause.children.push_back(leaf_node("id"));
                }
            }
            expect(TokKind::Operator, ":");
            clause.children.push_back(parse_suite(indent));
            node.children.push_back(std::move(clause));
        }
        if (clause_follows(indent, "else")) {
            enter_clause();
            next();
            SynNode clause = inner("else");
            expect(TokKind::Operator, ":");
            clause.children.push_back(parse_suite(indent));
            node.children.push_back(std::move(clause));
        }
        if (clause_follows(indent, "finally")) {
            enter_clause();
            next();
            SynNode clause = inner("finally");
            expect(TokKind::Operator, ":");
            clause.children.push_back(parse_suite(indent));
            node.children.push_back(std::move(clause));
        }
        return node;
    }

    SynNode parse_with(const std::string& indent) {
        next();
        SynNode node = inner("with_stmt");
        bool paren = accept(TokKind::Operator, "(");
        do {
            SynNode item = inner("withitem");
            item.children.push_back(parse_expr());
            if (accept(TokKind::Keyword, "as")) item.children.push_back(parse_target_list());
            node.children.push_back(std::move(item));
        } while (accept(TokKind::Operator, ","));
        if (paren) expect(TokKind::Operator, ")");
        expect(TokKind::Operator, ":");
        node.children.push_back(parse_suite(indent));
        return node;
    }

    SynNode parse_def(const std::string& indent) {
        next();
        SynNode node = inner("def_stmt");
        const Token& name = next();
        if (name.kind != TokKind::Identifier) fail("expected function name");
        emit_def(name.text, ordinal(name));
        node.children.push_back(leaf_node("id"));
        expect(TokKind::Operator, "(");
        node.children.push_back(parse_params());
        if (accept(TokKind::Operator, "->")) node.children.push_back(parse_expr());
        expect(TokKind::Operator, ":");
        node.children.push_back(parse_suite(indent));
        return node;
    }

    SynNode parse_async(const std::string& indent) {
        next();
        if (peek_is(TokKind::Keyword, "def")) return parse_def(indent);
        if (peek_is(TokKind::Keyword, "for")) return parse_for(indent);
        if (peek_is(TokKind::Keyword, "with")) return parse_with(indent);
        fail("expected def/for/with after async");
    }

    SynNode parse_params() {
        SynNode params = inner("params");
        while (!peek_is(TokKind::Operator, ")")) {
            SynNode p = inner("param");
            if (accept(TokKind::Operator, "**")) p.label = "param:kwargs";
            else if (accept(TokKind::Operator, "*")) p.label = "param:star";
            else if (accept(TokKind::Operator, "/")) p.label = "param:posonly";
            if (!at_line_end() && peek().kind == TokKind::Identifier) {
                const Token& name = next();
                emit_def(name.text, ordinal(name));
                p.children.push_back(leaf_node("id"));
                if (accept(TokKind::Operator, ":")) p.children.push_back(parse_expr());
                if (accept(TokKind::Operator, "=")) p.children.push_back(parse_expr());
            }
            params.children.push_back(std::move(p));
            if (!accept(TokKind::Operator, ",")) break;
        }
        expect(TokKind::Operator, ")");
        return params;
    }

    SynNode parse_class(const std::string& indent) {
        next();
        SynNode node = inner("class_stmt");
        const Token& name = next();
        if (name.kind != TokKind::Identifier) fail("expected class name");
        emit_def(name.text, ordinal(name));
        node.children.push_back(leaf_node("id"));
        if (accept(TokKind::Operator, "(")) {
            if (!peek_is(TokKind::Operator, ")")) node.children.push_back(parse_call_args());
            expect(TokKind::Operator, ")");
        }
        expect(TokKind::Operator, ":");
        node.children.push_back(parse_suite(indent));
        return node;
    }

    SynNode parse_match(const std::string& indent) {
        next();  // soft keyword 'match'
        SynNode node = inner("match_stmt");
        node.children.push_back(parse_testlist());
        expect(TokKind::Operator, ":");
        if (!at_line_end()) fail("match body must be an indented block");
        ++li_;
        SynNode block = inner("block");
        std::string child;
        bool have_child = false;
        while (li_ < lines_.size()) {
            if (skip_blank()) continue;
            if (!have_child) {
                if (!indent_deeper(indent, line().indent)) fail("expected case block");
                child = line().indent;
                have_child = true;
            }
            if (line().indent != child) break;
            ti_ = 0;
            const Token& t0 = peek();
            if (!(t0.kind == TokKind::Identifier && t0.text == "case")) fail("expected 'case'");
            next();
            SynNode clause = inner("case");
            clause.children.push_back(parse_testlist());
            if (accept(TokKind::Keyword, "if")) clause.children.push_back(parse_expr());
            expect(TokKind::Operator, ":");
            clause.children.push_back(parse_suite(child));
            block.children.push_back(std::move(clause));
        }
        if (!have_child) fail("expected case block");
        node.children.push_back(std::move(block));
        return node;
    }

    SynNode parse_return() {
        next();
        SynNode node = inner("return_stmt");
        if (!at_line_end() && !peek_is(TokKind::Operator, ";"))
            node.children.push_back(parse_testlist());
        return node;
    }

    SynNode parse_raise() {
        next();
        SynNode node = inner("raise_stmt");
        if (!at_line_end() && !peek_is(TokKind::Operator, ";")) {
            node.children.push_back(parse_expr());
            if (accept(TokKind::Keyword, "from")) node.children.push_back(parse_expr());
        }
        return node;
    }

    SynNode parse_assert() {
        next();
        SynNode node = inner("assert_stmt");
        node.children.push_back(parse_expr());
        if (accept(TokKind::Operator, ",")) node.children.push_back(parse_expr());
        return node;
    }

    SynNode parse_del() {
        next();
        SynNode node = inner("del_stmt");
        node.children.push_back(parse_testlist());
        return node;
    }

    SynNode parse_scope_decl() {
        const Token& kw = next();
        SynNode node = inner(kw.text + "_stmt");
        do {
            const Token& name = next();
            if (name.kind != TokKind::Identifier) fail("expected name");
            node.children.push_back(leaf_node("id"));  // deliberately no events
        } while (accept(TokKind::Operator, ","));
        return node;
    }

    SynNode parse_import() {
        const Token& kw = next();
        SynNode node = inner("import_stmt");
        // Consumes a dotted module path, returning its first component and
        // that component's token (for the binding site of plain `import a.b`).
        auto dotted = [&]() -> const Token* {
            const Token* first = nullptr;
            while (accept(TokKind::Operator, ".")) {
            }
            if (!at_line_end() && peek().kind == TokKind::Identifier) {
                first = &line().toks[ti_];
                next();
                while (peek_is(TokKind::Operator, ".")) {
                    next();
                    if (!at_line_end() && peek().kind == TokKind::Identifier) next();
                    else fail("expected module path component");
                }
            }
            return first;
        };
        if (kw.text == "from") {
            dotted();
            expect(TokKind::Keyword, "import");
            if (accept(TokKind::Operator, "*")) {
                node.children.push_back(leaf_node("*"));
                return node;
            }
            bool paren = accept(TokKind::Operator, "(");
            do {
                if (paren && peek_is(TokKind::Operator, ")")) break;
                const Token& name = next();
                if (name.kind != TokKind::Identifier) fail("expected import name");
                SynNode alias = inner("alias");
                alias.children.push_back(leaf_node("id"));
                const Token* bind = &name;
                if (accept(TokKind::Keyword, "as")) {
                    const Token& asname = next();
                    if (asname.kind != TokKind::Identifier) fail("expected alias name");
                    bind = &asname;
                    alias.children.push_back(leaf_node("id"));
                }
                emit_def(bind->text, ordinal(*bind));
                node.children.push_back(std::move(alias));
            } while (accept(TokKind::Operator, ","));
            if (paren) expect(TokKind::Operator, ")");
        } else {
            do {
                const Token* root = dotted();
                if (root == nullptr) fail("expected module name");
                SynNode alias = inner("alias");
                alias.children.push_back(leaf_node("id"));
                const Token* bind = root;
                if (accept(TokKind::Keyword, "as")) {
                    const Token& asname = next();
                    if (asname.kind != TokKind::Identifier) fail("expected alias name");
                    bind = &asname;
                    alias.children.push_back(leaf_node("id"));
                }
                emit_def(bind->text, ordinal(*bind));
                node.children.push_back(std::move(alias));
            } while (accept(TokKind::Operator, ","));
        }
        return node;
    }

    SynNode parse_expr_stmt() {
        SynNode node = inner("expr_stmt");
        std::size_t mark = bare_names_.size();
        bool outer_target_ok = target_ok_;
        target_ok_ = true;
        SynNode first = parse_testlist();
        if (!at_line_end() && peek().kind == TokKind::Operator) {
            const std::string& op = peek().text;
            if (op == "=") {
                node.label = "assign";
                promote_targets(mark, /*keep_use=*/false);
                node.children.push_back(std::move(first));
                while (accept(TokKind::Operator, "=")) {
                    std::size_t m2 = bare_names_.size();
                    target_ok_ = true;
                    SynNode part = parse_testlist();
                    if (peek_is(TokKind::Operator, "="))
                        promote_targets(m2, /*keep_use=*/false);
                    else
                        bare_names_.resize(m2);  // final segment is the value
                    node.children.push_back(std::move(part));
                }
                target_ok_ = outer_target_ok;
                return node;
            }
            static const std::unordered_set<std::string> kAug = {
                "+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=", "^=", "@="};
            if (kAug.count(op)) {
                node.label = "augassign:" + op;
                promote_targets(mark, /*keep_use=*/true);
                node.children.push_back(std::move(first));
                next();
                target_ok_ = false;
                node.children.push_back(parse_testlist());
                target_ok_ = outer_target_ok;
                return node;
            }
            if (op == ":") {
                // annotated assignment: target ':' annotation ['=' value]
                node.label = "ann_assign";
                next();
                target_ok_ = false;
                SynNode ann = parse_expr();
                if (accept(TokKind::Operator, "=")) {
                    promote_targets(mark, /*keep_use=*/false);
                    node.children.push_back(std::move(first));
                    node.children.push_back(std::move(ann));
                    target_ok_ = true;
                    node.children.push_back(parse_testlist());
                    bare_names_.resize(mark);
                } else {
                    bare_names_.resize(mark);
                    node.children.push_back(std::move(first));
                    node.children.push_back(std::move(ann));
                }
                target_ok_ = outer_target_ok;
                return node;
            }
        }
        bare_names_.resize(mark);
        target_ok_ = outer_target_ok;
        node.children.push_back(std::move(first));
        return node;
    }

    // Assignment target in for/with-as: parsed as an expression, then the
    // bare names flip to defs.
    SynNode parse_target_list() {
        std::size_t mark = bare_names_.size();
        bool outer = target_ok_;
        target_ok_ = true;
        SynNode t = parse_testlist_no_in();
        promote_targets(mark, /*keep_use=*/false);
        target_ok_ = outer;
        return t;
    }

    // ---- expressions ----

    SynNode parse_testlist() {
        std::vector<SynNode> items;
        items.push_back(parse_namedexpr());
        bool tuple = false;
        while (accept(TokKind::Operator, ",")) {
            tuple = true;
            if (at_expr_terminator()) break;
            items.push_back(parse_namedexpr());
        }
        if (!tuple) return std::move(items[0]);
        SynNode n = inner("tuple");
        n.children = std::move(items);
        return n;
    }

    SynNode parse_testlist_no_in() {
        std::vector<SynNode> items;
        items.push_back(parse_or(/*no_in=*/true));
        bool tuple = false;
        while (accept(TokKind::Operator, ",")) {
            tuple = true;
            if (at_expr_terminator() || peek_is(TokKind::Keyword, "in")) break;
            items.push_back(parse_or(true));
        }
        if (!tuple) return std::move(items[0]);
        SynNode n = inner("tuple");
        n.children = std::move(items);
        return n;
    }

    bool at_expr_terminator() const {
        if (at_line_end()) return true;
        const Token& t = peek();
        if (t.kind == TokKind::Operator)
            return t.text == ")" || t.text == "]" || t.text == "}" || t.text == ":" ||
                   t.text == ";" || t.text == "=" || t.text == ",";
        return false;
    }

    SynNode parse_namedexpr() {
        SynNode left = parse_ternary();
        if (peek_is(TokKind::Operator, ":=")) {
            next();
            SynNode n = inner("walrus");
            // := binds its left-hand name; promote the event just recorded
            // for that atom.
            if (!bare_names_.empty() && left.is_leaf() && left.leaf == "id") {
                Event& e = events_[bare_names_.back()];
                if (!e.is_def) {
                    e.is_def = true;
                    bare_names_.pop_back();
                }
            }
            n.children.push_back(std::move(left));
            n.children.push_back(parse_ternary());
            return n;
        }
        return left;
    }

    SynNode parse_expr() { return parse_ternary(); }

    SynNode parse_ternary() {
        if (peek_is(TokKind::Keyword, "lambda")) return parse_lambda();
        SynNode body = parse_or(false);
        if (peek_is(TokKind::Keyword, "if")) {
            next();
            SynNode n = inner("cond");
            SynNode test = parse_or(false);
            expect(TokKind::Keyword, "else");
            SynNode orelse = parse_ternary();
            n.children.push_back(std::move(body));
            n.children.push_back(std::move(test));
            n.children.push_back(std::move(orelse));
            return n;
        }
        return body;
    }

    SynNode parse_lambda() {
        next();
        SynNode n = inner("lambda");
        SynNode params = inner("params");
        while (!peek_is(TokKind::Operator, ":")) {
            SynNode p = inner("param");
            if (accept(TokKind::Operator, "**")) p.label = "param:kwargs";
            else if (accept(TokKind::Operator, "*")) p.label = "param:star";
            if (!at_line_end() && peek().kind == TokKind::Identifier) {
                const Token& name = next();
                emit_def(name.text, ordinal(name));
                p.children.push_back(leaf_node("id"));
                if (accept(TokKind::Operator, "=")) p.children.push_back(parse_expr());
            }
            params.children.push_back(std::move(p));
            if (!accept(TokKind::Operator, ",")) break;
        }
        expect(TokKind::Operator, ":");
        n.children.push_back(std::move(params));
        n.children.push_back(parse_ternary());
        return n;
    }

    SynNode parse_or(bool no_in) {
        SynNode left = parse_and(no_in);
        while (peek_is(TokKind::Keyword, "or")) {
            next();
            SynNode n = inner("boolop:or");
            n.children.push_back(std::move(left));
            n.children.push_back(parse_and(no_in));
            left = std::move(n);
        }
        return left;
    }

    SynNode parse_and(bool no_in) {
        SynNode left = parse_not(no_in);
        while (peek_is(TokKind::Keyword, "and")) {
            next();
            SynNode n = inner("boolop:and");
            n.children.push_back(std::move(left));
            n.children.push_back(parse_not(no_in));
            left = std::move(n);
        }
        return left;
    }

    SynNode parse_not(bool no_in) {
        if (peek_is(TokKind::Keyword, "not")) {
            next();
            SynNode n = inner("unaryop:not");
            n.children.push_back(parse_not(no_in));
            return n;
        }
        return parse_comparison(no_in);
    }

    SynNode parse_comparison(bool no_in) {
        SynNode left = parse_bitor();
        SynNode cmp = inner("cmp");
        bool any = false;
        while (!at_line_end()) {
            std::string op;
            if (peek().kind == TokKind::Operator) {
                const std::string& t = peek().text;
                if (t == "<" || t == ">" || t == "<=" || t == ">=" || t == "==" || t == "!=")
                    op = t;
            } else if (peek().kind == TokKind::Keyword) {
                if (peek().text == "in" && !no_in) op = "in";
                else if (peek().text == "is") op = "is";
                else if (peek().text == "not" && !no_in && have2() &&
                         tok_is(peek2(), TokKind::Keyword, "in"))
                    op = "not in";
            }
            if (op.empty()) break;
            if (op == "not in") {
                next();
                next();
            } else {
                next();
                if (op == "is" && peek_is(TokKind::Keyword, "not")) {
                    next();
                    op = "is not";
                }
            }
            if (!any) {
                cmp.children.push_back(std::move(left));
                any = true;
            }
            cmp.children.push_back(leaf_node(op));
            cmp.children.push_back(parse_bitor());
        }
        if (!any) return left;
        return cmp;
    }

    SynNode parse_binop_level(std::initializer_list<const char*> ops, SynNode (Parser::*sub)()) {
        SynNode left = (this->*sub)();
        while (!at_line_end() && peek().kind == TokKind::Operator) {
            const std::string& t = peek().text;
            bool hit = false;
            for (const char* op : ops)
                if (t == op) hit = true;
            if (!hit) break;
            std::string op = next().text;
            SynNode n = inner("binop:" + op);
            n.children.push_back(std::move(left));
            n.children.push_back((this->*sub)());
            left = std::move(n);
        }
        return left;
    }

    SynNode parse_bitor() { return parse_binop_level({"|"}, &Parser::parse_bitxor); }
    SynNode parse_bitxor() { return parse_binop_level({"^"}, &Parser::parse_bitand); }
    SynNode parse_bitand() { return parse_binop_level({"&"}, &Parser::parse_shift); }
    SynNode parse_shift() { return parse_binop_level({"<<", ">>"}, &Parser::parse_arith); }
    SynNode parse_arith() { return parse_binop_level({"+", "-"}, &Parser::parse_term); }
    SynNode parse_term() {
        return parse_binop_level({"*", "/", "//", "%", "@"}, &Parser::parse_unary);
    }

    SynNode parse_unary() {
        if (!at_line_end() && peek().kind == TokKind::Operator &&
            (peek().text == "+" || peek().text == "-" || peek().text == "~")) {
            std::string op = next().text;
            SynNode n = inner("unaryop:" + op);
            n.children.push_back(parse_unary());
            return n;
        }
        if (peek_is(TokKind::Keyword, "await")) {
            next();
            SynNode n = inner("await");
            n.children.push_back(parse_unary());
            return n;
        }
        return parse_power();
    }

    SynNode parse_power() {
        SynNode base = parse_postfix();
        if (peek_is(TokKind::Operator, "**")) {
            next();
            SynNode n = inner("binop:**");
            n.children.push_back(std::move(base));
            n.children.push_back(parse_unary());
            return n;
        }
        return base;
    }

    SynNode parse_postfix() {
        std::size_t bare_mark = bare_names_.size();
        SynNode node = parse_atom();
        bool applied = false;
        while (!at_line_end() && peek().kind == TokKind::Operator) {
            const std::string& t = peek().text;
            if (t == "(") {
                next();
                bool outer = target_ok_;
                target_ok_ = false;
                SynNode call = inner("call");
                call.children.push_back(std::move(node));
                if (!peek_is(TokKind::Operator, ")")) call.children.push_back(parse_call_args());
                expect(TokKind::Operator, ")");
                target_ok_ = outer;
                node = std::move(call);
                applied = true;
            } else if (t == "[") {
                next();
                bool outer = target_ok_;
                target_ok_ = false;
                SynNode idx = inner("index");
                idx.children.push_back(std::move(node));
                idx.children.push_back(parse_subscript());
                expect(TokKind::Operator, "]");
                target_ok_ = outer;
                node = std::move(idx);
                applied = true;
            } else if (t == ".") {
                next();
                const Token& name = next();
                if (name.kind != TokKind::Identifier && name.kind != TokKind::Keyword)
                    fail("expected attribute name");
                SynNode attr = inner("attr");
                attr.children.push_back(std::move(node));
                attr.children.push_back(leaf_node("id"));
                node = std::move(attr);
                applied = true;
            } else {
                break;
            }
        }
        // The base of a call/index/attribute is a read even in target
        // position (`d[k] = v` does not redefine d).
        if (applied) bare_names_.resize(bare_mark);
        return node;
    }

    SynNode parse_call_args() {
        SynNode args = inner("args");
        bool outer = target_ok_;
        target_ok_ = false;
        do {
            if (peek_is(TokKind::Operator, ")")) break;
            if (accept(TokKind::Operator, "**")) {
                SynNode n = inner("dstar");
                n.children.push_back(parse_expr());
                args.children.push_back(std::move(n));
                continue;
            }
            if (accept(TokKind::Operator, "*")) {
                SynNode n = inner("star");
                n.children.push_back(parse_expr());
                args.children.push_back(std::move(n));
                continue;
            }
            // keyword argument: NAME '=' value (the name is neither def nor use)
            if (!at_line_end() && peek().kind == TokKind::Identifier && have2() &&
                tok_is(peek2(), TokKind::Operator, "=")) {
                next();
                next();
                SynNode n = inner("kwarg");
                n.children.push_back(leaf_node("id"));
                n.children.push_back(parse_expr());
                args.children.push_back(std::move(n));
                continue;
            }
            SynNode val = parse_namedexpr();
            if (peek_comprehension())
                args.children.push_back(parse_comprehension(std::move(val), "genexp"));
            else
                args.children.push_back(std::move(val));
        } while (accept(TokKind::Operator, ","));
        target_ok_ = outer;
        return args;
    }

    SynNode parse_subscript() {
        SynNode sub = inner("subscript");
        do {
            SynNode item = inner("slice");
            bool sliced = false;
            if (!peek_is(TokKind::Operator, ":")) item.children.push_back(parse_expr());
            if (accept(TokKind::Operator, ":")) {
                sliced = true;
                if (!at_line_end() && !peek_is(TokKind::Operator, ":") &&
                    !peek_is(TokKind::Operator, "]") && !peek_is(TokKind::Operator, ","))
                    item.children.push_back(parse_expr());
                if (accept(TokKind::Operator, ":")) {
                    if (!at_line_end() && !peek_is(TokKind::Operator, "]") &&
                        !peek_is(TokKind::Operator, ","))
                        item.children.push_back(parse_expr());
                }
            }
            if (!sliced && item.children.size() == 1)
                sub.children.push_back(std::move(item.children[0]));
            else
                sub.children.push_back(std::move(item));
        } while (accept(TokKind::Operator, ","));
        if (sub.children.size() == 1) return std::move(sub.children[0]);
        return sub;
    }

    bool peek_comprehension() const {
        return peek_is(TokKind::Keyword, "for") ||
               (peek_is(TokKind::Keyword, "async") && have2() &&
                tok_is(peek2(), TokKind::Keyword, "for"));
    }

    SynNode parse_comprehension(SynNode element, const char* label) {
        SynNode comp = inner(label);
        comp.children.push_back(std::move(element));
        while (peek_comprehension()) {
            accept(TokKind::Keyword, "async");
            expect(TokKind::Keyword, "for");
            SynNode clause = inner("comp_for");
            clause.children.push_back(parse_target_list());
            expect(TokKind::Keyword, "in");
            clause.children.push_back(parse_or(false));
            while (peek_is(TokKind::Keyword, "if")) {
                next();
                SynNode cond = inner("comp_if");
                cond.children.push_back(parse_or(false));
                clause.children.push_back(std::move(cond));
            }
            comp.children.push_back(std::move(clause));
        }
        return comp;
    }

    SynNode parse_atom() {
        const Token& t = peek();
        switch (t.kind) {
            case TokKind::Identifier: {
                next();
                emit_use(t.text, ordinal(t));
                return leaf_node("id");
            }
            case TokKind::Number:
                next();
                return leaf_node("num");
            case TokKind::String: {
                next();
                while (!at_line_end() && peek().kind == TokKind::String) next();  // implicit concat
                return leaf_node("str");
            }
            case TokKind::Keyword: {
                if (t.text == "True" || t.text == "False" || t.text == "None") {
                    next();
                    return leaf_node(t.text);
                }
                if (t.text == "lambda") return parse_lambda();
                if (t.text == "await") return parse_unary();
                if (t.text == "yield") {
                    next();
                    SynNode n = inner("yield");
                    if (accept(TokKind::Keyword, "from")) n.label = "yield_from";
                    if (!at_expr_terminator()) n.children.push_back(parse_testlist());
                    return n;
                }
                fail("unexpected keyword '" + t.text + "'");
            }
            case TokKind::Operator: {
                const std::string& op = t.text;
                if (op == "(") {
                    next();
                    bool outer = target_ok_;
                    if (peek_is(TokKind::Operator, ")")) {
                        next();
                        return inner("tuple");
                    }
                    SynNode first = parse_star_or_expr();
                    if (peek_comprehension()) {
                        target_ok_ = false;
                        SynNode comp = parse_comprehension(std::move(first), "genexp");
                        expect(TokKind::Operator, ")");
                        target_ok_ = outer;
                        return comp;
                    }
                    if (peek_is(TokKind::Operator, ",")) {
                        SynNode tup = inner("tuple");
                        tup.children.push_back(std::move(first));
                        while (accept(TokKind::Operator, ",")) {
                            if (peek_is(TokKind::Operator, ")")) break;
                            tup.children.push_back(parse_star_or_expr());
                        }
                        expect(TokKind::Operator, ")");
                        return tup;
                    }
                    expect(TokKind::Operator, ")");
                    return first;  // grouping parens are transparent
                }
                if (op == "[") {
                    next();
                    bool outer = target_ok_;
                    SynNode lst = inner("list");
                    if (peek_is(TokKind::Operator, "]")) {
                        next();
                        return lst;
                    }
                    SynNode first = parse_star_or_expr();
                    if (peek_comprehension()) {
                        target_ok_ = false;
                        SynNode comp = parse_comprehension(std::move(first), "listcomp");
                        expect(TokKind::Operator, "]");
                        target_ok_ = outer;
                        return comp;
                    }
                    lst.children.push_back(std::move(first));
                    while (accept(TokKind::Operator, ",")) {
                        if (peek_is(TokKind::Operator, "]")) break;
                        lst.children.push_back(parse_star_or_expr());
                    }
                    expect(TokKind::Operator, "]");
                    return lst;
                }
                if (op == "{") {
                    next();
                    bool outer = target_ok_;
                    target_ok_ = false;
                    SynNode braced = parse_braced();
                    target_ok_ = outer;
                    return braced;
                }
                if (op == "*") {
                    next();
                    SynNode n = inner("star");
                    n.children.push_back(parse_or(false));
                    return n;
                }
                if (op == "...") {
                    next();
                    return leaf_node("...");
                }
                fail("unexpected operator '" + op + "'");
            }
            default:
                fail("unexpected token");
        }
    }

    SynNode parse_star_or_expr() {
        if (peek_is(TokKind::Operator, "*")) {
            next();
            SynNode n = inner("star");
            n.children.push_back(parse_or(false));
            return n;
        }
        return parse_namedexpr();
    }

    SynNode parse_braced() {
        // '{' already consumed: dict, set, or a comprehension of either.
        if (peek_is(TokKind::Operator, "}")) {
            next();
            return inner("dict");
        }
        if (accept(TokKind::Operator, "**")) {
            SynNode d = inner("dict");
            SynNode n = inner("dstar");
            n.children.push_back(parse_or(false));
            d.children.push_back(std::move(n));
            while (accept(TokKind::Operator, ",")) {
                if (peek_is(TokKind::Operator, "}")) break;
                d.children.push_back(parse_dict_item());
            }
            expect(TokKind::Operator, "}");
            return d;
        }
        SynNode first = parse_star_or_expr();
        if (peek_is(TokKind::Operator, ":")) {
            next();
            SynNode item = inner("dictitem");
            item.children.push_back(std::move(first));
            item.children.push_back(parse_expr());
            if (peek_comprehension()) {
                SynNode comp = parse_comprehension(std::move(item), "dictcomp");
                expect(TokKind::Operator, "}");
                return comp;
            }
            SynNode d = inner("dict");
            d.children.push_back(std::move(item));
            while (accept(TokKind::Operator, ",")) {
                if (peek_is(TokKind::Operator, "}")) break;
                d.children.push_back(parse_dict_item());
            }
            expect(TokKind::Operator, "}");
            return d;
        }
        if (peek_comprehension()) {
            SynNode comp = parse_comprehension(std::move(first), "setcomp");
            expect(TokKind::Operator, "}");
            return comp;
        }
        SynNode s = inner("set");
        s.children.push_back(std::move(first));
        while (accept(TokKind::Operator, ",")) {
            if (peek_is(TokKind::Operator, "}")) break;
            s.children.push_back(parse_star_or_expr());
        }
        expect(TokKind::Operator, "}");
        return s;
    }

    SynNode parse_dict_item() {
        if (accept(TokKind::Operator, "**")) {
            SynNode n = inner("dstar");
            n.children.push_back(parse_or(false));
            return n;
        }
        SynNode key = parse_expr();
        expect(TokKind::Operator, ":");
        SynNode item = inner("dictitem");
        item.children.push_back(std::move(key));
        item.children.push_back(parse_expr());
        return item;
    }
};

std::vector<DataflowTriple> build_triples(std::vector<Event> events) {
    // Chains follow token order, approximating execution order; each read
    // links to the textually latest preceding write of the same name.
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.ordinal < b.ordinal; });
    std::unordered_map<std::string, std::size_t> last_def;
    std::vector<DataflowTriple> raw;
    for (const Event& e : events) {
        if (e.is_def) {
            last_def[e.name] = e.ordinal;
        } else {
            auto it = last_def.find(e.name);
            if (it != last_def.end()) raw.push_back({e.name, it->second, e.ordinal});
        }
    }
    std::unordered_map<std::string, std::size_t> order;
    for (const DataflowTriple& t : raw)
        if (!order.count(t.var)) order.emplace(t.var, order.size());
    for (DataflowTriple& t : raw) t.var = "v" + std::to_string(order.at(t.var));
    return raw;
}

}  // namespace

std::optional<Analysis> analyze(const std::string& src) {
    try {
        std::vector<Token> toks = lex(src, /*strict=*/true);
        bool any_code = false;
        for (const Token& t : toks)
            if (t.kind != TokKind::Comment && t.kind != TokKind::Newline) any_code = true;
        if (!any_code) return std::nullopt;
        Parser parser(src, std::move(toks));
        Analysis a;
        a.root = parser.parse_module();
        a.triples = build_triples(parser.take_events());
        return a;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

namespace {

void signature_of(const SynNode& node, std::string& out) {
    if (node.is_leaf()) {
        out += node.leaf;
        return;
    }
    out += '(';
    out += node.label;
    for (const SynNode& c : node.children) {
        out += ' ';
        signature_of(c, out);
    }
    out += ')';
}

void collect_signatures(const SynNode& node, std::vector<std::string>& out) {
    if (node.is_leaf()) return;
    std::string sig;
    signature_of(node, sig);
    out.push_back(std::move(sig));
    for (const SynNode& c : node.children) collect_signatures(c, out);
}

}  // namespace

std::vector<std::string> subtree_signatures(const SynNode& root) {
    std::vector<std::string> out;
    collect_signatures(root, out);
    return out;
}

}  // namespace fshap::py

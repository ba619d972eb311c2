/*
 * Copyright 2026 The shype Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "shype/parser.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace shype {

std::string format_diagnostic(const ParseDiagnostic& d) {
    std::string out = d.span.file + ":" + std::to_string(d.span.line) + ":" + std::to_string(d.span.column) + ": " +
                      (d.severity == Severity::Error ? "error: " : "warning: ") + d.message;
    if (!d.hint.empty()) out += "; " + d.hint;
    return out;
}

namespace {

std::string join_messages(const std::vector<ParseDiagnostic>& ds) {
    std::string out;
    for (const auto& d : ds) {
        if (!out.empty()) out += '\n';
        out += format_diagnostic(d);
    }
    return out.empty() ? "parse error" : out;
}

}  // namespace

ParseError::ParseError(std::vector<ParseDiagnostic> diagnostics)
    : Error(join_messages(diagnostics)), diagnostics_(std::move(diagnostics)) {}

namespace {

// --- lexer --------------------------------------------------------------------

enum class Tok { Ident, Number, Punct, End, Bad };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    int line = 1;
    int column = 1;
    int length = 1;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0;
    int line = 1, col = 1;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    auto push = [&](Tok kind, std::size_t len) {
        Token t{kind, std::string(src.substr(i, len)), line, col, static_cast<int>(std::max<std::size_t>(len, 1))};
        out.push_back(std::move(t));
        advance(len);
    };
    while (i < src.size()) {
        char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
            advance(1);
            continue;
        }
        if (c == '#' || (c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        if (ident_start(c)) {
            std::size_t j = i;
            while (j < src.size() && ident_char(src[j])) ++j;
            push(Tok::Ident, j - i);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            if (j < src.size() && src[j] == '.' && j + 1 < src.size() &&
                std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
                ++j;
                while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            }
            if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
                if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
                    while (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) ++k;
                    j = k;
                }
            }
            push(Tok::Number, j - i);
            continue;
        }
        auto starts = [&](std::string_view s) { return src.substr(i, s.size()) == s; };
        if (starts("<*>")) {
            push(Tok::Punct, 3);
            continue;
        }
        if (starts("=def") && (i + 4 >= src.size() || !ident_char(src[i + 4]))) {
            push(Tok::Punct, 4);
            continue;
        }
        if (starts("<=") || starts(">=") || starts("||")) {
            push(Tok::Punct, 2);
            continue;
        }
        if (std::strchr("()[],;.:+-*/^<>='~", c) && c != '\0') {
            push(Tok::Punct, 1);
            continue;
        }
        // one token per unexpected byte run
        std::size_t j = i + 1;
        while (j < src.size() && (static_cast<unsigned char>(src[j]) & 0xC0) == 0x80) ++j;
        push(Tok::Bad, j - i);
    }
    out.push_back(Token{Tok::End, "", line, col, 1});
    return out;
}

const std::set<std::string>& section_keywords() {
    static const std::set<std::string> k{"params",     "variables",  "events", "types", "subcomponent",
                                         "controller", "system",     "iv",     "ec",    "measures"};
    return k;
}

const std::set<std::string>& reserved_words() {
    static const std::set<std::string> r = [] {
        std::set<std::string> s = section_keywords();
        for (const char* w : {"and", "or", "not", "true", "false", "stoch"}) s.insert(w);
        return s;
    }();
    return r;
}

struct Failure {
    Token at;
    std::string message;
    std::string hint;
};

enum class Scope { Param, Numeric, Strength, TypeBody, Variable, Event, Process, Itype };

struct Use {
    std::string name;
    Token at;
    Scope scope;
    std::size_t index = 0;  // param position, or itype position for TypeBody
};

constexpr int kMaxDepth = 256;

class Parser {
public:
    Parser(std::string_view src, std::string file) : toks_(lex(src)), file_(std::move(file)) {}

    ParseResult parse_model();
    Term whole_term();
    Expr whole_expression();
    Formula whole_formula();

    std::vector<ParseDiagnostic> diags;

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::string file_;
    int depth_ = 0;
    std::vector<Use>* uses_ = nullptr;
    Scope expr_scope_ = Scope::Numeric;
    std::size_t scope_index_ = 0;

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& q) : p(q) {
            if (++p.depth_ > kMaxDepth) {
                --p.depth_;
                p.fail("nesting too deep", "");
            }
        }
        ~DepthGuard() { --p.depth_; }
    };

    const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    bool at_punct(std::string_view p, std::size_t k = 0) const {
        return peek(k).kind == Tok::Punct && peek(k).text == p;
    }
    bool at_word(std::string_view w) const { return peek().kind == Tok::Ident && peek().text == w; }
    bool at_section() const { return peek().kind == Tok::Ident && section_keywords().count(peek().text); }
    Token take() {
        Token t = peek();
        if (pos_ < toks_.size() - 1) ++pos_;
        return t;
    }

    static std::string describe(const Token& t) {
        switch (t.kind) {
        case Tok::End:
            return "end of input";
        case Tok::Bad:
            return "invalid character '" + t.text + "'";
        default:
            return "'" + t.text + "'";
        }
    }

    [[noreturn]] void fail(const std::string& message, const std::string& hint) { throw Failure{peek(), message, hint}; }
    [[noreturn]] void unexpected(const std::string& hint) { fail("unexpected " + describe(peek()), hint); }

    void expect(std::string_view p, const std::string& hint = "") {
        if (!at_punct(p)) unexpected(hint.empty() ? "expected '" + std::string(p) + "'" : hint);
        take();
    }

    Token ident(const std::string& what) {
        if (peek().kind != Tok::Ident) unexpected("expected " + what);
        if (reserved_words().count(peek().text)) fail("'" + peek().text + "' is a reserved word", "expected " + what);
        return take();
    }

    void record(const Token& t, Scope scope, std::size_t index = 0) {
        if (uses_) uses_->push_back(Use{t.text, t, scope, index});
    }

    void report(const Failure& f) {
        diags.push_back(ParseDiagnostic{Severity::Error, SourceSpan{file_, f.at.line, f.at.column, f.at.length},
                                        f.message, f.hint});
    }

    void report_at(const Token& t, std::string message, std::string hint = "") {
        diags.push_back(
            ParseDiagnostic{Severity::Error, SourceSpan{file_, t.line, t.column, t.length}, std::move(message), std::move(hint)});
    }

    // expressions
    Expr expression();
    Expr term_expr();
    Expr unary();
    Expr power();
    Expr atom();

    // formulas
    Formula formula();
    Formula conjunction();
    Formula negation();
    Formula comparison();

    Reset reset();
    Term coop();
    Term choice();
    Term prefix_term();
    std::optional<Activity> activity();

    void skip_entry();
    template <class F>
    void entries(F&& entry);
    void resolve(const Model& m, const std::vector<Use>& uses);
};

// --- expressions ----------------------------------------------------------------

Expr Parser::expression() {
    DepthGuard g(*this);
    Expr e = term_expr();
    while (at_punct("+") || at_punct("-")) {
        bool plus = take().text == "+";
        Expr r = term_expr();
        e = plus ? e + r : Expr::op(ExprKind::Sub, {e, r});
    }
    return e;
}

Expr Parser::term_expr() {
    Expr e = unary();
    while (at_punct("*") || at_punct("/")) {
        bool mul = take().text == "*";
        Expr r = unary();
        e = mul ? e * r : e / r;
    }
    return e;
}

Expr Parser::unary() {
    DepthGuard g(*this);
    if (at_punct("-")) {
        take();
        return -unary();
    }
    return power();
}

Expr Parser::power() {
    Expr base = atom();
    if (at_punct("^")) {
        take();
        return pow(base, unary());
    }
    return base;
}

Expr Parser::atom() {
    DepthGuard g(*this);
    const Token& t = peek();
    if (t.kind == Tok::Number) {
        take();
        errno = 0;
        double v = std::strtod(t.text.c_str(), nullptr);
        return Expr::number(v);
    }
    if (at_punct("(")) {
        take();
        Expr e = expression();
        expect(")", "expected ')' to close the expression");
        return e;
    }
    if (t.kind != Tok::Ident) unexpected("expected an expression");
    if (reserved_words().count(t.text)) fail("'" + t.text + "' is a reserved word", "expected an expression");
    Token name = take();
    if (!at_punct("(")) {
        record(name, expr_scope_, scope_index_);
        return Expr::ref(name.text);
    }
    take();
    std::vector<Expr> args;
    if (!at_punct(")")) {
        args.push_back(expression());
        while (at_punct(",")) {
            take();
            args.push_back(expression());
        }
    }
    expect(")", "expected ',' or ')' in argument list");
    auto arity = [&](std::size_t n) {
        if (args.size() != n) {
            throw Failure{name, "'" + name.text + "' takes " + std::to_string(n) + " argument" + (n == 1 ? "" : "s"),
                          ""};
        }
    };
    const std::string& f = name.text;
    if (f == "min" || f == "max") {
        arity(2);
        return f == "min" ? min(args[0], args[1]) : max(args[0], args[1]);
    }
    if (f == "sqrt" || f == "ln" || f == "exp") {
        arity(1);
        return f == "sqrt" ? sqrt(args[0]) : f == "ln" ? ln(args[0]) : exp(args[0]);
    }
    std::optional<DistKind> d = f == "delta" ? std::optional(DistKind::Dirac) : dist_from_name(f);
    if (!d) throw Failure{name, "unknown function '" + f + "'", "expected min, max, sqrt, ln, exp or a distribution"};
    arity(dist_arity(*d));
    return Expr::random(*d, std::move(args));
}

// --- formulas -------------------------------------------------------------------

Formula Parser::formula() {
    DepthGuard g(*this);
    std::vector<Formula> parts{conjunction()};
    while (at_word("or")) {
        take();
        parts.push_back(conjunction());
    }
    return parts.size() == 1 ? parts[0] : Formula::disj(std::move(parts));
}

Formula Parser::conjunction() {
    std::vector<Formula> parts{negation()};
    while (at_word("and")) {
        take();
        parts.push_back(negation());
    }
    return parts.size() == 1 ? parts[0] : Formula::conj(std::move(parts));
}

Formula Parser::negation() {
    DepthGuard g(*this);
    if (at_word("not")) {
        take();
        return Formula::negate(negation());
    }
    if (at_word("true")) {
        take();
        return Formula::truth(true);
    }
    if (at_word("false")) {
        take();
        return Formula::truth(false);
    }
    if (at_punct("(")) {
        std::size_t save = pos_;
        std::size_t mark = uses_ ? uses_->size() : 0;
        try {
            return comparison();
        } catch (const Failure&) {
            pos_ = save;
            if (uses_) uses_->resize(mark);
        }
        take();
        Formula f = formula();
        expect(")", "expected ')' to close the condition");
        return f;
    }
    return comparison();
}

Formula Parser::comparison() {
    Expr lhs = expression();
    static const std::pair<const char*, CmpOp> ops[] = {
        {"<=", CmpOp::Le}, {">=", CmpOp::Ge}, {"=", CmpOp::Eq}, {"<", CmpOp::Lt}, {">", CmpOp::Gt}};
    for (const auto& [sym, op] : ops) {
        if (at_punct(sym)) {
            take();
            Expr rhs = expression();
            return Formula::compare(op, lhs, rhs);
        }
    }
    unexpected("expected a comparison (<=, >=, =, <, >)");
}

Reset Parser::reset() {
    Reset r;
    if (at_word("true")) {
        take();
        return r;
    }
    while (true) {
        Token v = ident("a variable in a reset");
        record(v, Scope::Variable);
        if (at_punct("~")) {
            take();
        } else if (at_punct("'")) {
            take();
            expect("=", "expected '=' after the primed variable");
        } else {
            unexpected("expected '~' or \"'=\" in reset");
        }
        r.push_back({v.text, expression()});
        if (!at_word("and")) break;
        take();
    }
    return r;
}

// --- process terms ----------------------------------------------------------------

Term Parser::coop() {
    DepthGuard g(*this);
    Term t = choice();
    while (true) {
        SyncSet s;
        if (at_punct("<*>")) {
            take();
            s.shared = true;
        } else if (at_punct("||")) {
            take();
        } else if (at_punct("<")) {
            take();
            if (!at_punct(">")) {
                while (true) {
                    Token e = ident("an event name");
                    record(e, Scope::Event);
                    s.events.insert(e.text);
                    if (!at_punct(",")) break;
                    take();
                }
            }
            expect(">", "expected ',' or '>' to close the synchronisation set");
        } else {
            return t;
        }
        t = Term::coop(t, std::move(s), choice());
    }
}

Term Parser::choice() {
    Term t = prefix_term();
    while (at_punct("+")) {
        take();
        t = Term::choice(t, prefix_term());
    }
    return t;
}

std::optional<Activity> Parser::activity() {
    if (!at_punct(":")) return std::nullopt;
    take();
    expect("(", "expected '(' to open the activity");
    Activity a;
    a.influence = ident("an influence name").text;
    expect(",", "expected ',' after the influence name");
    Scope saved = expr_scope_;
    expr_scope_ = Scope::Strength;
    a.strength = expression();
    expr_scope_ = saved;
    expect(",", "expected ',' then the influence type");
    Token it = ident("an influence type");
    record(it, Scope::Itype);
    a.itype = it.text;
    if (at_punct("(")) {
        take();
        if (!at_punct(")")) {
            while (true) {
                Token v = ident("a variable");
                record(v, Scope::Variable);
                a.itype_args.push_back(v.text);
                if (!at_punct(",")) break;
                take();
            }
        }
        expect(")", "expected ')' to close the influence type arguments");
    }
    expect(")", "expected ')' to close the activity");
    return a;
}

Term Parser::prefix_term() {
    DepthGuard g(*this);
    if (peek().kind == Tok::Number && peek().text == "0") {
        take();
        return Term::nil();
    }
    if (at_punct("(")) {
        take();
        Term t = coop();
        expect(")", "expected ')' to close the process term");
        return t;
    }
    Token name = ident("a process term");
    if (at_punct(":") || at_punct(".")) {
        record(name, Scope::Event);
        auto a = activity();
        expect(".", "expected '.' after the prefix");
        return Term::prefix(name.text, std::move(a), prefix_term());
    }
    record(name, Scope::Process);
    return Term::ref(name.text);
}

// --- sections ---------------------------------------------------------------------

void Parser::skip_entry() {
    while (peek().kind != Tok::End && !at_punct(";") && !at_section()) take();
    if (at_punct(";")) take();
}

template <class F>
void Parser::entries(F&& entry) {
    while (peek().kind != Tok::End && !at_section()) {
        std::size_t before = pos_;
        try {
            entry();
            expect(";", "expected ';' to end the entry");
        } catch (const Failure& f) {
            report(f);
            skip_entry();
            if (pos_ == before) take();
        }
        if (diags.size() > 64) return;
    }
}

ParseResult Parser::parse_model() {
    Model m;
    std::vector<Use> uses;
    uses_ = &uses;
    std::set<std::string> seen_sections;
    const std::set<std::string> single{"params", "variables", "events", "system"};
    std::set<std::string> declared_events;
    bool any_section = false;

    while (peek().kind != Tok::End && diags.size() <= 64) {
        if (!at_section()) {
            report(Failure{peek(), "unexpected " + describe(peek()),
                           "expected a section keyword (params, variables, events, types, subcomponent, controller, "
                           "system, iv, ec, measures)"});
            take();
            while (peek().kind != Tok::End && !at_section()) take();
            continue;
        }
        Token kw = take();
        any_section = true;
        if (single.count(kw.text) && !seen_sections.insert(kw.text).second)
            report_at(kw, "duplicate section '" + kw.text + "'", "merge the entries into the first '" + kw.text + "' section");
        const std::string& s = kw.text;
        if (s == "params") {
            entries([&] {
                Token n = ident("a parameter name");
                expect("=", "expected '=' after the parameter name");
                expr_scope_ = Scope::Param;
                scope_index_ = m.params.size();
                Expr e = expression();
                expr_scope_ = Scope::Numeric;
                m.params.emplace_back(n.text, e);
            });
        } else if (s == "variables" || s == "events") {
            try {
                while (true) {
                    bool stoch = false;
                    if (s == "events" && at_word("stoch")) {
                        take();
                        stoch = true;
                    }
                    if (s == "events" && at_word(kInitEvent))
                        fail("'init' is reserved", "the init event is implicit; do not declare it");
                    Token n = ident(s == "events" ? "an event name" : "a variable name");
                    if (s == "variables") {
                        m.variables.push_back(n.text);
                    } else {
                        (stoch ? m.stochastic_events : m.instantaneous_events).push_back(n.text);
                    }
                    if (!at_punct(",")) break;
                    take();
                }
                expect(";", "expected ',' or ';' in the " + s + " list");
            } catch (const Failure& f) {
                report(f);
                skip_entry();
            }
        } else if (s == "types") {
            entries([&] {
                ItypeDef d;
                d.name = ident("an influence type name").text;
                if (at_punct("(")) {
                    take();
                    if (!at_punct(")")) {
                        while (true) {
                            d.params.push_back(ident("a parameter variable").text);
                            if (!at_punct(",")) break;
                            take();
                        }
                    }
                    expect(")", "expected ')' to close the parameter list");
                }
                expect("=", "expected '=' then the definition");
                expr_scope_ = Scope::TypeBody;
                scope_index_ = m.itypes.size();
                d.body = expression();
                expr_scope_ = Scope::Numeric;
                m.itypes.push_back(std::move(d));
            });
        } else if (s == "subcomponent" || s == "controller" || s == "system") {
            entries([&] {
                if (s == "system" && m.system) fail("more than one system definition", "");
                Token n = ident("a process name");
                expect("=def", "expected '=def' after the process name");
                Definition d{n.text, coop()};
                if (s == "subcomponent") {
                    m.subcomponents.push_back(std::move(d));
                } else if (s == "controller") {
                    m.controllers.push_back(std::move(d));
                } else {
                    m.system = std::move(d);
                }
            });
        } else if (s == "iv") {
            entries([&] {
                Token i = ident("an influence name");
                expect("=", "expected '=' then a variable");
                Token v = ident("a variable");
                record(v, Scope::Variable);
                if (m.iv.count(i.text)) throw Failure{i, "influence '" + i.text + "' mapped twice", ""};
                m.iv[i.text] = v.text;
            });
        } else if (s == "ec") {
            entries([&] {
                Token e = peek();
                if (at_word(kInitEvent)) {
                    take();
                } else {
                    e = ident("an event name");
                    record(e, Scope::Event);
                }
                if (m.ec.count(e.text)) throw Failure{e, "duplicate event condition for '" + e.text + "'", ""};
                expect("=", "expected '=' then (activation, reset)");
                expect("(", "expected '(' then activation and reset");
                EventCondition c;
                std::size_t save = pos_;
                std::size_t mark = uses.size();
                bool done = false;
                try {
                    Formula f = formula();
                    if (at_punct(",")) {
                        c.kind = ActivationKind::Guard;
                        c.guard = f;
                        done = true;
                    } else if (at_punct(")")) {
                        unexpected("expected ',' then reset");
                    }
                } catch (const Failure& f) {
                    if (f.hint == "expected ',' then reset") throw;
                }
                if (!done) {
                    pos_ = save;
                    uses.resize(mark);
                    Expr r = expression();
                    c.kind = contains_random(r) ? ActivationKind::Duration : ActivationKind::Rate;
                    c.rate = r;
                }
                expect(",", "expected ',' then reset");
                c.reset = reset();
                expect(")", "expected 'and' or ')' after the reset");
                m.ec[e.text] = std::move(c);
            });
        } else if (s == "measures") {
            entries([&] {
                Token n = ident("a measure name");
                expect("=", "expected '=' then an expression");
                Expr e = expression();
                m.measures.emplace_back(n.text, e);
            });
        }
    }
    uses_ = nullptr;
    if (!any_section && diags.empty()) {
        report_at(peek(), "expected at least one section",
                  "start with a section keyword such as 'variables' or 'subcomponent'");
    }
    if (diags.empty()) resolve(m, uses);
    ParseResult out;
    out.diagnostics = diags;
    if (diags.empty()) out.model = std::move(m);
    return out;
}

void Parser::resolve(const Model& m, const std::vector<Use>& uses) {
    std::set<std::string> vars(m.variables.begin(), m.variables.end());
    std::map<std::string, std::size_t> params;
    for (std::size_t i = 0; i < m.params.size(); ++i) params.emplace(m.params[i].first, i);
    std::set<std::string> events(m.instantaneous_events.begin(), m.instantaneous_events.end());
    events.insert(m.stochastic_events.begin(), m.stochastic_events.end());
    events.insert(kInitEvent);
    std::set<std::string> processes;
    for (const auto& d : m.subcomponents) processes.insert(d.name);
    for (const auto& d : m.controllers) processes.insert(d.name);
    if (m.system) processes.insert(m.system->name);
    std::set<std::string> itypes;
    for (const auto& t : m.itypes) itypes.insert(t.name);

    for (const auto& u : uses) {
        bool ok = false;
        std::string expected;
        switch (u.scope) {
        case Scope::Param: {
            auto it = params.find(u.name);
            ok = it != params.end() && it->second < u.index;
            expected = "parameters may only use parameters declared before them";
            break;
        }
        case Scope::Numeric:
            ok = vars.count(u.name) || params.count(u.name);
            expected = "expected a variable or parameter";
            break;
        case Scope::Strength:
            ok = params.count(u.name) > 0;
            expected = "expected a parameter";
            break;
        case Scope::TypeBody: {
            const auto& ps = m.itypes[u.index].params;
            ok = std::count(ps.begin(), ps.end(), u.name) || params.count(u.name);
            expected = "expected a parameter of the influence type";
            break;
        }
        case Scope::Variable:
            ok = vars.count(u.name) > 0;
            expected = "expected a declared variable";
            break;
        case Scope::Event:
            ok = events.count(u.name) > 0;
            expected = "expected a declared event";
            break;
        case Scope::Process:
            ok = processes.count(u.name) > 0;
            expected = "expected a defined process";
            break;
        case Scope::Itype:
            ok = itypes.count(u.name) > 0;
            expected = "expected an influence type from the types section";
            break;
        }
        if (!ok) report_at(u.at, "unknown identifier '" + u.name + "'", expected);
    }
}

Term Parser::whole_term() {
    try {
        Term t = coop();
        if (peek().kind != Tok::End) unexpected("expected end of term");
        return t;
    } catch (const Failure& f) {
        report(f);
        throw ParseError(diags);
    }
}

Expr Parser::whole_expression() {
    try {
        Expr e = expression();
        if (peek().kind != Tok::End) unexpected("expected end of expression");
        return e;
    } catch (const Failure& f) {
        report(f);
        throw ParseError(diags);
    }
}

Formula Parser::whole_formula() {
    try {
        Formula f = formula();
        if (peek().kind != Tok::End) unexpected("expected end of condition");
        return f;
    } catch (const Failure& f) {
        report(f);
        throw ParseError(diags);
    }
}

}  // namespace

ParseResult parse_model(std::string_view source, const std::string& filename) {
    Parser p(source, filename);
    return p.parse_model();
}

Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(path + ": " + std::strerror(errno));
    std::stringstream ss;
    ss << in.rdbuf();
    auto r = parse_model(ss.str(), path);
    if (!r.model) throw ParseError(std::move(r.diagnostics));
    return std::move(*r.model);
}

Term parse_term(std::string_view text) { return Parser(text, "<term>").whole_term(); }
Expr parse_expression(std::string_view text) { return Parser(text, "<expression>").whole_expression(); }
Formula parse_formula(std::string_view text) { return Parser(text, "<condition>").whole_formula(); }

// --- formatting -----------------------------------------------------------------------

namespace {

std::string join(const std::vector<std::string>& xs, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += sep;
        out += xs[i];
    }
    return out;
}

}  // namespace

std::string format_model(const Model& m) {
    std::string out;
    if (!m.params.empty()) {
        out += "params\n";
        for (const auto& [n, e] : m.params) out += "  " + n + " = " + to_string(e) + ";\n";
        out += '\n';
    }
    if (!m.variables.empty()) out += "variables " + join(m.variables, ", ") + ";\n";
    std::vector<std::string> evs = m.instantaneous_events;
    for (const auto& e : m.stochastic_events) evs.push_back("stoch " + e);
    if (!evs.empty()) out += "events " + join(evs, ", ") + ";\n";
    if (!m.variables.empty() || !evs.empty()) out += '\n';
    if (!m.itypes.empty()) {
        out += "types\n";
        for (const auto& t : m.itypes) {
            out += "  " + t.name;
            if (!t.params.empty()) out += "(" + join(t.params, ", ") + ")";
            out += " = " + to_string(t.body) + ";\n";
        }
        out += '\n';
    }
    if (!m.iv.empty()) {
        out += "iv\n";
        for (const auto& [i, v] : m.iv) out += "  " + i + " = " + v + ";\n";
        out += '\n';
    }
    auto defs = [&](const char* kw, const std::vector<Definition>& ds) {
        if (ds.empty()) return;
        out += kw;
        out += '\n';
        for (const auto& d : ds) out += "  " + d.name + " =def " + to_string(d.body) + ";\n";
        out += '\n';
    };
    defs("subcomponent", m.subcomponents);
    defs("controller", m.controllers);
    if (m.system) out += "system\n  " + m.system->name + " =def " + to_string(m.system->body) + ";\n\n";
    if (!m.ec.empty()) {
        out += "ec\n";
        for (const auto& [e, c] : m.ec) {
            out += "  " + e + " = (";
            out += c.kind == ActivationKind::Guard ? to_string(c.guard) : to_string(c.rate);
            out += ", " + to_string(c.reset) + ");\n";
        }
        out += '\n';
    }
    if (!m.measures.empty()) {
        out += "measures\n";
        for (const auto& [n, e] : m.measures) out += "  " + n + " = " + to_string(e) + ";\n";
        out += '\n';
    }
    while (out.size() > 1 && out.back() == '\n' && out[out.size() - 2] == '\n') out.pop_back();
    return out;
}

}  // namespace shype

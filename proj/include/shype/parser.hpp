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

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shype/model.hpp"

namespace shype {

struct SourceSpan {
    std::string file;
    int line = 1;    // 1-based
    int column = 1;  // 1-based
    int length = 1;
};

enum class Severity { Error, Warning };

struct ParseDiagnostic {
    Severity severity = Severity::Error;
    SourceSpan span;
    std::string message;
    std::string hint;  // expected-token hint, may be empty
};

/// `file:line:col: error: message; hint`
std::string format_diagnostic(const ParseDiagnostic& d);

struct ParseResult {
    std::optional<Model> model;  // empty when any error was reported
    std::vector<ParseDiagnostic> diagnostics;
};

ParseResult parse_model(std::string_view source, const std::string& filename = "<input>");

class ParseError : public Error {
public:
    explicit ParseError(std::vector<ParseDiagnostic> diagnostics);
    const std::vector<ParseDiagnostic>& diagnostics() const { return diagnostics_; }

private:
    std::vector<ParseDiagnostic> diagnostics_;
};

/// Reads and parses a file. Throws ParseError (diagnostics) or Error (I/O).
Model load_model(const std::string& path);

/// Standalone fragments, used for relation files and cost expressions.
/// Names are not resolved. Throw ParseError.
Term parse_term(std::string_view text);
Expr parse_expression(std::string_view text);
Formula parse_formula(std::string_view text);

/// Canonical text; parse_model(format_model(m)) yields m again.
std::string format_model(const Model& model);

}  // namespace shype

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

#include <string>

#include "shype/parser.hpp"

#ifndef SHYPE_MODELS_DIR
#define SHYPE_MODELS_DIR "models"
#endif

namespace shype::test {

inline std::string model_path(const std::string& name) { return std::string(SHYPE_MODELS_DIR) + "/" + name; }

inline Model load(const std::string& name) { return load_model(model_path(name)); }

inline Model parse_ok(const std::string& text) {
    auto r = parse_model(text, "<test>");
    if (!r.model) throw ParseError(r.diagnostics);
    return *r.model;
}

}  // namespace shype::test

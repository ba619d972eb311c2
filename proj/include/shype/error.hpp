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

#include <stdexcept>
#include <string>

namespace shype {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EvalError : public Error {
public:
    using Error::Error;
};

class UnboundVariable : public EvalError {
public:
    explicit UnboundVariable(const std::string& name)
        : EvalError("unbound variable '" + name + "'"), name_(name) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

class DivisionByZero : public EvalError {
public:
    DivisionByZero() : EvalError("division by zero") {}
};

class DomainError : public EvalError {
public:
    using EvalError::EvalError;
};

class BadParameter : public EvalError {
public:
    using EvalError::EvalError;
};

class NameClash : public Error {
public:
    using Error::Error;
};

class UnknownParameter : public Error {
public:
    using Error::Error;
};

class ModelError : public Error {
public:
    using Error::Error;
};

class StateSpaceCapExceeded : public Error {
public:
    using Error::Error;
};

class GammaUndefined : public Error {
public:
    using Error::Error;
};

class MissingInfluenceTypeDef : public Error {
public:
    using Error::Error;
};

class ResetIncompatible : public Error {
public:
    using Error::Error;
};

class InitIncompatible : public Error {
public:
    using Error::Error;
};

class ChainCapExceeded : public Error {
public:
    ChainCapExceeded(double t, const std::string& what) : Error(what), time_(t) {}
    double time() const { return time_; }

private:
    double time_;
};

class NonComparableRate : public Error {
public:
    using Error::Error;
};

class UnknownDerivative : public Error {
public:
    using Error::Error;
};

}  // namespace shype

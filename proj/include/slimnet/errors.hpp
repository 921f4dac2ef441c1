/*
 * Copyright 2026 The slimnet Authors
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

namespace slimnet {

/// Base class for every error raised by the library. The CLI maps the
/// subclasses onto distinct exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A width below the model's lower bound, or another model-level constraint.
class ConstraintViolation : public Error {
public:
    using Error::Error;
};

class DegenerateBatch : public Error {
public:
    using Error::Error;
};

class DegenerateRange : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class CalibrationRequired : public Error {
public:
    using Error::Error;
};

class InfeasibleBudget : public Error {
public:
    using Error::Error;
};

class IngestionError : public Error {
public:
    IngestionError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class NonFiniteLoss : public Error {
public:
    using Error::Error;
};

/// Run configuration failed schema validation.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace slimnet

// SPDX-License-Identifier: Apache-2.0
//
// risvec: RIS-assisted vehicular edge computing simulator and trainer
// Copyright (C) 2026 The risvec authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
#pragma once

#include <stdexcept>
#include <string>

namespace risvec {

/// Argument outside the mathematical domain of an operation (negative distance,
/// |sin| > 1, empty vehicle list, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Vector or matrix shapes that do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A bounded resource is too small (replay buffer undersized, brute-force space too large).
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Non-finite values produced or consumed during training.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration. Carries the offending key (may be empty) and the
/// 1-based line of the config file (0 when not from a file).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what, int line = 0)
        : std::runtime_error(format(key, what, line)), key_(std::move(key)), line_(line) {}

    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& key, const std::string& what, int line) {
        std::string msg;
        if (line > 0) msg += "line " + std::to_string(line) + ": ";
        if (!key.empty()) msg += "'" + key + "': ";
        return msg + what;
    }

    std::string key_;
    int line_;
};

}  // namespace risvec

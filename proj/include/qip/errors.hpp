// Copyright 2026 The qipkit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file errors.hpp
 * Exception taxonomy. Programmer errors (bad arguments to library calls)
 * use the std exceptions; these types cover user-facing failure modes the
 * CLI maps to distinct exit codes.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace qip {

/// Invalid configuration: bad file values, unknown keys, incompatible
/// component wiring. The CLI maps this to exit code 2.
class config_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A classical feature vector that cannot be encoded (e.g. the zero vector
/// under amplitude encoding, or a dimension mismatch at encode time).
class encoding_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Non-finite loss or gradient detected during optimization. The message
/// carries the step index and the parameter block involved. The CLI maps
/// this to exit code 3.
class train_fault : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Structured failure while reading a binary artifact (dataset, feature
/// file, checkpoint). The CLI maps this to exit code 3.
class data_error : public std::runtime_error {
  public:
    enum class kind {
        bad_magic,      ///< file does not start with the expected magic
        bad_version,    ///< recognized family, unsupported version tag
        truncated,      ///< fewer bytes than the header promises
        count_mismatch, ///< companion files disagree on record counts
        overflow        ///< a size field implies an unreasonable allocation
    };

    data_error(kind k, const std::string& what) : std::runtime_error(what), kind_(k) {}

    [[nodiscard]] kind which() const noexcept { return kind_; }

  private:
    kind kind_;
};

} // namespace qip

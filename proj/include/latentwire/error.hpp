// Copyright 2026 The LatentWire Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <stdexcept>
#include <string>

namespace latentwire {

// Base of every error the library throws. kind() is a short stable token
// used by the CLI in its machine-parsable error line.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

#define LATENTWIRE_DEFINE_ERROR(Name, token)                        \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(what) {}         \
    const char* kind() const noexcept override { return token; }    \
  };

LATENTWIRE_DEFINE_ERROR(ParseError, "parse")
LATENTWIRE_DEFINE_ERROR(ValidationError, "validation")
LATENTWIRE_DEFINE_ERROR(ShapeError, "shape")
LATENTWIRE_DEFINE_ERROR(IntegrityError, "integrity")
LATENTWIRE_DEFINE_ERROR(VersionError, "version")
LATENTWIRE_DEFINE_ERROR(KindError, "kind")
LATENTWIRE_DEFINE_ERROR(ProtocolError, "protocol")
LATENTWIRE_DEFINE_ERROR(ConnectError, "connect")
LATENTWIRE_DEFINE_ERROR(IoError, "io")
LATENTWIRE_DEFINE_ERROR(TapeError, "tape")

#undef LATENTWIRE_DEFINE_ERROR

}  // namespace latentwire

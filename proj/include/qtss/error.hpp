// Copyright 2026 The qtss Authors
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
#include <string_view>

namespace qtss {

enum class ErrorKind {
  // arithmetic and linear algebra
  ZeroInverse,
  DuplicateNode,
  ZeroNode,
  IndexOutOfRange,
  Singular,
  DimensionMismatch,
  // scheme construction
  InvalidThreshold,
  NonPrimeModulus,
  ModulusTooSmall,
  NodesUnsuitable,
  EnumerationTooLarge,
  // simulator
  EmptyState,
  LengthMismatch,
  SingularMap,
  OverlappingRegisters,
  DimensionCapExceeded,
  LabelOverflow,
  // protocol
  WrongSetSize,
  CombinerLocalityViolation,
  InvalidShareCount,
  InvalidParams,
  WrongModulus,
  // front-end
  ConfigInvalid,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroInverse: return "ZeroInverse";
    case ErrorKind::DuplicateNode: return "DuplicateNode";
    case ErrorKind::ZeroNode: return "ZeroNode";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::Singular: return "Singular";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidThreshold: return "InvalidThreshold";
    case ErrorKind::NonPrimeModulus: return "NonPrimeModulus";
    case ErrorKind::ModulusTooSmall: return "ModulusTooSmall";
    case ErrorKind::NodesUnsuitable: return "NodesUnsuitable";
    case ErrorKind::EnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorKind::EmptyState: return "EmptyState";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::SingularMap: return "SingularMap";
    case ErrorKind::OverlappingRegisters: return "OverlappingRegisters";
    case ErrorKind::DimensionCapExceeded: return "DimensionCapExceeded";
    case ErrorKind::LabelOverflow: return "LabelOverflow";
    case ErrorKind::WrongSetSize: return "WrongSetSize";
    case ErrorKind::CombinerLocalityViolation: return "CombinerLocalityViolation";
    case ErrorKind::InvalidShareCount: return "InvalidShareCount";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::WrongModulus: return "WrongModulus";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace qtss

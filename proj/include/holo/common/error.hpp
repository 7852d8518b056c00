// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace holo {

/// Error categories raised across the pipeline. Each module documents which
/// codes it can produce.
enum class Errc {
  DimensionError,
  InvalidTransform,
  EmptyInput,
  FusionMismatch,
  EmptyFrame,
  BitstreamError,
  SizeError,
  HeaderError,
  PayloadTooLarge,
  ProtocolError,
  ConfigError,
  NoSuchSession,
  SessionFull,
  AlreadyJoined,
  NotAMember,
  ScenarioError,
  NoData,
  IoError,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  // Bitstream errors carry the byte offset where parsing failed.
  Error(Errc code, const std::string& what, std::size_t offset)
      : std::runtime_error(std::string(errc_name(code)) + " at byte " + std::to_string(offset) +
                           ": " + what),
        code_(code),
        offset_(offset) {}

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  Errc code_;
  std::optional<std::size_t> offset_;
};

inline std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::DimensionError: return "DimensionError";
    case Errc::InvalidTransform: return "InvalidTransform";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::FusionMismatch: return "FusionMismatch";
    case Errc::EmptyFrame: return "EmptyFrame";
    case Errc::BitstreamError: return "BitstreamError";
    case Errc::SizeError: return "SizeError";
    case Errc::HeaderError: return "HeaderError";
    case Errc::PayloadTooLarge: return "PayloadTooLarge";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::ConfigError: return "ConfigError";
    case Errc::NoSuchSession: return "NoSuchSession";
    case Errc::SessionFull: return "SessionFull";
    case Errc::AlreadyJoined: return "AlreadyJoined";
    case Errc::NotAMember: return "NotAMember";
    case Errc::ScenarioError: return "ScenarioError";
    case Errc::NoData: return "NoData";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace holo

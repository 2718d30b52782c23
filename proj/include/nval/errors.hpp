#pragma once

#include <stdexcept>
#include <string>

namespace nval {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Model layer
struct SyntaxError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct DanglingEdgeError : Error { using Error::Error; };
struct UnknownChannelError : Error { using Error::Error; };
struct MissingPropertyError : Error { using Error::Error; };

// Action layer
struct ManifestError : Error { using Error::Error; };
struct DescribeError : Error { using Error::Error; };
struct DuplicateIdError : Error { using Error::Error; };
struct KindMismatchError : Error { using Error::Error; };
struct ProtocolError : Error { using Error::Error; };
struct TimeoutError : Error { using Error::Error; };

// Planner / orchestrator layer
struct IllegalCallError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct AlreadyDeployedError : Error { using Error::Error; };
struct NotDeployedError : Error { using Error::Error; };

}  // namespace nval

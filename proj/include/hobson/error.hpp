#pragma once

#include <stdexcept>
#include <string>

namespace hobson {

// Base of every error the library throws. Callers that only care about
// "something in the harness failed" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input documents: datasets, registries, configs, profiles.
class InputError : public Error {
 public:
  using Error::Error;
};

// A precondition on an operation's arguments was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace hobson

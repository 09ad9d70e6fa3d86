// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <variant>

namespace scispace {

// Every fallible operation returns Result<T>; the error set is closed so
// callers can switch on it and the wire layer can map codes losslessly.
enum class Err : int {
  // paths / placement
  malformed_path = 1,
  zero_dtn_count,
  // self-describing file format
  too_many_attributes,
  name_too_long,
  text_too_long,
  duplicate_attribute,
  bad_magic,
  unsupported_version,
  truncated,
  trailing_bytes,
  malformed_utf8,
  // wire framing
  payload_too_large,
  oversized_frame,
  bad_frame,
  // backend storage
  escapes_root,
  io_failure,
  not_found,
  not_a_file,
  // metadata shard
  wrong_shard,
  unknown_namespace,
  conflict,
  bad_name,
  exists,
  // discovery / workspace
  shard_unavailable,
  queue_full,
  not_visible,
  lock_held,
  // query language
  syntax_error,
  type_error,
  // generic service-side
  bad_request,
  unsupported,
  internal,
};

const char* err_name(Err e);

struct Error {
  Err code;
  std::string message;
};

inline Error make_error(Err code, std::string message = {}) {
  return Error{code, std::move(message)};
}

template <typename T>
class [[nodiscard]] Result {
 public:
  Result(T value) : v_(std::move(value)) {}
  Result(Error error) : v_(std::move(error)) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& { return std::get<T>(v_); }
  T& value() & { return std::get<T>(v_); }
  T take() { return std::move(std::get<T>(v_)); }

  const Error& error() const { return std::get<Error>(v_); }
  Err code() const { return error().code; }

 private:
  std::variant<T, Error> v_;
};

struct Unit {};

using Status = Result<Unit>;

inline Status ok_status() { return Status(Unit{}); }

}  // namespace scispace

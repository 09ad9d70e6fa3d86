// SPDX-License-Identifier: Apache-2.0

#include "scispace/core.hpp"

#include <algorithm>
#include <chrono>

namespace scispace {

const char* err_name(Err e) {
  switch (e) {
    case Err::malformed_path: return "malformed_path";
    case Err::zero_dtn_count: return "zero_dtn_count";
    case Err::too_many_attributes: return "too_many_attributes";
    case Err::name_too_long: return "name_too_long";
    case Err::text_too_long: return "text_too_long";
    case Err::duplicate_attribute: return "duplicate_attribute";
    case Err::bad_magic: return "bad_magic";
    case Err::unsupported_version: return "unsupported_version";
    case Err::truncated: return "truncated";
    case Err::trailing_bytes: return "trailing_bytes";
    case Err::malformed_utf8: return "malformed_utf8";
    case Err::payload_too_large: return "payload_too_large";
    case Err::oversized_frame: return "oversized_frame";
    case Err::bad_frame: return "bad_frame";
    case Err::escapes_root: return "escapes_root";
    case Err::io_failure: return "io_failure";
    case Err::not_found: return "not_found";
    case Err::not_a_file: return "not_a_file";
    case Err::wrong_shard: return "wrong_shard";
    case Err::unknown_namespace: return "unknown_namespace";
    case Err::conflict: return "conflict";
    case Err::bad_name: return "bad_name";
    case Err::exists: return "exists";
    case Err::shard_unavailable: return "shard_unavailable";
    case Err::queue_full: return "queue_full";
    case Err::not_visible: return "not_visible";
    case Err::lock_held: return "lock_held";
    case Err::syntax_error: return "syntax_error";
    case Err::type_error: return "type_error";
    case Err::bad_request: return "bad_request";
    case Err::unsupported: return "unsupported";
    case Err::internal: return "internal";
  }
  return "unknown";
}

bool valid_utf8(std::string_view bytes) {
  size_t i = 0;
  const size_t n = bytes.size();
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(bytes[i]);
    size_t len;
    uint32_t cp;
    if (c < 0x80) {
      i += 1;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (size_t k = 1; k < len; ++k) {
      const unsigned char cc = static_cast<unsigned char>(bytes[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if (len == 2 && cp < 0x80) return false;
    if (len == 3 && cp < 0x800) return false;
    if (len == 4 && cp < 0x10000) return false;
    if (cp >= 0xD800 && cp <= 0xDFFF) return false;
    if (cp > 0x10FFFF) return false;
    i += len;
  }
  return true;
}

bool valid_path_segment(std::string_view seg) {
  if (seg.empty() || seg == "." || seg == "..") return false;
  if (seg.find('/') != std::string_view::npos) return false;
  if (seg.find('\0') != std::string_view::npos) return false;
  return true;
}

std::string WorkspacePath::display() const {
  std::string out;
  out.reserve(1 + ns.size() + rel.size() * 8);
  out.push_back('/');
  out += ns;
  for (const auto& seg : rel) {
    out.push_back('/');
    out += seg;
  }
  return out;
}

std::string WorkspacePath::backend_rel() const {
  std::string out = ns;
  for (const auto& seg : rel) {
    out.push_back('/');
    out += seg;
  }
  return out;
}

Result<WorkspacePath> normalize_path(std::string_view raw) {
  if (raw.empty()) return make_error(Err::malformed_path, "empty path");
  if (raw.find('\0') != std::string_view::npos)
    return make_error(Err::malformed_path, "NUL byte in path");
  if (!valid_utf8(raw)) return make_error(Err::malformed_path, "path is not valid UTF-8");

  WorkspacePath path;
  size_t i = 0;
  bool first = true;
  while (i < raw.size()) {
    while (i < raw.size() && raw[i] == '/') ++i;  // collapse runs of '/'
    size_t start = i;
    while (i < raw.size() && raw[i] != '/') ++i;
    if (i == start) break;
    std::string_view seg = raw.substr(start, i - start);
    if (seg == "." || seg == "..")
      return make_error(Err::malformed_path, "traversal segment in path");
    if (first) {
      path.ns = std::string(seg);
      first = false;
    } else {
      path.rel.emplace_back(seg);
    }
  }
  if (first) return make_error(Err::malformed_path, "missing namespace segment");
  return path;
}

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 14695981039346656037ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

Result<uint32_t> place_display(std::string_view display, uint32_t dtn_count) {
  if (dtn_count == 0) return make_error(Err::zero_dtn_count, "placement over zero DTNs");
  return static_cast<uint32_t>(fnv1a64(display) % dtn_count);
}

Result<uint32_t> place(const WorkspacePath& path, uint32_t dtn_count) {
  return place_display(path.display(), dtn_count);
}

Result<std::vector<DtnDescriptor>> finalize_dtn_list(std::vector<DtnDescriptor> dtns) {
  std::sort(dtns.begin(), dtns.end(),
            [](const DtnDescriptor& a, const DtnDescriptor& b) { return a.id < b.id; });
  for (size_t i = 0; i < dtns.size(); ++i) {
    if (i > 0 && dtns[i].id == dtns[i - 1].id)
      return make_error(Err::conflict, "duplicate DTN id: " + dtns[i].id);
    dtns[i].index = static_cast<uint32_t>(i);
  }
  return dtns;
}

int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

int64_t steady_now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace scispace

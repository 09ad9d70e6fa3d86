// SPDX-License-Identifier: Apache-2.0

#include "scispace/config.hpp"

#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace scispace {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

Result<uint64_t> parse_u64(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    const uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    return make_error(Err::bad_request, what + ": not a number: " + s);
  }
}

}  // namespace

Result<IndexMode> parse_index_mode(std::string_view s) {
  if (s == "inline-sync") return IndexMode::inline_sync;
  if (s == "inline-async") return IndexMode::inline_async;
  if (s == "lw-offline") return IndexMode::lw_offline;
  return make_error(Err::bad_request, "unknown index mode: " + std::string(s));
}

const char* index_mode_name(IndexMode m) {
  switch (m) {
    case IndexMode::inline_sync: return "inline-sync";
    case IndexMode::inline_async: return "inline-async";
    case IndexMode::lw_offline: return "lw-offline";
  }
  return "?";
}

Result<CollabConfig> parse_collab_config(std::string_view text, const fs::path& base_dir) {
  CollabConfig cfg;
  std::string section;
  DtnDescriptor cur_dtn;
  bool dtn_open = false;
  size_t lineno = 0;

  auto flush_dtn = [&]() -> Status {
    if (!dtn_open) return ok_status();
    if (cur_dtn.id.empty())
      return make_error(Err::bad_request, "[dtn] section without id");
    if (cur_dtn.backend_root.empty())
      return make_error(Err::bad_request, "[dtn] " + cur_dtn.id + " without backend_root");
    cfg.dtns.push_back(cur_dtn);
    cur_dtn = DtnDescriptor{};
    dtn_open = false;
    return ok_status();
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[' && line.back() == ']') {
      if (auto s = flush_dtn(); !s.ok()) return s.error();
      section = trim(line.substr(1, line.size() - 2));
      if (section == "dtn") dtn_open = true;
      continue;
    }

    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      return make_error(Err::bad_request,
                        "config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (section == "collaboration") {
      if (key == "name") cfg.name = value;
      else if (key == "collaborator") cfg.collaborator = value;
      else if (key == "flag_mode") {
        if (value == "marker-tree") cfg.flag_mode = FlagMode::marker_tree;
        else if (value == "native-xattr") cfg.flag_mode = FlagMode::native_xattr;
        else return make_error(Err::bad_request, "unknown flag_mode: " + value);
      }
    } else if (section == "dtn") {
      if (key == "id") cur_dtn.id = value;
      else if (key == "host") cur_dtn.host = value;
      else if (key == "port") {
        auto v = parse_u64(value, "port");
        if (!v.ok()) return v.error();
        cur_dtn.port = static_cast<uint16_t>(v.value());
      } else if (key == "backend_root") {
        fs::path p(value);
        cur_dtn.backend_root = p.is_absolute() ? p : base_dir / p;
      }
    } else if (section == "sds") {
      if (key == "mode") {
        auto m = parse_index_mode(value);
        if (!m.ok()) return m.error();
        cfg.mode = m.value();
      } else if (key == "flush_count") {
        auto v = parse_u64(value, key);
        if (!v.ok()) return v.error();
        cfg.thresholds.flush_count = static_cast<size_t>(v.value());
      } else if (key == "flush_ms") {
        auto v = parse_u64(value, key);
        if (!v.ok()) return v.error();
        cfg.thresholds.flush_ms = static_cast<int64_t>(v.value());
      } else if (key == "flush_bytes") {
        auto v = parse_u64(value, key);
        if (!v.ok()) return v.error();
        cfg.thresholds.flush_bytes = v.value();
      } else if (key == "spec_file") {
        fs::path p(value);
        cfg.spec_file = p.is_absolute() ? p : base_dir / p;
      }
    } else if (section == "namespaces") {
      // "<name> = <owner> <scope>"
      std::istringstream vs(value);
      NamespaceTemplate t;
      t.name = key;
      std::string scope;
      vs >> t.owner >> scope;
      if (t.owner.empty() || (scope != "local" && scope != "global"))
        return make_error(Err::bad_request,
                          "namespace " + key + ": expected \"<owner> local|global\"");
      t.scope = scope == "local" ? Scope::local : Scope::global;
      cfg.namespaces.push_back(std::move(t));
    } else if (section.empty()) {
      return make_error(Err::bad_request,
                        "config line " + std::to_string(lineno) + ": key outside any section");
    }
    // unknown sections are tolerated
  }
  if (auto s = flush_dtn(); !s.ok()) return s.error();

  if (cfg.dtns.empty()) return make_error(Err::bad_request, "config has no [dtn] sections");
  auto finalized = finalize_dtn_list(std::move(cfg.dtns));
  if (!finalized.ok()) return finalized.error();
  cfg.dtns = finalized.take();

  if (!cfg.spec_file.empty()) {
    auto specs = load_spec_file(cfg.spec_file);
    if (!specs.ok()) return specs.error();
    cfg.specs = specs.take();
  }
  if (cfg.collaborator.empty()) cfg.collaborator = "anonymous";
  return cfg;
}

Result<CollabConfig> load_collab_config(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return make_error(Err::not_found, p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_collab_config(buf.str(), p.has_parent_path() ? p.parent_path() : fs::path("."));
}

}  // namespace scispace

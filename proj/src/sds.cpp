// SPDX-License-Identifier: Apache-2.0

#include "scispace/sds.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace scispace {

namespace {
constexpr uint64_t kCompactThresholdBytes = 8ull * 1024 * 1024;

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}
}  // namespace

Result<SpecSet> parse_spec_set(std::string_view text) {
  SpecSet specs;
  std::unordered_set<std::string> seen;
  size_t lineno = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const size_t colon = stripped.rfind(':');
    if (colon == std::string::npos)
      return make_error(Err::bad_request,
                        "spec line " + std::to_string(lineno) + ": expected name:type");
    AttributeSpec spec;
    spec.name = trim(stripped.substr(0, colon));
    const std::string type = trim(stripped.substr(colon + 1));
    if (spec.name.empty())
      return make_error(Err::bad_request, "spec line " + std::to_string(lineno) + ": empty name");
    if (type == "int") spec.type = ValueTag::int_val;
    else if (type == "float") spec.type = ValueTag::float_val;
    else if (type == "text") spec.type = ValueTag::text_val;
    else
      return make_error(Err::bad_request,
                        "spec line " + std::to_string(lineno) + ": unknown type " + type);
    if (!seen.insert(spec.name).second)
      return make_error(Err::duplicate_attribute, spec.name);
    specs.push_back(std::move(spec));
  }
  return specs;
}

Result<SpecSet> load_spec_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return make_error(Err::not_found, p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec_set(buf.str());
}

std::vector<AttributeTriple> extract_attributes(const std::string& file_display,
                                                const std::vector<uint8_t>& file_bytes,
                                                const SpecSet& specs,
                                                std::optional<StatContext> stat_ctx) {
  std::vector<AttributeTriple> out;
  auto doc = sdf_decode(file_bytes);
  if (doc.ok()) {
    for (const auto& [name, value] : doc.value().attributes) {
      auto spec = std::find_if(specs.begin(), specs.end(),
                               [&](const AttributeSpec& s) { return s.name == name; });
      if (spec == specs.end() || spec->type != value.tag) continue;  // mismatches skipped
      out.push_back(AttributeTriple{name, file_display, value, TripleSource::extracted});
    }
  } else if (!stat_ctx) {
    return out;  // undecodable and no stat context: nothing to record
  }
  if (stat_ctx) {
    out.push_back(AttributeTriple{kFsSizeAttr, file_display,
                                  AttributeValue::of_int(static_cast<int64_t>(stat_ctx->size)),
                                  TripleSource::extracted});
    out.push_back(AttributeTriple{kFsMtimeAttr, file_display,
                                  AttributeValue::of_int(stat_ctx->mtime_ms),
                                  TripleSource::extracted});
  }
  return out;
}

bool like_match(std::string_view pattern, std::string_view text) {
  // iterative wildcard match with backtracking over the last '%'
  size_t p = 0, t = 0;
  size_t star_p = std::string_view::npos, star_t = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '_' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '%') {
      star_p = p++;
      star_t = t;
    } else if (star_p != std::string_view::npos) {
      p = star_p + 1;
      t = ++star_t;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '%') ++p;
  return p == pattern.size();
}

bool value_matches(QueryOp op, const AttributeValue& literal, const AttributeValue& stored) {
  switch (op) {
    case QueryOp::eq:
      return stored == literal;
    case QueryOp::gt:
    case QueryOp::lt: {
      double lhs, rhs;
      if (literal.tag == ValueTag::int_val) {
        if (stored.tag != ValueTag::int_val) return false;
        return op == QueryOp::gt ? stored.i > literal.i : stored.i < literal.i;
      }
      if (literal.tag != ValueTag::float_val) return false;
      if (stored.tag == ValueTag::float_val) lhs = stored.f;
      else if (stored.tag == ValueTag::int_val) lhs = static_cast<double>(stored.i);
      else return false;
      rhs = literal.f;
      return op == QueryOp::gt ? lhs > rhs : lhs < rhs;
    }
    case QueryOp::like:
      if (literal.tag != ValueTag::text_val || stored.tag != ValueTag::text_val) return false;
      return like_match(literal.text, stored.text);
  }
  return false;
}

// --- discovery shard --------------------------------------------------------

Result<std::unique_ptr<DiscoveryShard>> DiscoveryShard::open(const fs::path& dir) {
  std::unique_ptr<DiscoveryShard> shard(new DiscoveryShard());
  auto apply = [&shard](uint16_t type, const std::vector<uint8_t>& payload) {
    auto parsed = FieldReader::parse(payload);
    if (!parsed.ok()) return;
    const FieldReader& f = parsed.value();
    switch (type) {
      case disclog::kReindex: {
        auto file = f.string(1);
        if (!file) break;
        std::vector<AttributeTriple> triples;
        for (const auto& tb : f.repeated(2)) {
          auto t = triple_from_bytes(tb);
          if (t.ok()) triples.push_back(t.take());
        }
        shard->apply_reindex(*file, triples);
        break;
      }
      case disclog::kManualTag: {
        auto tb = f.bytes(1);
        if (!tb) break;
        auto t = triple_from_bytes(*tb);
        if (t.ok()) shard->apply_manual(t.value());
        break;
      }
      case disclog::kRemoveFile: {
        auto file = f.string(1);
        if (file) shard->apply_remove(*file);
        break;
      }
      case disclog::kReindexBulk: {
        for (const auto& fb : f.repeated(2)) {
          auto block = FieldReader::parse(fb);
          if (!block.ok()) continue;
          auto file = block.value().string(1);
          if (!file) continue;
          std::vector<AttributeTriple> triples;
          for (const auto& tb : block.value().repeated(2)) {
            auto t = triple_from_bytes(tb);
            if (t.ok()) triples.push_back(t.take());
          }
          shard->apply_reindex(*file, triples);
        }
        break;
      }
      default:
        break;
    }
  };
  if (auto s = shard->log_.open(dir, "disc", apply); !s.ok()) return s.error();
  return shard;
}

void DiscoveryShard::apply_reindex(const std::string& file,
                                   const std::vector<AttributeTriple>& extracted) {
  // drop the file's previous extracted triples
  auto fit = attrs_of_file_.find(file);
  if (fit != attrs_of_file_.end()) {
    for (auto it = fit->second.begin(); it != fit->second.end();) {
      auto& files = by_attr_[*it];
      auto sit = files.find(file);
      if (sit != files.end() && sit->second.source == TripleSource::extracted) {
        files.erase(sit);
        --triple_count_;
        if (files.empty()) by_attr_.erase(*it);
        it = fit->second.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (const auto& t : extracted) {
    auto& slot = by_attr_[t.attribute];
    auto sit = slot.find(file);
    if (sit != slot.end()) {
      if (sit->second.source == TripleSource::manual) continue;  // manual survives
      sit->second = Stored{t.value, TripleSource::extracted};
    } else {
      slot.emplace(file, Stored{t.value, TripleSource::extracted});
      ++triple_count_;
    }
    attrs_of_file_[file].insert(t.attribute);
  }
  if (fit != attrs_of_file_.end() && fit->second.empty()) attrs_of_file_.erase(file);
}

void DiscoveryShard::apply_manual(const AttributeTriple& t) {
  auto& slot = by_attr_[t.attribute];
  auto sit = slot.find(t.file);
  if (sit != slot.end()) {
    sit->second = Stored{t.value, TripleSource::manual};
  } else {
    slot.emplace(t.file, Stored{t.value, TripleSource::manual});
    ++triple_count_;
  }
  attrs_of_file_[t.file].insert(t.attribute);
}

void DiscoveryShard::apply_remove(const std::string& file) {
  auto fit = attrs_of_file_.find(file);
  if (fit == attrs_of_file_.end()) return;
  for (const auto& attr : fit->second) {
    auto& files = by_attr_[attr];
    if (files.erase(file) > 0) --triple_count_;
    if (files.empty()) by_attr_.erase(attr);
  }
  attrs_of_file_.erase(fit);
}

Status DiscoveryShard::maybe_compact() {
  if (log_.log_bytes() <= kCompactThresholdBytes) return ok_status();
  return log_.compact([this](const ShardLog::EmitFn& emit) {
    // one reindex record per file for extracted triples, manual tags after
    std::unordered_map<std::string, std::vector<AttributeTriple>> extracted;
    std::vector<AttributeTriple> manual;
    for (const auto& [attr, files] : by_attr_) {
      for (const auto& [file, stored] : files) {
        AttributeTriple t{attr, file, stored.value, stored.source};
        if (stored.source == TripleSource::manual) manual.push_back(std::move(t));
        else extracted[file].push_back(std::move(t));
      }
    }
    for (const auto& [file, triples] : extracted) {
      FieldWriter w;
      w.add_string(1, file);
      for (const auto& t : triples) w.add_bytes(2, triple_to_bytes(t));
      emit(disclog::kReindex, w.finish());
    }
    for (const auto& t : manual) {
      FieldWriter w;
      w.add_bytes(1, triple_to_bytes(t));
      emit(disclog::kManualTag, w.finish());
    }
  });
}

Status DiscoveryShard::reindex_bulk(const std::vector<FileTriples>& files) {
  if (files.empty()) return ok_status();
  FieldWriter w;
  for (const auto& ft : files) {
    FieldWriter block;
    block.add_string(1, ft.file);
    // replay keys triples off the block's file field, so the embedded file
    // only needs fixing when a caller hands in a foreign triple
    for (const auto& t : ft.triples) {
      if (t.file == ft.file) {
        block.add_bytes(2, triple_to_bytes(t));
      } else {
        AttributeTriple copy = t;
        copy.file = ft.file;
        block.add_bytes(2, triple_to_bytes(copy));
      }
    }
    w.add_bytes(2, block.finish());
  }
  if (auto appended = log_.append(disclog::kReindexBulk, w.finish()); !appended.ok())
    return appended.error();
  for (const auto& ft : files) apply_reindex(ft.file, ft.triples);
  return maybe_compact();
}

Status DiscoveryShard::reindex_bulk_encoded(const std::vector<std::vector<uint8_t>>& encoded_blocks,
                                            const std::vector<FileTriples>& decoded) {
  if (decoded.empty()) return ok_status();
  FieldWriter w;
  for (const auto& block : encoded_blocks) w.add_bytes(2, block);
  if (auto appended = log_.append(disclog::kReindexBulk, w.finish()); !appended.ok())
    return appended.error();
  for (const auto& ft : decoded) apply_reindex(ft.file, ft.triples);
  return maybe_compact();
}

Status DiscoveryShard::reindex_file(const std::string& file,
                                    const std::vector<AttributeTriple>& extracted) {
  FieldWriter w;
  w.add_string(1, file);
  for (const auto& t : extracted) {
    AttributeTriple copy = t;
    copy.file = file;
    copy.source = TripleSource::extracted;
    w.add_bytes(2, triple_to_bytes(copy));
  }
  if (auto appended = log_.append(disclog::kReindex, w.finish()); !appended.ok())
    return appended.error();
  apply_reindex(file, extracted);
  return maybe_compact();
}

Status DiscoveryShard::tag_manual(const std::string& file, const std::string& attribute,
                                  const AttributeValue& value) {
  AttributeTriple t{attribute, file, value, TripleSource::manual};
  FieldWriter w;
  w.add_bytes(1, triple_to_bytes(t));
  if (auto appended = log_.append(disclog::kManualTag, w.finish()); !appended.ok())
    return appended.error();
  apply_manual(t);
  return maybe_compact();
}

Status DiscoveryShard::remove_file(const std::string& file) {
  if (attrs_of_file_.find(file) == attrs_of_file_.end()) return ok_status();
  FieldWriter w;
  w.add_string(1, file);
  if (auto appended = log_.append(disclog::kRemoveFile, w.finish()); !appended.ok())
    return appended.error();
  apply_remove(file);
  return maybe_compact();
}

std::vector<std::string> DiscoveryShard::eval_clause(const std::string& attribute, QueryOp op,
                                                     const AttributeValue& literal) const {
  std::vector<std::string> out;
  auto it = by_attr_.find(attribute);
  if (it == by_attr_.end()) return out;
  for (const auto& [file, stored] : it->second)
    if (value_matches(op, literal, stored.value)) out.push_back(file);
  return out;  // file-ordered by map
}

std::vector<AttributeTriple> DiscoveryShard::dump_sorted() const {
  std::vector<AttributeTriple> out;
  out.reserve(triple_count_);
  for (const auto& [attr, files] : by_attr_)
    for (const auto& [file, stored] : files)
      out.push_back(AttributeTriple{attr, file, stored.value, stored.source});
  return out;  // (attribute, file)-ordered by construction
}

// --- index queue ------------------------------------------------------------

Status IndexQueue::enqueue(const std::string& path_display, uint64_t size_hint) {
  if (queued_.count(path_display)) return ok_status();  // coalesce
  if (fifo_.size() >= capacity_)
    return make_error(Err::queue_full, std::to_string(fifo_.size()) + " pending");
  fifo_.push_back(Entry{path_display, size_hint, steady_now_ms()});
  queued_.insert(path_display);
  pending_bytes_ += size_hint;
  return ok_status();
}

std::vector<std::string> IndexQueue::take_batch() {
  std::vector<std::string> out;
  const size_t n = std::min(thresholds_.flush_count, fifo_.size());
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    Entry e = std::move(fifo_.front());
    fifo_.pop_front();
    queued_.erase(e.path);
    pending_bytes_ -= e.size;
    out.push_back(std::move(e.path));
  }
  return out;
}

bool IndexQueue::threshold_fired(int64_t now_steady_ms) const {
  if (fifo_.empty()) return false;
  if (fifo_.size() >= thresholds_.flush_count) return true;
  if (pending_bytes_ >= thresholds_.flush_bytes) return true;
  return now_steady_ms - fifo_.front().enqueued_ms >= thresholds_.flush_ms;
}

std::optional<int64_t> IndexQueue::age_deadline() const {
  if (fifo_.empty()) return std::nullopt;
  return fifo_.front().enqueued_ms + thresholds_.flush_ms;
}

// --- indexing entry points --------------------------------------------------

Status index_sync(const std::string& file_display, const std::vector<uint8_t>& file_bytes,
                  std::optional<StatContext> stat_ctx, const SpecSet& specs,
                  DiscoveryShard& shard) {
  return shard.reindex_file(file_display, extract_attributes(file_display, file_bytes, specs, stat_ctx));
}

Result<IndexReport> index_offline(const fs::path& backend_root, std::string_view selector,
                                  const SpecSet& specs, DiscoveryShard& shard) {
  IndexReport report;
  const int64_t scan_start = steady_now_ms();
  std::vector<BackendEntry> files;
  auto walk = bk_walk(
      backend_root, selector, [](const BackendEntry&) { return true; },
      [&](const BackendEntry& e) { files.push_back(e); });
  if (!walk.ok()) return walk.error();
  report.scan_ms = steady_now_ms() - scan_start;
  report.files_seen = files.size();

  for (const auto& entry : files) {
    if (!entry.rel_path.ends_with(".sdf")) continue;  // offline pass keys on suffix
    const int64_t t0 = steady_now_ms();
    auto bytes = bk_get(backend_root, entry.rel_path);
    if (!bytes.ok()) continue;  // vanished between scan and read
    const std::string display = "/" + entry.rel_path;
    auto triples = extract_attributes(display, bytes.value(),
                                      specs, StatContext{entry.size, entry.mtime_ms});
    const int64_t t1 = steady_now_ms();
    if (auto s = shard.reindex_file(display, triples); !s.ok()) return s.error();
    const int64_t t2 = steady_now_ms();
    report.extract_ms += t1 - t0;
    report.store_ms += t2 - t1;
    report.files_indexed += 1;
    report.triples_written += triples.size();
  }
  return report;
}

}  // namespace scispace

// SPDX-License-Identifier: Apache-2.0

#include "scispace/shard_service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "scispace/shard_client.hpp"

namespace fs = std::filesystem;

namespace scispace {

namespace {

std::string display_to_backend_rel(const std::string& display) {
  return display.empty() || display.front() != '/' ? display : display.substr(1);
}

constexpr size_t kTriplePushFilesPerMessage = 256;

}  // namespace

Result<size_t> drain_step(IndexQueue& queue, DiscoveryShard& shard, const SpecSet& specs,
                          const fs::path& backend_root) {
  size_t indexed = 0;
  for (const auto& path : queue.take_batch()) {
    const std::string rel = display_to_backend_rel(path);
    auto st = bk_stat(backend_root, rel);
    auto bytes = st.ok() ? bk_get(backend_root, rel)
                         : Result<std::vector<uint8_t>>(st.error());
    if (!bytes.ok()) {
      if (bytes.code() == Err::not_found || bytes.code() == Err::not_a_file) {
        std::fprintf(stderr, "scispace: %s vanished before indexing, dropped\n", path.c_str());
        continue;
      }
      return bytes.error();
    }
    auto triples = extract_attributes(path, bytes.value(), specs,
                                      StatContext{st.value().size, st.value().mtime_ms});
    if (auto s = shard.reindex_file(path, triples); !s.ok()) return s.error();
    ++indexed;
  }
  return indexed;
}

ShardService::ShardService(const CollabConfig& cfg, uint32_t dtn_index)
    : dtn_index_(dtn_index),
      dtn_count_(cfg.dtn_count()),
      backend_root_(cfg.dtns.at(dtn_index).backend_root),
      specs_(cfg.specs),
      queue_(cfg.thresholds) {
  for (const auto& d : cfg.dtns) {
    roots_by_dtn_.push_back(d.backend_root);
    peers_.emplace_back(d.host, d.port);
  }
  peer_clients_.resize(roots_by_dtn_.size());
}

Result<std::unique_ptr<ShardService>> ShardService::open(const CollabConfig& cfg,
                                                         uint32_t dtn_index) {
  if (dtn_index >= cfg.dtns.size())
    return make_error(Err::bad_request, "dtn index out of range");
  std::unique_ptr<ShardService> svc(new ShardService(cfg, dtn_index));
  const fs::path shard_dir = svc->backend_root_ / kInternalDirName / "shard";
  auto meta = MetadataShard::open(shard_dir, dtn_index, cfg.dtn_count());
  if (!meta.ok()) return meta.error();
  svc->meta_ = meta.take();
  auto disc = DiscoveryShard::open(shard_dir);
  if (!disc.ok()) return disc.error();
  svc->disc_ = disc.take();
  svc->worker_ = std::thread([raw = svc.get()] { raw->worker_loop(); });
  return svc;
}

ShardService::~ShardService() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void ShardService::set_peers(std::vector<std::pair<std::string, uint16_t>> peers) {
  std::lock_guard<std::mutex> lock(peers_mu_);
  peers_ = std::move(peers);
  peer_clients_.clear();
  peer_clients_.resize(peers_.size());
}

void ShardService::worker_loop() {
  while (true) {
    {
      std::unique_lock<std::mutex> lock(mu_);
      if (stopping_) return;
      if (auto deadline = queue_.age_deadline()) {
        const auto until =
            std::chrono::steady_clock::time_point(std::chrono::milliseconds(*deadline));
        cv_.wait_until(lock, until,
                       [&] { return stopping_ || queue_.threshold_fired(steady_now_ms()); });
      } else {
        cv_.wait(lock, [&] { return stopping_ || queue_.pending() > 0; });
      }
      if (stopping_) return;
      if (!queue_.threshold_fired(steady_now_ms())) continue;
    }
    // drains run under the maintenance lock, like offline passes
    std::lock_guard<std::mutex> maintenance(maintenance_mu_);
    std::lock_guard<std::mutex> lock(mu_);
    auto drained = drain_step(queue_, *disc_, specs_, backend_root_);
    if (!drained.ok())
      std::fprintf(stderr, "scispace: drain failed: %s\n", drained.error().message.c_str());
  }
}

Result<size_t> ShardService::flush_queue_locked() {
  size_t total = 0;
  while (queue_.pending() > 0) {
    auto drained = drain_step(queue_, *disc_, specs_, backend_root_);
    if (!drained.ok()) return drained.error();
    total += drained.value();
  }
  return total;
}

Result<size_t> ShardService::flush_queue() {
  std::lock_guard<std::mutex> maintenance(maintenance_mu_);
  std::lock_guard<std::mutex> lock(mu_);
  return flush_queue_locked();
}

Frame ShardService::handle(const Frame& request) {
  Frame resp;
  resp.request_id = request.request_id;
  auto parsed = FieldReader::parse(request.payload);
  if (!parsed.ok()) {
    resp.msg_type = static_cast<uint16_t>(MsgType::error);
    resp.payload = encode_error_payload(Err::bad_frame, parsed.error().message);
    return resp;
  }
  auto result = dispatch(request.msg_type, parsed.value());
  if (result.ok()) {
    resp.msg_type = static_cast<uint16_t>(MsgType::result);
    resp.payload = result.take();
  } else {
    resp.msg_type = static_cast<uint16_t>(MsgType::error);
    resp.payload = encode_error_payload(result.code(), result.error().message);
  }
  return resp;
}

Result<std::vector<uint8_t>> ShardService::dispatch(uint16_t msg_type, const FieldReader& req) {
  // offline and flush manage their own locking (maintenance first)
  if (msg_type == static_cast<uint16_t>(MsgType::enqueue_index)) {
    const auto control = static_cast<IndexControl>(req.u8(1).value_or(0));
    if (control == IndexControl::offline) return handle_offline(req);
    if (control == IndexControl::flush) return handle_flush();
  }

  std::unique_lock<std::mutex> lock(mu_);
  switch (static_cast<MsgType>(msg_type)) {
    case MsgType::put_file: return handle_put_file(req);
    case MsgType::get_file: return handle_get_file(req);
    case MsgType::list_visible: return handle_list_visible(req);
    case MsgType::batch_export: return handle_batch_export(req);
    case MsgType::enqueue_index: {
      auto out = handle_enqueue_index(req);
      lock.unlock();
      cv_.notify_all();  // wake the worker for fresh enqueues
      return out;
    }
    case MsgType::query: return handle_query(req);
    case MsgType::tag: return handle_tag(req);
    case MsgType::register_ns: return handle_register_ns(req);
    default:
      return make_error(Err::unsupported, "unknown message type " + std::to_string(msg_type));
  }
}

Result<std::vector<uint8_t>> ShardService::handle_put_file(const FieldReader& req) {
  auto rb = req.bytes(1);
  if (!rb) return make_error(Err::bad_request, "put without record");
  auto record = record_from_bytes(*rb);
  if (!record.ok()) return record.error();
  if (auto s = meta_->put_record(record.value()); !s.ok()) return s.error();
  return FieldWriter().finish();
}

Result<std::vector<uint8_t>> ShardService::handle_get_file(const FieldReader& req) {
  auto path = req.string(1);
  if (!path) return make_error(Err::bad_request, "get without path");
  const std::string requester = req.string(2).value_or("");
  auto record = meta_->get_visible(*path, requester);
  if (!record.ok()) return record.error();
  FieldWriter w;
  w.add_bytes(1, record_to_bytes(record.value()));
  return w.finish();
}

Result<std::vector<uint8_t>> ShardService::handle_list_visible(const FieldReader& req) {
  const std::string requester = req.string(1).value_or("");
  FieldWriter w;
  for (const auto& r : meta_->list_visible(requester)) w.add_bytes(1, record_to_bytes(r));
  return w.finish();
}

Result<std::vector<uint8_t>> ShardService::handle_batch_export(const FieldReader& req) {
  std::vector<FileRecord> records;
  for (const auto& rb : req.repeated(2)) {
    auto r = record_from_bytes(rb);
    if (!r.ok()) return r.error();
    records.push_back(r.take());
  }
  auto count = meta_->batch_export(std::move(records));
  if (!count.ok()) return count.error();
  FieldWriter w;
  w.add_u64(1, count.value());
  return w.finish();
}

Result<std::vector<uint8_t>> ShardService::handle_enqueue_index(const FieldReader& req) {
  const auto control = static_cast<IndexControl>(req.u8(1).value_or(0));
  FieldWriter w;
  switch (control) {
    case IndexControl::enqueue_async: {
      auto path = req.string(2);
      if (!path) return make_error(Err::bad_request, "enqueue without path");
      uint64_t size_hint = 0;
      if (auto st = bk_stat(backend_root_, display_to_backend_rel(*path)); st.ok())
        size_hint = st.value().size;
      if (auto s = queue_.enqueue(*path, size_hint); !s.ok()) return s.error();
      w.add_u64(1, queue_.pending());
      return w.finish();
    }
    case IndexControl::index_sync_now: {
      auto path = req.string(2);
      if (!path) return make_error(Err::bad_request, "index without path");
      const std::string rel = display_to_backend_rel(*path);
      auto st = bk_stat(backend_root_, rel);
      if (!st.ok()) return st.error();
      auto bytes = bk_get(backend_root_, rel);
      if (!bytes.ok()) return bytes.error();
      if (auto s = index_sync(*path, bytes.value(),
                              StatContext{st.value().size, st.value().mtime_ms}, specs_, *disc_);
          !s.ok())
        return s.error();
      w.add_u64(1, 1);
      return w.finish();
    }
    case IndexControl::store_triples:
      return handle_store_triples(req);
    case IndexControl::scrub: {
      auto removed = meta_->scrub(roots_by_dtn_);
      if (!removed.ok()) return removed.error();
      for (const auto& path : removed.value()) {
        if (auto s = disc_->remove_file(path); !s.ok()) return s.error();
      }
      w.add_u64(1, removed.value().size());
      return w.finish();
    }
    case IndexControl::flush:
    case IndexControl::offline:
      return make_error(Err::internal, "control routed past its handler");
  }
  return make_error(Err::bad_request, "unknown index control");
}

Result<std::vector<uint8_t>> ShardService::handle_store_triples(const FieldReader& req) {
  std::vector<std::vector<uint8_t>> blocks = req.repeated(2);
  std::vector<DiscoveryShard::FileTriples> files;
  files.reserve(blocks.size());
  for (const auto& fb : blocks) {
    auto parsed = FieldReader::parse(fb);
    if (!parsed.ok()) return parsed.error();
    auto file = parsed.value().string(1);
    if (!file) return make_error(Err::bad_request, "file block without path");
    DiscoveryShard::FileTriples ft;
    ft.file = *file;
    for (const auto& tb : parsed.value().repeated(2)) {
      auto t = triple_from_bytes(tb);
      if (!t.ok()) return t.error();
      ft.triples.push_back(t.take());
    }
    files.push_back(std::move(ft));
  }
  // the blocks land in the log exactly as they crossed the wire
  if (auto s = disc_->reindex_bulk_encoded(blocks, files); !s.ok()) return s.error();
  FieldWriter w;
  w.add_u64(1, files.size());
  return w.finish();
}

Result<std::vector<uint8_t>> ShardService::handle_flush() {
  std::lock_guard<std::mutex> maintenance(maintenance_mu_);
  std::lock_guard<std::mutex> lock(mu_);
  auto drained = flush_queue_locked();
  if (!drained.ok()) return drained.error();
  FieldWriter w;
  w.add_u64(1, drained.value());
  return w.finish();
}

Result<std::vector<uint8_t>> ShardService::handle_offline(const FieldReader& req) {
  std::lock_guard<std::mutex> maintenance(maintenance_mu_);
  const std::string selector = req.string(3).value_or("");

  IndexReport report;
  const int64_t scan_start = steady_now_ms();
  std::vector<BackendEntry> files;
  auto walk = bk_walk(
      backend_root_, selector, [](const BackendEntry&) { return true; },
      [&](const BackendEntry& e) { files.push_back(e); });
  if (!walk.ok()) return walk.error();
  report.scan_ms = steady_now_ms() - scan_start;
  report.files_seen = files.size();

  // extract locally, route each file's triples to its placement shard
  std::vector<std::vector<DiscoveryShard::FileTriples>> per_shard(dtn_count_);
  const int64_t extract_start = steady_now_ms();
  for (const auto& entry : files) {
    if (!entry.rel_path.ends_with(".sdf")) continue;
    auto bytes = bk_get(backend_root_, entry.rel_path);
    if (!bytes.ok()) continue;  // vanished between scan and read
    const std::string display = "/" + entry.rel_path;
    auto placed = place_display(display, dtn_count_);
    if (!placed.ok()) return placed.error();
    auto triples = extract_attributes(display, bytes.value(), specs_,
                                      StatContext{entry.size, entry.mtime_ms});
    report.triples_written += triples.size();
    report.files_indexed += 1;
    per_shard[placed.value()].push_back(
        DiscoveryShard::FileTriples{display, std::move(triples)});
  }
  report.extract_ms = steady_now_ms() - extract_start;

  const int64_t store_start = steady_now_ms();
  {  // local applies, one log transaction per chunk
    std::lock_guard<std::mutex> lock(mu_);
    auto& local = per_shard[dtn_index_];
    for (size_t off = 0; off < local.size(); off += kTriplePushFilesPerMessage) {
      const size_t end = std::min(off + kTriplePushFilesPerMessage, local.size());
      std::vector<DiscoveryShard::FileTriples> chunk(local.begin() + off, local.begin() + end);
      if (auto s = disc_->reindex_bulk(chunk); !s.ok()) return s.error();
    }
  }
  for (uint32_t d = 0; d < dtn_count_; ++d) {
    if (d == dtn_index_ || per_shard[d].empty()) continue;
    std::lock_guard<std::mutex> plock(peers_mu_);
    if (!peer_clients_[d]) {
      auto client = ShardClient::connect(peers_[d].first, peers_[d].second);
      if (!client.ok()) return client.error();
      peer_clients_[d] = client.take();
    }
    for (size_t off = 0; off < per_shard[d].size(); off += kTriplePushFilesPerMessage) {
      FieldWriter w;
      w.add_u8(1, static_cast<uint8_t>(IndexControl::store_triples));
      const size_t end = std::min(off + kTriplePushFilesPerMessage, per_shard[d].size());
      for (size_t i = off; i < end; ++i) {
        FieldWriter fb;
        fb.add_string(1, per_shard[d][i].file);
        for (const auto& t : per_shard[d][i].triples) fb.add_bytes(2, triple_to_bytes(t));
        w.add_bytes(2, fb.finish());
      }
      auto resp = peer_clients_[d]->call(MsgType::enqueue_index, w.finish());
      if (!resp.ok()) return resp.error();
    }
  }
  const int64_t store_end = steady_now_ms();
  report.store_ms = store_end - store_start;

  FieldWriter w;
  w.add_u64(1, report.files_indexed);
  w.add_u64(2, report.files_seen);
  w.add_u64(3, report.triples_written);
  w.add_i64(4, report.scan_ms);
  w.add_i64(5, report.extract_ms);
  w.add_i64(6, report.store_ms);
  return w.finish();
}

Result<std::vector<uint8_t>> ShardService::handle_query(const FieldReader& req) {
  const std::string requester = req.string(1).value_or("");
  struct Clause {
    std::string attribute;
    QueryOp op;
    AttributeValue literal;
  };
  std::vector<Clause> clauses;
  for (const auto& cb : req.repeated(2)) {
    auto parsed = FieldReader::parse(cb);
    if (!parsed.ok()) return parsed.error();
    const FieldReader& c = parsed.value();
    auto attr = c.string(1);
    auto op = c.u8(2);
    auto vb = c.bytes(3);
    if (!attr || !op || !vb) return make_error(Err::bad_request, "incomplete clause");
    auto value = value_from_bytes(*vb);
    if (!value.ok()) return value.error();
    clauses.push_back(Clause{*attr, static_cast<QueryOp>(*op), value.take()});
  }
  if (clauses.empty()) return make_error(Err::bad_request, "query without clauses");

  // AND of clause results, then the visibility filter
  std::vector<std::string> acc =
      disc_->eval_clause(clauses[0].attribute, clauses[0].op, clauses[0].literal);
  for (size_t i = 1; i < clauses.size() && !acc.empty(); ++i) {
    auto next = disc_->eval_clause(clauses[i].attribute, clauses[i].op, clauses[i].literal);
    std::vector<std::string> merged;
    std::set_intersection(acc.begin(), acc.end(), next.begin(), next.end(),
                          std::back_inserter(merged));
    acc = std::move(merged);
  }

  FieldWriter w;
  for (const auto& path : acc) {
    auto visible = meta_->get_visible(path, requester);
    if (visible.ok()) w.add_string(1, path);
  }
  return w.finish();
}

Result<std::vector<uint8_t>> ShardService::handle_tag(const FieldReader& req) {
  auto path = req.string(1);
  auto attr = req.string(2);
  auto vb = req.bytes(3);
  if (!path || !attr || !vb) return make_error(Err::bad_request, "incomplete tag");
  auto value = value_from_bytes(*vb);
  if (!value.ok()) return value.error();
  // manual tags require a known file record
  if (auto record = meta_->get_record(*path); !record.ok()) return record.error();
  if (auto s = disc_->tag_manual(*path, *attr, value.value()); !s.ok()) return s.error();
  return FieldWriter().finish();
}

Result<std::vector<uint8_t>> ShardService::handle_register_ns(const FieldReader& req) {
  auto nb = req.bytes(1);
  if (!nb) return make_error(Err::bad_request, "register without namespace");
  auto tmpl = ns_from_bytes(*nb);
  if (!tmpl.ok()) return tmpl.error();
  if (auto s = meta_->register_namespace(tmpl.value()); !s.ok()) return s.error();
  return FieldWriter().finish();
}

std::vector<AttributeTriple> ShardService::dump_triples() {
  std::lock_guard<std::mutex> lock(mu_);
  return disc_->dump_sorted();
}

std::vector<FileRecord> ShardService::dump_records() {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<FileRecord> out;
  for (const auto& [path, r] : meta_->records()) out.push_back(r);
  return out;
}

size_t ShardService::queue_pending() {
  std::lock_guard<std::mutex> lock(mu_);
  return queue_.pending();
}

}  // namespace scispace

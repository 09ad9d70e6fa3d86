// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <thread>

#include "scispace/config.hpp"
#include "scispace/metashard.hpp"
#include "scispace/protocol.hpp"
#include "scispace/sds.hpp"

namespace scispace {

// Drains one batch from the queue into the shard: reads each file's current
// bytes from the backend, extracts, stores durably. Vanished files are
// dropped with a warning. Returns the number of files indexed.
Result<size_t> drain_step(IndexQueue& queue, DiscoveryShard& shard, const SpecSet& specs,
                          const std::filesystem::path& backend_root);

// One DTN's service: the metadata shard, the discovery shard, and the
// asynchronous indexing worker, behind a single lock. handle() is the whole
// request surface; the TCP server is a thin wrapper around it.
class ShardService {
 public:
  static Result<std::unique_ptr<ShardService>> open(const CollabConfig& cfg, uint32_t dtn_index);
  ~ShardService();

  ShardService(const ShardService&) = delete;
  ShardService& operator=(const ShardService&) = delete;

  // Processes one request frame and returns the response frame (RESULT or
  // ERROR echoing the request id).
  Frame handle(const Frame& request);

  // Endpoints of every DTN's service, index-aligned; the offline pass uses
  // them to route extracted triples to placement shards. Call once the
  // final ports are known.
  void set_peers(std::vector<std::pair<std::string, uint16_t>> peers);

  // Drains the queue to empty. Exposed for the flush control and tests.
  Result<size_t> flush_queue();

  uint32_t dtn_index() const { return dtn_index_; }
  const std::filesystem::path& backend_root() const { return backend_root_; }

  // Test access; takes the service lock.
  std::vector<AttributeTriple> dump_triples();
  std::vector<FileRecord> dump_records();
  size_t queue_pending();

 private:
  ShardService(const CollabConfig& cfg, uint32_t dtn_index);

  Result<std::vector<uint8_t>> dispatch(uint16_t msg_type, const FieldReader& req);
  Result<std::vector<uint8_t>> handle_put_file(const FieldReader& req);
  Result<std::vector<uint8_t>> handle_get_file(const FieldReader& req);
  Result<std::vector<uint8_t>> handle_list_visible(const FieldReader& req);
  Result<std::vector<uint8_t>> handle_batch_export(const FieldReader& req);
  Result<std::vector<uint8_t>> handle_enqueue_index(const FieldReader& req);
  Result<std::vector<uint8_t>> handle_store_triples(const FieldReader& req);
  Result<std::vector<uint8_t>> handle_offline(const FieldReader& req);
  Result<std::vector<uint8_t>> handle_flush();
  Result<std::vector<uint8_t>> handle_query(const FieldReader& req);
  Result<std::vector<uint8_t>> handle_tag(const FieldReader& req);
  Result<std::vector<uint8_t>> handle_register_ns(const FieldReader& req);

  void worker_loop();
  Result<size_t> flush_queue_locked();

  uint32_t dtn_index_;
  uint32_t dtn_count_;
  std::filesystem::path backend_root_;
  std::vector<std::filesystem::path> roots_by_dtn_;
  SpecSet specs_;

  // maintenance_mu_ serializes offline/flush passes against the drain
  // worker; when both are taken, maintenance_mu_ comes first.
  std::mutex maintenance_mu_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::unique_ptr<MetadataShard> meta_;
  std::unique_ptr<DiscoveryShard> disc_;
  IndexQueue queue_;

  std::mutex peers_mu_;
  std::vector<std::pair<std::string, uint16_t>> peers_;
  std::vector<std::unique_ptr<class ShardClient>> peer_clients_;

  std::thread worker_;
};

}  // namespace scispace

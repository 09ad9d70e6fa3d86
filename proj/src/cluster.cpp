// SPDX-License-Identifier: Apache-2.0

#include "scispace/cluster.hpp"

#include <algorithm>

namespace fs = std::filesystem;

namespace scispace {

Result<std::unique_ptr<LocalCluster>> LocalCluster::start(const fs::path& base_dir,
                                                          const Options& opts) {
  if (opts.dtn_count == 0) return make_error(Err::zero_dtn_count);
  std::unique_ptr<LocalCluster> cluster(new LocalCluster());

  CollabConfig cfg;
  cfg.name = "local";
  cfg.collaborator = opts.collaborator;
  cfg.flag_mode = opts.flag_mode;
  cfg.mode = opts.mode;
  cfg.thresholds = opts.thresholds;
  cfg.specs = opts.specs;
  cfg.namespaces = opts.namespaces;
  for (uint32_t d = 0; d < opts.dtn_count; ++d) {
    DtnDescriptor dtn;
    char id[16];
    std::snprintf(id, sizeof(id), "dtn-%02u", d);
    dtn.id = id;
    dtn.host = "127.0.0.1";
    dtn.port = 0;  // ephemeral until the server binds
    dtn.backend_root = base_dir / id;
    std::error_code ec;
    fs::create_directories(dtn.backend_root, ec);
    if (ec) return make_error(Err::io_failure, ec.message());
    cfg.dtns.push_back(std::move(dtn));
  }
  auto finalized = finalize_dtn_list(std::move(cfg.dtns));
  if (!finalized.ok()) return finalized.error();
  cfg.dtns = finalized.take();
  cluster->cfg_ = cfg;

  for (uint32_t d = 0; d < opts.dtn_count; ++d) {
    auto svc = ShardService::open(cluster->cfg_, d);
    if (!svc.ok()) return svc.error();
    cluster->services_.push_back(svc.take());
    auto srv = ShardServer::start(*cluster->services_.back(), "127.0.0.1", 0);
    if (!srv.ok()) return srv.error();
    cluster->cfg_.dtns[d].port = srv.value()->port();
    cluster->servers_.push_back(srv.take());
  }
  std::vector<std::pair<std::string, uint16_t>> peers;
  for (const auto& d : cluster->cfg_.dtns) peers.emplace_back(d.host, d.port);
  for (auto& svc : cluster->services_) svc->set_peers(peers);

  // auto-register configured namespaces once the cluster is reachable
  if (!opts.namespaces.empty()) {
    auto session = cluster->open_session();
    if (!session.ok()) return session.error();
    for (const auto& ns : opts.namespaces) {
      if (auto s = session.value()->register_namespace(ns); !s.ok()) return s.error();
    }
  }
  return cluster;
}

LocalCluster::~LocalCluster() {
  servers_.clear();  // stop accepting before services go away
  services_.clear();
}

CollabConfig LocalCluster::client_config(const std::string& collaborator) const {
  CollabConfig cfg = cfg_;
  if (!collaborator.empty()) cfg.collaborator = collaborator;
  return cfg;
}

Result<std::unique_ptr<WorkspaceSession>> LocalCluster::open_session(
    const std::string& collaborator) {
  return WorkspaceSession::open(client_config(collaborator));
}

void LocalCluster::stop_dtn(uint32_t d) {
  servers_.at(d).reset();
  services_.at(d).reset();
}

Status LocalCluster::restart_dtn(uint32_t d) {
  auto svc = ShardService::open(cfg_, d);
  if (!svc.ok()) return svc.error();
  services_.at(d) = svc.take();
  auto srv = ShardServer::start(*services_.at(d), "127.0.0.1", cfg_.dtns[d].port);
  if (!srv.ok()) return srv.error();
  servers_.at(d) = srv.take();
  std::vector<std::pair<std::string, uint16_t>> peers;
  for (const auto& dtn : cfg_.dtns) peers.emplace_back(dtn.host, dtn.port);
  services_.at(d)->set_peers(peers);
  return ok_status();
}

std::vector<AttributeTriple> LocalCluster::all_triples() {
  std::vector<AttributeTriple> all;
  for (auto& svc : services_) {
    if (!svc) continue;
    auto triples = svc->dump_triples();
    all.insert(all.end(), triples.begin(), triples.end());
  }
  std::sort(all.begin(), all.end(), [](const AttributeTriple& a, const AttributeTriple& b) {
    if (a.attribute != b.attribute) return a.attribute < b.attribute;
    if (a.file != b.file) return a.file < b.file;
    return a.value < b.value;
  });
  return all;
}

std::vector<FileRecord> LocalCluster::all_records() {
  std::vector<FileRecord> all;
  for (auto& svc : services_) {
    if (!svc) continue;
    auto records = svc->dump_records();
    all.insert(all.end(), records.begin(), records.end());
  }
  std::sort(all.begin(), all.end(),
            [](const FileRecord& a, const FileRecord& b) { return a.path < b.path; });
  return all;
}

}  // namespace scispace

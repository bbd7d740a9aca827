// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include <json.hpp>
#include <cstdint>
#include <string>

namespace revledger::harness
{
  struct BenchConfig
  {
    std::size_t entries = 100000;
    std::size_t chain_length = 50;
    /// check_chain repetitions.
    std::size_t chain_runs = 200;
    /// Updates fed to the proof-stream auditor after the tree is populated.
    std::size_t auditor_updates = 10000;
    std::uint64_t seed = 1;
  };

  struct BenchReport
  {
    BenchConfig config;

    double inserts_per_s = 0;
    double mean_update_proof_bytes = 0;
    std::size_t max_update_proof_bytes = 0;
    double mean_presence_proof_bytes = 0;
    double mean_leaf_depth = 0;
    std::size_t max_leaf_depth = 0;

    /// Client-side check_chain, every link proven against a signed block.
    double chain_verifications_per_s = 0;
    /// The ledger's own check over its working tree.
    double internal_chain_checks_per_s = 0;

    double auditor_updates_per_s = 0;
    /// Proof-stream auditor: mean update proof received.
    double stream_bytes_per_update = 0;
    /// Full-copy auditor: compact update message.
    std::size_t full_copy_bytes_per_update = 0;
    std::size_t stream_state_bytes = 0;
  };

  BenchReport run_bench(const BenchConfig& config);

  /// One JSON object per measurement section, each echoing the config and
  /// the machine.
  std::vector<nlohmann::json> to_json_lines(const BenchReport& r);
}

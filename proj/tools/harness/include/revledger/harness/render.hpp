// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/auditor.hpp"
#include "revledger/client.hpp"

#include <json.hpp>

namespace revledger::harness
{
  // Human-readable JSON for CLI output only. Never hashed or signed.

  nlohmann::json render(const GroupId& g);
  nlohmann::json render(const Event& e);
  nlohmann::json render(const MemberChain& chain);
  nlohmann::json render(const HierCertificate& c);
  nlohmann::json render(const Block& b);
  nlohmann::json render(const ProofOfDelivery& p);
  nlohmann::json render(const Rejection& r);
  nlohmann::json render(const Alarm& a);
  nlohmann::json render(const ChainDecision& d);
  nlohmann::json render(const SubmitOutcome& o);
  nlohmann::json render(const MemberVerdict& v);
  nlohmann::json render(const Misbehavior& m);
  nlohmann::json render(const Endorsement& e);

  /// Writes one compact JSON line to stdout and flushes.
  void emit(const nlohmann::json& j);
}

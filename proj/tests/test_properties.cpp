// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#include "revledger/events.hpp"
#include "tree_properties.hpp"

#include "doctest.h"
#include <algorithm>

using namespace revledger;
using namespace revledger::properties;

namespace
{
  constexpr std::size_t min_cases = 10000;

  void require_holds(const PropertyResult& r)
  {
    INFO(r.first_failure);
    CHECK(r.cases >= min_cases);
    REQUIRE(r.failures == 0);
  }
}

TEST_CASE("incremental root equals the from-scratch root after every insert")
{
  require_holds(incremental_root(101, min_cases));
}

TEST_CASE("verify(lookup(i), root) holds for present and absent indices")
{
  require_holds(lookup_verifies(202, min_cases));
}

TEST_CASE("presence and absence are exclusive")
{
  require_holds(presence_absence_exclusive(303, min_cases));
}

TEST_CASE("random single-bit mutations of proofs and update proofs are rejected")
{
  require_holds(mutations_rejected(404, min_cases));
}

TEST_CASE("the root does not depend on the interleaving of indices")
{
  std::mt19937_64 rng(606);
  for (int run = 0; run < 200; ++run)
  {
    const auto indices = clustered_indices(rng, 5 + rng() % 20);
    std::vector<std::tuple<Digest, SequenceNumber, Digest>> ops;
    SequenceNumber clock = 0;
    for (int i = 0; i < 50; ++i)
    {
      ops.emplace_back(indices[rng() % indices.size()], ++clock, random_digest(rng));
    }
    PrefixTree a;
    for (const auto& [k, t, eh] : ops)
    {
      a.insert(k, t, eh);
    }
    std::shuffle(ops.begin(), ops.end(), rng);
    std::map<Digest, std::vector<std::pair<SequenceNumber, Digest>>> per_index;
    for (const auto& [k, t, eh] : ops)
    {
      per_index[k].emplace_back(t, eh);
    }
    for (auto& [k, v] : per_index)
    {
      std::sort(v.begin(), v.end());
    }
    // Drain the per-index queues in a random index order.
    PrefixTree b;
    while (!per_index.empty())
    {
      auto it = std::next(per_index.begin(), static_cast<long>(rng() % per_index.size()));
      auto& [k, v] = *it;
      b.insert(k, v.front().first, v.front().second);
      v.erase(v.begin());
      if (v.empty())
      {
        per_index.erase(it);
      }
    }
    REQUIRE(a.root() == b.root());
  }
}

TEST_CASE("update proofs chain root to root over long workloads")
{
  std::mt19937_64 rng(707);
  auto r = build(rng, 300, 1000);
  Digest prev = Digest::zero();
  for (const auto& up : r.updates)
  {
    const auto after = expected_root_after(up);
    REQUIRE(after.has_value());
    REQUIRE(proof_root(up.before) == prev);
    REQUIRE(check_update(up, prev, *after) == UpdateCheck::ok);
    prev = *after;
  }
  CHECK(prev == r.tree.root());
}

TEST_CASE("distinct events have distinct encodings and the index ignores issuer and freshness")
{
  std::mt19937_64 rng(808);
  std::vector<KeyPair> keys;
  for (int i = 0; i < 6; ++i)
  {
    keys.push_back(KeyPair::from_seed(random_digest(rng).view()));
  }
  const std::vector<std::string> names{"a", "b", "course", "ab"};
  const std::vector<Role> roles{Role::leader(), Role::member(), Role("ta")};
  std::map<Bytes, Event> seen;
  std::size_t cases = 0;
  while (cases < min_cases)
  {
    const auto& owner = keys[rng() % keys.size()];
    const GroupId g(owner.public_key(), names[rng() % names.size()]);
    const auto& role = roles[rng() % roles.size()];
    const auto subject = keys[rng() % keys.size()].public_key();
    const auto& issuer = keys[rng() % keys.size()];
    const auto t = rng() % 8;
    Event e;
    switch (rng() % 4)
    {
      case 0:
        e = issue_certificate(issuer, subject, g, role, t);
        break;
      case 1:
        e = issue_revocation(issuer, subject, g, role, t);
        break;
      case 2:
        e = issue_suspend(issuer, g, t);
        break;
      default:
        e = issue_resume(issuer, g, t);
        break;
    }
    const auto bytes = encode(e);
    if (auto it = seen.find(bytes); it != seen.end())
    {
      REQUIRE(it->second == e);
    }
    else
    {
      seen.emplace(bytes, e);
    }

    if (std::holds_alternative<MemberCertificate>(e) || std::holds_alternative<MemberRevocation>(e))
    {
      const auto& other_issuer = keys[rng() % keys.size()];
      const Event moved = issue_revocation(other_issuer, subject, g, role, t + 1 + rng() % 5);
      REQUIRE(index_of(moved) == index_of(e));
      REQUIRE(index_of(e) == member_index(g, role, subject));
    }
    ++cases;
  }
  // Signatures are deterministic, so repeats are exact duplicates; many
  // distinct values must still have appeared.
  CHECK(seen.size() > 1000);
}

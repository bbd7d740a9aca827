// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/encoding.hpp"
#include "revledger/prefix_tree.hpp"

#include <map>
#include <random>
#include <string>

// Randomized prefix tree properties, shared by the unit tests and the
// acceptance run. Each returns the number of cases tried and the first
// counterexample.

namespace revledger::properties
{
  struct PropertyResult
  {
    std::size_t cases = 0;
    std::size_t failures = 0;
    std::string first_failure;

    void fail(std::string what)
    {
      if (failures++ == 0)
      {
        first_failure = std::move(what);
      }
    }
  };

  inline Digest random_digest(std::mt19937_64& rng)
  {
    Digest d;
    for (auto& b : d.bytes)
    {
      b = static_cast<std::uint8_t>(rng());
    }
    return d;
  }

  // Indices that often share long prefixes, so trees get deep splits and
  // mismatched-leaf absences.
  inline std::vector<Digest> clustered_indices(std::mt19937_64& rng, std::size_t n)
  {
    std::vector<Digest> out;
    while (out.size() < n)
    {
      auto d = random_digest(rng);
      if (!out.empty() && rng() % 2 == 0)
      {
        d = out[rng() % out.size()];
        const auto bit = rng() % 256;
        d.bytes[bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (bit % 8));
      }
      out.push_back(d);
    }
    return out;
  }

  inline Bytes random_body(std::mt19937_64& rng)
  {
    Bytes b(1 + rng() % 24);
    for (auto& x : b)
    {
      x = static_cast<std::uint8_t>(rng());
    }
    return b;
  }

  // Independent leaf and root computation straight from the hash layout.
  inline Digest sha(const Bytes& b)
  {
    return hash(b);
  }

  inline Digest ref_leaf(const Digest& index, const std::vector<std::pair<std::uint64_t, Digest>>& entries)
  {
    Bytes b{0x00};
    b.insert(b.end(), index.bytes.begin(), index.bytes.end());
    Digest c = sha(b);
    for (const auto& [t, eh] : entries)
    {
      Bytes step(c.bytes.begin(), c.bytes.end());
      for (int i = 7; i >= 0; --i)
      {
        step.push_back(static_cast<std::uint8_t>(t >> (8 * i)));
      }
      step.insert(step.end(), eh.bytes.begin(), eh.bytes.end());
      c = sha(step);
    }
    return c;
  }

  using RefModel = std::map<Digest, std::vector<std::pair<std::uint64_t, Digest>>>;

  inline Digest ref_root(std::vector<std::pair<Digest, Digest>> leaves, std::size_t depth)
  {
    if (leaves.empty())
    {
      return Digest::zero();
    }
    if (leaves.size() == 1)
    {
      return leaves[0].second;
    }
    std::vector<std::pair<Digest, Digest>> l, r;
    for (auto& x : leaves)
    {
      (x.first.bit(depth) == 0 ? l : r).push_back(std::move(x));
    }
    const auto left = ref_root(std::move(l), depth + 1);
    const auto right = ref_root(std::move(r), depth + 1);
    Bytes b{0x01};
    b.insert(b.end(), left.bytes.begin(), left.bytes.end());
    b.insert(b.end(), right.bytes.begin(), right.bytes.end());
    return sha(b);
  }

  inline Digest ref_root(const RefModel& m)
  {
    std::vector<std::pair<Digest, Digest>> leaves;
    for (const auto& [k, v] : m)
    {
      leaves.emplace_back(k, ref_leaf(k, v));
    }
    return ref_root(std::move(leaves), 0);
  }

  struct RandomTree
  {
    PrefixTree tree;
    RefModel model;
    std::vector<Digest> indices;
    /// Tree state right before each index was first inserted.
    std::map<Digest, PrefixTree> before_first;
    std::vector<UpdateProof> updates;
  };

  inline RandomTree build(std::mt19937_64& rng, std::size_t keys, std::size_t inserts)
  {
    RandomTree r;
    r.indices = clustered_indices(rng, keys);
    SequenceNumber t = 0;
    for (std::size_t i = 0; i < inserts; ++i)
    {
      const auto& k = r.indices[rng() % r.indices.size()];
      if (!r.model.contains(k))
      {
        r.before_first.emplace(k, r.tree);
      }
      auto body = random_body(rng);
      const auto eh = hash(body);
      t += 1 + rng() % 3;
      r.updates.push_back(r.tree.insert(k, t, eh, body));
      r.model[k].emplace_back(t, eh);
    }
    return r;
  }

  inline Bytes flip(Bytes b, std::size_t bit)
  {
    b[bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (bit % 8));
    return b;
  }

  inline PropertyResult incremental_root(std::uint64_t seed, std::size_t min_cases)
  {
    PropertyResult res;
    std::mt19937_64 rng(seed);
    while (res.cases < min_cases)
    {
      PrefixTree t;
      RefModel m;
      const auto indices = clustered_indices(rng, 5 + rng() % 40);
      SequenceNumber clock = 0;
      for (int i = 0; i < 60; ++i)
      {
        const auto& k = indices[rng() % indices.size()];
        const auto eh = random_digest(rng);
        t.insert(k, ++clock, eh);
        m[k].emplace_back(clock, eh);
        if (t.root() != ref_root(m))
        {
          res.fail("root diverges at case " + std::to_string(res.cases));
        }
        ++res.cases;
      }
    }
    return res;
  }

  inline PropertyResult lookup_verifies(std::uint64_t seed, std::size_t min_cases)
  {
    PropertyResult res;
    std::mt19937_64 rng(seed);
    while (res.cases < min_cases)
    {
      auto r = build(rng, 10 + rng() % 60, 80);
      const auto root = r.tree.root();
      auto probes = r.indices;
      for (int i = 0; i < 20; ++i)
      {
        probes.push_back(random_digest(rng));
      }
      for (const auto& k : probes)
      {
        const auto p = r.tree.lookup(k, rng() % 2 == 0);
        if (!verify_proof(k, p, root))
        {
          res.fail("lookup of " + k.hex() + " does not verify");
        }
        ++res.cases;
      }
    }
    return res;
  }

  /// The lookup's kind matches the model, and a proof of the opposite kind
  /// taken from a neighbouring tree state never verifies.
  inline PropertyResult presence_absence_exclusive(std::uint64_t seed, std::size_t min_cases)
  {
    PropertyResult res;
    std::mt19937_64 rng(seed);
    while (res.cases < min_cases)
    {
      auto r = build(rng, 10 + rng() % 40, 60);
      const auto root = r.tree.root();
      for (const auto& k : r.indices)
      {
        ++res.cases;
        const bool present = r.model.contains(k);
        if (r.tree.lookup(k).is_presence() != present)
        {
          res.fail("wrong proof kind for " + k.hex());
          continue;
        }
        if (present)
        {
          const auto absent = r.before_first.at(k).lookup(k);
          if (absent.is_presence() || verify_proof(k, absent, root))
          {
            res.fail("stale absence proof verifies for " + k.hex());
          }
        }
        else
        {
          auto other = r.tree;
          other.insert(k, 1, random_digest(rng));
          const auto elsewhere = other.lookup(k);
          if (!elsewhere.is_presence() || verify_proof(k, elsewhere, root))
          {
            res.fail("foreign presence proof verifies for " + k.hex());
          }
        }
      }
    }
    return res;
  }

  /// Random single-bit flips of encoded proofs and update proofs, half each.
  inline PropertyResult mutations_rejected(std::uint64_t seed, std::size_t min_cases)
  {
    PropertyResult res;
    std::mt19937_64 rng(seed);
    std::map<ProofKind, std::size_t> kinds;
    while (res.cases < min_cases / 2)
    {
      auto r = build(rng, 5 + rng() % 30, 40);
      const auto root = r.tree.root();
      const auto k = rng() % 3 == 0 ? random_digest(rng) : r.indices[rng() % r.indices.size()];
      const auto p = r.tree.lookup(k, rng() % 2 == 0);
      ++kinds[p.kind];
      const auto bytes = encode(p);
      for (int m = 0; m < 16; ++m)
      {
        const auto bit = rng() % (bytes.size() * 8);
        bool accepted = false;
        try
        {
          accepted = verify_proof(k, decode_proof(flip(bytes, bit)), root);
        }
        catch (const std::exception&)
        {}
        if (accepted)
        {
          res.fail("proof bit " + std::to_string(bit) + " flip accepted");
        }
        ++res.cases;
      }
    }
    if (kinds.size() != 3)
    {
      res.fail("not every proof kind was mutated");
    }
    while (res.cases < min_cases)
    {
      PrefixTree t;
      const auto indices = clustered_indices(rng, 5 + rng() % 30);
      SequenceNumber clock = 0;
      for (int i = 0; i < 30; ++i)
      {
        const auto before = t.root();
        auto up = t.insert(indices[rng() % indices.size()], ++clock, random_digest(rng));
        const auto after = t.root();
        if (check_update(up, before, after) != UpdateCheck::ok)
        {
          res.fail("honest update proof rejected");
        }
        const auto bytes = encode(up);
        const auto bit = rng() % (bytes.size() * 8);
        bool accepted = false;
        try
        {
          accepted = check_update(decode_update_proof(flip(bytes, bit)), before, after) ==
            UpdateCheck::ok;
        }
        catch (const std::exception&)
        {}
        if (accepted)
        {
          res.fail("update proof bit " + std::to_string(bit) + " flip accepted");
        }
        ++res.cases;
      }
    }
    return res;
  }
}

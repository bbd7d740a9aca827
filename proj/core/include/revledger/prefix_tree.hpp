// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.
#pragma once

#include "revledger/crypto.hpp"
#include "revledger/events.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

namespace revledger
{
  /// One appended event in a leaf. `body` is the canonical event encoding; it
  /// is empty in hash-only proofs such as the audit stream.
  struct LeafEntry
  {
    SequenceNumber t = 0;
    Digest event_hash;
    Bytes body;
  };

  struct LeafRecord
  {
    Digest full_index;
    std::vector<LeafEntry> entries;
    /// Running leaf hash over full_index and all entries.
    Digest cumulative;
  };

  /// c0 = H(0x00 || full_index).
  Digest leaf_base_hash(const Digest& full_index);
  /// c_k = H(c_{k-1} || t_k || event_hash_k), t as 8-byte big-endian.
  Digest leaf_chain_step(
    const Digest& prev, SequenceNumber t, const Digest& event_hash);
  Digest leaf_hash(const Digest& full_index, const std::vector<LeafEntry>& entries);
  inline Digest leaf_hash(const LeafRecord& r)
  {
    return leaf_hash(r.full_index, r.entries);
  }
  /// H(0x01 || left || right); an absent child is 32 zero bytes.
  Digest interior_hash(const Digest& left, const Digest& right);

  /// Maximum depth of a node: a leaf below 256 branching bits.
  constexpr std::size_t max_depth = 256;

  struct ProofSibling
  {
    /// Depth of the interior node whose other child this is.
    std::uint16_t depth = 0;
    Digest hash;

    bool operator==(const ProofSibling&) const = default;
  };

  enum class ProofKind : std::uint8_t
  {
    presence = 1,
    /// The path ends at an empty branch at `depth`.
    absence_no_branch = 2,
    /// The path ends at a leaf holding a different full index.
    absence_mismatched_leaf = 3,
  };

  /// Path from the root to a terminal node. Only nonzero siblings are listed;
  /// every other depth above the terminal contributes an absent child.
  struct Proof
  {
    ProofKind kind = ProofKind::absence_no_branch;
    Digest index;
    std::size_t depth = 0;
    std::vector<ProofSibling> siblings;
    /// The terminal leaf's full index: equal to `index` for presence, the
    /// other leaf's index for a mismatch, unused for an empty branch.
    Digest leaf_index;
    /// The terminal leaf's entries, needed to recompute its hash.
    std::vector<LeafEntry> entries;

    bool is_presence() const
    {
      return kind == ProofKind::presence;
    }
  };

  /// Recomputes the root the proof commits to; nullopt if the proof is
  /// malformed or its terminal witness does not rule the index in or out.
  std::optional<Digest> proof_root(const Proof& proof);
  /// True if `proof` is about `index` and commits to `claimed_root`.
  bool verify_proof(
    const Digest& index, const Proof& proof, const Digest& claimed_root);

  /// Absence or presence of the index before one append, the appended entry,
  /// and presence after it.
  struct UpdateProof
  {
    Proof before;
    SequenceNumber t = 0;
    Digest event_hash;
    Proof after;
  };

  enum class UpdateCheck
  {
    ok,
    malformed,
    before_root_mismatch,
    after_root_mismatch,
    not_single_append,
    non_monotonic,
  };

  /// Root that results from applying the appended entry to `before`'s
  /// witness, or nullopt if `before` is malformed.
  std::optional<Digest> expected_root_after(const UpdateProof& up);
  UpdateCheck check_update(
    const UpdateProof& up, const Digest& root_before, const Digest& root_after);
  inline bool verify_update(
    const UpdateProof& up, const Digest& root_before, const Digest& root_after)
  {
    return check_update(up, root_before, root_after) == UpdateCheck::ok;
  }

  Bytes encode(const Proof& p);
  Bytes encode(const UpdateProof& up);
  Proof decode_proof(ByteView data);
  UpdateProof decode_update_proof(ByteView data);

  class NonMonotonicTimestamp : public std::logic_error
  {
  public:
    using std::logic_error::logic_error;
  };

  /// Authenticated binary Merkle prefix tree with append-only event lists at
  /// the leaves. Leaves sit at the shallowest depth that separates their
  /// index from every other index. Copies share structure and are immutable
  /// snapshots; `insert` on one copy never affects another.
  class PrefixTree
  {
  public:
    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

    PrefixTree() = default;

    /// Zero for the empty tree.
    Digest root() const;

    /// Appends an entry at `index` and returns the proof of the transition.
    /// Throws NonMonotonicTimestamp unless `t` exceeds every t at that leaf.
    UpdateProof insert(
      const Digest& index,
      SequenceNumber t,
      const Digest& event_hash,
      Bytes body = {});

    /// Presence or absence proof; entry bodies are included on request.
    Proof lookup(const Digest& index, bool with_bodies = true) const;

    const LeafRecord* find(const Digest& index) const;

    std::size_t leaf_count() const
    {
      return leaves_;
    }
    std::size_t entry_count() const
    {
      return entries_;
    }

    /// Visits every leaf with its depth, in index order.
    void for_each_leaf(
      const std::function<void(const LeafRecord&, std::size_t depth)>& f) const;

    double mean_leaf_depth() const;

  private:
    NodePtr root_;
    std::size_t leaves_ = 0;
    std::size_t entries_ = 0;
  };

  struct PrefixTree::Node
  {
    Digest hash;
    NodePtr left;
    NodePtr right;
    /// Non-null exactly for leaves.
    std::shared_ptr<const LeafRecord> leaf;
  };
}

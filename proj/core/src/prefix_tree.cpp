// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/prefix_tree.hpp"

#include "revledger/encoding.hpp"

#include <algorithm>

namespace revledger
{
  namespace
  {
    constexpr std::size_t sibling_record_size = 1 + Digest::size;

    const Digest& hash_or_zero(const PrefixTree::NodePtr& n)
    {
      static const Digest zero{};
      return n ? n->hash : zero;
    }

    PrefixTree::NodePtr make_leaf(std::shared_ptr<const LeafRecord> leaf)
    {
      auto n = std::make_shared<PrefixTree::Node>();
      n->hash = leaf->cumulative;
      n->leaf = std::move(leaf);
      return n;
    }

    PrefixTree::NodePtr make_interior(
      PrefixTree::NodePtr left, PrefixTree::NodePtr right)
    {
      auto n = std::make_shared<PrefixTree::Node>();
      n->hash = interior_hash(hash_or_zero(left), hash_or_zero(right));
      n->left = std::move(left);
      n->right = std::move(right);
      return n;
    }

    std::vector<LeafEntry> strip_bodies(const std::vector<LeafEntry>& entries)
    {
      std::vector<LeafEntry> out;
      out.reserve(entries.size());
      for (const auto& e : entries)
      {
        out.push_back({e.t, e.event_hash, {}});
      }
      return out;
    }

    // Checks entry ordering and body consistency, returning the leaf hash.
    std::optional<Digest> checked_leaf_hash(
      const Digest& full_index, const std::vector<LeafEntry>& entries)
    {
      if (entries.empty())
      {
        return std::nullopt;
      }
      Digest c = leaf_base_hash(full_index);
      for (std::size_t i = 0; i < entries.size(); ++i)
      {
        const auto& e = entries[i];
        if (i > 0 && e.t <= entries[i - 1].t)
        {
          return std::nullopt;
        }
        if (!e.body.empty() && hash(e.body) != e.event_hash)
        {
          return std::nullopt;
        }
        c = leaf_chain_step(c, e.t, e.event_hash);
      }
      return c;
    }

    // Folds `terminal` up to the root along `index`'s path.
    Digest fold_path(
      const Digest& index,
      std::size_t depth,
      const Digest& terminal,
      const std::vector<ProofSibling>& siblings)
    {
      static const Digest zero{};
      Digest h = terminal;
      auto it = siblings.rbegin();
      for (std::size_t d = depth; d-- > 0;)
      {
        const Digest* s = &zero;
        if (it != siblings.rend() && it->depth == d)
        {
          s = &it->hash;
          ++it;
        }
        h = index.bit(d) == 0 ? interior_hash(h, *s) : interior_hash(*s, h);
      }
      return h;
    }

    bool well_formed_siblings(const Proof& p)
    {
      if (p.depth > max_depth)
      {
        return false;
      }
      for (std::size_t i = 0; i < p.siblings.size(); ++i)
      {
        const auto& s = p.siblings[i];
        if (s.depth >= p.depth || s.hash.is_zero())
        {
          return false;
        }
        if (i > 0 && s.depth <= p.siblings[i - 1].depth)
        {
          return false;
        }
      }
      // Every non-root terminal hangs off a node with two children.
      if (p.depth > 0)
      {
        if (p.siblings.empty() || p.siblings.back().depth != p.depth - 1)
        {
          return false;
        }
      }
      return true;
    }

    bool same_hashes(const std::vector<LeafEntry>& a, const std::vector<LeafEntry>& b)
    {
      return std::equal(
        a.begin(), a.end(), b.begin(), b.end(), [](const auto& x, const auto& y) {
          return x.t == y.t && x.event_hash == y.event_hash;
        });
    }
  }

  Digest leaf_base_hash(const Digest& full_index)
  {
    return Hasher().update(std::uint8_t{0x00}).update(full_index).finish();
  }

  Digest leaf_chain_step(
    const Digest& prev, SequenceNumber t, const Digest& event_hash)
  {
    return Hasher().update(prev).update_u64(t).update(event_hash).finish();
  }

  Digest leaf_hash(const Digest& full_index, const std::vector<LeafEntry>& entries)
  {
    Digest c = leaf_base_hash(full_index);
    for (const auto& e : entries)
    {
      c = leaf_chain_step(c, e.t, e.event_hash);
    }
    return c;
  }

  Digest interior_hash(const Digest& left, const Digest& right)
  {
    return Hasher().update(std::uint8_t{0x01}).update(left).update(right).finish();
  }

  std::optional<Digest> proof_root(const Proof& p)
  {
    if (!well_formed_siblings(p))
    {
      return std::nullopt;
    }
    switch (p.kind)
    {
      case ProofKind::absence_no_branch:
      {
        if (!p.entries.empty())
        {
          return std::nullopt;
        }
        if (p.depth == 0)
        {
          return Digest::zero();
        }
        return fold_path(p.index, p.depth, Digest::zero(), p.siblings);
      }
      case ProofKind::presence:
      {
        auto leaf = checked_leaf_hash(p.index, p.entries);
        if (!leaf)
        {
          return std::nullopt;
        }
        return fold_path(p.index, p.depth, *leaf, p.siblings);
      }
      case ProofKind::absence_mismatched_leaf:
      {
        if (
          p.leaf_index == p.index ||
          first_differing_bit(p.index, p.leaf_index) < p.depth)
        {
          return std::nullopt;
        }
        auto leaf = checked_leaf_hash(p.leaf_index, p.entries);
        if (!leaf)
        {
          return std::nullopt;
        }
        return fold_path(p.index, p.depth, *leaf, p.siblings);
      }
    }
    return std::nullopt;
  }

  bool verify_proof(
    const Digest& index, const Proof& proof, const Digest& claimed_root)
  {
    if (proof.index != index)
    {
      return false;
    }
    auto r = proof_root(proof);
    return r && *r == claimed_root;
  }

  std::optional<Digest> expected_root_after(const UpdateProof& up)
  {
    const auto& b = up.before;
    if (!proof_root(b))
    {
      return std::nullopt;
    }
    LeafEntry added{up.t, up.event_hash, {}};
    switch (b.kind)
    {
      case ProofKind::presence:
      {
        if (up.t <= b.entries.back().t)
        {
          return std::nullopt;
        }
        Digest leaf = leaf_chain_step(
          leaf_hash(b.index, b.entries), up.t, up.event_hash);
        return fold_path(b.index, b.depth, leaf, b.siblings);
      }
      case ProofKind::absence_no_branch:
      {
        Digest leaf = leaf_hash(b.index, {added});
        return fold_path(b.index, b.depth, leaf, b.siblings);
      }
      case ProofKind::absence_mismatched_leaf:
      {
        // The old leaf moves down to the split point as our sibling.
        const auto k = first_differing_bit(b.index, b.leaf_index);
        auto siblings = b.siblings;
        siblings.push_back(
          {static_cast<std::uint16_t>(k), leaf_hash(b.leaf_index, b.entries)});
        Digest leaf = leaf_hash(b.index, {added});
        return fold_path(b.index, k + 1, leaf, siblings);
      }
    }
    return std::nullopt;
  }

  UpdateCheck check_update(
    const UpdateProof& up, const Digest& root_before, const Digest& root_after)
  {
    const auto& b = up.before;
    const auto& a = up.after;
    if (
      a.kind != ProofKind::presence || a.index != b.index ||
      !proof_root(b).has_value())
    {
      return UpdateCheck::malformed;
    }
    if (!verify_proof(b.index, b, root_before))
    {
      return UpdateCheck::before_root_mismatch;
    }
    if (b.kind == ProofKind::presence && up.t <= b.entries.back().t)
    {
      return UpdateCheck::non_monotonic;
    }
    if (!verify_proof(a.index, a, root_after))
    {
      return UpdateCheck::after_root_mismatch;
    }
    std::vector<LeafEntry> expected;
    if (b.kind == ProofKind::presence)
    {
      expected = b.entries;
    }
    expected.push_back({up.t, up.event_hash, {}});
    if (!same_hashes(expected, a.entries))
    {
      return UpdateCheck::not_single_append;
    }
    auto predicted = expected_root_after(up);
    if (!predicted || *predicted != root_after)
    {
      return UpdateCheck::not_single_append;
    }
    return UpdateCheck::ok;
  }

  namespace
  {
    void encode_proof_fields(Encoder& e, const Proof& p)
    {
      e.u64(static_cast<std::uint64_t>(p.kind));
      e.field(p.index);
      e.u64(p.depth);
      Bytes packed;
      packed.reserve(p.siblings.size() * sibling_record_size);
      for (const auto& s : p.siblings)
      {
        if (s.depth >= max_depth)
        {
          throw std::invalid_argument("sibling depth out of range");
        }
        packed.push_back(static_cast<std::uint8_t>(s.depth));
        append(packed, s.hash.view());
      }
      e.field(packed);
      if (p.kind == ProofKind::absence_no_branch)
      {
        return;
      }
      if (p.kind == ProofKind::absence_mismatched_leaf)
      {
        e.field(p.leaf_index);
      }
      e.u64(p.entries.size());
      for (const auto& en : p.entries)
      {
        e.u64(en.t);
        e.field(en.event_hash);
        e.field(en.body);
      }
    }

    Proof decode_proof_fields(Decoder& d)
    {
      Proof p;
      const auto kind = d.u64();
      if (kind < 1 || kind > 3)
      {
        throw DecodeError("unknown proof kind");
      }
      p.kind = static_cast<ProofKind>(kind);
      p.index = d.digest_field();
      const auto depth = d.u64();
      if (depth > max_depth)
      {
        throw DecodeError("proof depth out of range");
      }
      p.depth = static_cast<std::size_t>(depth);
      auto packed = d.field();
      if (packed.size() % sibling_record_size != 0)
      {
        throw DecodeError("sibling list has a partial record");
      }
      for (std::size_t i = 0; i < packed.size(); i += sibling_record_size)
      {
        p.siblings.push_back(
          {packed[i], Digest::from_view(packed.subspan(i + 1, Digest::size))});
      }
      if (p.kind == ProofKind::absence_no_branch)
      {
        return p;
      }
      p.leaf_index =
        p.kind == ProofKind::absence_mismatched_leaf ? d.digest_field() : p.index;
      const auto count = d.u64();
      for (std::uint64_t i = 0; i < count; ++i)
      {
        LeafEntry en;
        en.t = d.u64();
        en.event_hash = d.digest_field();
        auto body = d.field();
        en.body.assign(body.begin(), body.end());
        p.entries.push_back(std::move(en));
      }
      return p;
    }
  }

  Bytes encode(const Proof& p)
  {
    Encoder e(TypeTag::proof);
    encode_proof_fields(e, p);
    return e.take();
  }

  Proof decode_proof(ByteView data)
  {
    Decoder d(data, TypeTag::proof);
    auto p = decode_proof_fields(d);
    d.finish();
    return p;
  }

  Bytes encode(const UpdateProof& up)
  {
    return Encoder(TypeTag::update_proof)
      .field(encode(up.before))
      .u64(up.t)
      .field(up.event_hash)
      .field(encode(up.after))
      .take();
  }

  UpdateProof decode_update_proof(ByteView data)
  {
    Decoder d(data, TypeTag::update_proof);
    UpdateProof up;
    up.before = decode_proof(d.field());
    up.t = d.u64();
    up.event_hash = d.digest_field();
    up.after = decode_proof(d.field());
    d.finish();
    return up;
  }

  Digest PrefixTree::root() const
  {
    return hash_or_zero(root_);
  }

  namespace
  {
    struct Walk
    {
      std::vector<ProofSibling> siblings;
      std::size_t depth = 0;
      // Null when the path ends at an empty branch.
      const PrefixTree::Node* terminal = nullptr;
    };

    Walk walk(const PrefixTree::NodePtr& root, const Digest& index)
    {
      Walk w;
      w.siblings.reserve(32);
      const PrefixTree::Node* n = root.get();
      while (n != nullptr && !n->leaf)
      {
        const bool right = index.bit(w.depth) == 1;
        const auto& next = right ? n->right : n->left;
        const auto& other = right ? n->left : n->right;
        if (other)
        {
          w.siblings.push_back({static_cast<std::uint16_t>(w.depth), other->hash});
        }
        n = next.get();
        ++w.depth;
      }
      w.terminal = n;
      return w;
    }

    // Builds the chain of one-child interiors from `depth` down to the split
    // bit `k`, where `existing` and `fresh` become siblings at depth k + 1.
    PrefixTree::NodePtr split(
      std::size_t depth,
      std::size_t k,
      const Digest& index,
      PrefixTree::NodePtr existing,
      PrefixTree::NodePtr fresh)
    {
      PrefixTree::NodePtr n = index.bit(k) == 0 ?
        make_interior(std::move(fresh), std::move(existing)) :
        make_interior(std::move(existing), std::move(fresh));
      for (std::size_t d = k; d-- > depth;)
      {
        n = index.bit(d) == 0 ? make_interior(n, nullptr) :
                                make_interior(nullptr, n);
      }
      return n;
    }

    struct InsertState
    {
      const Digest& index;
      const LeafEntry& entry;
      bool new_leaf = false;
    };

    PrefixTree::NodePtr insert_at(
      const PrefixTree::NodePtr& n, std::size_t depth, InsertState& s)
    {
      if (!n)
      {
        auto rec = std::make_shared<LeafRecord>();
        rec->full_index = s.index;
        rec->entries.push_back(s.entry);
        rec->cumulative = leaf_chain_step(
          leaf_base_hash(s.index), s.entry.t, s.entry.event_hash);
        s.new_leaf = true;
        return make_leaf(std::move(rec));
      }
      if (n->leaf)
      {
        const auto& old = *n->leaf;
        if (old.full_index == s.index)
        {
          if (s.entry.t <= old.entries.back().t)
          {
            throw NonMonotonicTimestamp(
              "timestamp " + std::to_string(s.entry.t) +
              " does not exceed the leaf's last timestamp " +
              std::to_string(old.entries.back().t));
          }
          auto rec = std::make_shared<LeafRecord>(old);
          rec->entries.push_back(s.entry);
          rec->cumulative =
            leaf_chain_step(old.cumulative, s.entry.t, s.entry.event_hash);
          return make_leaf(std::move(rec));
        }
        const auto k = first_differing_bit(old.full_index, s.index);
        auto fresh = insert_at(nullptr, k + 1, s);
        return split(depth, k, s.index, n, std::move(fresh));
      }
      if (s.index.bit(depth) == 0)
      {
        return make_interior(insert_at(n->left, depth + 1, s), n->right);
      }
      return make_interior(n->left, insert_at(n->right, depth + 1, s));
    }
  }

  UpdateProof PrefixTree::insert(
    const Digest& index, SequenceNumber t, const Digest& event_hash, Bytes body)
  {
    UpdateProof up;
    up.before = lookup(index, false);
    up.t = t;
    up.event_hash = event_hash;
    LeafEntry entry{t, event_hash, std::move(body)};
    InsertState s{index, entry};
    root_ = insert_at(root_, 0, s);
    if (s.new_leaf)
    {
      ++leaves_;
    }
    ++entries_;
    up.after = lookup(index, false);
    return up;
  }

  Proof PrefixTree::lookup(const Digest& index, bool with_bodies) const
  {
    auto w = walk(root_, index);
    Proof p;
    p.index = index;
    p.depth = w.depth;
    p.siblings = std::move(w.siblings);
    if (w.terminal == nullptr)
    {
      p.kind = ProofKind::absence_no_branch;
      return p;
    }
    const auto& leaf = *w.terminal->leaf;
    p.kind = leaf.full_index == index ? ProofKind::presence :
                                        ProofKind::absence_mismatched_leaf;
    p.leaf_index = leaf.full_index;
    p.entries = with_bodies ? leaf.entries : strip_bodies(leaf.entries);
    return p;
  }

  const LeafRecord* PrefixTree::find(const Digest& index) const
  {
    auto w = walk(root_, index);
    if (w.terminal != nullptr && w.terminal->leaf->full_index == index)
    {
      return w.terminal->leaf.get();
    }
    return nullptr;
  }

  namespace
  {
    void visit(
      const PrefixTree::Node* n,
      std::size_t depth,
      const std::function<void(const LeafRecord&, std::size_t)>& f)
    {
      if (n == nullptr)
      {
        return;
      }
      if (n->leaf)
      {
        f(*n->leaf, depth);
        return;
      }
      visit(n->left.get(), depth + 1, f);
      visit(n->right.get(), depth + 1, f);
    }
  }

  void PrefixTree::for_each_leaf(
    const std::function<void(const LeafRecord&, std::size_t depth)>& f) const
  {
    visit(root_.get(), 0, f);
  }

  double PrefixTree::mean_leaf_depth() const
  {
    if (leaves_ == 0)
    {
      return 0.0;
    }
    std::size_t total = 0;
    for_each_leaf([&](const LeafRecord&, std::size_t d) { total += d; });
    return static_cast<double>(total) / static_cast<double>(leaves_);
  }
}

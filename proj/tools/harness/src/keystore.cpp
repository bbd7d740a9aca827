// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/harness/keystore.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace revledger::harness
{
  namespace fs = std::filesystem;
  using nlohmann::json;

  namespace
  {
    Bytes read_file(const fs::path& p)
    {
      std::ifstream in(p, std::ios::binary);
      if (!in)
      {
        throw std::runtime_error("cannot read " + p.string());
      }
      return Bytes(std::istreambuf_iterator<char>(in), {});
    }

    std::string read_text(const fs::path& p)
    {
      const auto b = read_file(p);
      std::string s(b.begin(), b.end());
      while (!s.empty() && (s.back() == '\n' || s.back() == ' '))
      {
        s.pop_back();
      }
      return s;
    }

    void write_file(const fs::path& p, ByteView data)
    {
      if (p.has_parent_path())
      {
        fs::create_directories(p.parent_path());
      }
      // Write then rename so a crash never leaves a torn file.
      const auto tmp = fs::path(p.string() + ".tmp");
      {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
        if (!out)
        {
          throw std::runtime_error("cannot write " + p.string());
        }
      }
      fs::rename(tmp, p);
    }

    void write_text(const fs::path& p, const std::string& s)
    {
      write_file(p, ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    }

    json read_json(const fs::path& p, json fallback)
    {
      if (!fs::exists(p))
      {
        return fallback;
      }
      return json::parse(read_text(p));
    }
  }

  KeyPair load_key(const fs::path& file)
  {
    return KeyPair::decode(read_file(file));
  }

  KeyPair load_or_create_key(const fs::path& file)
  {
    if (fs::exists(file))
    {
      return load_key(file);
    }
    auto k = KeyPair::generate();
    write_file(file, k.encode());
    write_text(fs::path(file.string() + ".pub"), k.public_key().hex() + "\n");
    return k;
  }

  Keystore::Keystore(fs::path dir) : dir_(std::move(dir))
  {
    fs::create_directories(dir_ / "keys");
  }

  fs::path Keystore::key_file(const std::string& name) const
  {
    if (name.empty() || name.find('/') != std::string::npos || name[0] == '.')
    {
      throw std::invalid_argument("bad key name: " + name);
    }
    return dir_ / "keys" / (name + ".key");
  }

  KeyPair Keystore::create_key(const std::string& name, bool overwrite)
  {
    const auto file = key_file(name);
    if (fs::exists(file) && !overwrite)
    {
      throw std::runtime_error("key " + name + " already exists");
    }
    auto k = KeyPair::generate();
    write_file(file, k.encode());
    write_text(dir_ / "keys" / (name + ".pub"), k.public_key().hex() + "\n");
    return k;
  }

  KeyPair Keystore::key(const std::string& name) const
  {
    return load_key(key_file(name));
  }

  PublicKey Keystore::resolve(const std::string& name_or_hex) const
  {
    const auto pub = dir_ / "keys" / (name_or_hex + ".pub");
    if (name_or_hex.find('/') == std::string::npos && fs::exists(pub))
    {
      return PublicKey::from_hex(read_text(pub));
    }
    return PublicKey::from_hex(name_or_hex);
  }

  std::optional<std::string> Keystore::name_of(const PublicKey& k) const
  {
    for (const auto& entry : fs::directory_iterator(dir_ / "keys"))
    {
      if (entry.path().extension() == ".pub" && read_text(entry.path()) == k.hex())
      {
        return entry.path().stem().string();
      }
    }
    return std::nullopt;
  }

  void Keystore::add_group(const std::string& name, const PublicKey& owner)
  {
    auto groups = read_json(dir_ / "groups.json", json::object());
    groups[name] = owner.hex();
    write_text(dir_ / "groups.json", groups.dump(2) + "\n");
  }

  GroupId Keystore::group(const std::string& name, const std::string& owner) const
  {
    if (!owner.empty())
    {
      return GroupId(resolve(owner), name);
    }
    const auto groups = read_json(dir_ / "groups.json", json::object());
    if (!groups.contains(name))
    {
      throw std::runtime_error("unknown group " + name + "; run group-create or pass --owner");
    }
    return GroupId(PublicKey::from_hex(groups.at(name).get<std::string>()), name);
  }

  namespace
  {
    std::string chain_key(const GroupId& g, const Role& r, const PublicKey& k)
    {
      return g.owner.hex() + "/" + g.name + "/" + r.tag() + "/" + k.hex();
    }
  }

  void Keystore::set_chain(
    const GroupId& g, const Role& r, const PublicKey& k, const MemberChain& chain)
  {
    auto chains = read_json(dir_ / "chains.json", json::object());
    chains[chain_key(g, r, k)] = to_hex(encode(chain));
    write_text(dir_ / "chains.json", chains.dump(2) + "\n");
  }

  MemberChain Keystore::chain(const GroupId& g, const Role& r, const PublicKey& k) const
  {
    const auto chains = read_json(dir_ / "chains.json", json::object());
    const auto key = chain_key(g, r, k);
    if (!chains.contains(key))
    {
      return {};
    }
    return decode_member_chain(from_hex(chains.at(key).get<std::string>()));
  }

  std::optional<PublicKey> Keystore::utp() const
  {
    const auto p = dir_ / "utp.pub";
    if (!fs::exists(p))
    {
      return std::nullopt;
    }
    return PublicKey::from_hex(read_text(p));
  }

  void Keystore::set_utp(const PublicKey& k)
  {
    write_text(dir_ / "utp.pub", k.hex() + "\n");
  }

  std::optional<Block> Keystore::trusted_block() const
  {
    const auto p = dir_ / "trusted_block";
    if (!fs::exists(p))
    {
      return std::nullopt;
    }
    return decode_block(read_file(p));
  }

  void Keystore::set_trusted_block(const Block& b)
  {
    write_file(dir_ / "trusted_block", encode(b));
  }

  fs::path Keystore::save_alarm(const Alarm& a)
  {
    fs::create_directories(dir_ / "alarms");
    std::size_t n = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir_ / "alarms"))
    {
      ++n;
    }
    std::ostringstream name;
    name << n << "-" << to_string(a.kind) << ".alarm";
    const auto p = dir_ / "alarms" / name.str();
    write_file(p, encode(a));
    return p;
  }
}

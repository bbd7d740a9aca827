// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/client.hpp"
#include "revledger/harness/keystore.hpp"
#include "revledger/harness/render.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>

using namespace revledger;
using namespace revledger::harness;
using nlohmann::json;

namespace
{
  // Exit codes.
  constexpr int ok = 0;
  constexpr int failed = 1;
  constexpr int negative = 2;
  constexpr int alarmed = 3;

  struct Options
  {
    std::string ledger = "127.0.0.1:7400";
    std::string auditor;
    std::string keystore = "keystore";
    std::string utp;

    std::string name;
    bool force = false;
    std::string as;
    std::string group;
    std::string owner;
    std::string role = "member";
    std::string subject;
    std::string chain_hex;
    std::string cert;
    std::string cert_group;
    std::string cert_owner;
    std::string cert_role = "member";
    std::string cert_subject;
    bool scoped = false;
    std::string chain_file;
    std::string root;
    std::uint64_t now = 0;
    std::vector<std::string> auth;
    std::uint64_t not_before = 0;
    std::uint64_t not_after = 0;
    bool commit = false;
  };

  std::uint64_t wall_clock()
  {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::seconds>(
                                        std::chrono::system_clock::now().time_since_epoch())
                                        .count());
  }

  HierChain read_hier_chain(const std::string& file)
  {
    std::ifstream in(file);
    if (!in)
    {
      throw std::runtime_error("cannot read " + file);
    }
    HierChain chain;
    std::string line;
    while (std::getline(in, line))
    {
      if (!line.empty())
      {
        chain.push_back(decode_hier_certificate(from_hex(line)));
      }
    }
    return chain;
  }

  /// Everything that talks to the ledger.
  class Session
  {
  public:
    Session(const Options& o, Keystore& ks) :
      ks_(ks),
      remote_(std::make_shared<TcpTransport>(parse_address(o.ledger)))
    {
      if (!o.utp.empty())
      {
        ks.set_utp(ks.resolve(o.utp));
      }
      const auto utp = ks.utp();
      if (!utp)
      {
        throw std::runtime_error("the ledger's key is unknown; pass --utp <hex> once");
      }
      if (!o.auditor.empty())
      {
        auditor_.emplace(std::make_shared<TcpTransport>(parse_address(o.auditor)));
      }
      client_.emplace(
        remote_, *utp, auditor_ ? &*auditor_ : nullptr, [this](const Alarm& a) {
          auto j = render(a);
          j["evidence_file"] = ks_.save_alarm(a).string();
          emit(j);
          ++alarms_;
        });
      if (auto b = ks.trusted_block())
      {
        client_->trust(*b);
      }
      client_->refresh();
    }

    ~Session()
    {
      if (client_ && client_->trusted_block())
      {
        ks_.set_trusted_block(*client_->trusted_block());
      }
    }

    AccessClient& client()
    {
      return *client_;
    }

    int finish(int code) const
    {
      return alarms_ > 0 ? alarmed : code;
    }

  private:
    Keystore& ks_;
    RemoteLedger remote_;
    std::optional<RemoteAuditor> auditor_;
    std::optional<AccessClient> client_;
    std::size_t alarms_ = 0;
  };

  int report(Session& s, const SubmitOutcome& out)
  {
    emit(render(out));
    return s.finish(out.accepted() ? ok : negative);
  }
}

int main(int argc, char** argv)
{
  CLI::App app{"revledger access client"};
  app.require_subcommand(1);
  Options o;
  if (const char* env = std::getenv("REVLEDGER_KEYSTORE"); env != nullptr)
  {
    o.keystore = env;
  }
  app.add_option("--ledger", o.ledger, "Ledger host:port");
  app.add_option("--auditor", o.auditor, "Auditor host:port for block cross-checks");
  app.add_option("--keystore", o.keystore, "Keystore directory");
  app.add_option("--utp", o.utp, "The ledger's public key (hex), remembered in the keystore")
    ->envname("REVLEDGER_UTP");

  auto group_options = [&](CLI::App* c) {
    c->add_option("--group", o.group, "Group name")->required();
    c->add_option("--owner", o.owner, "Group owner (key name or hex) if not recorded");
  };

  auto* keygen = app.add_subcommand("keygen", "Create a named key");
  keygen->add_option("--name", o.name)->required();
  keygen->add_flag("--force", o.force, "Overwrite an existing key");

  auto* group_create = app.add_subcommand("group-create", "Record a group owned by a key");
  group_create->add_option("--group", o.group)->required();
  group_create->add_option("--owner", o.owner, "Owner key name")->required();

  auto* add = app.add_subcommand("add", "Add a member or leader");
  auto* revoke = app.add_subcommand("revoke", "Revoke a role");
  for (auto* c : {add, revoke})
  {
    c->add_option("--as", o.as, "Issuing key name")->required();
    group_options(c);
    c->add_option("--role", o.role, "leader, member or another role tag");
    c->add_option("--subject", o.subject, "Key name or hex")->required();
  }

  auto* suspend = app.add_subcommand("suspend", "Lock the group for this leader");
  auto* resume = app.add_subcommand("resume", "Release the lock");
  for (auto* c : {suspend, resume})
  {
    c->add_option("--as", o.as)->required();
    group_options(c);
  }

  auto* verify = app.add_subcommand("verify", "Decide membership");
  group_options(verify);
  verify->add_option("--role", o.role);
  verify->add_option("--subject", o.subject)->required();
  verify->add_option("--chain", o.chain_hex, "Chain (hex); default the keystore's");

  auto* revoke_cert = app.add_subcommand("revoke-cert", "Revoke one certificate");
  revoke_cert->add_option("--as", o.as)->required();
  revoke_cert->add_option("--cert", o.cert, "Certificate hash (hex)");
  revoke_cert->add_option("--cert-group", o.cert_group, "Or: the group of a known chain");
  revoke_cert->add_option("--cert-owner", o.cert_owner);
  revoke_cert->add_option("--cert-role", o.cert_role);
  revoke_cert->add_option("--cert-subject", o.cert_subject);
  revoke_cert->add_flag("--scoped", o.scoped, "Revoke on behalf of the group as its leader");

  auto* hier_issue = app.add_subcommand("hier-issue", "Append a delegation certificate to a chain file");
  hier_issue->add_option("--as", o.as)->required();
  hier_issue->add_option("--subject", o.subject)->required();
  hier_issue->add_option("--auth", o.auth)->delimiter(',');
  hier_issue->add_option("--not-before", o.not_before);
  hier_issue->add_option("--not-after", o.not_after);
  hier_issue->add_flag("--commit", o.commit, "Commit to a revocation preimage");
  hier_issue->add_option("--chain", o.chain_file)->required();

  auto* revoke_preimage =
    app.add_subcommand("revoke-preimage", "Publish the preimage committed in a certificate");
  revoke_preimage->add_option("--cert", o.cert, "Certificate hash (hex)")->required();

  auto* verify_chain = app.add_subcommand("verify-chain", "Verify a delegation chain file");
  verify_chain->add_option("--chain", o.chain_file)->required();
  verify_chain->add_option("--root", o.root, "Root key name or hex")->required();
  verify_chain->add_option("--now", o.now, "Seconds since the epoch; default the clock");

  CLI11_PARSE(app, argc, argv);

  try
  {
    Keystore ks(o.keystore);

    if (*keygen)
    {
      const auto k = ks.create_key(o.name, o.force);
      emit({{"name", o.name}, {"public_key", k.public_key().hex()}});
      return ok;
    }
    if (*group_create)
    {
      const auto owner = ks.resolve(o.owner);
      ks.add_group(o.group, owner);
      emit({{"group", render(GroupId(owner, o.group))}});
      return ok;
    }
    if (*hier_issue)
    {
      const auto issuer = ks.key(o.as);
      std::optional<Validity> validity;
      if (o.not_before != 0 || o.not_after != 0)
      {
        validity = Validity{o.not_before, o.not_after == 0 ? UINT64_MAX : o.not_after};
      }
      std::optional<Digest> commitment;
      Bytes secret;
      if (o.commit)
      {
        secret = random_bytes(32);
        commitment = hash(secret);
      }
      auto cert = issue_hier_certificate(
        issuer,
        ks.resolve(o.subject),
        std::set<std::string>(o.auth.begin(), o.auth.end()),
        validity,
        commitment);
      const auto h = certificate_hash(cert);
      if (o.commit)
      {
        std::filesystem::create_directories(ks.dir() / "secrets");
        std::ofstream(ks.dir() / "secrets" / (h.hex() + ".secret")) << to_hex(secret) << "\n";
      }
      std::ofstream(o.chain_file, std::ios::app) << to_hex(encode(cert)) << "\n";
      emit({{"certificate", render(cert)}});
      return ok;
    }

    Session s(o, ks);
    auto& client = s.client();

    if (*add || *revoke)
    {
      const auto issuer = ks.key(o.as);
      const auto g = ks.group(o.group, o.owner);
      const Role role(o.role);
      const auto subject = ks.resolve(o.subject);
      auto chain = ks.chain(g, Role::leader(), issuer.public_key());
      if (*revoke)
      {
        return report(s, client.revoke_member(issuer, chain, g, role, subject));
      }
      auto out = client.add_member(issuer, chain, g, role, subject);
      if (out.accepted())
      {
        chain.push_back(std::get<MemberCertificate>(out.request.event));
        ks.set_chain(g, role, subject, chain);
      }
      return report(s, out);
    }
    if (*suspend)
    {
      const auto issuer = ks.key(o.as);
      const auto g = ks.group(o.group, o.owner);
      return report(s, client.suspend(issuer, ks.chain(g, Role::leader(), issuer.public_key()), g));
    }
    if (*resume)
    {
      return report(s, client.resume(ks.key(o.as), ks.group(o.group, o.owner)));
    }
    if (*verify)
    {
      const auto g = ks.group(o.group, o.owner);
      const Role role(o.role);
      const auto subject = ks.resolve(o.subject);
      const auto chain = o.chain_hex.empty() ? ks.chain(g, role, subject) :
                                               decode_member_chain(from_hex(o.chain_hex));
      const auto v = client.verify_member(chain, g, role, subject);
      auto j = render(v);
      j["group"] = render(g);
      j["role"] = role.tag();
      j["subject"] = subject.hex();
      j["block"] = client.trusted_block() ? json(client.trusted_block()->height) : json();
      emit(j);
      return s.finish(v.verdict == Membership::is_member ? ok : negative);
    }
    if (*revoke_cert)
    {
      const auto issuer = ks.key(o.as);
      Digest h;
      std::optional<GroupId> scope;
      if (!o.cert.empty())
      {
        h = Digest::from_hex(o.cert);
        if (o.scoped)
        {
          if (o.cert_group.empty())
          {
            throw std::runtime_error("--scoped needs --cert-group");
          }
          scope = ks.group(o.cert_group, o.cert_owner);
        }
      }
      else
      {
        const auto g = ks.group(o.cert_group, o.cert_owner);
        const auto chain = ks.chain(g, Role(o.cert_role), ks.resolve(o.cert_subject));
        if (chain.empty())
        {
          throw std::runtime_error("no known certificate for that member");
        }
        h = certificate_hash(chain.back());
        if (o.scoped)
        {
          scope = g;
        }
      }
      if (scope)
      {
        return report(
          s,
          client.revoke_cert_for_group(
            issuer, ks.chain(*scope, Role::leader(), issuer.public_key()), *scope, h));
      }
      return report(s, client.revoke_cert(issuer, h));
    }
    if (*revoke_preimage)
    {
      std::ifstream in(ks.dir() / "secrets" / (o.cert + ".secret"));
      std::string secret;
      if (!(in >> secret))
      {
        throw std::runtime_error("no stored preimage for certificate " + o.cert);
      }
      return report(s, client.publish_preimage(from_hex(secret)));
    }
    if (*verify_chain)
    {
      const auto chain = read_hier_chain(o.chain_file);
      const auto v = client.verify_hier_chain(
        chain, ks.resolve(o.root), o.now == 0 ? wall_clock() : o.now);
      json j{{"valid", v.valid}, {"reason", v.reason}, {"length", chain.size()}};
      if (v.alarm)
      {
        j["alarm"] = render(*v.alarm);
      }
      emit(j);
      return s.finish(v.valid ? ok : negative);
    }
  }
  catch (const std::exception& e)
  {
    emit({{"error", e.what()}});
    return failed;
  }
  return failed;
}

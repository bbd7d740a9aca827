// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "revledger/harness/scenario.hpp"

#include "revledger/client.hpp"
#include "revledger/oracle.hpp"

#include <memory>
#include <sstream>

namespace revledger::harness
{
  using nlohmann::json;

  Scenario scenario_from_json(const json& j)
  {
    Scenario s;
    s.name = j.value("name", "unnamed");
    s.seed = j.value("seed", std::uint64_t{0});
    s.actors = j.at("actors").get<std::vector<std::string>>();
    for (const auto& g : j.value("groups", json::array()))
    {
      s.groups.push_back({g.at("name").get<std::string>(), g.at("owner").get<std::string>()});
    }
    for (const auto& js : j.at("steps"))
    {
      Step st;
      st.op = js.at("op").get<std::string>();
      st.by = js.value("by", "");
      st.group = js.value("group", "");
      st.role = js.value("role", "member");
      st.subject = js.value("subject", "");
      st.expect = js.value("expect", "");
      st.blocking = js.value("blocking", "");
      st.label = js.value("label", "");
      st.fault = js.value("fault", "");
      st.kind = js.value("kind", "");
      st.action = js.value("action", "");
      if (js.contains("cert_of"))
      {
        const auto& c = js.at("cert_of");
        st.cert_group = c.at("group").get<std::string>();
        st.cert_role = c.value("role", "member");
        st.cert_subject = c.at("subject").get<std::string>();
      }
      s.steps.push_back(std::move(st));
    }
    return s;
  }

  json to_json(const Scenario& s)
  {
    json j;
    j["name"] = s.name;
    j["seed"] = s.seed;
    j["actors"] = s.actors;
    j["groups"] = json::array();
    for (const auto& g : s.groups)
    {
      j["groups"].push_back({{"name", g.name}, {"owner", g.owner}});
    }
    j["steps"] = json::array();
    for (const auto& st : s.steps)
    {
      json js{{"op", st.op}};
      const std::pair<const char*, const std::string*> fields[] = {
        {"by", &st.by},
        {"group", &st.group},
        {"subject", &st.subject},
        {"expect", &st.expect},
        {"blocking", &st.blocking},
        {"label", &st.label},
        {"fault", &st.fault},
        {"kind", &st.kind},
        {"action", &st.action},
      };
      for (const auto& [name, value] : fields)
      {
        if (!value->empty())
        {
          js[name] = *value;
        }
      }
      if (!st.group.empty() || !st.action.empty())
      {
        js["role"] = st.role;
      }
      if (!st.cert_group.empty())
      {
        js["cert_of"] = {
          {"group", st.cert_group}, {"role", st.cert_role}, {"subject", st.cert_subject}};
      }
      j["steps"].push_back(std::move(js));
    }
    return j;
  }

  namespace
  {
    Step submit_step(
      std::string op,
      std::string by,
      std::string group,
      std::string role,
      std::string subject,
      std::string expect,
      std::string blocking = "")
    {
      Step s;
      s.op = std::move(op);
      s.by = std::move(by);
      s.group = std::move(group);
      s.role = std::move(role);
      s.subject = std::move(subject);
      s.expect = std::move(expect);
      s.blocking = std::move(blocking);
      return s;
    }

    Step verify_step(
      std::string by, std::string group, std::string role, std::string subject, std::string expect)
    {
      auto s = submit_step("verify", by, group, role, subject, expect);
      return s;
    }

    Scenario alice_bob_carol(std::uint64_t seed)
    {
      Scenario s;
      s.name = "alice-bob-carol";
      s.seed = seed;
      s.actors = {"course", "alice", "bob", "carol", "eve"};
      s.groups = {{"admins", "course"}};
      s.steps = {
        submit_step("add", "course", "admins", "leader", "alice", "accepted"),
        submit_step("add", "alice", "admins", "leader", "bob", "accepted"),
        submit_step("add", "bob", "admins", "leader", "carol", "accepted"),
        submit_step("revoke", "carol", "admins", "leader", "alice", "accepted"),
        verify_step("eve", "admins", "leader", "alice", "not-member"),
        verify_step("eve", "admins", "leader", "bob", "member"),
        verify_step("eve", "admins", "leader", "carol", "member"),
        submit_step("add", "alice", "admins", "member", "eve", "Unauthorized", "carol"),
        verify_step("carol", "admins", "member", "eve", "not-member"),
        submit_step("add", "bob", "admins", "member", "eve", "accepted"),
        verify_step("alice", "admins", "member", "eve", "member"),
      };
      return s;
    }

    Scenario david_erik_race(std::uint64_t seed, bool david_first)
    {
      // Erik holds the old phone's key after buying it.
      Scenario s;
      s.name = std::string("david-erik-race/") + (david_first ? "david-first" : "erik-first");
      s.seed = seed;
      s.actors = {"david", "old-phone", "new-phone", "tablet"};
      s.groups = {{"devices", "david"}};
      s.steps = {
        submit_step("add", "david", "devices", "leader", "old-phone", "accepted"),
        submit_step("add", "old-phone", "devices", "leader", "new-phone", "accepted"),
      };
      auto hold = [](std::string label, std::string by, std::string subject) {
        auto st = submit_step("hold", std::move(by), "devices", "leader", std::move(subject), "");
        st.label = std::move(label);
        st.action = "revoke";
        return st;
      };
      s.steps.push_back(hold("david", "new-phone", "old-phone"));
      s.steps.push_back(hold("erik", "old-phone", "new-phone"));
      auto release = [](std::string label, std::string expect, std::string blocking) {
        Step st;
        st.op = "release";
        st.label = std::move(label);
        st.expect = std::move(expect);
        st.blocking = std::move(blocking);
        return st;
      };
      const std::string winner = david_first ? "new-phone" : "old-phone";
      const std::string loser = david_first ? "old-phone" : "new-phone";
      if (david_first)
      {
        s.steps.push_back(release("david", "accepted", ""));
        s.steps.push_back(release("erik", "Unauthorized", winner));
      }
      else
      {
        s.steps.push_back(release("erik", "accepted", ""));
        s.steps.push_back(release("david", "Unauthorized", winner));
      }
      s.steps.push_back(verify_step("tablet", "devices", "leader", winner, "member"));
      s.steps.push_back(verify_step("tablet", "devices", "leader", loser, "not-member"));
      // The loser stays locked out.
      s.steps.push_back(
        submit_step("add", loser, "devices", "member", "tablet", "Unauthorized", winner));
      s.steps.push_back(
        submit_step("revoke", loser, "devices", "leader", winner, "Unauthorized", winner));
      s.steps.push_back(verify_step("david", "devices", "member", "tablet", "not-member"));
      s.steps.push_back(verify_step("david", "devices", "leader", winner, "member"));
      return s;
    }

    Scenario semi_malicious_clique(std::uint64_t seed)
    {
      Scenario s;
      s.name = "semi-malicious-clique";
      s.seed = seed;
      s.actors = {"founder", "lena", "mal1", "mal2", "mal3", "mal4", "viewer"};
      s.groups = {{"team", "founder"}};
      const std::string g = "team";
      s.steps = {
        submit_step("add", "founder", g, "leader", "lena", "accepted"),
        submit_step("add", "lena", g, "leader", "mal1", "accepted"),
        submit_step("add", "mal1", g, "leader", "mal2", "accepted"),
        submit_step("add", "mal2", g, "leader", "mal3", "accepted"),
        // Revocation alone does not expel the clique: it re-adds at once.
        submit_step("revoke", "lena", g, "leader", "mal3", "accepted"),
        submit_step("add", "mal2", g, "leader", "mal3", "accepted"),
        submit_step("revoke", "lena", g, "leader", "mal2", "accepted"),
        submit_step("add", "mal1", g, "leader", "mal2", "accepted"),
        verify_step("viewer", g, "leader", "mal2", "member"),
        verify_step("viewer", g, "leader", "mal3", "member"),
        // Lena takes the lock.
        submit_step("suspend", "lena", g, "leader", "", "accepted"),
        submit_step("add", "mal1", g, "leader", "mal4", "GroupSuspended"),
        submit_step("suspend", "mal2", g, "leader", "", "GroupSuspended"),
        submit_step("revoke", "lena", g, "leader", "mal1", "accepted"),
        submit_step("add", "mal2", g, "leader", "mal1", "GroupSuspended"),
        submit_step("revoke", "lena", g, "leader", "mal2", "accepted"),
        submit_step("revoke", "lena", g, "leader", "mal3", "accepted"),
        submit_step("resume", "mal3", g, "leader", "", "Unauthorized"),
        submit_step("resume", "lena", g, "leader", "", "accepted"),
        // After the lock is released the clique has no leader left.
        submit_step("add", "mal1", g, "leader", "mal4", "Unauthorized", "lena"),
        submit_step("add", "mal3", g, "leader", "mal1", "Unauthorized", "lena"),
        verify_step("viewer", g, "leader", "mal1", "not-member"),
        verify_step("viewer", g, "leader", "mal2", "not-member"),
        verify_step("viewer", g, "leader", "mal3", "not-member"),
        verify_step("viewer", g, "leader", "mal4", "not-member"),
        verify_step("viewer", g, "leader", "lena", "member"),
        submit_step("add", "lena", g, "member", "viewer", "accepted"),
        verify_step("founder", g, "member", "viewer", "member"),
      };
      return s;
    }

    /// Ledger link that fails like a dead network while cut.
    class PartitionLink : public LedgerApi
    {
    public:
      explicit PartitionLink(LedgerApi& inner) : inner_(inner) {}

      bool cut = false;

      SubmitResponse submit(const SubmitRequest& request) override
      {
        check();
        return inner_.submit(request);
      }
      QueryResponse query(const Digest& index, std::optional<std::uint64_t> height) override
      {
        check();
        return inner_.query(index, height);
      }
      SignedAuthorization fetch_authorization(const Digest& event_hash) override
      {
        check();
        return inner_.fetch_authorization(event_hash);
      }
      Block latest_block() override
      {
        check();
        return inner_.latest_block();
      }
      std::optional<Block> block_at(std::uint64_t height) override
      {
        check();
        return inner_.block_at(height);
      }
      std::vector<AuditItem> audit_items(
        std::size_t cursor, std::size_t max, bool compact_updates) override
      {
        check();
        return inner_.audit_items(cursor, max, compact_updates);
      }

    private:
      void check() const
      {
        if (cut)
        {
          throw TransportError("partitioned");
        }
      }

      LedgerApi& inner_;
    };

    struct Actor
    {
      std::string name;
      KeyPair key;
      std::unique_ptr<PartitionLink> link;
      std::unique_ptr<AccessClient> client;
    };

    class World
    {
    public:
      World(const Scenario& s, ScenarioResult& result) :
        s_(s),
        result_(result),
        utp_(derive_key(s.seed, "utp", 0)),
        ledger_(utp_, options()),
        proxy_(ledger_, utp_),
        honest_(ledger_),
        ledger_wire_(std::make_shared<LoopbackTransport>(ledger_handler(proxy_))),
        remote_(ledger_wire_),
        auditor_(derive_key(s.seed, "auditor", 0), utp_.public_key(), AuditorMode::proof_stream),
        auditor_wire_(std::make_shared<LoopbackTransport>(auditor_handler(auditor_))),
        remote_auditor_(auditor_wire_),
        rng_(s.seed)
      {
        auditor_.set_relay(&honest_);
        for (const auto& name : s.actors)
        {
          auto a = std::make_unique<Actor>();
          a->name = name;
          a->key = derive_key(s.seed, "actor:" + name, 0);
          a->link = std::make_unique<PartitionLink>(remote_);
          a->client = std::make_unique<AccessClient>(
            *a->link, utp_.public_key(), &remote_auditor_);
          names_[a->key.public_key()] = name;
          actors_[name] = std::move(a);
        }
        for (const auto& g : s.groups)
        {
          groups_.emplace(g.name, GroupId(actor(g.owner).key.public_key(), g.name));
        }
        sync();
      }

      void run()
      {
        for (std::size_t i = 0; i < s_.steps.size(); ++i)
        {
          const auto& st = s_.steps[i];
          std::ostringstream line;
          line << "[" << i << "] " << st.op;
          try
          {
            execute(st, line);
          }
          catch (const std::exception& e)
          {
            fail(line, std::string("error: ") + e.what());
          }
          result_.transcript.push_back(line.str());
        }
      }

    private:
      static LedgerOptions options()
      {
        LedgerOptions o;
        o.block_events = 1;
        o.clock = [] { return std::uint64_t{1700000000}; };
        return o;
      }

      Actor& actor(const std::string& name)
      {
        auto it = actors_.find(name);
        if (it == actors_.end())
        {
          throw std::invalid_argument("unknown actor " + name);
        }
        return *it->second;
      }

      const GroupId& group(const std::string& name) const
      {
        auto it = groups_.find(name);
        if (it == groups_.end())
        {
          throw std::invalid_argument("unknown group " + name);
        }
        return it->second;
      }

      std::string name_of(const PublicKey& k) const
      {
        auto it = names_.find(k);
        return it == names_.end() ? k.hex().substr(0, 12) : it->second;
      }

      MemberChain chain_of(const GroupId& g, const Role& r, const PublicKey& k) const
      {
        auto it = chains_.find({g, r, k});
        return it == chains_.end() ? MemberChain{} : it->second;
      }

      void fail(std::ostringstream& line, const std::string& why)
      {
        line << "  FAIL " << why;
        result_.passed = false;
        result_.failures.push_back(line.str());
      }

      void sync()
      {
        if (pending_feed_fault_)
        {
          const auto feed = honest_.audit_items(0, ledger_.audit_size(), false);
          std::optional<std::vector<AuditItem>> forged;
          switch (*pending_feed_fault_)
          {
            case Fault::mutate_history:
            case Fault::delete_entry:
              forged = forge_mutation(
                feed,
                utp_,
                rng_,
                *pending_feed_fault_ == Fault::delete_entry,
                audited_);
              break;
            case Fault::drop_update:
              forged = forge_drop(feed, rng_, audited_);
              break;
            default:
              forged = forge_non_monotonic(feed, rng_, audited_);
          }
          if (forged)
          {
            proxy_.set_feed(std::move(*forged));
            pending_feed_fault_.reset();
          }
        }
        auditor_.sync(proxy_);
        if (!pending_feed_fault_)
        {
          audited_ = ledger_.audit_size();
        }
        for (auto& [name, a] : actors_)
        {
          if (!a->link->cut)
          {
            a->client->refresh();
          }
        }
      }

      SubmitRequest build(const Step& st, const std::string& action)
      {
        auto& by = actor(st.by);
        const auto fresh =
          by.client->trusted_block() ? by.client->trusted_block()->t_latest : 0;
        if (action == "revoke-cert")
        {
          const auto& cg = group(st.cert_group);
          const auto target =
            chain_of(cg, Role(st.cert_role), actor(st.cert_subject).key.public_key());
          if (target.empty())
          {
            throw std::invalid_argument("no certificate for " + st.cert_subject);
          }
          const auto h = certificate_hash(target.back());
          if (target.back().issuer == by.key.public_key())
          {
            return {issue_cert_revocation(by.key, h, fresh), {}, {}};
          }
          return {
            issue_cert_revocation(by.key, h, fresh),
            chain_of(cg, Role::leader(), by.key.public_key()),
            cg};
        }
        const auto& g = group(st.group);
        auto chain = chain_of(g, Role::leader(), by.key.public_key());
        if (action == "add")
        {
          return {
            issue_certificate(
              by.key, actor(st.subject).key.public_key(), g, Role(st.role), fresh),
            chain,
            {}};
        }
        if (action == "revoke")
        {
          return {
            issue_revocation(
              by.key, actor(st.subject).key.public_key(), g, Role(st.role), fresh),
            chain,
            {}};
        }
        if (action == "suspend")
        {
          return {issue_suspend(by.key, g, fresh), chain, {}};
        }
        if (action == "resume")
        {
          return {issue_resume(by.key, g, fresh), {}, {}};
        }
        throw std::invalid_argument("unknown action " + action);
      }

      void describe(std::ostringstream& line, const Step& st, const std::string& action)
      {
        line << " by=" << st.by;
        if (action == "revoke-cert")
        {
          line << " cert=" << st.cert_group << "/" << st.cert_role << "/" << st.cert_subject;
          return;
        }
        line << " group=" << st.group;
        if (action == "add" || action == "revoke")
        {
          line << " role=" << st.role << " subject=" << st.subject;
        }
      }

      void submit(const Step& st, const SubmitRequest& request, Actor& by, std::ostringstream& line)
      {
        auto out = by.client->submit(request);
        proxy_.set_submit_mode(ByzantineLedger::SubmitMode::honest);

        std::string outcome;
        if (out.accepted())
        {
          outcome = "accepted";
          if (const auto* c = std::get_if<MemberCertificate>(&request.event))
          {
            auto chain = request.chain;
            chain.push_back(*c);
            chains_[{c->group, c->role, c->subject}] = std::move(chain);
          }
        }
        else if (out.rejection)
        {
          outcome = to_string(out.rejection->reason);
        }
        else
        {
          outcome = "alarm:" + to_string(out.alarm->kind);
        }
        line << " -> " << outcome;
        if (out.rejection)
        {
          if (out.rejection->blocking)
          {
            const auto& b = *out.rejection->blocking;
            const auto issuer = issuer_of(b.event);
            line << " blocked-by=" << (issuer ? name_of(*issuer) : "?") << "@t"
                 << b.t;
          }
          if (out.assessment)
          {
            line << " verdict=" << to_string(out.assessment->verdict);
          }
        }
        if (!st.expect.empty() && outcome != st.expect)
        {
          fail(line, "expected " + st.expect);
        }
        if (!st.blocking.empty())
        {
          const auto& blocking = out.rejection ? out.rejection->blocking : std::nullopt;
          const auto issuer = blocking ? issuer_of(blocking->event) : std::nullopt;
          if (!issuer || *issuer != actor(st.blocking).key.public_key())
          {
            fail(line, "refusal does not cite " + st.blocking);
          }
        }
        sync();
      }

      void verify(const Step& st, std::ostringstream& line)
      {
        auto& by = actor(st.by);
        const auto& g = group(st.group);
        const Role role(st.role);
        const auto subject = actor(st.subject).key.public_key();
        line << " by=" << st.by << " group=" << st.group << " role=" << st.role
             << " subject=" << st.subject;

        const auto v = by.client->verify_member(chain_of(g, role, subject), g, role, subject);
        std::string outcome = v.verdict == Membership::is_member ? "member" :
          v.verdict == Membership::not_member                    ? "not-member" :
                                                                   "alarm:" + to_string(v.alarm->kind);
        line << " -> " << outcome;

        GlobalHistory history;
        for (const auto& te : ledger_.history())
        {
          history.push_back(
            {te.t, te.event, ledger_.fetch_authorization(event_hash(te.event)).authorization});
        }
        const bool truth = replay(history).has_role(g, role, subject);
        line << " oracle=" << (truth ? "member" : "not-member");

        if (!st.expect.empty() && outcome != st.expect)
        {
          fail(line, "expected " + st.expect);
        }
        if (v.verdict != Membership::alarm && (v.verdict == Membership::is_member) != truth)
        {
          fail(line, "verifier and oracle disagree");
        }
      }

      void inject(const Step& st, std::ostringstream& line)
      {
        const auto fault = parse_fault(st.fault);
        if (!fault)
        {
          throw std::invalid_argument("unknown fault " + st.fault);
        }
        line << " " << to_string(*fault);
        switch (*fault)
        {
          case Fault::store_unauthorized_rev:
          {
            auto& by = actor(st.by);
            const auto& g = group(st.group);
            line << " by=" << st.by << " group=" << st.group << " role=" << st.role
                 << " subject=" << st.subject;
            ledger_.append_unvalidated(
              issue_revocation(
                by.key, actor(st.subject).key.public_key(), g, Role(st.role), ledger_.latest_t()),
              StoredAuthorization{
                std::nullopt, chain_of(g, Role::leader(), by.key.public_key())});
            ledger_.publish_block();
            sync();
            return;
          }
          case Fault::refuse_valid_event:
            proxy_.set_submit_mode(ByzantineLedger::SubmitMode::refuse);
            return;
          case Fault::omit_after_pod:
            proxy_.set_submit_mode(ByzantineLedger::SubmitMode::omit);
            return;
          case Fault::fork:
          {
            const auto b = ledger_.latest_block();
            const auto label = "fork " + std::to_string(s_.seed);
            proxy_.set_latest(make_block(
              utp_,
              b.height,
              b.prev,
              hash(Bytes(label.begin(), label.end())),
              b.t_latest,
              b.t_utc));
            return;
          }
          default:
            pending_feed_fault_ = *fault;
            return;
        }
      }

      void expect_alarm(const Step& st, std::ostringstream& line)
      {
        line << " by=" << st.by << " kind=" << st.kind;
        std::vector<std::string> seen;
        if (st.by == "auditor")
        {
          for (const auto& m : auditor_.misbehaviors())
          {
            seen.push_back(to_string(m.kind));
          }
        }
        else
        {
          for (const auto& a : actor(st.by).client->alarms())
          {
            seen.push_back(to_string(a.kind));
            if (a.kind != AlarmKind::no_response && !verify_evidence(a, utp_.public_key()))
            {
              fail(line, "evidence for " + to_string(a.kind) + " does not verify");
            }
          }
        }
        line << " ->";
        for (const auto& k : seen)
        {
          line << " " << k;
        }
        if (std::find(seen.begin(), seen.end(), st.kind) == seen.end())
        {
          fail(line, "alarm not raised");
        }
      }

      void execute(const Step& st, std::ostringstream& line)
      {
        if (
          st.op == "add" || st.op == "revoke" || st.op == "suspend" ||
          st.op == "resume" || st.op == "revoke-cert")
        {
          describe(line, st, st.op);
          submit(st, build(st, st.op), actor(st.by), line);
        }
        else if (st.op == "hold")
        {
          line << " " << st.label << ": " << st.action;
          describe(line, st, st.action);
          held_.emplace(st.label, std::make_pair(st, build(st, st.action)));
        }
        else if (st.op == "release")
        {
          auto it = held_.find(st.label);
          if (it == held_.end())
          {
            throw std::invalid_argument("nothing held as " + st.label);
          }
          auto [held_step, request] = it->second;
          held_.erase(it);
          line << " " << st.label << ": " << held_step.action;
          describe(line, held_step, held_step.action);
          held_step.expect = st.expect;
          held_step.blocking = st.blocking;
          submit(held_step, request, actor(held_step.by), line);
        }
        else if (st.op == "verify")
        {
          verify(st, line);
        }
        else if (st.op == "partition" || st.op == "heal")
        {
          line << " " << st.by;
          actor(st.by).link->cut = st.op == "partition";
        }
        else if (st.op == "inject")
        {
          inject(st, line);
        }
        else if (st.op == "expect-alarm")
        {
          expect_alarm(st, line);
        }
        else if (st.op == "confirm")
        {
          line << " by=" << st.by;
          const auto raised = actor(st.by).client->confirm_inclusion();
          line << " -> " << raised.size() << " alarm(s)";
        }
        else if (st.op == "sync")
        {
          ledger_.publish_block();
          sync();
          line << " height=" << ledger_.latest_block().height;
        }
        else
        {
          throw std::invalid_argument("unknown op " + st.op);
        }
      }

      const Scenario& s_;
      ScenarioResult& result_;
      KeyPair utp_;
      Ledger ledger_;
      ByzantineLedger proxy_;
      LocalLedger honest_;
      std::shared_ptr<LoopbackTransport> ledger_wire_;
      RemoteLedger remote_;
      Auditor auditor_;
      std::shared_ptr<LoopbackTransport> auditor_wire_;
      RemoteAuditor remote_auditor_;
      std::mt19937_64 rng_;
      std::map<std::string, std::unique_ptr<Actor>> actors_;
      std::map<PublicKey, std::string> names_;
      std::map<std::string, GroupId> groups_;
      std::map<Triple, MemberChain> chains_;
      std::map<std::string, std::pair<Step, SubmitRequest>> held_;
      std::optional<Fault> pending_feed_fault_;
      std::size_t audited_ = 0;
    };
  }

  std::vector<std::string> builtin_scenario_names()
  {
    return {"alice-bob-carol", "david-erik-race", "semi-malicious-clique"};
  }

  std::vector<Scenario> builtin_scenarios(std::string_view name, std::uint64_t seed)
  {
    if (name == "alice-bob-carol")
    {
      return {alice_bob_carol(seed)};
    }
    if (name == "david-erik-race")
    {
      return {david_erik_race(seed, true), david_erik_race(seed, false)};
    }
    if (name == "semi-malicious-clique")
    {
      return {semi_malicious_clique(seed)};
    }
    return {};
  }

  ScenarioResult run_scenario(const Scenario& s)
  {
    ScenarioResult result;
    result.name = s.name;
    World world(s, result);
    world.run();
    return result;
  }
}

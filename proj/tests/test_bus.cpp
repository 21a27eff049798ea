#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

#include "microctl/bus.hpp"

using namespace microctl;

namespace {

MicroControllerDescriptor desc(std::string id, Role role, std::set<std::string> subs) {
  MicroControllerDescriptor d;
  d.id = std::move(id);
  d.role = role;
  d.subscriptions = std::move(subs);
  d.operations = {"op"};
  return d;
}

struct Probe {
  std::vector<Message> received;
  MessageHandler handler() {
    return [this](const Message& m) { received.push_back(m); };
  }
};

}  // namespace

TEST_CASE("registration rules", "[bus]") {
  Bus bus;
  Probe p;
  bus.register_controller(desc("ContextManagerAllSensors", Role::ContextManager, {}), p.handler());

  SECTION("duplicate ids are rejected") {
    CHECK_THROWS_AS(
        bus.register_controller(desc("ContextManagerAllSensors", Role::Knowledge, {}), p.handler()),
        Error);
  }

  SECTION("a second active context manager is rejected") {
    try {
      bus.register_controller(desc("ContextManagerNoGPS", Role::ContextManager, {}), p.handler());
      FAIL("expected role_occupied");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::role_occupied);
    }
  }

  SECTION("other roles may have several registrations") {
    bus.register_controller(desc("FailureManager", Role::FailureManager, {}), p.handler());
    CHECK_NOTHROW(
        bus.register_controller(desc("FailureManager2", Role::FailureManager, {}), p.handler()));
  }

  SECTION("descriptors must declare operations and valid topics") {
    MicroControllerDescriptor bad = desc("X", Role::Knowledge, {});
    bad.operations.clear();
    CHECK_THROWS_AS(bus.register_controller(bad, p.handler()), Error);

    MicroControllerDescriptor bad_topic = desc("Y", Role::Knowledge, {"weirdTopic"});
    CHECK_THROWS_AS(bus.register_controller(bad_topic, p.handler()), Error);
  }
}

TEST_CASE("publish and delivery", "[bus]") {
  Bus bus;
  Probe am;
  Probe meta;
  bus.register_controller(desc("AM", Role::AdaptationManager, {topics::new_context}), am.handler());
  bus.register_controller(desc("Meta", Role::MetaController, {topics::sensors_failure}),
                          meta.handler());

  SECTION("a message reaches each subscriber once") {
    bus.publish(topics::new_context, NewContextPayload{}, "AM");
    CHECK(am.received.size() == 1);
    CHECK(meta.received.empty());
  }

  SECTION("sequence numbers are assigned even without subscribers") {
    std::uint64_t s1 = bus.publish(topics::rule_change, RuleChangePayload{}, "AM");
    std::uint64_t s2 = bus.publish(topics::rule_change, RuleChangePayload{}, "AM");
    CHECK(s2 == s1 + 1);
  }

  SECTION("per-topic delivery is FIFO") {
    bus.publish(topics::new_context, NewContextPayload{ContextState::Driving, {}, {}}, "AM");
    bus.publish(topics::new_context, NewContextPayload{ContextState::Home, {}, {}}, "AM");
    REQUIRE(am.received.size() == 2);
    CHECK(am.received[0].seq < am.received[1].seq);
    CHECK(std::get<NewContextPayload>(am.received[0].payload).new_state == ContextState::Driving);
  }

  SECTION("unknown senders and topics are rejected") {
    CHECK_THROWS_AS(bus.publish(topics::new_context, NewContextPayload{}, "Nobody"), Error);
    CHECK_THROWS_AS(bus.publish("bogus", std::monostate{}, "AM"), Error);
  }

  SECTION("a publish from inside a handler is dispatched after the handler returns") {
    std::vector<std::string> order;
    Probe tick_probe;
    bus.register_controller(desc("FM", Role::FailureManager, {topics::tick}),
                            [&](const Message&) {
                              order.push_back("fm-begin");
                              bus.publish(topics::sensors_failure, HealthState{}, "FM");
                              order.push_back("fm-end");
                            });
    bus.register_controller(desc("Meta2", Role::Knowledge, {topics::sensors_failure}),
                            [&](const Message&) { order.push_back("meta2"); });
    bus.publish(topics::tick, std::uint64_t{0}, "FM");
    CHECK(order == std::vector<std::string>{"fm-begin", "fm-end", "meta2"});
  }
}

TEST_CASE("unregister", "[bus]") {
  Bus bus;
  Probe p;
  bus.register_controller(desc("AM", Role::AdaptationManager, {topics::new_context}), p.handler());
  bus.unregister_controller("AM");

  CHECK_THROWS_AS(bus.unregister_controller("AM"), Error);

  // Publishing requires a registered sender, so bring one back.
  bus.register_controller(desc("AM", Role::AdaptationManager, {}), p.handler());
  bus.publish(topics::new_context, NewContextPayload{}, "AM");
  CHECK(p.received.empty());
}

TEST_CASE("swap preconditions", "[bus]") {
  Bus bus;
  Probe p;
  bus.register_controller(desc("CM", Role::ContextManager, {}), p.handler());

  SECTION("unknown old id") {
    CHECK_THROWS_AS(bus.swap("Nope", desc("CM2", Role::ContextManager, {}), p.handler()), Error);
  }

  SECTION("role mismatch") {
    try {
      bus.swap("CM", desc("AM", Role::AdaptationManager, {}), p.handler());
      FAIL("expected role_mismatch");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::role_mismatch);
    }
  }

  SECTION("identity swap keeps the registration usable") {
    bus.swap("CM", desc("CM", Role::ContextManager, {}), p.handler());
    CHECK(bus.is_registered("CM"));
    CHECK(bus.active_id(Role::ContextManager) == std::string("CM"));
  }

  SECTION("swap to an id held by another registration is rejected") {
    bus.register_controller(desc("K", Role::Knowledge, {}), p.handler());
    CHECK_THROWS_AS(bus.swap("CM", desc("K", Role::ContextManager, {}), p.handler()), Error);
  }
}

// Exactly-once delivery across a swap, for every interleaving the
// deterministic dispatcher can produce.
TEST_CASE("swap atomicity", "[bus]") {
  constexpr int kMessages = 6;

  SECTION("swap between publishes, outside dispatch") {
    for (int swap_at = 0; swap_at <= kMessages; ++swap_at) {
      Bus bus;
      Probe old_am;
      Probe new_am;
      Probe sender;
      bus.register_controller(desc("Sender", Role::Knowledge, {}), sender.handler());
      bus.register_controller(desc("OldAM", Role::AdaptationManager, {topics::new_context}),
                              old_am.handler());
      for (int i = 0; i < kMessages; ++i) {
        if (i == swap_at) {
          bus.swap("OldAM", desc("NewAM", Role::AdaptationManager, {topics::new_context}),
                   new_am.handler());
        }
        bus.publish(topics::new_context,
                    NewContextPayload{ContextState::General, {i, Vibration::off}, {}}, "Sender");
      }
      if (swap_at == kMessages) {
        bus.swap("OldAM", desc("NewAM", Role::AdaptationManager, {topics::new_context}),
                 new_am.handler());
      }

      CHECK(old_am.received.size() + new_am.received.size() == kMessages);
      std::set<std::uint64_t> seqs;
      for (const Message& m : old_am.received) seqs.insert(m.seq);
      for (const Message& m : new_am.received) seqs.insert(m.seq);
      CHECK(seqs.size() == kMessages);  // no duplicates
      CHECK(old_am.received.size() == static_cast<std::size_t>(swap_at));
    }
  }

  SECTION("swap from inside a handler while messages are queued") {
    for (int swap_on = 0; swap_on < kMessages; ++swap_on) {
      Bus bus;
      Probe old_am;
      Probe new_am;
      int delivered = 0;
      // The trigger subscribes to the same topic and performs the swap while
      // the queue still holds undelivered messages.
      bus.register_controller(desc("Trigger", Role::MetaController, {topics::new_context}),
                              [&](const Message&) {
                                if (delivered++ == swap_on) {
                                  bus.swap("OldAM",
                                           desc("NewAM", Role::AdaptationManager,
                                                {topics::new_context}),
                                           new_am.handler());
                                }
                              });
      bus.register_controller(desc("OldAM", Role::AdaptationManager, {topics::new_context}),
                              old_am.handler());
      bus.register_controller(desc("Feeder", Role::Knowledge, {topics::tick}),
                              [&](const Message&) {
                                for (int i = 0; i < kMessages; ++i) {
                                  bus.publish(topics::new_context, NewContextPayload{}, "Feeder");
                                }
                              });
      bus.publish(topics::tick, std::uint64_t{0}, "Feeder");

      CHECK(old_am.received.size() + new_am.received.size() == kMessages);
      std::set<std::uint64_t> seqs;
      for (const Message& m : old_am.received) seqs.insert(m.seq);
      for (const Message& m : new_am.received) seqs.insert(m.seq);
      CHECK(seqs.size() == kMessages);
      // Once the new handler has taken over, the old one stays silent.
      if (!new_am.received.empty() && !old_am.received.empty()) {
        CHECK(old_am.received.back().seq < new_am.received.front().seq);
      }
    }
  }
}

TEST_CASE("active role bookkeeping survives lifecycle operations", "[bus]") {
  Bus bus;
  Probe p;
  bus.register_controller(desc("CM1", Role::ContextManager, {}), p.handler());
  bus.register_controller(desc("AM1", Role::AdaptationManager, {}), p.handler());
  CHECK(bus.active_count(Role::ContextManager) == 1);

  bus.swap("CM1", desc("CM2", Role::ContextManager, {}), p.handler());
  CHECK(bus.active_count(Role::ContextManager) == 1);
  CHECK(bus.active_id(Role::ContextManager) == std::string("CM2"));
  CHECK_FALSE(bus.is_registered("CM1"));

  bus.unregister_controller("CM2");
  CHECK(bus.active_count(Role::ContextManager) == 0);
  bus.register_controller(desc("CM1", Role::ContextManager, {}), p.handler());
  CHECK(bus.active_count(Role::ContextManager) == 1);
}

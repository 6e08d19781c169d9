#include <deque>
#include <set>

#include "doctest.h"
#include "fsm_expect.hpp"

#include "chairside/fsm.hpp"
#include "chairside/speech.hpp"

using namespace chairside::fsm;

TEST_SUITE("fsm") {
  TEST_CASE("every state and event pair follows the contract") {
    int pairs = 0;
    for (const auto& s : expect::all_states()) {
      for (const auto& e : expect::all_events()) {
        const auto t = transition(s, e);
        const auto want = expect::expected(s, e);
        CAPTURE(to_string(s));
        CAPTURE(to_string(e));
        CHECK(to_string(t.next) == want.next);
        CHECK(std::string(to_string(t.action)) == want.action);
        ++pairs;
      }
    }
    CHECK(pairs == (3 + 6 * (kMaxReplans + 1) + 2) * 9);
  }

  TEST_CASE("keyword table") {
    const PipelineState start = initial_state();
    CHECK(to_string(start) == "following(behind)");
    CHECK(to_string(transition(start, Event::spoken(Keyword::GoLeft)).next) == "switching(behind->left)");
    CHECK(to_string(transition(start, Event::spoken(Keyword::GoRight)).next) == "switching(behind->right)");
    CHECK(to_string(transition(Following{FollowMode::Left}, Event::spoken(Keyword::GoBack)).next) ==
          "switching(left->behind)");
    CHECK(to_string(transition(start, Event::spoken(Keyword::RemoteControl)).next) == "teleop");
    CHECK(to_string(transition(start, Event::spoken(Keyword::Help)).next) == "remote_assist");
  }

  TEST_CASE("examples") {
    CHECK(transition(Teleop{}, Event::teleop_exit()).next == PipelineState{Following{FollowMode::Behind}});
    const auto idem = transition(Following{FollowMode::Left}, Event::spoken(Keyword::GoLeft));
    CHECK(idem.next == PipelineState{Following{FollowMode::Left}});
    CHECK(idem.action == Action::None);
    CHECK(transition(RemoteAssist{}, Event::remote_release()).next == PipelineState{Following{FollowMode::Behind}});
  }

  TEST_CASE("movement keywords are ignored while someone else drives") {
    for (auto k : {Keyword::GoLeft, Keyword::GoRight, Keyword::GoBack, Keyword::RemoteControl}) {
      CHECK(transition(Teleop{}, Event::spoken(k)).action == Action::None);
      CHECK(transition(RemoteAssist{}, Event::spoken(k)).action == Action::None);
    }
    CHECK(transition(Teleop{}, Event::spoken(Keyword::Help)).next == PipelineState{RemoteAssist{}});
  }

  TEST_CASE("replans are bounded") {
    PipelineState s = Switching{FollowMode::Behind, FollowMode::Right, 0};
    for (int i = 0; i < kMaxReplans; ++i) {
      const auto t = transition(s, Event::switch_aborted(0.35));
      CHECK(t.action == Action::Replan);
      s = t.next;
    }
    const auto t = transition(s, Event::switch_aborted(0.35));
    CHECK(t.action == Action::AbandonSwitch);
    CHECK(t.next == PipelineState{Following{FollowMode::Behind}});
  }

  TEST_CASE("following(behind) is reachable within two events from anywhere") {
    const PipelineState home = Following{FollowMode::Behind};
    for (const auto& s : expect::all_states()) {
      std::set<std::string> seen{to_string(s)};
      std::deque<std::pair<PipelineState, int>> q{{s, 0}};
      int best = -1;
      while (!q.empty()) {
        auto [cur, d] = q.front();
        q.pop_front();
        if (cur == home) {
          best = d;
          break;
        }
        if (d == 2) continue;
        for (const auto& e : expect::all_events()) {
          const auto next = transition(cur, e).next;
          if (seen.insert(to_string(next)).second) q.emplace_back(next, d + 1);
        }
      }
      CAPTURE(to_string(s));
      CHECK(best >= 0);
      CHECK(best <= 2);
    }
  }

  TEST_CASE("every detected keyword maps to one keyword event") {
    for (const char* text : {"go left", "go right", "go back", "remote control", "help"}) {
      const auto cmd = chairside::speech::detect_keywords(text);
      REQUIRE(cmd);
      const Event e = chairside::speech::keyword_event(*cmd);
      CHECK(e.kind == EventKind::Keyword);
      CHECK(e.keyword == cmd->keyword);
    }
  }
}

// Copyright 2026 The diffhist Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include "diffhist/history.hpp"
#include "key_example.hpp"
#include "random_docs.hpp"

using namespace diffhist;

TEST_SUITE("history") {

TEST_CASE("trajectory validation") {
  Trajectory t = testing::key_example_trajectory();
  CHECK_NOTHROW(t.validate());
  t.actions.pop_back();
  CHECK_THROWS_AS(t.validate(), InvalidTrajectory);
  t = testing::key_example_trajectory();
  t.instruction.clear();
  CHECK_THROWS_AS(t.validate(), InvalidTrajectory);
  t = Trajectory{"x", "i", {}, {}};
  CHECK_THROWS_AS(t.validate(), InvalidTrajectory);
}

TEST_CASE("diff window keeps the anchor and every delta") {
  const Trajectory t = testing::key_example_trajectory();
  const DiffWindow dw = to_diff_history(rebase(t, 0, 6));
  CHECK(dw.horizon() == 6);
  CHECK(dw.anchor_observation == t.observations[0]);
  CHECK(dw.first_action == "turn right");
  REQUIRE(dw.tail.size() == 5);
  CHECK(dw.tail[0].action == "turn right");
  CHECK(dw.tail[4].action == "go forward");
  CHECK(render_delta(dw.tail[0].delta) == testing::key_example_difflib_deltas()[0]);
}

TEST_CASE("empty deltas are kept") {
  Trajectory t{"x", "i", {"same", "same", "same"}, {"a", "b", "c"}};
  const DiffWindow dw = to_diff_history(rebase(t, 0, 3));
  REQUIRE(dw.tail.size() == 2);
  CHECK(dw.tail[0].delta.empty());
  CHECK(to_full_history(dw) == rebase(t, 0, 3));
}

TEST_CASE("rebase recomputes the anchor from raw observations") {
  const Trajectory t = testing::key_example_trajectory();
  const DiffWindow dw = to_diff_history(rebase(t, 3, 3));
  CHECK(dw.start == 3);
  CHECK(dw.anchor_observation == t.observations[3]);
  CHECK(dw.first_action == t.actions[3]);
  CHECK(render_delta(dw.tail[0].delta) == testing::key_example_difflib_deltas()[3]);
  CHECK(to_full_history(dw).steps.back().observation == t.observations[5]);
}

TEST_CASE("rebase bounds") {
  const Trajectory t = testing::key_example_trajectory();
  CHECK_THROWS_AS(rebase(t, 0, 0), OutOfRange);
  CHECK_THROWS_AS(rebase(t, 6, 1), OutOfRange);
  CHECK_THROWS_AS(rebase(t, 4, 3), OutOfRange);
  CHECK(rebase(t, 5, 1).steps.size() == 1);
}

TEST_CASE("a tampered delta surfaces as a patch conflict") {
  const Trajectory t = testing::key_example_trajectory();
  DiffWindow dw = to_diff_history(rebase(t, 0, 3));
  dw.tail[1].delta.hunks[0].removed[0] = "not there";
  CHECK_THROWS_AS(to_full_history(dw), PatchConflict);
}

TEST_CASE("bijection on random trajectories") {
  testing::Gen g(21);
  for (int i = 0; i < 300; ++i) {
    const Trajectory t = g.trajectory(12, 8);
    const Window w = rebase(t, 0, t.length());
    CHECK(to_full_history(to_diff_history(w)) == w);
  }
}

}  // TEST_SUITE

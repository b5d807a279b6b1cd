#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "simboot/model.hpp"
#include "simboot/rng.hpp"

using namespace simboot;

namespace {

constexpr double kPi = std::numbers::pi;

// Reference reduction by repeated +-2pi steps.
double reduce_by_steps(double a) {
  while (a < -kPi) a += 2 * kPi;
  while (a >= kPi) a -= 2 * kPi;
  return a;
}

ObjectState block(const std::string& id, double x, double y, double z = 0.02) {
  return ObjectState(id, "block " + id, Category::Block, Pose(x, y, z, 0.0), Extent{0.04, 0.04, 0.04}, true);
}

}  // namespace

TEST(NormalizeYaw, IdentityAndQuarterTurns) {
  EXPECT_DOUBLE_EQ(normalize_yaw(0.0), 0.0);
  EXPECT_NEAR(normalize_yaw(1.5 * kPi), -0.5 * kPi, 1e-12);
  EXPECT_NEAR(normalize_yaw(kPi), -kPi, 1e-12);
  EXPECT_NEAR(normalize_yaw(-kPi), -kPi, 1e-12);
}

TEST(NormalizeYaw, MatchesRepeatedTwoPiReduction) {
  const double expected = reduce_by_steps(-7.5);
  EXPECT_NEAR(expected, -7.5 + 2 * kPi, 1e-12);
  EXPECT_NEAR(normalize_yaw(-7.5), expected, 1e-12);
}

TEST(NormalizeYaw, PropertyRangeAndCongruence) {
  Rng rng(11);
  for (int i = 0; i < 20000; ++i) {
    const double a = rng.uniform(-200.0, 200.0);
    const double r = normalize_yaw(a);
    ASSERT_GE(r, -kPi);
    ASSERT_LT(r, kPi);
    const double turns = (a - r) / (2 * kPi);
    ASSERT_NEAR(turns, std::round(turns), 1e-9) << a;
    ASSERT_NEAR(r, reduce_by_steps(a), 1e-9) << a;
  }
}

TEST(NormalizeYaw, RejectsNonFinite) {
  EXPECT_THROW(normalize_yaw(std::numeric_limits<double>::quiet_NaN()), ModelError);
  EXPECT_THROW(normalize_yaw(std::numeric_limits<double>::infinity()), ModelError);
  EXPECT_THROW(Pose(0, 0, std::numeric_limits<double>::infinity(), 0), ModelError);
}

TEST(ObjectStateInvariants, RejectsInvalidConstruction) {
  EXPECT_THROW(ObjectState("", "x", Category::Block, Pose(), Extent{0.1, 0.1, 0.1}, true), ModelError);
  EXPECT_THROW(ObjectState("a", "x", Category::Block, Pose(), Extent{0.0, 0.1, 0.1}, true), ModelError);
  EXPECT_THROW(ObjectState("a", "x", Category::Block, Pose(), Extent{-0.1, 0.1, 0.1}, true), ModelError);
  EXPECT_THROW(ObjectState("a", "x", Category::TargetZone, Pose(), Extent{0.1, 0.1, 0.1}, true), ModelError);
  EXPECT_THROW(ObjectState("a", "x", Category::Block, Pose(), Extent{0.1, 0.1, 0.1}, false, true), ModelError);
}

TEST(EnvStateInvariants, RejectsDuplicateIdsAndDoubleAttachment) {
  EXPECT_THROW(EnvState({block("a", 0, 0), block("a", 0.1, 0)}, Pose(), true), ModelError);
  EXPECT_THROW(EnvState({block("a", 0, 0).with_attached(true), block("b", 0.1, 0).with_attached(true)}, Pose(), false),
               ModelError);
  EXPECT_THROW(EnvState({}, Pose(), true, Bounds{{0, 0, 0}, {0, 1, 1}}), ModelError);
}

TEST(PlanInvariants, EnforcesCommandCap) {
  std::vector<Command> commands(kMaxPlanCommands, OpenGripper{});
  EXPECT_NO_THROW(Plan(commands, ""));
  commands.push_back(CloseGripper{});
  EXPECT_THROW(Plan(commands, ""), ModelError);
}

TEST(StateDigest, IdenticalStatesMatch) {
  const EnvState a({block("a", 0.1, 0.2)}, Pose(0, 0, 0.5, 0), true);
  const EnvState b({block("a", 0.1, 0.2)}, Pose(0, 0, 0.5, 0), true);
  EXPECT_EQ(state_digest(a), state_digest(b));
}

TEST(StateDigest, OneMillimetreDifferenceChangesDigest) {
  const EnvState a({block("a", 0.1, 0.2), block("b", -0.1, 0.0)}, Pose(0, 0, 0.5, 0), true);
  const EnvState b({block("a", 0.1, 0.2), block("b", -0.1, 0.001)}, Pose(0, 0, 0.5, 0), true);
  EXPECT_NE(state_digest(a), state_digest(b));
  // Every field individually.
  const EnvState gripper = a.with_gripper(Pose(0.001, 0, 0.5, 0), true);
  EXPECT_NE(state_digest(a), state_digest(gripper));
  EXPECT_NE(state_digest(a), state_digest(a.with_gripper(a.gripper_pose(), false)));
}

TEST(StateDigest, ObjectOrderDoesNotMatter) {
  const EnvState a({block("b", -0.1, 0.0), block("a", 0.1, 0.2), block("c", 0.0, 0.3)}, Pose(), true);
  const EnvState sorted({block("a", 0.1, 0.2), block("b", -0.1, 0.0), block("c", 0.0, 0.3)}, Pose(), true);
  EXPECT_EQ(state_digest(a), state_digest(sorted));
}

TEST(StateDigest, SubQuantumDifferencesAreInvisible) {
  const EnvState a({block("a", 0.1, 0.2)}, Pose(), true);
  const EnvState b({block("a", 0.1 + 1e-9, 0.2)}, Pose(), true);
  EXPECT_EQ(state_digest(a), state_digest(b));
}

TEST(DigestHex, RoundTrips) {
  const Digest d = sha256("abc");
  EXPECT_EQ(d.hex(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  auto back = Digest::from_hex(d.hex());
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(*back, d);
  EXPECT_FALSE(Digest::from_hex("zz").has_value());
}

TEST(Names, TaskIdsRoundTrip) {
  for (auto t : kAllTasks) {
    auto back = task_from_string(to_string(t));
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(*back, t);
  }
  EXPECT_FALSE(task_from_string("nope").has_value());
}

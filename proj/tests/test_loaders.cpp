#include <gtest/gtest.h>

#include "fgac/error.hpp"
#include "fgac/loaders.hpp"
#include "support.hpp"

using namespace fgac;
using fgac::testing::University;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::InvalidInput;
}

}  // namespace

TEST(Loaders, UniversityModel) {
  const auto& dm = University::get().dm;
  ASSERT_EQ(dm.classes.size(), 2u);
  EXPECT_EQ(dm.classes[0].name, "Lecturer");
  EXPECT_EQ(dm.classes[1].attributes[1].name, "name");
  EXPECT_EQ(dm.associations[0].end2.class_name, "Student");
}

TEST(Loaders, GeneralisationIsUnsupported) {
  EXPECT_EQ(code_of([] {
              loaders::parse_model(R"({"name":"M","classes":[{"name":"A","superclass":"B"},{"name":"B"}]})");
            }),
            ErrorCode::UnsupportedFeature);
}

TEST(Loaders, BadAttributeType) {
  EXPECT_EQ(code_of([] {
              loaders::parse_model(R"({"classes":[{"name":"A","attributes":[{"name":"x","type":"Real"}]}]})");
            }),
            ErrorCode::InvalidModel);
}

TEST(Loaders, MalformedJson) {
  EXPECT_EQ(code_of([] { loaders::parse_model("{"); }), ErrorCode::InvalidModel);
}

TEST(Loaders, ScenarioWithNullsIsNormalized) {
  const auto& dm = University::get().dm;
  auto sc = loaders::parse_scenario(R"({"objects":{"Lecturer":{"Huong":{"age":null}}}})", dm);
  EXPECT_TRUE(is_null(sc.attribute("Lecturer", "Huong", "email")));
  EXPECT_TRUE(sc.links.count("Enrolment"));
}

TEST(Loaders, DuplicateLinkIsRejected) {
  const auto& dm = University::get().dm;
  EXPECT_EQ(code_of([&] {
              loaders::parse_scenario(R"({"objects":{"Lecturer":{"L":{}},"Student":{"S":{}}},
                                         "links":{"Enrolment":[["L","S"],["L","S"]]}})",
                                      dm);
            }),
            ErrorCode::InvalidScenario);
}

TEST(Loaders, WrongValueTypeIsRejected) {
  const auto& dm = University::get().dm;
  EXPECT_EQ(code_of([&] { loaders::parse_scenario(R"({"objects":{"Lecturer":{"L":{"age":"old"}}}})", dm); }),
            ErrorCode::InvalidScenario);
  EXPECT_EQ(code_of([&] { loaders::parse_scenario(R"({"objects":{"Lecturer":{"L":{"age":1.5}}}})", dm); }),
            ErrorCode::InvalidScenario);
}

TEST(Loaders, Policies) {
  const auto& u = University::get();
  EXPECT_EQ(u.p1.user_class, "Lecturer");
  EXPECT_EQ(u.p1.rules.size(), 2u);
  EXPECT_EQ(u.a.rules.size(), 3u);
}

TEST(Loaders, PolicyForAnotherModel) {
  const auto& dm = University::get().dm;
  EXPECT_EQ(code_of([&] {
              loaders::parse_policy(R"({"name":"P","dataModel":"Hospital","userClass":"Lecturer","roles":[]})", dm);
            }),
            ErrorCode::InvalidPolicy);
}

TEST(Loaders, PolicyWithIllTypedConstraint) {
  const auto& dm = University::get().dm;
  EXPECT_EQ(code_of([&] {
              loaders::parse_policy(R"({"name":"P","userClass":"Lecturer","roles":["Lecturer"],
                "rules":[{"role":"Lecturer","resource":{"kind":"attribute","class":"Student","attribute":"age"},
                          "constraint":"caller.age = 'x'"}]})",
                                    dm);
            }),
            ErrorCode::InvalidPolicy);
}

TEST(Loaders, RegistryAndFacts) {
  const auto& u = University::get();
  EXPECT_EQ(u.registry.size(), 3u);
  ASSERT_EQ(u.facts3.size(), 2u);
  EXPECT_EQ(u.facts3[1].checks, std::vector<std::string>{"Student:age"});
}

TEST(Loaders, FactWithoutGuardIsRejected) {
  EXPECT_EQ(code_of([] { loaders::parse_facts(R"([{"description":"d","ocl":"caller = caller"}])"); }),
            ErrorCode::InvalidInput);
  EXPECT_EQ(code_of([] { loaders::parse_facts(R"([{"ocl":"true","sqlGuard":""}])"); }), ErrorCode::InvalidInput);
}

TEST(Loaders, MissingFile) {
  EXPECT_EQ(code_of([] { loaders::read_file("/nonexistent/file.json"); }), ErrorCode::InvalidInput);
}

#include <catch2/catch_amalgamated.hpp>

#include "lobkit/toml.hpp"

using namespace lobkit;

TEST_CASE("config parser reads sections, scalars and arrays") {
    const auto doc = toml::parse(R"(
# top comment
title = "demo"   # trailing comment
[grid]
horizon = 1.5
steps = 2000
[mc]
enabled = true
lambdas = [0.5, 1.0, 2.0]
names = ["a", "b"]
ratio = -2.5e-2
)");
    REQUIRE(doc.at("title").as_string() == "demo");
    REQUIRE(doc.at("grid.horizon").as_number() == 1.5);
    REQUIRE(doc.at("grid.steps").as_integer() == 2000);
    REQUIRE(doc.at("mc.enabled").as_boolean());
    REQUIRE(doc.at("mc.lambdas").as_array().size() == 3);
    REQUIRE(doc.at("mc.lambdas").as_array()[2].as_number() == 2.0);
    REQUIRE(doc.at("mc.names").as_array()[1].as_string() == "b");
    REQUIRE(doc.at("mc.ratio").as_number() == Catch::Approx(-0.025));
    REQUIRE(doc.find("mc.missing") == nullptr);
    REQUIRE(doc.number_or("mc.missing", 7.0) == 7.0);
}

TEST_CASE("integers and floats are distinguished") {
    const auto doc = toml::parse("a = 3\nb = 3.0\n");
    REQUIRE(doc.at("a").is_integer());
    REQUIRE(doc.at("b").is_float());
    REQUIRE(doc.at("a").as_number() == 3.0);
    REQUIRE_THROWS_AS(doc.at("b").as_integer(), ValidationError);
}

TEST_CASE("strings keep hashes and escapes") {
    const auto doc = toml::parse(R"(path = "out#1"
quoted = "say \"hi\""
)");
    REQUIRE(doc.at("path").as_string() == "out#1");
    REQUIRE(doc.at("quoted").as_string() == "say \"hi\"");
}

TEST_CASE("parse errors carry line numbers") {
    auto expect_error = [](const std::string& text, const std::string& needle) {
        try {
            toml::parse(text);
            FAIL("expected a validation error for: " << text);
        } catch (const ValidationError& e) {
            REQUIRE(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_error("a = 1\nbroken line\n", "line 2");
    expect_error("[unterminated\n", "line 1");
    expect_error("a = [1, 2\n", "unterminated array");
    expect_error("a = ???\n", "cannot parse");
    expect_error("a = 1\na = 2\n", "duplicate");
    expect_error("bad key! = 1\n", "bad key");
}

TEST_CASE("missing keys are reported by path") {
    const auto doc = toml::parse("[grid]\nsteps = 10\n");
    try {
        doc.at("grid.horizon");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        REQUIRE(std::string(e.what()).find("grid.horizon") != std::string::npos);
    }
}

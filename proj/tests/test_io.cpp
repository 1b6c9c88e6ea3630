#include "r0fde/io.hpp"
#include "r0fde/random_models.hpp"

#include <gtest/gtest.h>

#include <string>

using namespace r0fde;

namespace {

ErrorCode parse_error_code(const std::string& text)
{
    try {
        io::parse_model_spec(text);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "spec was accepted: " << text;
    return ErrorCode::InvalidArgument;
}

std::string parse_error_message(const std::string& text)
{
    try {
        io::parse_model_spec(text);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

const char* kScalar = R"({"m": 1, "F": {"A0": [[0]], "delayed": [{"tau": 1, "A": [[2]]}]},
                          "V": {"A0": [[1]]}})";

} // namespace

TEST(ParseModelSpec, GeneralSpec)
{
    const auto spec = io::parse_model_spec(kScalar);
    ASSERT_TRUE(spec.general.has_value());
    EXPECT_FALSE(spec.tick.has_value());
    EXPECT_EQ(spec.dim(), 1u);
    const auto model = spec.model();
    EXPECT_EQ(model.F().hat(), (DenseMatrix{{2.0}}));
    EXPECT_EQ(model.V().hat(), (DenseMatrix{{1.0}}));
    EXPECT_EQ(model.F().max_delay(), 1.0);
}

TEST(ParseModelSpec, TickSpec)
{
    const auto spec = io::parse_model_spec(R"({"tick": {"b": 3, "r": [0.5, 0.4, 0.3, 0.6],
        "d": [0.1, 0.05, 0.08, 0.1], "tau": [2, 1], "N_cap": 10, "h": 5}})");
    ASSERT_TRUE(spec.tick.has_value());
    EXPECT_EQ(spec.tick->tau1, 2.0);
    EXPECT_EQ(spec.tick->tau2, 1.0);
    EXPECT_EQ(spec.tick->n_cap, 10.0);
    EXPECT_EQ(spec.dim(), 4u);
}

TEST(ParseModelSpec, SchemaErrorsCarryPaths)
{
    EXPECT_EQ(parse_error_code("{\"m\": 1,"), ErrorCode::Schema);
    EXPECT_EQ(parse_error_code("[]"), ErrorCode::Schema);
    EXPECT_NE(parse_error_message(R"({"m": 2, "F": {"A0": [[0]]}, "V": {"A0": [[1]]}})").find("$.F.A0"),
              std::string::npos);
    EXPECT_NE(parse_error_message(R"({"m": 1, "F": {"A0": [[0]], "delayed": [{"tau": -1, "A": [[1]]}]},
                                     "V": {"A0": [[1]]}})")
                  .find("$.F.delayed[0].tau"),
              std::string::npos);
    EXPECT_NE(parse_error_message(R"({"m": 1, "F": {"A0": [[0]]}, "V": {"A0": [["x"]]}})").find("$.V.A0[0][0]"),
              std::string::npos);
    EXPECT_NE(parse_error_message(R"({"m": 1, "F": {"A0": [[0]]}, "V": {"A0": [[1]]}, "extra": 1})")
                  .find("unknown field \"extra\""),
              std::string::npos);
    EXPECT_NE(parse_error_message(R"({"m": 1, "F": {"A0": [[0]]}})").find("missing field \"V\""),
              std::string::npos);
    EXPECT_EQ(parse_error_code(R"({"m": 0, "F": {"A0": []}, "V": {"A0": []}})"), ErrorCode::Schema);
    EXPECT_EQ(parse_error_code(R"({"tick": {"b": -3, "r": [0.5, 0.4, 0.3, 0.6],
        "d": [0.1, 0.05, 0.08, 0.1], "tau": [2, 1], "N_cap": 10, "h": 5}})"),
              ErrorCode::Schema);
    EXPECT_EQ(parse_error_code(R"({"tick": {"b": 3, "r": [0.5, 0.4, 0.3],
        "d": [0.1, 0.05, 0.08, 0.1], "tau": [2, 1], "N_cap": 10, "h": 5}})"),
              ErrorCode::Schema);
}

TEST(ParseModelSpec, MalformedJsonReportsLine)
{
    const auto msg = parse_error_message("{\n  \"m\": 1,\n  oops\n}");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(CanonicalJson, RoundTripIsByteIdentical)
{
    random::Rng rng(61);
    for (int k = 0; k < 50; ++k) {
        const auto spec = io::general_spec(random::nextgen_model(rng));
        const auto text = io::to_canonical_json(spec);
        EXPECT_EQ(io::to_canonical_json(io::parse_model_spec(text)), text);
        const auto back = io::parse_model_spec(text).model();
        EXPECT_EQ(back.F(), spec.general->F());
        EXPECT_EQ(back.V(), spec.general->V());
    }
    for (int k = 0; k < 50; ++k) {
        const auto spec = io::tick_spec(random::tick_params(rng));
        const auto text = io::to_canonical_json(spec);
        EXPECT_EQ(io::to_canonical_json(io::parse_model_spec(text)), text);
        EXPECT_EQ(*io::parse_model_spec(text).tick, *spec.tick);
    }
}

TEST(CanonicalJson, ScalarLayout)
{
    EXPECT_EQ(io::to_canonical_json(io::parse_model_spec(kScalar)),
              "{\n"
              "  \"F\": {\n"
              "    \"A0\": [[0]],\n"
              "    \"delayed\": [\n"
              "      {\"A\": [[2]], \"tau\": 1}\n"
              "    ]\n"
              "  },\n"
              "  \"V\": {\n"
              "    \"A0\": [[1]],\n"
              "    \"delayed\": []\n"
              "  },\n"
              "  \"m\": 1\n"
              "}\n");
}

TEST(ParseHistory, ReadsSamples)
{
    const auto phi = io::parse_history(R"({"tau": 1, "values": [[0, 1], [0.5, 2], [1, 3]]})", 2);
    EXPECT_EQ(phi.grid_intervals(), 2u);
    EXPECT_EQ(phi.at(-0.5), (Vector{0.5, 2.0}));
    EXPECT_THROW(io::parse_history(R"({"tau": 1, "values": [[0, 1]]})", 2), Error);
    EXPECT_THROW(io::parse_history(R"({"tau": 1, "values": [[0], [1]]})", 2), Error);
}

TEST(ReportJson, KeysAndNulls)
{
    R0Report rep;
    rep.r0_direct = 2.0;
    rep.t0 = 1.0;
    rep.n = 128;
    rep.regime = Regime::Above;
    const auto j = io::to_json(rep);
    EXPECT_EQ(j["r0_direct"], 2.0);
    EXPECT_TRUE(j["lambda_star"].is_null());
    EXPECT_TRUE(j["r0_bisection"].is_null());
    EXPECT_EQ(j["regime"], "above");
    EXPECT_EQ(j["n"], 128);
    EXPECT_TRUE(j["consistency"]["all"].get<bool>());

    const auto s = io::to_json(SignEquivalenceReport{0.1, 1.0, true});
    EXPECT_EQ(s["s_L"], 0.1);
    EXPECT_EQ(s["consistent"], true);
}

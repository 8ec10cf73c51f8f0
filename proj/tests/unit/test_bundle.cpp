#include <doctest.h>

#include <string>

#include "somcm/bundle.hpp"
#include "somcm/error.hpp"
#include "../support.hpp"

using namespace somcm;
using nlohmann::json;

namespace {

std::string schema_error(const json& j) {
    try {
        validate_bundle(j);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidInput);
        return e.what();
    }
    return "no error";
}

}  // namespace

TEST_CASE("bundle round trip is exact") {
    const Bundle& b = test::small_bundle();
    const std::string text = serialize_bundle(b);
    CHECK(text.back() == '\n');
    const Bundle c = bundle_from_json(json::parse(text));
    CHECK(serialize_bundle(c) == text);
    CHECK(c.model.codebook() == b.model.codebook());
    CHECK(c.baseline.lcl == b.baseline.lcl);
    CHECK(c.baseline.dm_delta == b.baseline.dm_delta);
    CHECK(c.hotelling.ucl() == b.hotelling.ucl());
    CHECK(c.variables.size() == b.variables.size());
    const RowVector probe = RowVector::Constant(static_cast<Eigen::Index>(b.hotelling.dimension()), 0.3);
    CHECK(c.hotelling.t2(probe) == b.hotelling.t2(probe));
}

TEST_CASE("schema errors name the path") {
    const json good = to_json(test::small_bundle());
    CHECK(schema_error(good) == "no error");

    json j = good;
    j["baseline"].erase("dm_delta");
    CHECK(schema_error(j).find("/baseline") != std::string::npos);

    j = good;
    j["baseline"]["dm_delta"] = -1.0;
    CHECK(schema_error(j).find("/baseline/dm_delta") != std::string::npos);

    j = good;
    j["baseline"]["filter"]["lambda"] = 2.0;
    CHECK(schema_error(j).find("/baseline/filter/lambda") != std::string::npos);

    j = good;
    j["baseline"]["norm_stats"].erase(0);
    CHECK(schema_error(j).find("/baseline/norm_stats") != std::string::npos);

    j = good;
    j["hotelling"]["factor"]["diagonal"][1] = 0.0;
    CHECK(schema_error(j).find("/hotelling/factor/diagonal/1") != std::string::npos);

    j = good;
    j["hotelling"]["factor"]["permutation"][0] = j["hotelling"]["factor"]["permutation"][1];
    CHECK(schema_error(j).find("/hotelling/factor/permutation") != std::string::npos);

    j = good;
    j["variables"] = json::array();
    CHECK(schema_error(j).find("/variables") != std::string::npos);

    CHECK(schema_error(json::array()) != "no error");
    CHECK_THROWS_AS(read_bundle_file("/nonexistent/bundle.json"), Error);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "robsur/csvio.hpp"
#include "robsur/errors.hpp"
#include "robsur/model.hpp"

using namespace robsur;

namespace {

const std::string kSmallCsv =
    "a,b,y1,y2\n"
    "1.0, 2.0, 3.0, 4.0\n"
    "0.5, -1.0, 2.0, 0.0\n"
    "2.0, 0.25, -1.0, 1.5\n"
    "3.0, 1.0, 0.0, 2.5\n";

SurData small_data() {
  const auto t = parse_csv(kSmallCsv);
  return make_sur_data(t, {{"eq1", "y1", {"a", "b"}, true},
                           {"eq2", "y2", {"b"}, false}});
}

}  // namespace

TEST_CASE("csv parsing") {
  const auto t = parse_csv(kSmallCsv);
  CHECK(t.columns.size() == 4);
  CHECK(t.data.rows() == 4);
  CHECK(t.col("y2") == 3);
  CHECK(t.data(2, 1) == doctest::Approx(0.25));
  CHECK(t.has_col("a"));
  CHECK(!t.has_col("z"));
  CHECK_THROWS_AS(t.col("z"), ConfigError);
  CHECK_THROWS_AS(parse_csv("a,b\n1.0\n"), ConfigError);      // ragged row
  CHECK_THROWS_AS(parse_csv("a,b\n1.0,xyz\n"), ConfigError);  // non-numeric
  CHECK_THROWS_AS(parse_csv(""), ConfigError);
}

TEST_CASE("block assembly with and without intercept") {
  const auto data = small_data();
  CHECK(data.n() == 4);
  CHECK(data.m() == 2);
  CHECK(data.p() == 4);  // 3 + 1
  CHECK(data.block(0).coef_names ==
        std::vector<std::string>{"intercept", "a", "b"});
  CHECK(data.block(0).X(0, 0) == 1.0);
  CHECK(data.block(0).X(1, 1) == doctest::Approx(0.5));
  CHECK(data.block(1).coef_names == std::vector<std::string>{"b"});
  CHECK(data.coef_offset(1) == 3);
  CHECK(data.coef_label(3) == "eq2:b");
  CHECK(data.coef_label(1) == "eq1:a");
}

TEST_CASE("block and coefficient lookup by name or number") {
  const auto data = small_data();
  CHECK(data.block_index("eq2") == 1);
  CHECK(data.block_index("1") == 0);
  CHECK(data.coef_index(0, "b") == 2);
  CHECK(data.coef_index(0, "intercept") == 0);
  CHECK(data.coef_index(0, "3") == 2);
  CHECK_THROWS_AS(data.block_index("nope"), ConfigError);
  CHECK_THROWS_AS(data.block_index("7"), ConfigError);
  CHECK_THROWS_AS(data.coef_index(1, "a"), ConfigError);
}

TEST_CASE("stacked view: residual identity and block sparsity") {
  const auto data = small_data();
  const auto d = make_stacked(data);
  CHECK(d.n == 4);
  CHECK(d.m == 2);
  CHECK(d.p == 4);
  CHECK(d.block_diagonal());
  REQUIRE(d.block_cols.size() == 2);
  CHECK(d.block_cols[0] == std::pair<int, int>{0, 3});
  CHECK(d.block_cols[1] == std::pair<int, int>{3, 4});

  // Row 1 of block 1: x = (1, 0.5, -1), response 2; block 2: x = (-1), y 0.
  Eigen::VectorXd beta(4);
  beta << 0.5, 1.0, -2.0, 3.0;
  const Eigen::VectorXd e = d.residual(1, beta);
  CHECK(e[0] == doctest::Approx(2.0 - (0.5 + 0.5 - 2.0 * -1.0)));
  CHECK(e[1] == doctest::Approx(0.0 - 3.0 * -1.0));
  // Cross-block entries of x_i must be zero.
  CHECK(d.x[1](0, 3) == 0.0);
  CHECK(d.x[1](1, 0) == 0.0);
  CHECK(d.x[1](1, 1) == 0.0);

  const Eigen::MatrixXd E = d.residual_matrix(beta);
  CHECK(E.rows() == 4);
  CHECK(E(1, 0) == doctest::Approx(e[0]));
  CHECK(E(1, 1) == doctest::Approx(e[1]));
}

TEST_CASE("elemental row counts") {
  const auto data = small_data();
  auto d = make_stacked(data);
  CHECK(d.elemental_rows() == 3);  // widest block
  d.block_cols.clear();            // general design: ceil(p/m) = ceil(4/2)
  CHECK(d.elemental_rows() == 2);
}

TEST_CASE("model validation errors") {
  const auto t = parse_csv(kSmallCsv);
  CHECK_THROWS_AS(make_sur_data(t, {}), ConfigError);
  CHECK_THROWS_AS(make_sur_data(t, {{"eq", "nope", {"a"}, true}}), ConfigError);
  CHECK_THROWS_AS(make_sur_data(t, {{"eq", "y1", {}, false}}), ConfigError);
}

TEST_CASE("bundled investment panel loads with the documented shape") {
  const auto t = read_csv(std::string(ROBSUR_DATA_DIR) + "/grunfeld.csv");
  CHECK(t.data.rows() == 20);
  CHECK(t.columns.size() == 10);
  CHECK(t.data(0, t.col("invest_ge")) == doctest::Approx(33.1));
  CHECK(t.data(19, t.col("capital_dm")) == doctest::Approx(14.33));
  CHECK(t.data(0, t.col("year")) == 1935);
}

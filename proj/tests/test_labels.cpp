#include <catch_amalgamated.hpp>

#include <limits>
#include <vector>

#include "aumeta/labels.hpp"

using namespace aumeta;

TEST_CASE("ternary codes round trip") {
    CHECK(ternary_code(Ternary::Displayed) == 1);
    CHECK(ternary_code(Ternary::NotDisplayed) == 0);
    CHECK(ternary_code(Ternary::Unknown) == -1);
    for (int code : {-1, 0, 1}) CHECK(ternary_code(ternary_from_code(code)) == code);
}

TEST_CASE("ternary codes outside the domain are rejected") {
    CHECK_THROWS_AS(ternary_from_code(2), ValidationError);
    CHECK_THROWS_AS(ternary_from_code(-2), ValidationError);
    CHECK_THROWS_AS(ternary_from_code(42), ValidationError);
}

TEST_CASE("class name validation") {
    CHECK_NOTHROW(validate_class_names({"AU01", "AU02"}));
    CHECK_NOTHROW(validate_class_names({}));
    CHECK_THROWS_AS(validate_class_names({"AU01", "AU01"}), ValidationError);
    CHECK_THROWS_AS(validate_class_names({"AU01", ""}), ValidationError);
}

TEST_CASE("label matrix starts all Unknown and is rectangular") {
    LabelMatrix m({"a", "b"}, 3);
    REQUIRE(m.rows() == 3);
    REQUIRE(m.cols() == 2);
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) CHECK(m.at(r, c) == Ternary::Unknown);

    m.set(1, 0, Ternary::Displayed);
    CHECK(m.at(1, 0) == Ternary::Displayed);
    CHECK(m.column(0) ==
          std::vector<Ternary>{Ternary::Unknown, Ternary::Displayed, Ternary::Unknown});
}

TEST_CASE("label matrix rejects ragged rows and broken class axes") {
    LabelMatrix m({"a", "b"});
    CHECK_THROWS_AS(m.append_row({Ternary::Displayed}), ValidationError);
    CHECK_NOTHROW(m.append_row({Ternary::Displayed, Ternary::Unknown}));
    CHECK_THROWS_AS(LabelMatrix({}), ValidationError);
    CHECK_THROWS_AS(LabelMatrix({"a", "a"}), ValidationError);
}

TEST_CASE("label matrix equality is structural") {
    const auto a = LabelMatrix::from_rows({"x"}, {{Ternary::Displayed}, {Ternary::Unknown}});
    const auto b = LabelMatrix::from_rows({"x"}, {{Ternary::Displayed}, {Ternary::Unknown}});
    const auto c = LabelMatrix::from_rows({"x"}, {{Ternary::Displayed}, {Ternary::Displayed}});
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("prediction matrix enforces the probability range") {
    PredictionMatrix p({"a", "b"}, 2, 0.25);
    CHECK(p.at(1, 1) == 0.25);
    p.set(0, 0, 1.0);
    p.set(0, 1, 0.0);
    CHECK_THROWS_AS(p.set(0, 0, 1.5), ValidationError);
    CHECK_THROWS_AS(p.set(0, 0, -0.1), ValidationError);
    CHECK_THROWS_AS(p.append_row({0.5, 2.0}), ValidationError);
    CHECK_THROWS_AS(PredictionMatrix({"a"}, 1, -3.0), ValidationError);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(p.set(0, 0, nan), ValidationError);
}

TEST_CASE("grid append fixes the column count on first use") {
    Grid<int> g;
    g.append_row(std::vector<int>{1, 2, 3});
    CHECK(g.cols() == 3);
    CHECK_THROWS_AS(g.append_row(std::vector<int>{1}), ValidationError);
    g.append_row(std::vector<int>{4, 5, 6});
    CHECK(g.rows() == 2);
    CHECK(g.column(2) == std::vector<int>{3, 6});
    CHECK(g.row(1)[0] == 4);
}

#include <catch_amalgamated.hpp>

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "aumeta/database.hpp"

using namespace aumeta;

namespace {

// Dataset A annotates {AU01, AU02}, dataset B annotates {AU02, AU04}, three
// samples each. The merged axis is {AU01, AU02, AU04}.
MergedDatabase ab_fixture() {
    DatasetDescriptor a{"A", {"AU01", "AU02"}, "uri:a", ""};
    DatasetDescriptor b{"B", {"AU02", "AU04"}, "uri:b", ""};
    std::vector<AnnotationRow> rows_a = {
        {"s1", "a1.png", {{"AU01", true}, {"AU02", false}}},
        {"s2", "a2.png", {{"AU01", false}, {"AU02", true}}},
        {"s3", "a3.png", {{"AU01", true}, {"AU02", true}}},
    };
    std::vector<AnnotationRow> rows_b = {
        {"s1", "b1.png", {{"AU02", true}, {"AU04", true}}},
        {"s2", "b2.png", {{"AU02", false}, {"AU04", false}}},
        {"s3", "b3.png", {{"AU02", true}, {"AU04", true}}},
    };
    return merge({a, b}, {rows_a, rows_b});
}

}  // namespace

TEST_CASE("identity case: one dataset, one class, one sample") {
    DatasetDescriptor d{"only", {"AU01"}, "uri", ""};
    const auto db = merge({d}, {{{"s1", "x.png", {{"AU01", true}}}}});
    REQUIRE(db.records().size() == 1);
    REQUIRE(db.class_names() == std::vector<std::string>{"AU01"});
    CHECK(db.records()[0].sample_id == "only/s1");
    CHECK(db.records()[0].labels == std::vector<Ternary>{Ternary::Displayed});
    CHECK(missing_fraction(db) == 0.0);
}

TEST_CASE("disjoint annotation sets force the complement to Unknown") {
    DatasetDescriptor a{"A", {"left"}, "uri:a", ""};
    DatasetDescriptor b{"B", {"right"}, "uri:b", ""};
    std::vector<AnnotationRow> rows_a, rows_b;
    for (int i = 0; i < 10; ++i) {
        rows_a.push_back({"s" + std::to_string(i), "a.png", {{"left", true}}});
        rows_b.push_back({"s" + std::to_string(i), "b.png", {{"right", true}}});
    }
    const auto db = merge({a, b}, {rows_a, rows_b});
    REQUIRE(db.records().size() == 20);
    REQUIRE(db.class_names() == std::vector<std::string>{"left", "right"});

    std::size_t left_unknown = 0, right_unknown = 0;
    for (const auto& rec : db.records()) {
        if (rec.labels[0] == Ternary::Unknown) ++left_unknown;
        if (rec.labels[1] == Ternary::Unknown) ++right_unknown;
    }
    CHECK(left_unknown == 10);
    CHECK(right_unknown == 10);
    CHECK(missing_fraction(db) == 0.5);

    const auto hist = class_histogram(db);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(hist.counts[c].displayed == 10);
        CHECK(hist.counts[c].not_displayed == 0);
        CHECK(hist.counts[c].unknown == 10);
    }
}

TEST_CASE("two overlapping datasets merge onto the union axis") {
    const auto db = ab_fixture();
    REQUIRE(db.records().size() == 6);
    REQUIRE(db.class_names() == std::vector<std::string>{"AU01", "AU02", "AU04"});

    // Enumerate all 18 cells against the declaration rule: a cell is Unknown
    // exactly when the class lies outside the source dataset's annotated set
    // (no row in this fixture omits an annotated class).
    std::size_t unknown_cells = 0;
    for (const auto& rec : db.records()) {
        const auto& annotated =
            rec.dataset == "A" ? std::set<std::string>{"AU01", "AU02"}
                               : std::set<std::string>{"AU02", "AU04"};
        for (std::size_t c = 0; c < db.class_names().size(); ++c) {
            const bool should_know = annotated.count(db.class_names()[c]) > 0;
            CHECK((rec.labels[c] != Ternary::Unknown) == should_know);
            if (rec.labels[c] == Ternary::Unknown) ++unknown_cells;
        }
    }
    CHECK(unknown_cells == 6);
    CHECK(missing_fraction(db) == 6.0 / 18.0);
}

TEST_CASE("a row may omit classes inside its annotated set") {
    DatasetDescriptor d{"A", {"AU01", "AU02"}, "uri", ""};
    const auto db = merge({d}, {{{"s1", "x.png", {{"AU01", true}}}}});
    CHECK(db.records()[0].labels ==
          std::vector<Ternary>{Ternary::Displayed, Ternary::Unknown});
}

TEST_CASE("sample ids are namespaced by dataset") {
    const auto db = ab_fixture();
    CHECK(db.records()[0].sample_id == "A/s1");
    CHECK(db.records()[3].sample_id == "B/s1");
}

TEST_CASE("duplicate sample id is rejected naming the id") {
    DatasetDescriptor d{"A", {"AU01"}, "uri", ""};
    std::vector<AnnotationRow> rows = {
        {"s1", "x.png", {{"AU01", true}}},
        {"s1", "y.png", {{"AU01", false}}},
    };
    CHECK_THROWS_WITH(merge({d}, {rows}), Catch::Matchers::ContainsSubstring("A/s1"));
}

TEST_CASE("labeling a class outside the annotated set names dataset and class") {
    DatasetDescriptor d{"A", {"AU01"}, "uri", ""};
    std::vector<AnnotationRow> rows = {{"s1", "x.png", {{"AU99", true}}}};
    CHECK_THROWS_WITH(merge({d}, {rows}),
                      Catch::Matchers::ContainsSubstring("A") &&
                          Catch::Matchers::ContainsSubstring("AU99"));
}

TEST_CASE("merge input validation") {
    CHECK_THROWS_AS(merge({}, {}), ValidationError);

    DatasetDescriptor d{"A", {"AU01"}, "uri", ""};
    CHECK_THROWS_AS(merge({d}, {}), ValidationError);  // table count mismatch

    DatasetDescriptor unnamed{"", {"AU01"}, "uri", ""};
    CHECK_THROWS_AS(merge({unnamed}, {{}}), ValidationError);

    DatasetDescriptor empty_axis{"A", {}, "uri", ""};
    CHECK_THROWS_AS(merge({empty_axis}, {{}}), ValidationError);

    std::vector<AnnotationRow> anon = {{"", "x.png", {{"AU01", true}}}};
    CHECK_THROWS_AS(merge({d}, {anon}), ValidationError);
}

TEST_CASE("class axis comes out sorted regardless of descriptor order") {
    DatasetDescriptor z{"z", {"zz", "aa"}, "uri", ""};
    DatasetDescriptor m{"m", {"mm"}, "uri", ""};
    const auto db = merge({z, m}, {{{"s1", "x", {{"zz", true}}}}, {{"s1", "y", {{"mm", false}}}}});
    CHECK(db.class_names() == std::vector<std::string>{"aa", "mm", "zz"});
}

TEST_CASE("histogram counts are conserved per class") {
    const auto db = ab_fixture();
    const auto hist = class_histogram(db);
    REQUIRE(hist.class_names == db.class_names());
    for (const auto& counts : hist.counts)
        CHECK(counts.displayed + counts.not_displayed + counts.unknown == db.records().size());
    // Spot values by enumeration: AU02 is annotated everywhere.
    const auto& au02 = hist.counts[1];
    CHECK(au02.displayed == 4);
    CHECK(au02.not_displayed == 2);
    CHECK(au02.unknown == 0);
}

TEST_CASE("missing fraction of an empty database is an error") {
    DatasetDescriptor d{"A", {"AU01"}, "uri", ""};
    const MergedDatabase empty({"AU01"}, {d}, {});
    CHECK_THROWS_AS(missing_fraction(empty), ValidationError);
}

TEST_CASE("database construction re-validates the invariants") {
    DatasetDescriptor d{"A", {"AU01"}, "uri", ""};
    const SampleRecord ok{"A/s1", "A", "x.png", {Ternary::Displayed}};

    CHECK_NOTHROW(MergedDatabase({"AU01"}, {d}, {ok}));
    // duplicate ids
    CHECK_THROWS_AS(MergedDatabase({"AU01"}, {d}, {ok, ok}), ValidationError);
    // wrong label width
    const SampleRecord wide{"A/s2", "A", "x.png", {Ternary::Displayed, Ternary::Unknown}};
    CHECK_THROWS_AS(MergedDatabase({"AU01"}, {d}, {wide}), ValidationError);
    // unknown source dataset
    const SampleRecord stray{"B/s1", "B", "x.png", {Ternary::Displayed}};
    CHECK_THROWS_AS(MergedDatabase({"AU01"}, {d}, {stray}), ValidationError);
    // unsorted class axis
    DatasetDescriptor two{"A", {"b", "a"}, "uri", ""};
    CHECK_THROWS_AS(MergedDatabase({"b", "a"}, {two}, {}), ValidationError);
    // label present for a class the dataset does not annotate
    DatasetDescriptor narrow{"A", {"a"}, "uri", ""};
    const SampleRecord leak{"A/s1", "A", "x.png", {Ternary::Unknown, Ternary::Displayed}};
    CHECK_THROWS_AS(MergedDatabase({"a", "b"}, {narrow}, {leak}), ValidationError);
}

TEST_CASE("label_matrix reflects records in order") {
    const auto db = ab_fixture();
    const LabelMatrix m = db.label_matrix();
    REQUIRE(m.rows() == db.records().size());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            CHECK(m.at(r, c) == db.records()[r].labels[c]);
}

TEST_CASE("class_index finds classes and rejects strangers") {
    const auto db = ab_fixture();
    CHECK(db.class_index("AU04") == 2);
    CHECK_THROWS_AS(db.class_index("AU99"), ValidationError);
}

#include <doctest.h>

#include <sstream>

#include "smn/corpus.hpp"
#include "smn/error.hpp"
#include "smn/semb.hpp"
#include "support.hpp"

using namespace smn;

namespace {

Corpus parse(const std::string& text) {
    std::istringstream in(text);
    return parse_corpus(in);
}

std::vector<Event> raws(std::initializer_list<double> values) {
    std::vector<Event> out;
    int i = 0;
    for (double v : values) out.push_back(support::event("e" + std::to_string(i++), {"a"}, v));
    return out;
}

}  // namespace

TEST_CASE("corpus loads records in file order") {
    const Corpus c = parse(
        "{\"format\":\"smn-events/1\",\"fc\":null,\"count\":3}\n"
        "{\"id\":\"x\",\"tokens\":[\"a\",\"b\"],\"popularity\":1.5,\"image_feature\":null}\n"
        "{\"id\":\"y\",\"tokens\":[\"b\"],\"popularity\":0,\"image_feature\":null}\n"
        "{\"id\":\"z\",\"tokens\":[\"c\",\"c\"],\"popularity\":7}\n");
    REQUIRE(c.events.size() == 3);
    CHECK(c.events[0].id == "x");
    CHECK(c.events[2].id == "z");
    CHECK(c.events[0].popularity_raw == 1.5);
    CHECK(c.events[2].tokens.size() == 2);
    CHECK_FALSE(c.header.fc.has_value());
}

TEST_CASE("fixture corpus loads") {
    const Corpus c = load_corpus(std::string(SMN_FIXTURES) + "/tiny.events.jsonl");
    CHECK(c.events.size() == 10);
    CHECK(c.header.count == 10);
}

TEST_CASE("corpus errors carry kind and line") {
    const std::string header = "{\"format\":\"smn-events/1\",\"fc\":2,\"count\":1}\n";
    try {
        parse(header + "{\"id\":\"x\",\"tokens\":[\"a\"],\"popularity\":1,\"image_feature\":[1,2,3]}\n");
        FAIL("expected a dimension error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse(header + "{not json\n"), FormatError);
    CHECK_THROWS_AS(parse("{\"format\":\"other\",\"fc\":null,\"count\":0}\n"), FormatError);

    const std::string h2 = "{\"format\":\"smn-events/1\",\"fc\":null,\"count\":2}\n";
    const std::string rec = "{\"id\":\"x\",\"tokens\":[\"a\"],\"popularity\":1}\n";
    CHECK_THROWS(parse(h2 + rec + rec));
    CHECK_THROWS(parse(h2 + rec));
    CHECK_THROWS(parse("{\"format\":\"smn-events/1\",\"fc\":null,\"count\":1}\n"
                       "{\"id\":\"x\",\"tokens\":[],\"popularity\":1}\n"));
    CHECK_THROWS(parse("{\"format\":\"smn-events/1\",\"fc\":null,\"count\":1}\n"
                       "{\"id\":\"x\",\"tokens\":[\"a\"],\"popularity\":-1}\n"));
    CHECK_THROWS_AS(load_corpus("/nonexistent/events.jsonl"), IoError);
}

TEST_CASE("corpus round-trips through write") {
    Corpus c = support::random_corpus(12, 9, 5, 3, 4);
    c.events[2].image_feature.reset();
    c.events[1].tokens.push_back(c.events[1].tokens[0]);
    c.events[3].popularity_raw = 0.1 + 0.2;
    std::ostringstream out;
    write_corpus(out, c);
    std::istringstream in(out.str());
    const Corpus back = parse_corpus(in);
    REQUIRE(back.events.size() == c.events.size());
    CHECK(back.header.fc == c.header.fc);
    for (std::size_t i = 0; i < c.events.size(); ++i) {
        CHECK(back.events[i].id == c.events[i].id);
        CHECK(back.events[i].tokens == c.events[i].tokens);
        CHECK(back.events[i].popularity_raw == c.events[i].popularity_raw);
        CHECK(back.events[i].image_feature == c.events[i].image_feature);
    }
}

TEST_CASE("popularity normalization") {
    auto [a, ra] = normalize_popularity(raws({10, 20, 30}));
    CHECK(a[0].popularity == 0.0);
    CHECK(a[1].popularity == 0.5);
    CHECK(a[2].popularity == 1.0);
    CHECK(ra.min == 10.0);
    CHECK(ra.max == 30.0);

    auto [b, rb] = normalize_popularity(raws({0, 100}));
    CHECK(b[0].popularity == 0.0);
    CHECK(b[1].popularity == 1.0);

    CHECK_THROWS_AS(normalize_popularity(raws({5, 5, 5})), ValidationError);
    CHECK_THROWS_AS(normalize_popularity(raws({5})), ValidationError);

    // Already normalized data with (0, 1) is left alone.
    auto c = raws({0.0, 0.25, 1.0});
    const auto again = apply_popularity_range(c, PopularityRange{0.0, 1.0});
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(again[i].popularity == c[i].popularity_raw);
    CHECK(ra.denormalize(ra.normalize(17.0)) == doctest::Approx(17.0));
}

TEST_CASE("split sizes and determinism") {
    std::vector<Event> ten;
    for (int i = 0; i < 10; ++i) ten.push_back(support::event("e" + std::to_string(i), {"a"}, i));
    const Split s = split(ten, {0.8, 0.1, 0.1}, 7);
    CHECK(s.train_ids.size() == 8);
    CHECK(s.val_ids.size() == 1);
    CHECK(s.test_ids.size() == 1);
    CHECK(s == split(ten, {0.8, 0.1, 0.1}, 7));

    std::vector<Event> four(ten.begin(), ten.begin() + 4);
    const Split f = split(four, {0.5, 0.25, 0.25}, 1);
    CHECK(f.train_ids.size() == 2);
    CHECK(f.val_ids.size() == 1);
    CHECK(f.test_ids.size() == 1);

    std::vector<std::string> all = s.train_ids;
    all.insert(all.end(), s.val_ids.begin(), s.val_ids.end());
    all.insert(all.end(), s.test_ids.begin(), s.test_ids.end());
    std::sort(all.begin(), all.end());
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
    CHECK(all.size() == 10);

    CHECK_THROWS(split(ten, {0.5, 0.1, 0.1}, 7));
    CHECK_THROWS(split(ten, {1.2, -0.1, -0.1}, 7));
    CHECK(select_events(ten, s.test_ids)[0].id == s.test_ids[0]);
}

TEST_CASE("semb parse and write") {
    std::istringstream in("semb/1 dim=3\nalpha\t1 2.5 -3\n\nbeta\t0.1 0.2 0.3\n");
    const EmbeddingFile f = parse_semb(in);
    CHECK(f.dim == 3);
    REQUIRE(f.keys.size() == 2);
    CHECK(f.find("alpha")->at(1) == 2.5f);
    CHECK(f.find("missing") == nullptr);
    CHECK(f.warnings.size() == 1);

    std::ostringstream out;
    write_semb(out, f);
    std::istringstream back_in(out.str());
    const EmbeddingFile back = parse_semb(back_in);
    CHECK(back.warnings.empty());
    CHECK(back.rows == f.rows);
    CHECK(back.keys == f.keys);

    std::istringstream bad_dim("semb/1 dim=3\nalpha\t1 2\n");
    CHECK_THROWS_AS(parse_semb(bad_dim), FormatError);
    std::istringstream bad_header("embeddings 3\n");
    CHECK_THROWS_AS(parse_semb(bad_header), FormatError);
    std::istringstream dup("semb/1 dim=1\na\t1\na\t2\n");
    CHECK_THROWS(parse_semb(dup));
    CHECK_THROWS_AS(load_semb("/nonexistent.semb"), IoError);
}

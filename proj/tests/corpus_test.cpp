#include <gtest/gtest.h>

#include <fstream>

#include "clinex/corpus.hpp"
#include "clinex/error.hpp"
#include "clinex/fixtures.hpp"
#include "clinex/io.hpp"
#include "clinex/text.hpp"
#include "support.hpp"

using namespace clinex;

namespace {

const FeatureSchema& schema() { return FeatureSchema::builtin(); }

std::string truth_header(const std::string& skip = "") {
    std::string h = "id";
    for (const auto& f : schema().features()) {
        if (f.id != skip) h += "," + f.id;
    }
    return h + "\n";
}

std::string truth_row(const std::string& id, const std::string& value, std::size_t count = kFeatureCount) {
    std::string r = id;
    for (std::size_t i = 0; i < count; ++i) r += "," + value;
    return r + "\n";
}

template <typename F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::Io;
}

}  // namespace

TEST(Schema, BuiltinHasThirteenFeaturesInOrder) {
    const auto& s = schema();
    EXPECT_EQ(s.features().size(), 13u);
    EXPECT_EQ(s[0].id, "doctor_visit_request");
    EXPECT_EQ(s[11].id, "pain");
    EXPECT_EQ(s.index_of("fever"), 7u);
    EXPECT_FALSE(s.index_of("cough"));
    EXPECT_EQ(s[11].label(Language::english), "Pain");
    EXPECT_EQ(s.digest().size(), 64u);
}

TEST(Schema, RejectsLabelCollisions) {
    auto doc = schema().to_json();
    doc["features"][1]["labels"]["english"] = doc["features"][0]["labels"]["english"];
    EXPECT_EQ(kind_of([&] { FeatureSchema::from_json(doc); }), ErrorKind::InvalidSchema);
}

TEST(Schema, RejectsWrongFeatureCount) {
    auto doc = schema().to_json();
    doc["features"].erase(doc["features"].size() - 1);
    EXPECT_EQ(kind_of([&] { FeatureSchema::from_json(doc); }), ErrorKind::InvalidSchema);
}

TEST(Corpus, SingleRecord) {
    const auto c = parse_corpus_jsonl(R"({"id":"c1","language":"persian","text":"سلام"})");
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].id, "c1");
    EXPECT_EQ(c[0].language, Language::persian);
    EXPECT_EQ(c[0].text, "سلام");
}

TEST(Corpus, DuplicateIdNamesTheId) {
    try {
        parse_corpus_jsonl("{\"id\":\"c1\",\"language\":\"persian\",\"text\":\"a\"}\n"
                           "{\"id\":\"c1\",\"language\":\"persian\",\"text\":\"b\"}\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DuplicateId);
        EXPECT_NE(std::string(e.what()).find("c1"), std::string::npos);
    }
}

TEST(Corpus, MalformedLineCarriesLineNumber) {
    try {
        parse_corpus_jsonl("{\"id\":\"c1\",\"language\":\"persian\",\"text\":\"a\"}\n{oops\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MalformedRecord);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Corpus, RejectsEmptyTextAndEmptyCorpus) {
    EXPECT_EQ(kind_of([] { parse_corpus_jsonl(R"({"id":"c1","language":"persian","text":"  "})"); }),
              ErrorKind::MalformedRecord);
    EXPECT_EQ(kind_of([] { parse_corpus_jsonl("\n\n"); }), ErrorKind::EmptyCorpus);
    EXPECT_EQ(kind_of([] { parse_corpus_jsonl(R"({"id":"c1","language":"klingon","text":"a"})"); }),
              ErrorKind::MalformedRecord);
}

TEST(Corpus, TextIsNormalizedToNfc) {
    const auto c = parse_corpus_jsonl("{\"id\":\"c1\",\"language\":\"english\",\"text\":\"cafe\xCC\x81\"}");
    EXPECT_EQ(c[0].text, "caf\xC3\xA9");
}

TEST(Corpus, FixtureHasFiftyRecordsInFileOrder) {
    const auto c = fixtures::corpus();
    const auto raw = fixtures::embedded("corpus");
    EXPECT_EQ(c.size(), static_cast<std::size_t>(std::count(raw.begin(), raw.end(), '\n')));
    ASSERT_EQ(c.size(), 50u);
    EXPECT_EQ(c.front().id, "call-001");
    EXPECT_EQ(c.back().id, "call-050");
    for (const auto& t : c) EXPECT_EQ(t.language, Language::persian);
}

TEST(Corpus, JsonlAndCsvRoundTrip) {
    auto c = fixtures::corpus();
    c[3].text = "line one\nline \"two\", with comma";
    EXPECT_EQ(parse_corpus_jsonl(to_jsonl(c)), c);
    EXPECT_EQ(parse_corpus_csv(to_csv(c)), c);
}

TEST(Corpus, LoadFromDisk) {
    testkit::TempDir dir;
    io::write_file(dir / "c.jsonl", fixtures::embedded("corpus"));
    EXPECT_EQ(load_corpus(dir / "c.jsonl", CorpusFormat::jsonl).size(), 50u);
    EXPECT_EQ(kind_of([&] { load_corpus(dir / "absent.jsonl", CorpusFormat::jsonl); }), ErrorKind::MissingInput);
}

TEST(Corpus, TranslatedTranscriptsMustPointAtOriginals) {
    const auto originals = parse_corpus_jsonl(R"({"id":"c1","language":"persian","text":"سلام"})");
    Corpus english{{"c1", Language::english, "hello", "c1", false}};
    EXPECT_NO_THROW(validate_corpus(english, &originals));
    english[0].source_id = "c9";
    EXPECT_EQ(kind_of([&] { validate_corpus(english, &originals); }), ErrorKind::MalformedRecord);
}

TEST(GroundTruth, AllTrueRow) {
    const auto t = parse_ground_truth(truth_header() + truth_row("c1", "True"), schema());
    ASSERT_EQ(t.rows.size(), 1u);
    for (const bool v : t.rows.at("c1")) EXPECT_TRUE(v);
    EXPECT_EQ(t.schema_digest, schema().digest());
}

TEST(GroundTruth, ColumnsInAnyOrderAndCaseInsensitiveValues) {
    std::string header = "id";
    for (auto it = schema().features().rbegin(); it != schema().features().rend(); ++it) header += "," + it->id;
    std::string row = "c1";
    for (std::size_t i = 0; i < kFeatureCount; ++i) row += i == 1 ? ",TRUE" : ",false";
    const auto t = parse_ground_truth(header + "\n" + row + "\n", schema());
    const auto& v = t.rows.at("c1");
    for (std::size_t i = 0; i < kFeatureCount; ++i) EXPECT_EQ(v[i], i == 11) << i;
}

TEST(GroundTruth, MissingPainColumn) {
    try {
        parse_ground_truth(truth_header("pain") + truth_row("c1", "False", 12), schema());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingColumn);
        EXPECT_NE(std::string(e.what()).find("pain"), std::string::npos);
    }
}

TEST(GroundTruth, ErrorKinds) {
    EXPECT_EQ(kind_of([] { parse_ground_truth(truth_header() + truth_row("c1", "maybe"), schema()); }),
              ErrorKind::NonBooleanCell);
    EXPECT_EQ(kind_of([] {
                  parse_ground_truth("id,cough," + truth_header().substr(3) + truth_row("c1", "True", 14), schema());
              }),
              ErrorKind::UnknownColumn);
    EXPECT_EQ(kind_of([] {
                  parse_ground_truth(truth_header() + truth_row("c1", "True") + truth_row("c1", "False"), schema());
              }),
              ErrorKind::DuplicateId);
}

TEST(GroundTruth, FixtureTruthCoversCorpus) {
    const auto t = fixtures::truth(schema());
    EXPECT_EQ(t.rows.size(), 50u);
    const auto aligned = align(fixtures::corpus(), t);
    EXPECT_EQ(aligned.pairs.size(), 50u);
}

TEST(Align, PartialOverlap) {
    const auto corpus = parse_corpus_jsonl("{\"id\":\"c1\",\"language\":\"persian\",\"text\":\"a\"}\n"
                                           "{\"id\":\"c2\",\"language\":\"persian\",\"text\":\"b\"}\n");
    const auto truth =
        parse_ground_truth(truth_header() + truth_row("c2", "True") + truth_row("c3", "False"), schema());
    const auto a = align(corpus, truth);
    ASSERT_EQ(a.pairs.size(), 1u);
    EXPECT_EQ(a.pairs[0].first.id, "c2");
    EXPECT_EQ(a.unannotated, std::vector<std::string>{"c1"});
    EXPECT_EQ(a.orphan_labels, std::vector<std::string>{"c3"});
}

TEST(Align, IdenticalSetsAreSortedWithoutGaps) {
    const auto corpus = parse_corpus_jsonl("{\"id\":\"c2\",\"language\":\"persian\",\"text\":\"b\"}\n"
                                           "{\"id\":\"c1\",\"language\":\"persian\",\"text\":\"a\"}\n");
    const auto truth =
        parse_ground_truth(truth_header() + truth_row("c1", "True") + truth_row("c2", "False"), schema());
    const auto a = align(corpus, truth);
    ASSERT_EQ(a.pairs.size(), 2u);
    EXPECT_EQ(a.pairs[0].first.id, "c1");
    EXPECT_TRUE(a.unannotated.empty());
    EXPECT_TRUE(a.orphan_labels.empty());
}

TEST(Align, DisjointSets) {
    const auto corpus = parse_corpus_jsonl(R"({"id":"c1","language":"persian","text":"a"})");
    const auto truth = parse_ground_truth(truth_header() + truth_row("c9", "True"), schema());
    EXPECT_EQ(kind_of([&] { align(corpus, truth); }), ErrorKind::EmptyIntersection);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "clinex/parser.hpp"
#include "clinex/promptkit.hpp"
#include "clinex/text.hpp"

using namespace clinex;

namespace {

const FeatureSchema& schema() { return FeatureSchema::builtin(); }

std::size_t count_notes(const TriStateFeatureVector& v, NoteKind kind) {
    return static_cast<std::size_t>(
        std::ranges::count_if(v.diagnostics, [&](const ParseNote& n) { return n.kind == kind; }));
}

std::string all_false_template() { return render_output_template(LabelVector{}, Language::english, schema()); }

}  // namespace

TEST(Parser, AllFalseTemplateHasNoDiagnostics) {
    const auto v = parse_output(all_false_template(), Language::english, schema());
    for (const auto s : v.values) EXPECT_EQ(s, TriState::False);
    EXPECT_TRUE(v.diagnostics.empty());
}

TEST(Parser, PreambleIsIgnoredWithOneNote) {
    LabelVector labels{};
    labels[2] = labels[7] = true;
    const auto bare = render_output_template(labels, Language::english, schema());
    const auto with = parse_output("Sure, here is the extraction:\n" + bare, Language::english, schema());
    EXPECT_EQ(with.values, parse_output(bare, Language::english, schema()).values);
    ASSERT_EQ(with.diagnostics.size(), 1u);
    EXPECT_EQ(with.diagnostics[0].kind, NoteKind::unmatched_line);
    EXPECT_EQ(with.diagnostics[0].line_no, 1u);
}

TEST(Parser, EmptyStringIsAllMissing) {
    const auto v = parse_output("", Language::english, schema());
    EXPECT_EQ(v.missing_count(), 13u);
    EXPECT_EQ(count_notes(v, NoteKind::missing_field), 13u);
}

TEST(Parser, FirstValidOccurrenceWins) {
    auto text = all_false_template();
    const auto pos = text.find("Pain: False");
    text.replace(pos, 11, "Pain: TRUE");
    text += "\nPain: False";
    const auto v = parse_output(text, Language::english, schema());
    EXPECT_EQ(v.values[*schema().index_of("pain")], TriState::True);
    EXPECT_EQ(count_notes(v, NoteKind::conflicting_field), 1u);
}

TEST(Parser, RepeatedSameValueIsDuplicate) {
    const auto v = parse_output(all_false_template() + "\nFever: false", Language::english, schema());
    EXPECT_EQ(count_notes(v, NoteKind::duplicate_field), 1u);
    EXPECT_EQ(v.missing_count(), 0u);
}

TEST(Parser, InvalidValueStaysMissing) {
    auto text = all_false_template();
    const auto pos = text.find("Fever: False");
    text.replace(pos, 12, "Fever: maybe");
    const auto v = parse_output(text, Language::english, schema());
    EXPECT_EQ(v.values[*schema().index_of("fever")], TriState::Missing);
    EXPECT_EQ(count_notes(v, NoteKind::invalid_value), 1u);
    EXPECT_EQ(count_notes(v, NoteKind::missing_field), 1u);
}

TEST(Parser, ToleratesMarkdownBulletsNumberingAndFullWidthColon) {
    const std::string text =
        "- **Pain**: True\n"
        "2. Fever: true.\n"
        "* Seizures : FALSE\n"
        "تب: False\n"
        "Insurance/cost issues\xEF\xBC\x9A True";
    const auto v = parse_output(text, Language::english, schema());
    EXPECT_EQ(v.values[*schema().index_of("pain")], TriState::True);
    EXPECT_EQ(v.values[*schema().index_of("fever")], TriState::True);
    EXPECT_EQ(v.values[*schema().index_of("seizures")], TriState::False);
    EXPECT_EQ(v.values[*schema().index_of("insurance_cost_issues")], TriState::True);
    EXPECT_EQ(count_notes(v, NoteKind::duplicate_field) + count_notes(v, NoteKind::conflicting_field), 1u);
}

TEST(Parser, PersianLabelsWithArabicLetterVariants) {
    auto text = render_output_template(LabelVector{}, Language::persian, schema());
    // Arabic yeh (U+064A) in place of Persian yeh (U+06CC).
    std::string arabic;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text.compare(i, 2, "\xDB\x8C") == 0) {
            arabic += "\xD9\x8A";
            ++i;
        } else {
            arabic += text[i];
        }
    }
    ASSERT_NE(arabic, text);
    const auto v = parse_output(arabic, Language::persian, schema());
    EXPECT_EQ(v.missing_count(), 0u);
}

TEST(Parser, NeverThrowsOnGarbage) {
    std::mt19937 rng(7);
    for (int n = 0; n < 200; ++n) {
        std::string junk(static_cast<std::size_t>(rng() % 300), '\0');
        for (auto& c : junk) c = static_cast<char>(rng());
        EXPECT_NO_THROW(parse_output(junk, Language::english, schema()));
    }
}

TEST(Parser, ExcerptsAreTruncatedOnCodepointBoundaries) {
    std::string line;
    for (int i = 0; i < 100; ++i) line += "ب";
    const auto v = parse_output(line, Language::persian, schema());
    ASSERT_FALSE(v.diagnostics.empty());
    EXPECT_TRUE(text::is_valid_utf8(v.diagnostics[0].excerpt));
    EXPECT_LE(v.diagnostics[0].excerpt.size(), 80u);
}

TEST(ResolveMissing, SingleMissing) {
    TriStateFeatureVector tri;
    tri.values.fill(TriState::False);
    tri.values[0] = TriState::True;
    tri.values[1] = TriState::Missing;
    const auto b = resolve_missing(tri);
    EXPECT_TRUE(b.values[0]);
    EXPECT_FALSE(b.values[1]);
    EXPECT_EQ(b.missing_count(), 1u);
    EXPECT_TRUE(b.missing_mask[1]);
}

TEST(ResolveMissing, AllMissing) {
    const auto b = resolve_missing(all_missing("c1", {NoteKind::backend_failure, 0, "timeout"}));
    EXPECT_EQ(b.transcript_id, "c1");
    EXPECT_EQ(b.missing_count(), 13u);
    for (const bool v : b.values) EXPECT_FALSE(v);
}

TEST(ResolveMissing, NoMissingIsIdentity) {
    TriStateFeatureVector tri;
    for (std::size_t i = 0; i < kFeatureCount; ++i) tri.values[i] = i % 3 == 0 ? TriState::True : TriState::False;
    const auto b = resolve_missing(tri);
    for (std::size_t i = 0; i < kFeatureCount; ++i) EXPECT_EQ(b.values[i], i % 3 == 0);
    EXPECT_EQ(b.missing_count(), 0u);
}

TEST(Diagnostics, JsonShape) {
    const auto v = parse_output("hello\n", Language::english, schema());
    const auto lines = diagnostics_json(TriStateFeatureVector{"c7", v.values, v.diagnostics});
    ASSERT_FALSE(lines.empty());
    EXPECT_EQ(lines[0]["transcript_id"], "c7");
    EXPECT_EQ(lines[0]["note_kind"], "unmatched_line");
    EXPECT_EQ(lines[0]["line_no"], 1);
    EXPECT_EQ(lines[0]["excerpt"], "hello");
}

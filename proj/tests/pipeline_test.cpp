#include <gtest/gtest.h>

#include "clinex/error.hpp"
#include "clinex/fixtures.hpp"
#include "clinex/io.hpp"
#include "clinex/pipeline.hpp"
#include "support.hpp"

using namespace clinex;
using namespace std::chrono_literals;

namespace {

const FeatureSchema& schema() { return FeatureSchema::builtin(); }
const ExemplarSet& exemplars() { return ExemplarSet::builtin(); }

StageConfigs configs() {
    return {GenerationConfig::translation_defaults("mock"), GenerationConfig::extraction_defaults("mock")};
}

AttemptResult http_failure(int status) {
    AttemptResult r;
    r.kind = AttemptResult::Kind::http_error;
    r.http_status = status;
    r.detail = "HTTP " + std::to_string(status);
    return r;
}

const RetryPolicy kFastRetry{2, 1ms, 1.0};

}  // namespace

TEST(Variant, NamesAndLabels) {
    EXPECT_EQ(parse_run_variant("direct_persian"), RunVariant::direct_persian);
    EXPECT_FALSE(parse_run_variant("persian"));
    EXPECT_EQ(extraction_language(RunVariant::translated_english), Language::english);
    EXPECT_EQ(run_label("Qwen/Qwen2.5-7B-Instruct", RunVariant::direct_persian),
              "Qwen_Qwen2.5-7B-Instruct_direct_persian");
}

TEST(TranslationStage, FixtureProducesFiftyLinkedTranscripts) {
    MockBackend backend(fixtures::mock_script(schema()), schema());
    BackendContext ctx{backend};
    const auto corpus = fixtures::corpus();
    const auto result = run_translation_stage(corpus, ctx, configs().translation);
    const auto translations = nlohmann::json::parse(fixtures::embedded("translations"));
    ASSERT_EQ(result.english.size(), 50u);
    EXPECT_TRUE(result.failed_ids.empty());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& t = result.english[i];
        EXPECT_EQ(t.id, corpus[i].id);
        EXPECT_EQ(t.source_id, corpus[i].id);
        EXPECT_EQ(t.language, Language::english);
        EXPECT_EQ(t.text, translations.at(t.id).get<std::string>());
    }
    EXPECT_NO_THROW(validate_corpus(result.english, &corpus));
}

TEST(TranslationStage, IdentityFallbackRetagsLanguage) {
    MockBackend backend(MockScript{}, schema());
    BackendContext ctx{backend};
    const Corpus corpus{{"c1", Language::persian, "سلام", std::nullopt, false}};
    const auto result = run_translation_stage(corpus, ctx, configs().translation);
    EXPECT_EQ(result.english[0].text, "سلام");
    EXPECT_EQ(result.english[0].language, Language::english);
}

TEST(TranslationStage, WarmCacheRerunMakesNoCalls) {
    CompletionCache cache;
    MockBackend cold(fixtures::mock_script(schema()), schema());
    BackendContext cold_ctx{cold, &cache};
    const auto first = run_translation_stage(fixtures::corpus(), cold_ctx, configs().translation);
    MockBackend warm(fixtures::mock_script(schema()), schema());
    BackendContext warm_ctx{warm, &cache, {}, 8};
    const auto second = run_translation_stage(fixtures::corpus(), warm_ctx, configs().translation);
    EXPECT_EQ(cold.calls(), 50u);
    EXPECT_EQ(warm.calls(), 0u);
    EXPECT_EQ(first.english, second.english);
}

TEST(TranslationStage, RejectsEnglishInput) {
    MockBackend backend(MockScript{}, schema());
    BackendContext ctx{backend};
    const Corpus corpus{{"c1", Language::english, "hi", std::nullopt, false}};
    EXPECT_THROW(run_translation_stage(corpus, ctx, configs().translation), Error);
}

TEST(TranslationStage, FailuresAreKeptAndPropagateAsMissing) {
    MockBackend backend(fixtures::mock_script(schema()), schema());
    backend.set_fault([](std::size_t call) -> std::optional<AttemptResult> {
        if (call == 4) return http_failure(400);
        return std::nullopt;
    });
    BackendContext ctx{backend, nullptr, kFastRetry, 1};
    const auto translated = run_translation_stage(fixtures::corpus(), ctx, configs().translation);
    ASSERT_EQ(translated.english.size(), 50u);
    ASSERT_EQ(translated.failed_ids, std::vector<std::string>{"call-005"});
    const auto& failed = translated.english[4];
    EXPECT_TRUE(failed.translation_failed);
    EXPECT_EQ(failed.text, kTranslationFailedText);

    const auto calls_before = backend.calls();
    const auto set = run_extraction_stage(translated.english, RunVariant::translated_english, exemplars(), schema(),
                                          ctx, configs().extraction);
    EXPECT_EQ(backend.calls() - calls_before, 49u);
    const auto& entry = set.entries[4];
    EXPECT_EQ(entry.transcript_id, "call-005");
    EXPECT_EQ(entry.tri.missing_count(), 13u);
    ASSERT_EQ(entry.tri.diagnostics.size(), 1u);
    EXPECT_EQ(entry.tri.diagnostics[0].kind, NoteKind::translation_failed);
    EXPECT_EQ(set.transcripts_with_missing(), 1u);
}

TEST(ExtractionStage, VariantMustMatchCorpusLanguage) {
    MockBackend backend(MockScript{}, schema());
    BackendContext ctx{backend};
    try {
        run_extraction_stage(fixtures::corpus(), RunVariant::translated_english, exemplars(), schema(), ctx,
                             configs().extraction);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::VariantMismatch);
    }
}

TEST(ExtractionStage, KeywordMockFindsFever) {
    MockBackend backend(fixtures::mock_script(schema()), schema());
    BackendContext ctx{backend};
    const Corpus corpus{{"c1", Language::english, "He has had a fever since last night.", "c1", false}};
    const auto set =
        run_extraction_stage(corpus, RunVariant::translated_english, exemplars(), schema(), ctx, configs().extraction);
    ASSERT_EQ(set.entries.size(), 1u);
    EXPECT_TRUE(set.entries[0].binary.values[*schema().index_of("fever")]);
    EXPECT_FALSE(set.entries[0].binary.values[*schema().index_of("pain")]);
    EXPECT_FALSE(set.entries[0].raw_completion.empty());
}

TEST(ExtractionStage, ScriptedMalformedCompletionGivesThirteenMissing) {
    auto script = fixtures::mock_script(schema());
    const auto corpus = fixtures::corpus();
    script.scripted[render_extraction_prompt(corpus[9].text, Language::persian, exemplars(), schema()).fingerprint()] =
        "I cannot help with that.";
    MockBackend backend(script, schema());
    BackendContext ctx{backend};
    const auto set =
        run_extraction_stage(corpus, RunVariant::direct_persian, exemplars(), schema(), ctx, configs().extraction);
    EXPECT_EQ(set.entries[9].tri.missing_count(), 13u);
    EXPECT_EQ(set.entries[9].raw_completion, "I cannot help with that.");
    EXPECT_EQ(set.entries[9].status, BackendStatus::ok);
    EXPECT_EQ(set.transcripts_with_missing(), 1u);
}

TEST(ExtractionStage, BackendFailureGivesAllMissingWithNote) {
    MockBackend backend(fixtures::mock_script(schema()), schema());
    backend.set_fault([](std::size_t) { return std::optional<AttemptResult>(http_failure(503)); });
    BackendContext ctx{backend, nullptr, kFastRetry, 4};
    const auto set = run_extraction_stage(fixtures::corpus(), RunVariant::direct_persian, exemplars(), schema(), ctx,
                                          configs().extraction);
    for (const auto& e : set.entries) {
        EXPECT_EQ(e.status, BackendStatus::failed_after_retries);
        EXPECT_EQ(e.binary.missing_count(), 13u);
        EXPECT_EQ(e.tri.diagnostics.at(0).kind, NoteKind::backend_failure);
    }
    EXPECT_EQ(backend.calls(), 100u);
}

TEST(ExtractionStage, RunsTwiceToIdenticalSnapshots) {
    MockBackend a(fixtures::mock_script(schema()), schema());
    MockBackend b(fixtures::mock_script(schema()), schema());
    BackendContext ctx_a{a, nullptr, {}, 1};
    BackendContext ctx_b{b, nullptr, {}, 8};
    const auto first = run_extraction_stage(fixtures::corpus(), RunVariant::direct_persian, exemplars(), schema(),
                                            ctx_a, configs().extraction);
    const auto second = run_extraction_stage(fixtures::corpus(), RunVariant::direct_persian, exemplars(), schema(),
                                             ctx_b, configs().extraction);
    EXPECT_EQ(first, second);
    EXPECT_EQ(to_snapshot_jsonl(first), to_snapshot_jsonl(second));
    EXPECT_EQ(completions_jsonl(first), completions_jsonl(second));
}

TEST(ExtractionStage, EntriesAreSortedById) {
    auto corpus = fixtures::corpus();
    std::reverse(corpus.begin(), corpus.end());
    MockBackend backend(fixtures::mock_script(schema()), schema());
    BackendContext ctx{backend};
    const auto set =
        run_extraction_stage(corpus, RunVariant::direct_persian, exemplars(), schema(), ctx, configs().extraction);
    EXPECT_EQ(set.entries.front().transcript_id, "call-001");
    EXPECT_EQ(set.entries.back().transcript_id, "call-050");
}

TEST(Snapshot, RoundTrip) {
    auto script = fixtures::mock_script(schema());
    const auto corpus = fixtures::corpus();
    script.scripted[render_extraction_prompt(corpus[0].text, Language::persian, exemplars(), schema()).fingerprint()] =
        "Pain: maybe\nnonsense";
    MockBackend backend(script, schema());
    BackendContext ctx{backend};
    const auto set =
        run_extraction_stage(corpus, RunVariant::direct_persian, exemplars(), schema(), ctx, configs().extraction);
    const auto back = prediction_set_from_jsonl(to_snapshot_jsonl(set), schema());
    EXPECT_EQ(back, set);
    EXPECT_THROW(prediction_set_from_jsonl("{\"id\":\"x\"}\n", schema()), Error);
}

TEST(Resumability, InterruptedRunMatchesUninterrupted) {
    const auto corpus = fixtures::corpus();
    MockBackend reference_backend(fixtures::mock_script(schema()), schema());
    BackendContext reference_ctx{reference_backend};
    const auto reference = run_extraction_stage(corpus, RunVariant::direct_persian, exemplars(), schema(),
                                                reference_ctx, configs().extraction);

    testkit::TempDir dir;
    constexpr std::size_t k = 17;
    {
        // The backend dies after k completions; only those reach the cache.
        CompletionCache cache(dir.path());
        MockBackend dying(fixtures::mock_script(schema()), schema());
        dying.set_fault([](std::size_t call) -> std::optional<AttemptResult> {
            if (call < k) return std::nullopt;
            AttemptResult r;
            r.kind = AttemptResult::Kind::transport_error;
            r.detail = "connection refused";
            return r;
        });
        BackendContext ctx{dying, &cache, RetryPolicy{1, 1ms, 1.0}, 1};
        run_extraction_stage(corpus, RunVariant::direct_persian, exemplars(), schema(), ctx, configs().extraction);
        EXPECT_EQ(cache.size(), k);
    }
    CompletionCache cache(dir.path());
    MockBackend healthy(fixtures::mock_script(schema()), schema());
    BackendContext ctx{healthy, &cache, {}, 4};
    const auto resumed =
        run_extraction_stage(corpus, RunVariant::direct_persian, exemplars(), schema(), ctx, configs().extraction);
    EXPECT_EQ(healthy.calls(), corpus.size() - k);
    EXPECT_EQ(to_snapshot_jsonl(resumed), to_snapshot_jsonl(reference));
}

TEST(RunFull, FixtureConfusionMatchesOracle) {
    MockBackend backend(fixtures::mock_script(schema()), schema());
    BackendContext ctx{backend, nullptr, {}, 4};
    const auto result = run_full(fixtures::corpus(), {RunVariant::translated_english, RunVariant::direct_persian},
                                 fixtures::truth(schema()), schema(), exemplars(), ctx, configs());
    const auto golden = nlohmann::json::parse(io::read_file(testkit::golden("fixture_confusion.json")));
    for (const auto& [variant, outcome] : result.variants) {
        ASSERT_TRUE(outcome.metrics) << outcome.error;
        const auto& expected = golden.at(std::string(to_string(variant)));
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            const auto& fm = outcome.metrics->features[i];
            EXPECT_EQ(fm.feature_id, expected[i]["feature"]);
            EXPECT_EQ(fm.cm, (ConfusionMatrix{expected[i]["tp"], expected[i]["tn"], expected[i]["fp"],
                                              expected[i]["fn"]}))
                << to_string(variant) << " " << fm.feature_id;
        }
    }
    ASSERT_TRUE(result.comparison);
    EXPECT_EQ(result.comparison->rows.size(), 13u);
    const auto& fever = result.comparison->rows[*schema().index_of("fever")];
    EXPECT_GT(fever.macro_f1_delta, 0.0);
}

TEST(RunFull, SingleVariantOmitsComparison) {
    MockBackend backend(fixtures::mock_script(schema()), schema());
    BackendContext ctx{backend};
    const auto result = run_full(fixtures::corpus(), {RunVariant::direct_persian}, fixtures::truth(schema()), schema(),
                                 exemplars(), ctx, configs());
    EXPECT_FALSE(result.translation);
    EXPECT_EQ(result.variants.size(), 1u);
    EXPECT_FALSE(result.comparison);
    EXPECT_EQ(backend.calls(), 50u);
}

TEST(RunFull, DirectPersianIsIndependentOfTranslation) {
    MockBackend a(fixtures::mock_script(schema()), schema());
    MockBackend b(fixtures::mock_script(schema()), schema());
    BackendContext ctx_a{a};
    BackendContext ctx_b{b};
    const auto alone = run_full(fixtures::corpus(), {RunVariant::direct_persian}, fixtures::truth(schema()), schema(),
                                exemplars(), ctx_a, configs());
    const auto both = run_full(fixtures::corpus(), {RunVariant::translated_english, RunVariant::direct_persian},
                               fixtures::truth(schema()), schema(), exemplars(), ctx_b, configs());
    EXPECT_EQ(alone.variants.at(RunVariant::direct_persian).predictions,
              both.variants.at(RunVariant::direct_persian).predictions);
}

TEST(RunFull, AlwaysFailingBackendYieldsAllNegativeMetrics) {
    MockBackend backend(fixtures::mock_script(schema()), schema());
    backend.set_fault([](std::size_t) { return std::optional<AttemptResult>(http_failure(500)); });
    BackendContext ctx{backend, nullptr, kFastRetry, 8};
    const auto truth = fixtures::truth(schema());
    const auto result = run_full(fixtures::corpus(), {RunVariant::translated_english, RunVariant::direct_persian},
                                 truth, schema(), exemplars(), ctx, configs());
    ASSERT_TRUE(result.translation);
    EXPECT_EQ(result.translation->failed_ids.size(), 50u);
    for (const auto& [variant, outcome] : result.variants) {
        ASSERT_TRUE(outcome.metrics) << outcome.error;
        EXPECT_EQ(outcome.metrics->missing_fields_total, 13u * 50u);
        EXPECT_EQ(outcome.metrics->transcripts_with_missing, 50u);
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            std::uint64_t positives = 0;
            for (const auto& [id, labels] : truth.rows) positives += labels[i];
            const auto& fm = outcome.metrics->features[i];
            EXPECT_EQ(fm.cm, (ConfusionMatrix{0, 50 - positives, 0, positives}));
            EXPECT_EQ(fm.missing_fields, 50u);
        }
    }
}

TEST(RunFull, VariantErrorsAreIsolated) {
    MockBackend backend(fixtures::mock_script(schema()), schema());
    BackendContext ctx{backend};
    nlohmann::json doc = nlohmann::json::parse(fixtures::embedded("exemplars"));
    doc.erase("english");
    const auto persian_only = ExemplarSet::from_json(doc, schema());
    const auto result = run_full(fixtures::corpus(), {RunVariant::translated_english, RunVariant::direct_persian},
                                 fixtures::truth(schema()), schema(), persian_only, ctx, configs());
    EXPECT_FALSE(result.variants.at(RunVariant::translated_english).error.empty());
    EXPECT_TRUE(result.variants.at(RunVariant::direct_persian).metrics);
    EXPECT_FALSE(result.comparison);
}

TEST(Manifest, DigestIgnoresTimestampAndStats) {
    RunManifest m;
    m.model_id = "mock";
    m.variants = {RunVariant::direct_persian};
    m.configs = configs();
    m.corpus_digest = corpus_digest(fixtures::corpus());
    m.schema_digest = schema().digest();
    m.exemplar_digest = exemplars().digest();
    m.stages["extraction_direct_persian"] = "complete";
    m.created_at = "2026-01-01T00:00:00Z";
    auto later = m;
    later.created_at = "2026-06-01T12:00:00Z";
    later.stats = {{"backend_requests", 50}};
    EXPECT_EQ(m.digest(), later.digest());
    EXPECT_EQ(m.run_id().size(), 16u);

    auto changed = m;
    changed.configs.extraction.max_new_tokens = 256;
    EXPECT_NE(m.digest(), changed.digest());

    const auto back = RunManifest::from_json(later.to_json());
    EXPECT_EQ(back.digest(), later.digest());
    EXPECT_EQ(back.created_at, later.created_at);
    EXPECT_EQ(back.stats, later.stats);
}

TEST(Layout, Paths) {
    EXPECT_EQ(layout::extraction("out", RunVariant::direct_persian), std::filesystem::path("out/extraction_direct_persian.jsonl"));
    EXPECT_EQ(layout::completions("out", RunVariant::translated_english),
              std::filesystem::path("out/completions/translated_english.jsonl"));
}

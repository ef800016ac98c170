#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clinex/corpus.hpp"
#include "clinex/schema.hpp"

namespace clinex {

enum class PromptVariant { english, persian, translation };

std::string_view to_string(PromptVariant variant);

inline PromptVariant prompt_variant(Language language) {
    return language == Language::english ? PromptVariant::english : PromptVariant::persian;
}

/// Rendered chat prompt. Constructed only through `make`, so the
/// fingerprint always matches the content.
class PromptBundle {
public:
    static PromptBundle make(PromptVariant variant, std::string system, std::string user);

    PromptVariant variant() const { return variant_; }
    const std::string& system() const { return system_; }
    const std::string& user() const { return user_; }
    /// SHA-256 hex over variant, system and user, NUL-separated.
    const std::string& fingerprint() const { return fingerprint_; }

    bool operator==(const PromptBundle&) const = default;

private:
    PromptVariant variant_ = PromptVariant::english;
    std::string system_;
    std::string user_;
    std::string fingerprint_;
};

inline constexpr std::string_view kTranslationInstruction =
    "Translate the following text from Persian to English:";

struct Exemplar {
    std::string text;
    LabelVector labels{};
};

/// Few-shot input/output pairs per language variant.
class ExemplarSet {
public:
    static constexpr std::size_t kDefaultCount = 3;

    /// JSON: {"english": [{text, labels:{feature_id: bool}}], "persian": [...]}.
    /// Every listed variant must hold exactly `expected_count` examples, each
    /// labelling all schema features. Throws Error(InvalidExemplars).
    static ExemplarSet from_json(const nlohmann::json& doc, const FeatureSchema& schema,
                                 std::size_t expected_count = kDefaultCount);
    static ExemplarSet load(const std::filesystem::path& path, const FeatureSchema& schema,
                            std::size_t expected_count = kDefaultCount);
    static const ExemplarSet& builtin();

    /// Empty when the variant has no examples.
    const std::vector<Exemplar>& for_language(Language language) const;
    const std::string& digest() const { return digest_; }

private:
    std::vector<Exemplar> english_;
    std::vector<Exemplar> persian_;
    std::string digest_;
};

/// Throws Error(WrongLanguage) unless the transcript is persian.
PromptBundle render_translation_prompt(const Transcript& transcript);

/// Throws Error(MissingExemplars) if the variant has no examples.
PromptBundle render_extraction_prompt(std::string_view text, Language variant,
                                      const ExemplarSet& exemplars, const FeatureSchema& schema);

/// One "<label>: True|False" line per feature, schema order, '\n'-separated,
/// no trailing newline.
std::string render_output_template(const LabelVector& labels, Language variant,
                                   const FeatureSchema& schema);

std::string system_prompt(Language variant, const FeatureSchema& schema);

/// Recovers the transcript text a bundle was rendered for: the text after the
/// instruction line for translation prompts, the final input block for
/// extraction prompts. nullopt if the layout is not recognised.
std::optional<std::string> target_text(const PromptBundle& bundle);

}  // namespace clinex

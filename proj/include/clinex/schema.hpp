#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace clinex {

inline constexpr std::size_t kFeatureCount = 13;

/// Ground-truth or resolved prediction labels, in schema order.
using LabelVector = std::array<bool, kFeatureCount>;

enum class Language { persian, english };

std::string_view to_string(Language language);
std::optional<Language> parse_language(std::string_view name);

struct FeatureDef {
    std::string id;            // canonical snake_case id
    std::string display_name;
    std::map<Language, std::string> template_labels;  // english always present
    std::vector<std::string> aliases;

    /// Label expected in model output for this language; falls back to english.
    const std::string& label(Language language) const;
};

/// Ordered registry of the 13 clinical features.
class FeatureSchema {
public:
    /// Validates count, unique ids, english labels, and that no two features
    /// share a normalized label or alias. Throws Error(InvalidSchema).
    static FeatureSchema from_json(const nlohmann::json& doc);
    static FeatureSchema load(const std::string& path);

    /// The versioned schema compiled into the binary.
    static const FeatureSchema& builtin();

    const std::array<FeatureDef, kFeatureCount>& features() const { return features_; }
    const FeatureDef& operator[](std::size_t i) const { return features_[i]; }
    std::optional<std::size_t> index_of(std::string_view id) const;

    const std::string& version() const { return version_; }
    /// SHA-256 of the canonical JSON form.
    const std::string& digest() const { return digest_; }
    nlohmann::json to_json() const;

private:
    std::string version_;
    std::array<FeatureDef, kFeatureCount> features_;
    std::string digest_;
};

}  // namespace clinex

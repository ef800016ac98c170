#include "clinex/schema.hpp"

#include <set>

#include "clinex/digest.hpp"
#include "clinex/error.hpp"
#include "clinex/fixtures.hpp"
#include "clinex/io.hpp"
#include "clinex/text.hpp"

namespace clinex {

using nlohmann::json;

std::string_view to_string(Language language) {
    return language == Language::english ? "english" : "persian";
}

std::optional<Language> parse_language(std::string_view name) {
    if (name == "english") return Language::english;
    if (name == "persian") return Language::persian;
    return std::nullopt;
}

const std::string& FeatureDef::label(Language language) const {
    if (auto it = template_labels.find(language); it != template_labels.end()) return it->second;
    return template_labels.at(Language::english);
}

FeatureSchema FeatureSchema::from_json(const json& doc) {
    auto fail = [](const std::string& why) { throw Error(ErrorKind::InvalidSchema, why); };
    if (!doc.is_object() || !doc.contains("features") || !doc["features"].is_array()) {
        fail("expected an object with a \"features\" array");
    }
    const auto& list = doc["features"];
    if (list.size() != kFeatureCount) {
        fail("expected " + std::to_string(kFeatureCount) + " features, found " + std::to_string(list.size()));
    }

    FeatureSchema schema;
    schema.version_ = doc.value("version", std::string("unversioned"));
    std::set<std::string> ids;
    std::map<std::string, std::string> label_owner;  // match key -> feature id
    try {
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            const auto& f = list[i];
            FeatureDef def;
            def.id = f.at("id").get<std::string>();
            def.display_name = f.value("display_name", def.id);
            if (def.id.empty()) fail("feature " + std::to_string(i) + " has an empty id");
            if (!ids.insert(def.id).second) fail("duplicate feature id \"" + def.id + "\"");
            for (const auto& [lang, label] : f.at("labels").items()) {
                const auto language = parse_language(lang);
                if (!language) fail("feature \"" + def.id + "\": unknown label language \"" + lang + "\"");
                def.template_labels[*language] = text::nfc(label.get<std::string>());
            }
            if (!def.template_labels.contains(Language::english)) {
                fail("feature \"" + def.id + "\" has no english template label");
            }
            if (f.contains("aliases")) {
                for (const auto& a : f["aliases"]) def.aliases.push_back(text::nfc(a.get<std::string>()));
            }

            std::vector<std::string> names;
            for (const auto& [_, label] : def.template_labels) names.push_back(label);
            names.insert(names.end(), def.aliases.begin(), def.aliases.end());
            names.push_back(def.display_name);
            for (const auto& name : names) {
                const auto key = text::match_key(name);
                if (key.empty()) fail("feature \"" + def.id + "\" has an empty label");
                auto [it, inserted] = label_owner.emplace(key, def.id);
                if (!inserted && it->second != def.id) {
                    fail("label \"" + name + "\" is shared by \"" + it->second + "\" and \"" + def.id + "\"");
                }
            }
            schema.features_[i] = std::move(def);
        }
    } catch (const json::exception& e) {
        fail(e.what());
    }
    schema.digest_ = sha256_hex(schema.to_json().dump());
    return schema;
}

FeatureSchema FeatureSchema::load(const std::string& path) {
    const auto data = io::read_file(path);
    json doc;
    try {
        doc = json::parse(data);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidSchema, path + ": " + e.what());
    }
    return from_json(doc);
}

const FeatureSchema& FeatureSchema::builtin() {
    static const FeatureSchema schema = from_json(json::parse(fixtures::embedded("schema")));
    return schema;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (features_[i].id == id) return i;
    }
    return std::nullopt;
}

json FeatureSchema::to_json() const {
    json features = json::array();
    for (const auto& f : features_) {
        json labels = json::object();
        for (const auto& [lang, label] : f.template_labels) labels[std::string(clinex::to_string(lang))] = label;
        features.push_back({{"id", f.id}, {"display_name", f.display_name}, {"labels", labels}, {"aliases", f.aliases}});
    }
    return {{"version", version_}, {"features", features}};
}

}  // namespace clinex

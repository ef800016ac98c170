#include "clinex/fixtures.hpp"

#include <optional>
#include <string_view>

#include <json.hpp>

#include "clinex/error.hpp"
#include "clinex/io.hpp"
#include "clinex/promptkit.hpp"

namespace clinex::embedded {
std::optional<std::string_view> lookup(std::string_view name);
}

namespace clinex::fixtures {

using nlohmann::json;

std::string_view embedded(std::string_view name) {
    const auto data = clinex::embedded::lookup(name);
    if (!data) throw Error(ErrorKind::MissingInput, "no embedded resource \"" + std::string(name) + "\"");
    return *data;
}

Corpus corpus() { return parse_corpus_jsonl(embedded("corpus")); }

AnnotationTable truth(const FeatureSchema& schema) { return parse_ground_truth(embedded("truth"), schema); }

MockScript mock_script(const FeatureSchema& schema) {
    const auto translations = json::parse(embedded("translations"));
    json scripted = json::object();
    for (const auto& t : corpus()) {
        scripted[render_translation_prompt(t).fingerprint()] = translations.at(t.id);
    }
    return MockScript::from_json({{"scripted", scripted}, {"keywords", json::parse(embedded("keywords"))}}, schema);
}

void seed(const std::filesystem::path& dir) {
    const auto root = std::filesystem::absolute(dir);
    io::write_file(root / "corpus.jsonl", embedded("corpus"));
    io::write_file(root / "truth.csv", embedded("truth"));
    io::write_file(root / "schema.json", embedded("schema"));
    io::write_file(root / "exemplars.json", embedded("exemplars"));
    io::write_file(root / "mock.json", mock_script(FeatureSchema::builtin()).to_json().dump(2) + "\n");

    auto quoted = [&](std::string_view file) { return json((root / file).string()).dump(); };
    std::string toml = "# Demo run over the bundled synthetic corpus with the mock backend.\n";
    toml += "corpus = " + quoted("corpus.jsonl") + "\n";
    toml += "truth = " + quoted("truth.csv") + "\n";
    toml += "schema = " + quoted("schema.json") + "\n";
    toml += "exemplars = " + quoted("exemplars.json") + "\n";
    toml += "mock-script = " + quoted("mock.json") + "\n";
    toml += "out-dir = " + quoted("out") + "\n";
    toml += "model-id = \"mock\"\n";
    toml += "parallelism = 4\n";
    io::write_file(root / "clinex.toml", toml);
}

}  // namespace clinex::fixtures

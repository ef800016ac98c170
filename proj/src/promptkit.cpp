#include "clinex/promptkit.hpp"

#include <json.hpp>

#include "clinex/digest.hpp"
#include "clinex/error.hpp"
#include "clinex/fixtures.hpp"
#include "clinex/io.hpp"
#include "clinex/text.hpp"

namespace clinex {

using nlohmann::json;

namespace {

struct PromptText {
    std::string_view preamble;
    std::string_view instructions_header;
    std::array<std::string_view, 4> instructions;
    std::string_view format_header;
    std::string_view example_header;  // followed by " <n>:"
    std::string_view input_marker;
    std::string_view output_marker;
    std::string_view task_line;
};

// The English text is the canonical prompt. The Persian rendering is ours;
// the original Persian prompt was never published.
constexpr PromptText kEnglish{
    "You are an expert in data extraction specializing in medical information. You are provided "
    "with clinical data about patients with cancer who require palliative care. Your task is to "
    "read the patient's condition and extract ONLY complications strictly into the predefined "
    "format below.",
    "Instructions:",
    {"Output exactly the same structure and order of fields.",
     "Fill each field with True or False only.",
     "Do not infer or assume any information that is not explicitly stated.",
     "Do not output any text outside the provided template."},
    "Format:",
    "Example",
    "Input:",
    "Output:",
    "Now extract the features from the following input.",
};

constexpr PromptText kPersian{
    "شما متخصص استخراج داده با تخصص در اطلاعات پزشکی هستید. داده‌های بالینی بیماران مبتلا به "
    "سرطان که به مراقبت تسکینی نیاز دارند در اختیار شما قرار می‌گیرد. وظیفه شما خواندن وضعیت "
    "بیمار و استخراج «فقط» عوارض، دقیقاً در قالب از پیش تعیین‌شده زیر است.",
    "دستورالعمل‌ها:",
    {"دقیقاً همان ساختار و ترتیب فیلدها را در خروجی بیاورید.",
     "هر فیلد را فقط با True یا False پر کنید.",
     "هیچ اطلاعاتی را که صریحاً ذکر نشده است استنباط یا فرض نکنید.",
     "هیچ متنی خارج از قالب ارائه‌شده ننویسید."},
    "قالب:",
    "نمونه",
    "ورودی:",
    "خروجی:",
    "اکنون ویژگی‌ها را از ورودی زیر استخراج کنید.",
};

const PromptText& prompt_text(Language variant) {
    return variant == Language::english ? kEnglish : kPersian;
}

std::string task_block_prefix(const PromptText& p) {
    std::string s(p.task_line);
    s += '\n';
    s += p.input_marker;
    s += '\n';
    return s;
}

std::vector<Exemplar> parse_examples(const json& list, Language variant, const FeatureSchema& schema,
                                     std::size_t expected_count) {
    auto fail = [&](const std::string& why) {
        throw Error(ErrorKind::InvalidExemplars, std::string(to_string(variant)) + ": " + why);
    };
    if (!list.is_array()) fail("expected an array");
    if (list.size() != expected_count) {
        fail("expected " + std::to_string(expected_count) + " examples, found " + std::to_string(list.size()));
    }
    std::vector<Exemplar> out;
    for (std::size_t n = 0; n < list.size(); ++n) {
        const auto& item = list[n];
        if (!item.is_object() || !item.contains("text") || !item["text"].is_string() || !item.contains("labels") ||
            !item["labels"].is_object()) {
            fail("example " + std::to_string(n + 1) + " needs \"text\" and \"labels\"");
        }
        Exemplar ex;
        ex.text = text::nfc(item["text"].get<std::string>());
        if (text::collapse_whitespace(ex.text).empty()) fail("example " + std::to_string(n + 1) + " has empty text");
        std::array<bool, kFeatureCount> seen{};
        for (const auto& [id, value] : item["labels"].items()) {
            const auto idx = schema.index_of(id);
            if (!idx) fail("example " + std::to_string(n + 1) + ": unknown feature \"" + id + "\"");
            if (!value.is_boolean()) fail("example " + std::to_string(n + 1) + ": \"" + id + "\" must be boolean");
            ex.labels[*idx] = value.get<bool>();
            seen[*idx] = true;
        }
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            if (!seen[i]) fail("example " + std::to_string(n + 1) + " lacks \"" + schema[i].id + "\"");
        }
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace

std::string_view to_string(PromptVariant variant) {
    switch (variant) {
        case PromptVariant::english: return "english";
        case PromptVariant::persian: return "persian";
        case PromptVariant::translation: return "translation";
    }
    return "english";
}

PromptBundle PromptBundle::make(PromptVariant variant, std::string system, std::string user) {
    PromptBundle b;
    b.variant_ = variant;
    b.system_ = std::move(system);
    b.user_ = std::move(user);
    std::string material(to_string(variant));
    material += '\0';
    material += b.system_;
    material += '\0';
    material += b.user_;
    b.fingerprint_ = sha256_hex(material);
    return b;
}

ExemplarSet ExemplarSet::from_json(const json& doc, const FeatureSchema& schema, std::size_t expected_count) {
    if (!doc.is_object()) throw Error(ErrorKind::InvalidExemplars, "expected a JSON object");
    if (expected_count == 0) throw Error(ErrorKind::InvalidExemplars, "example count must be positive");
    ExemplarSet set;
    if (doc.contains("english")) set.english_ = parse_examples(doc["english"], Language::english, schema, expected_count);
    if (doc.contains("persian")) set.persian_ = parse_examples(doc["persian"], Language::persian, schema, expected_count);
    if (set.english_.empty() && set.persian_.empty()) {
        throw Error(ErrorKind::InvalidExemplars, "no \"english\" or \"persian\" examples");
    }
    json canonical = json::object();
    for (const auto language : {Language::english, Language::persian}) {
        json arr = json::array();
        for (const auto& ex : set.for_language(language)) {
            arr.push_back({{"text", ex.text}, {"labels", ex.labels}});
        }
        canonical[std::string(to_string(language))] = arr;
    }
    set.digest_ = sha256_hex(canonical.dump());
    return set;
}

ExemplarSet ExemplarSet::load(const std::filesystem::path& path, const FeatureSchema& schema,
                              std::size_t expected_count) {
    json doc;
    try {
        doc = json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidExemplars, path.string() + ": " + e.what());
    }
    return from_json(doc, schema, expected_count);
}

const ExemplarSet& ExemplarSet::builtin() {
    static const ExemplarSet set =
        from_json(json::parse(fixtures::embedded("exemplars")), FeatureSchema::builtin());
    return set;
}

const std::vector<Exemplar>& ExemplarSet::for_language(Language language) const {
    return language == Language::english ? english_ : persian_;
}

PromptBundle render_translation_prompt(const Transcript& transcript) {
    if (transcript.language != Language::persian) {
        throw Error(ErrorKind::WrongLanguage, "transcript \"" + transcript.id + "\" is already english");
    }
    std::string user(kTranslationInstruction);
    user += '\n';
    user += transcript.text;
    return PromptBundle::make(PromptVariant::translation, "", std::move(user));
}

std::string render_output_template(const LabelVector& labels, Language variant, const FeatureSchema& schema) {
    std::string out;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (i) out += '\n';
        out += schema[i].label(variant);
        out += labels[i] ? ": True" : ": False";
    }
    return out;
}

std::string system_prompt(Language variant, const FeatureSchema& schema) {
    const auto& p = prompt_text(variant);
    std::string out(p.preamble);
    out += "\n\n";
    out += p.instructions_header;
    for (std::size_t i = 0; i < p.instructions.size(); ++i) {
        out += '\n';
        out += std::to_string(i + 1);
        out += ". ";
        out += p.instructions[i];
    }
    out += "\n\n";
    out += p.format_header;
    for (const auto& f : schema.features()) {
        out += '\n';
        out += f.label(variant);
        out += ": True/False";
    }
    return out;
}

PromptBundle render_extraction_prompt(std::string_view text, Language variant, const ExemplarSet& exemplars,
                                      const FeatureSchema& schema) {
    const auto& examples = exemplars.for_language(variant);
    if (examples.empty()) {
        throw Error(ErrorKind::MissingExemplars, "no examples for the " + std::string(to_string(variant)) + " variant");
    }
    const auto& p = prompt_text(variant);
    std::string user;
    for (std::size_t n = 0; n < examples.size(); ++n) {
        user += p.example_header;
        user += ' ';
        user += std::to_string(n + 1);
        user += ":\n";
        user += p.input_marker;
        user += '\n';
        user += examples[n].text;
        user += '\n';
        user += p.output_marker;
        user += '\n';
        user += render_output_template(examples[n].labels, variant, schema);
        user += "\n\n";
    }
    user += task_block_prefix(p);
    user += text;
    user += '\n';
    user += p.output_marker;
    return PromptBundle::make(prompt_variant(variant), system_prompt(variant, schema), std::move(user));
}

std::optional<std::string> target_text(const PromptBundle& bundle) {
    const std::string_view user = bundle.user();
    if (bundle.variant() == PromptVariant::translation) {
        const std::string prefix = std::string(kTranslationInstruction) + "\n";
        if (!user.starts_with(prefix)) return std::nullopt;
        return std::string(user.substr(prefix.size()));
    }
    const auto& p = prompt_text(bundle.variant() == PromptVariant::english ? Language::english : Language::persian);
    const std::string prefix = "\n\n" + task_block_prefix(p);
    const std::string suffix = "\n" + std::string(p.output_marker);
    const auto start = user.find(prefix);
    if (start == std::string_view::npos || !user.ends_with(suffix)) return std::nullopt;
    const auto begin = start + prefix.size();
    const auto end = user.size() - suffix.size();
    if (end < begin) return std::nullopt;
    return std::string(user.substr(begin, end - begin));
}

}  // namespace clinex

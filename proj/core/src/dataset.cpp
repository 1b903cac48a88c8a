#include "manifold_gauge/dataset.hpp"

#include <array>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "manifold_gauge/error.hpp"

namespace mgauge {

namespace {

constexpr std::array<const char*, 20> kOnes = {
    "zero",    "one",     "two",       "three",    "four",     "five",    "six",
    "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen"};
constexpr std::array<const char*, 10> kTens = {"",      "",      "twenty",  "thirty", "forty",
                                               "fifty", "sixty", "seventy", "eighty", "ninety"};

std::string below_thousand(int n) {
    std::string out;
    if (n >= 100) {
        out = fmt::format("{} hundred", kOnes[n / 100]);
        n %= 100;
        if (n == 0) return out;
        out += ' ';
    }
    if (n < 20) return out + kOnes[n];
    out += kTens[n / 10];
    if (n % 10 != 0) {
        out += '-';
        out += kOnes[n % 10];
    }
    return out;
}

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
    std::size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        text.replace(pos, key.size(), value);
        pos += value.size();
    }
    return text;
}

}  // namespace

std::string to_string(Modality m) {
    return m == Modality::Arabic ? "arabic" : "english_word";
}

std::string to_string(Level l) { return fmt::format("L{}", static_cast<int>(l)); }

std::string to_string(Attribute a) {
    switch (a) {
        case Attribute::IsLarge: return "is_large";
        case Attribute::IsEven: return "is_even";
        case Attribute::IsPrime: return "is_prime";
    }
    return "?";
}

Modality parse_modality(std::string_view s) {
    if (s == "arabic") return Modality::Arabic;
    if (s == "english_word") return Modality::EnglishWord;
    throw Error(ErrorKind::InvalidArgument, fmt::format("unknown modality '{}'", s));
}

Level parse_level(std::string_view s) {
    if (s.size() == 2 && (s[0] == 'L' || s[0] == 'l') && s[1] >= '1' && s[1] <= '5') {
        return static_cast<Level>(s[1] - '0');
    }
    throw Error(ErrorKind::InvalidArgument, fmt::format("unknown task level '{}'", s));
}

Attribute parse_attribute(std::string_view s) {
    if (s == "is_large") return Attribute::IsLarge;
    if (s == "is_even") return Attribute::IsEven;
    if (s == "is_prime") return Attribute::IsPrime;
    throw Error(ErrorKind::InvalidArgument, fmt::format("unknown attribute '{}'", s));
}

std::optional<Attribute> natural_attribute(Level l) {
    switch (l) {
        case Level::L1: return std::nullopt;
        case Level::L2: return Attribute::IsLarge;
        case Level::L3: return Attribute::IsEven;
        case Level::L4: return Attribute::IsPrime;
        case Level::L5: return Attribute::IsEven;
    }
    return std::nullopt;
}

bool Labels::get(Attribute a) const {
    switch (a) {
        case Attribute::IsLarge: return is_large;
        case Attribute::IsEven: return is_even;
        case Attribute::IsPrime: return is_prime;
    }
    return false;
}

bool is_prime(int n) {
    if (n < 2) return false;
    for (int d = 2; d * d <= n; ++d) {
        if (n % d == 0) return false;
    }
    return true;
}

Labels labels_for(int value) {
    return Labels{.is_large = value > 100, .is_even = value % 2 == 0, .is_prime = is_prime(value)};
}

std::string english_words(int value) {
    if (value < 0 || value > 999'999) {
        throw Error(ErrorKind::InvalidArgument,
                    fmt::format("english rendering supports 0..999999, got {}", value));
    }
    if (value < 1000) return below_thousand(value);
    std::string out = below_thousand(value / 1000) + " thousand";
    if (value % 1000 != 0) out += ' ' + below_thousand(value % 1000);
    return out;
}

std::string render_surface(int value, Modality m) {
    return m == Modality::Arabic ? std::to_string(value) : english_words(value);
}

std::vector<ConceptRecord> generate_corpus(int range_lo, int range_hi,
                                           const std::set<Modality>& modalities) {
    if (modalities.empty()) {
        throw Error(ErrorKind::InvalidArgument, "generate_corpus: empty modality set");
    }
    if (range_lo < 1 || range_lo > range_hi) {
        throw Error(ErrorKind::InvalidArgument,
                    fmt::format("generate_corpus: invalid range [{}, {}]", range_lo, range_hi));
    }
    std::vector<ConceptRecord> out;
    out.reserve(static_cast<std::size_t>(range_hi - range_lo + 1) * modalities.size());
    for (Modality m : modalities) {
        for (int v = range_lo; v <= range_hi; ++v) {
            out.push_back({v, m, render_surface(v, m), labels_for(v)});
        }
    }
    return out;
}

TemplateCatalog TemplateCatalog::bundled() {
    return from_json(nlohmann::json::parse(bundled_templates_json()));
}

TemplateCatalog TemplateCatalog::from_json(const nlohmann::json& doc) {
    TemplateCatalog cat;
    try {
        if (doc.at("format_version").get<int>() != 1) {
            throw Error(ErrorKind::Config, "template file: unsupported format_version");
        }
        for (const auto& [id, levels] : doc.at("sets").items()) {
            TemplateSet set{id, {}};
            for (const auto& [lvl, body] : levels.items()) {
                LevelTemplate t;
                t.prompt = body.at("prompt").get<std::string>();
                if (body.contains("attribute")) {
                    t.attribute = parse_attribute(body.at("attribute").get<std::string>());
                    t.true_answer = body.at("true_answer").get<std::string>();
                    t.false_answer = body.at("false_answer").get<std::string>();
                } else if (body.value("answers", "") != "identity") {
                    throw Error(ErrorKind::Config,
                                fmt::format("template {}/{}: needs attribute or identity", id, lvl));
                }
                set.levels.emplace_back(parse_level(lvl), std::move(t));
            }
            cat.sets_.push_back(std::move(set));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, fmt::format("template file: {}", e.what()));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw;
        throw Error(ErrorKind::Config, fmt::format("template file: {}", e.what()));
    }
    return cat;
}

bool TemplateCatalog::contains(std::string_view set_id) const {
    for (const auto& s : sets_) {
        if (s.id == set_id) return true;
    }
    return false;
}

std::vector<std::string> TemplateCatalog::set_ids() const {
    std::vector<std::string> ids;
    for (const auto& s : sets_) ids.push_back(s.id);
    return ids;
}

std::vector<PromptRecord> TemplateCatalog::render(const std::vector<ConceptRecord>& corpus,
                                                  Level level, std::string_view set_id) const {
    const TemplateSet* set = nullptr;
    for (const auto& s : sets_) {
        if (s.id == set_id) set = &s;
    }
    if (set == nullptr) {
        throw Error(ErrorKind::Config, fmt::format("unknown template set '{}'", set_id));
    }
    const LevelTemplate* tpl = nullptr;
    for (const auto& [lvl, t] : set->levels) {
        if (lvl == level) tpl = &t;
    }
    if (tpl == nullptr) {
        throw Error(ErrorKind::Config, fmt::format("template set '{}' has no level {}", set_id,
                                                   to_string(level)));
    }

    std::vector<PromptRecord> out;
    out.reserve(corpus.size());
    for (const auto& c : corpus) {
        PromptRecord p;
        p.concept_record = c;
        p.level = level;
        p.template_set = std::string(set_id);
        std::string text = replace_all(tpl->prompt, "{surface}", c.surface);
        if (!tpl->attribute) {
            p.expected_answer = c.surface;
            p.distractor_answer = render_surface(c.value + 1, c.modality);
        } else {
            const bool truth = c.labels.get(*tpl->attribute);
            p.expected_answer = truth ? tpl->true_answer : tpl->false_answer;
            p.distractor_answer = truth ? tpl->false_answer : tpl->true_answer;
        }
        if (level == Level::L5) {
            // value mod 4 in {0, 1}: the authority contradicts the truth; {2, 3}: agrees.
            const bool contradict = (c.value % 4) < 2;
            p.authority_claim = contradict ? p.distractor_answer : p.expected_answer;
            text = replace_all(text, "{claim}", *p.authority_claim);
        }
        p.prompt_text = std::move(text);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<PromptRecord> render_prompts(const std::vector<ConceptRecord>& corpus, Level level,
                                         std::string_view template_set) {
    static const TemplateCatalog catalog = TemplateCatalog::bundled();
    return catalog.render(corpus, level, template_set);
}

nlohmann::json to_json(const PromptRecord& p) {
    nlohmann::json labels = {{"is_large", p.concept_record.labels.is_large},
                             {"is_even", p.concept_record.labels.is_even},
                             {"is_prime", p.concept_record.labels.is_prime}};
    nlohmann::json j = {
        {"concept",
         {{"value", p.concept_record.value},
          {"modality", to_string(p.concept_record.modality)},
          {"surface", p.concept_record.surface},
          {"labels", labels}}},
        {"level", to_string(p.level)},
        {"template_set", p.template_set},
        {"prompt_text", p.prompt_text},
        {"expected_answer", p.expected_answer},
        {"distractor_answer", p.distractor_answer},
    };
    if (p.authority_claim) j["authority_claim"] = *p.authority_claim;
    return j;
}

std::string to_jsonl(const std::vector<PromptRecord>& prompts) {
    std::ostringstream os;
    for (const auto& p : prompts) os << to_json(p).dump() << '\n';
    return os.str();
}

}  // namespace mgauge

#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mgauge {

enum class Modality { Arabic, EnglishWord };
enum class Level { L1 = 1, L2, L3, L4, L5 };
enum class Attribute { IsLarge, IsEven, IsPrime };

std::string to_string(Modality m);
std::string to_string(Level l);
std::string to_string(Attribute a);
Modality parse_modality(std::string_view s);
Level parse_level(std::string_view s);
Attribute parse_attribute(std::string_view s);

// Label a level is built around: L2 magnitude, L3/L5 parity, L4 primality.
std::optional<Attribute> natural_attribute(Level l);

struct Labels {
    bool is_large = false;  // strictly greater than 100
    bool is_even = false;
    bool is_prime = false;

    bool get(Attribute a) const;
    bool operator==(const Labels&) const = default;
};

bool is_prime(int n);
Labels labels_for(int value);

// Lowercase US-style words: "one hundred forty-two", no "and".
std::string english_words(int value);
std::string render_surface(int value, Modality m);

struct ConceptRecord {
    int value = 0;
    Modality modality = Modality::Arabic;
    std::string surface;
    Labels labels;
};

struct PromptRecord {
    ConceptRecord concept_record;
    Level level = Level::L1;
    std::string template_set;
    std::string prompt_text;
    std::string expected_answer;
    std::string distractor_answer;
    std::optional<std::string> authority_claim;  // L5 only
};

std::vector<ConceptRecord> generate_corpus(int range_lo, int range_hi,
                                           const std::set<Modality>& modalities);

// Versioned prompt templates; the bundled set is compiled into the library.
class TemplateCatalog {
public:
    static TemplateCatalog bundled();
    static TemplateCatalog from_json(const nlohmann::json& doc);

    bool contains(std::string_view set_id) const;
    std::vector<std::string> set_ids() const;

    std::vector<PromptRecord> render(const std::vector<ConceptRecord>& corpus, Level level,
                                     std::string_view set_id) const;

private:
    struct LevelTemplate {
        std::string prompt;
        std::optional<Attribute> attribute;
        std::string true_answer;
        std::string false_answer;
    };
    struct TemplateSet {
        std::string id;
        std::vector<std::pair<Level, LevelTemplate>> levels;
    };
    std::vector<TemplateSet> sets_;
};

std::string_view bundled_templates_json();

std::vector<PromptRecord> render_prompts(const std::vector<ConceptRecord>& corpus, Level level,
                                         std::string_view template_set);

nlohmann::json to_json(const PromptRecord& p);
std::string to_jsonl(const std::vector<PromptRecord>& prompts);

}  // namespace mgauge

#include "support.hpp"

#include "psyeval/error.hpp"
#include "psyeval/util.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <unistd.h>

namespace psyeval::testing {

namespace {

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("psyeval-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::filesystem::path data_dir() {
    return PSYEVAL_TEST_DATA_ROOT;
}

std::filesystem::path test_data_dir() {
    return PSYEVAL_TEST_FIXTURES;
}

Scale bundled_scale(std::string_view file_stem) {
    return load_scale(data_dir() / "scales" / (std::string(file_stem) + ".json"));
}

PromptTemplate item_template() {
    return load_template(data_dir() / "prompts" / "item_assessment.txt", "item_assessment", {"ITEM"});
}

BehaviorTemplates behavior_templates() {
    const auto dir = data_dir() / "prompts";
    return {load_template(dir / "occasion_generation.txt", "occasion_generation", {"FACTOR"}),
            load_template(dir / "pseudo_description.txt", "pseudo_description", {"POLARITY", "FACTOR", "OCCASION"}),
            load_template(dir / "behavior_elicitation.txt", "behavior_elicitation", {"OCCASION"})};
}

std::string letter_for(const ScaleItem& item, int keyed_score, const LikertMapping& mapping) {
    const auto& scores = item.keying == Keying::Positive ? mapping.positive_scores() : mapping.negative_scores();
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] == keyed_score) {
            return mapping.letter(i);
        }
    }
    throw ContractViolation("letter_for: score " + std::to_string(keyed_score) + " not in mapping");
}

std::shared_ptr<ScriptedFixture> administration_fixture(const Scale& scale, const PromptTemplate& tmpl,
                                                        const RunPlan& plan, const std::string& endpoint,
                                                        const Persona& persona) {
    auto fixture = std::make_shared<ScriptedFixture>();
    for (const auto& [dim, item] : scale.questionnaire()) {
        const auto prompt = render_prompt(tmpl, {{"ITEM", item->text}});
        for (double t : plan.temperatures) {
            const Subject subject{endpoint, t};
            const int reps = plan.repetitions_for(t);
            if (t == 0.0) {
                fixture->add_for_prompt(prompt, t, 0, persona(subject, 0, *item, *dim));
                continue;
            }
            for (int call = 0; call < 2 * reps; ++call) {
                fixture->add_for_prompt(prompt, t, static_cast<std::uint64_t>(call),
                                        persona(subject, static_cast<std::uint64_t>(call), *item, *dim));
            }
        }
    }
    return fixture;
}

namespace {

std::string answer_text(const std::string& letter, const LikertMapping& mapping, int style) {
    const auto& description = mapping.options()[*mapping.index_of(letter)].description;
    switch (style % 4) {
        case 0:
            return " (" + letter + "). " + description;
        case 1:
            return " " + letter;
        case 2:
            return " I would choose option (" + letter + ").";
        default:
            return " " + letter + ") " + description;
    }
}

}  // namespace

Persona stable_persona() {
    return [](const Subject& subject, std::uint64_t, const ScaleItem& item, const DimensionSpec& dim) {
        const auto key = subject.endpoint_id + "|" + dim.code + "|" + format_temperature(subject.temperature) + "|" +
                         std::to_string(item.ordinal);
        const int score = 1 + static_cast<int>(fnv1a(key) % 5);
        const auto mapping = LikertMapping::five_point();
        return answer_text(letter_for(item, score, mapping), mapping, item.ordinal);
    };
}

const std::vector<PublishedMean>& published_means() {
    static const std::vector<PublishedMean> table{
        {"text-davinci-001", "EXT", 3.49, 3.01},  {"text-davinci-001", "AGR", 2.66, 3.42},
        {"text-davinci-001", "CONS", 2.95, 3.21}, {"text-davinci-001", "EMO", 2.12, 2.48},
        {"text-davinci-001", "OPEN", 3.23, 3.45}, {"text-davinci-002", "EXT", 3.55, 3.22},
        {"text-davinci-002", "AGR", 2.89, 3.51},  {"text-davinci-002", "CONS", 3.25, 3.42},
        {"text-davinci-002", "EMO", 2.11, 2.55},  {"text-davinci-002", "OPEN", 3.37, 3.62},
        {"text-davinci-003", "EXT", 3.57, 3.42},  {"text-davinci-003", "AGR", 4.20, 4.39},
        {"text-davinci-003", "CONS", 4.67, 4.73}, {"text-davinci-003", "EMO", 2.61, 3.77},
        {"text-davinci-003", "OPEN", 3.89, 4.49},
    };
    return table;
}

Persona target_mean_persona(const Scale& scale, const RunPlan& plan,
                            std::function<double(const std::string&, const std::string&)> target) {
    const auto temperatures = plan.temperatures;
    return [=](const Subject& subject, std::uint64_t call, const ScaleItem& item, const DimensionSpec& dim) {
        const auto ti = static_cast<std::size_t>(
            std::find(temperatures.begin(), temperatures.end(), subject.temperature) - temperatures.begin());
        const auto k = static_cast<long>(dim.items.size());
        const auto s = static_cast<long>(temperatures.size());
        const long grand = std::lround(target(subject.endpoint_id, dim.code) * static_cast<double>(k * s));
        const long subject_total = grand / s + (static_cast<long>(ti) < grand % s ? 1 : 0);
        const auto j = static_cast<long>(
            std::find_if(dim.items.begin(), dim.items.end(),
                         [&](const ScaleItem& x) { return x.ordinal == item.ordinal; }) -
            dim.items.begin());
        const int score = static_cast<int>(subject_total / k + (j < subject_total % k ? 1 : 0));
        const auto mapping = scale.options;
        return answer_text(letter_for(item, score, mapping), mapping, static_cast<int>(call) + item.ordinal);
    };
}

Scale synthetic_scale(std::mt19937_64& rng, int dims, int items) {
    Scale scale;
    scale.id = "SYN";
    scale.name = "synthetic";
    int ordinal = 1;
    std::bernoulli_distribution coin(0.5);
    for (int d = 0; d < dims; ++d) {
        DimensionSpec spec{"D" + std::to_string(d), "dimension " + std::to_string(d), {}};
        for (int i = 0; i < items; ++i) {
            spec.items.push_back({ordinal++, "item " + std::to_string(ordinal),
                                  coin(rng) ? Keying::Positive : Keying::Negative});
        }
        scale.dimensions.push_back(std::move(spec));
    }
    return scale;
}

std::unique_ptr<Gateway> scripted_gateway(
    const std::vector<std::pair<std::string, std::shared_ptr<ScriptedFixture>>>& endpoints, int in_flight) {
    auto gateway = std::make_unique<Gateway>(in_flight);
    for (const auto& [id, fixture] : endpoints) {
        ModelEndpoint ep;
        ep.id = id;
        ep.base_url = std::string(kScriptedBaseUrl);
        gateway->add_scripted_endpoint(ep, fixture);
    }
    return gateway;
}

BehaviorWorld behavior_world(const std::vector<std::string>& subjects, const std::vector<std::string>& dimensions) {
    BehaviorWorld world;
    auto& spec = world.spec;
    spec.dimensions = dimensions;
    spec.factors = default_factors();
    spec.generator_endpoint = "generator";
    spec.subject_endpoints = subjects;
    const auto templates = behavior_templates();

    auto generator = std::make_shared<ScriptedFixture>();
    std::map<std::string, std::shared_ptr<ScriptedFixture>> subject_fixtures;
    for (const auto& s : subjects) {
        subject_fixtures[s] = std::make_shared<ScriptedFixture>();
    }
    world.classifier = std::make_shared<ScriptedClassifier>();

    for (std::size_t di = 0; di < dimensions.size(); ++di) {
        const auto& dim = dimensions[di];
        const auto& factor = spec.factors.at(dim);
        const auto occasion_prompt = render_prompt(templates.occasion, {{"FACTOR", factor}});
        std::vector<std::string> accepted;
        for (int i = 0; i < 40; ++i) {
            std::string text;
            if (i < 35) {
                text = "in situation " + to_lower_ascii(dim) + " " + std::to_string(i);
                accepted.push_back(text);
            } else {
                text = "\"In Situation " + dim + " " + std::to_string(i - 35) + ".\"";
            }
            generator->add_for_prompt(occasion_prompt, 1.0, static_cast<std::uint64_t>(i), text);
        }
        for (std::size_t oi = 0; oi < accepted.size(); ++oi) {
            const auto& occasion = accepted[oi];
            for (auto polarity : {Polarity::Positive, Polarity::Negative}) {
                const auto prompt = render_prompt(
                    templates.pseudo, {{"POLARITY", polarity == Polarity::Positive ? "is" : "is not"},
                                       {"FACTOR", factor},
                                       {"OCCASION", occasion}});
                for (int slot = 0; slot < 10; ++slot) {
                    generator->add_for_prompt(prompt, 1.0, static_cast<std::uint64_t>(slot),
                                              "Someone who " + std::string(polarity == Polarity::Positive ? "is" : "is not") + " " + factor +
                                                  " acts " + occasion + " way " + std::to_string(slot));
                }
            }
            const auto prompt = render_prompt(templates.elicitation, {{"OCCASION", occasion}});
            for (std::size_t si = 0; si < subjects.size(); ++si) {
                const auto& ep = subjects[si];
                for (std::size_t ti = 0; ti < spec.elicitation.temperatures.size(); ++ti) {
                    const double t = spec.elicitation.temperatures[ti];
                    const int gens = spec.elicitation.generations_for(t);
                    for (int g = 0; g < gens; ++g) {
                        const auto text = "As " + ep + " at " + format_temperature(t) + ", " + occasion +
                                          ", I would act in manner " + std::to_string(g);
                        subject_fixtures[ep]->add_for_prompt(prompt, t, static_cast<std::uint64_t>(g), text);
                        const bool positive = (oi + static_cast<std::size_t>(g) + si + ti + di) % 3 != 0;
                        const double step = 0.05 * static_cast<double>(oi % 9 + 1);
                        const double p = positive ? 0.5 + step : 0.5 - step;
                        world.classifier->add(dim, text, positive ? Polarity::Positive : Polarity::Negative, p);
                        auto& counts = world.expected_counts[{ep, t, dim}];
                        counts.first += positive ? 1 : 0;
                        counts.second += 1;
                        world.expected_p_sum[{ep, t, dim}] += p;
                    }
                }
            }
        }
    }

    std::vector<std::pair<std::string, std::shared_ptr<ScriptedFixture>>> endpoints{{"generator", generator}};
    for (const auto& s : subjects) {
        endpoints.emplace_back(s, subject_fixtures[s]);
    }
    world.gateway = scripted_gateway(endpoints);
    return world;
}

}  // namespace psyeval::testing

#include "rrk/taxonomy.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <utility>

#include "rrk/error.hpp"
#include "rrk/rng.hpp"

namespace rrk {

namespace {

constexpr std::array<std::pair<std::string_view, std::string_view>, 9> kAliases{{
    {"anger", "angry"},
    {"happiness", "happy"},
    {"sadness", "sad"},
    {"surprised", "surprise"},
    {"fearful", "fear"},
    {"afraid", "fear"},
    {"anxious", "anxiety"},
    {"disappointed", "disappointment"},
    {"contemptuous", "contempt"},
}};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_strippable(char c) {
    return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':' || c == '"' ||
           c == '\'' || c == '`' || c == ')' || c == '(' || c == '*' || is_space(c);
}

std::vector<EmotionLabel> make_labels(std::initializer_list<std::string_view> names) {
    std::vector<EmotionLabel> out;
    out.reserve(names.size());
    for (auto n : names) out.emplace_back(std::string(n));
    return out;
}

}  // namespace

std::string canonical_token(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && is_strippable(text[begin])) ++begin;
    while (end > begin && is_strippable(text[end - 1])) --end;

    std::string token;
    token.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
        token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
    }
    for (const auto& [alias, target] : kAliases) {
        if (token == alias) return std::string(target);
    }
    return token;
}

Taxonomy::Taxonomy(std::string name, std::vector<EmotionLabel> labels)
    : name_(std::move(name)), labels_(std::move(labels)) {
    if (labels_.empty()) throw Error(ErrorCode::InvalidTaxonomy, "taxonomy '" + name_ + "' has no labels");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const auto& v = labels_[i].value();
        if (v.empty() || canonical_token(v) != v) {
            throw Error(ErrorCode::InvalidTaxonomy, "label '" + v + "' is not in canonical form");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (labels_[j] == labels_[i]) throw Error(ErrorCode::InvalidTaxonomy, "duplicate label '" + v + "'");
        }
        if (labels_[i].is_neutral()) neutral_index_ = i;
    }
}

std::optional<std::size_t> Taxonomy::index_of(const EmotionLabel& label) const {
    return index_of(std::string_view(label.value()));
}

std::optional<std::size_t> Taxonomy::index_of(std::string_view token) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i].value() == token) return i;
    }
    return std::nullopt;
}

std::vector<EmotionLabel> Taxonomy::ordered_for_prompt(std::optional<std::uint64_t> shuffle_seed) const {
    std::vector<EmotionLabel> out = labels_;
    if (shuffle_seed) {
        SeededRng rng(*shuffle_seed);
        for (std::size_t i = out.size(); i > 1; --i) {
            std::swap(out[i - 1], out[rng.uniform_index(i)]);
        }
    }
    return out;
}

Taxonomy builtin_taxonomy(std::string_view name) {
    if (name == "EMER") return Taxonomy("EMER", make_labels({"angry", "sad", "surprise", "worried", "happy"}));
    if (name == "DFEW") {
        return Taxonomy("DFEW", make_labels({"angry", "disgust", "surprise", "happy", "sad", "neutral", "fear"}));
    }
    if (name == "MAFW") {
        return Taxonomy("MAFW", make_labels({"angry", "disgust", "surprise", "happy", "sad", "neutral", "fear",
                                             "contempt", "helplessness", "anxiety", "disappointment"}));
    }
    throw Error(ErrorCode::UnknownTaxonomy, "no built-in taxonomy named '" + std::string(name) + "'");
}

Taxonomy load_taxonomy_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open taxonomy file " + path.string());
    std::vector<EmotionLabel> labels;
    std::string line;
    while (std::getline(in, line)) {
        auto first = std::find_if_not(line.begin(), line.end(), is_space);
        if (first == line.end() || *first == '#') continue;
        std::string token = canonical_token(line);
        if (token.empty()) continue;
        labels.emplace_back(std::move(token));
    }
    return Taxonomy(path.stem().string(), std::move(labels));
}

Taxonomy resolve_taxonomy(const std::string& name_or_path) {
    if (name_or_path == "EMER" || name_or_path == "DFEW" || name_or_path == "MAFW") {
        return builtin_taxonomy(name_or_path);
    }
    if (std::filesystem::exists(name_or_path)) return load_taxonomy_file(name_or_path);
    throw Error(ErrorCode::UnknownTaxonomy,
                "'" + name_or_path + "' is neither a built-in taxonomy nor a label file");
}

std::optional<EmotionLabel> try_normalize_label(std::string_view text, const Taxonomy& taxonomy) {
    std::string token = canonical_token(text);
    if (token.empty() || !taxonomy.index_of(std::string_view(token))) return std::nullopt;
    return EmotionLabel(std::move(token));
}

EmotionLabel normalize_label(std::string_view text, const Taxonomy& taxonomy) {
    if (auto label = try_normalize_label(text, taxonomy)) return *label;
    throw Error(ErrorCode::UnknownLabel,
                "'" + std::string(text) + "' is not a label of taxonomy " + taxonomy.name());
}

}  // namespace rrk

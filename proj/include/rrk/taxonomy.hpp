#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace rrk {

// Canonical lowercase emotion token. Construct through Taxonomy or
// normalize_label so that the value is always a member of some label set.
class EmotionLabel {
public:
    EmotionLabel() = default;
    explicit EmotionLabel(std::string value) : value_(std::move(value)) {}

    const std::string& value() const noexcept { return value_; }
    bool is_neutral() const noexcept { return value_ == "neutral"; }

    friend auto operator<=>(const EmotionLabel&, const EmotionLabel&) = default;
    friend std::ostream& operator<<(std::ostream& os, const EmotionLabel& label) {
        return os << label.value_;
    }

private:
    std::string value_;
};

class Taxonomy {
public:
    // Validates uniqueness and canonical form; InvalidTaxonomy otherwise.
    Taxonomy(std::string name, std::vector<EmotionLabel> labels);

    const std::string& name() const noexcept { return name_; }
    const std::vector<EmotionLabel>& labels() const noexcept { return labels_; }
    std::size_t size() const noexcept { return labels_.size(); }
    const EmotionLabel& operator[](std::size_t i) const { return labels_.at(i); }

    std::optional<std::size_t> neutral_index() const noexcept { return neutral_index_; }
    bool has_neutral() const noexcept { return neutral_index_.has_value(); }

    std::optional<std::size_t> index_of(const EmotionLabel& label) const;
    std::optional<std::size_t> index_of(std::string_view token) const;
    bool contains(const EmotionLabel& label) const { return index_of(label).has_value(); }

    // Label list as shown to judges: taxonomy order, or a seeded permutation.
    std::vector<EmotionLabel> ordered_for_prompt(std::optional<std::uint64_t> shuffle_seed) const;

private:
    std::string name_;
    std::vector<EmotionLabel> labels_;
    std::optional<std::size_t> neutral_index_;
};

// EMER (5), DFEW (7) or MAFW (11); UnknownTaxonomy otherwise.
Taxonomy builtin_taxonomy(std::string_view name);

// Plain-text label file: one label per line, blank lines and '#' comments
// skipped. A line reading "neutral" marks the neutral class.
Taxonomy load_taxonomy_file(const std::filesystem::path& path);

// Built-in name if it is one, otherwise a path to a label file.
Taxonomy resolve_taxonomy(const std::string& name_or_path);

// Trim, lowercase, strip terminal punctuation and apply the alias table,
// without checking membership.
std::string canonical_token(std::string_view text);

// canonical_token plus membership; UnknownLabel when not in the taxonomy.
EmotionLabel normalize_label(std::string_view text, const Taxonomy& taxonomy);
std::optional<EmotionLabel> try_normalize_label(std::string_view text, const Taxonomy& taxonomy);

}  // namespace rrk

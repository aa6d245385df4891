#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rrk {

std::string_view trim(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
// Replaces every occurrence of `key` in `text`.
std::string replace_all(std::string text, std::string_view key, std::string_view value);

}  // namespace rrk

#pragma once

// Flat "key = value" configuration files; '#' starts a comment.

#include <istream>
#include <map>
#include <string>

#include "dendrevo/error.hpp"
#include "dendrevo/text.hpp"

namespace dendrevo {

using KeyValues = std::map<std::string, std::string, std::less<>>;

inline KeyValues read_key_values(std::istream& is)
{
    KeyValues kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string_view body = line;
        if (auto hash = body.find('#'); hash != std::string_view::npos)
            body = body.substr(0, hash);
        body = text::trim(body);
        if (body.empty())
            continue;
        auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw InvalidInput("config line " + std::to_string(line_no) + ": expected 'key = value'");
        auto key = text::trim(body.substr(0, eq));
        auto value = text::trim(body.substr(eq + 1));
        if (key.empty())
            throw InvalidInput("config line " + std::to_string(line_no) + ": empty key");
        kv[std::string(key)] = std::string(value);
    }
    return kv;
}

} // namespace dendrevo

#include "memaudit/html_refs.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace memaudit {

namespace {

char lower_char(char c)
{
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

bool iequals_at(std::string_view s, std::size_t pos, std::string_view word)
{
    if (pos + word.size() > s.size())
        return false;
    for (std::size_t i = 0; i < word.size(); ++i)
        if (lower_char(s[pos + i]) != word[i])
            return false;
    return true;
}

std::size_t ifind(std::string_view s, std::string_view word, std::size_t from)
{
    for (std::size_t i = from; i + word.size() <= s.size(); ++i)
        if (iequals_at(s, i, word))
            return i;
    return std::string_view::npos;
}

bool is_space(char c)
{
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

std::string decode_entities(std::string_view s)
{
    static const std::map<std::string_view, std::string_view> named = {
        {"amp", "&"}, {"quot", "\""}, {"apos", "'"}, {"lt", "<"}, {"gt", ">"}};
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '&') {
            auto semi = s.find(';', i);
            if (semi != std::string_view::npos && semi - i <= 8) {
                auto name = s.substr(i + 1, semi - i - 1);
                if (auto it = named.find(name); it != named.end()) {
                    out += it->second;
                    i = semi;
                    continue;
                }
                if (name.size() > 1 && name[0] == '#') {
                    bool hex = name[1] == 'x' || name[1] == 'X';
                    try {
                        auto code = std::stoul(std::string(name.substr(hex ? 2 : 1)), nullptr, hex ? 16 : 10);
                        if (code < 128) {
                            out += static_cast<char>(code);
                            i = semi;
                            continue;
                        }
                    } catch (...) {
                    }
                }
            }
        }
        out += s[i];
    }
    return out;
}

struct Tag {
    std::string name;
    std::map<std::string, std::string> attrs;
};

class HtmlScanner {
public:
    explicit HtmlScanner(std::string_view html) : html_(html) {}

    MarkupScan run()
    {
        MarkupScan out;
        while (pos_ < html_.size()) {
            auto lt = html_.find('<', pos_);
            if (lt == std::string_view::npos)
                break;
            pos_ = lt;
            if (html_.substr(pos_).starts_with("<!--")) {
                skip_past("-->", pos_ + 4);
            } else if (pos_ + 1 < html_.size() && (html_[pos_ + 1] == '!' || html_[pos_ + 1] == '?'
                                                    || html_[pos_ + 1] == '/')) {
                skip_past(">", pos_ + 1);
            } else if (pos_ + 1 < html_.size() && std::isalpha(static_cast<unsigned char>(html_[pos_ + 1]))) {
                auto tag = read_tag();
                handle(tag, out);
            } else {
                ++pos_;
            }
        }
        return out;
    }

private:
    void skip_past(std::string_view marker, std::size_t from)
    {
        auto at = html_.find(marker, from);
        pos_ = at == std::string_view::npos ? html_.size() : at + marker.size();
    }

    Tag read_tag()
    {
        Tag tag;
        ++pos_;
        while (pos_ < html_.size() && (std::isalnum(static_cast<unsigned char>(html_[pos_])) || html_[pos_] == '-'))
            tag.name += lower_char(html_[pos_++]);
        while (pos_ < html_.size()) {
            while (pos_ < html_.size() && (is_space(html_[pos_]) || html_[pos_] == '/'))
                ++pos_;
            if (pos_ >= html_.size())
                break;
            if (html_[pos_] == '>') {
                ++pos_;
                break;
            }
            std::string name;
            while (pos_ < html_.size() && !is_space(html_[pos_]) && html_[pos_] != '=' && html_[pos_] != '>'
                   && html_[pos_] != '/')
                name += lower_char(html_[pos_++]);
            while (pos_ < html_.size() && is_space(html_[pos_]))
                ++pos_;
            std::string value;
            if (pos_ < html_.size() && html_[pos_] == '=') {
                ++pos_;
                while (pos_ < html_.size() && is_space(html_[pos_]))
                    ++pos_;
                if (pos_ < html_.size() && (html_[pos_] == '"' || html_[pos_] == '\'')) {
                    char quote = html_[pos_++];
                    auto end = html_.find(quote, pos_);
                    if (end == std::string_view::npos)
                        end = html_.size();
                    value = decode_entities(html_.substr(pos_, end - pos_));
                    pos_ = std::min(end + 1, html_.size());
                } else {
                    auto start = pos_;
                    while (pos_ < html_.size() && !is_space(html_[pos_]) && html_[pos_] != '>')
                        ++pos_;
                    value = decode_entities(html_.substr(start, pos_ - start));
                }
            }
            if (!name.empty())
                tag.attrs.try_emplace(std::move(name), std::move(value));
        }
        return tag;
    }

    std::string_view raw_text_until_close(std::string_view tag_name)
    {
        std::string closer = "</" + std::string(tag_name);
        auto end = ifind(html_, closer, pos_);
        if (end == std::string_view::npos)
            end = html_.size();
        auto text = html_.substr(pos_, end - pos_);
        pos_ = end;
        return text;
    }

    static void add(MarkupScan& out, const Tag& tag, const std::string& attr, bool stylesheet = false)
    {
        auto it = tag.attrs.find(attr);
        if (it != tag.attrs.end())
            out.refs.push_back({it->second, stylesheet, tag.name + "/" + attr});
    }

    static bool has_rel_token(const Tag& tag, std::string_view token)
    {
        auto it = tag.attrs.find("rel");
        if (it == tag.attrs.end())
            return false;
        std::string rel;
        for (char c : it->second)
            rel += lower_char(c);
        std::size_t pos = 0;
        while (pos < rel.size()) {
            while (pos < rel.size() && is_space(rel[pos]))
                ++pos;
            auto end = pos;
            while (end < rel.size() && !is_space(rel[end]))
                ++end;
            if (rel.substr(pos, end - pos) == token)
                return true;
            pos = end;
        }
        return false;
    }

    void handle(const Tag& tag, MarkupScan& out)
    {
        const auto& n = tag.name;
        if (n == "img" || n == "iframe" || n == "embed" || n == "source") {
            add(out, tag, "src");
        } else if (n == "object") {
            add(out, tag, "data");
        } else if (n == "link") {
            if (has_rel_token(tag, "stylesheet"))
                add(out, tag, "href", true);
        } else if (n == "script") {
            if (tag.attrs.contains("src"))
                add(out, tag, "src");
            auto body = raw_text_until_close("script");
            if (!tag.attrs.contains("src"))
                out.inline_scripts.emplace_back(body);
        } else if (n == "style") {
            for (auto& ref : scan_css(raw_text_until_close("style"), "style"))
                out.refs.push_back(std::move(ref));
        }
        if (auto it = tag.attrs.find("style"); it != tag.attrs.end())
            for (auto& ref : scan_css(it->second, n + "/style"))
                out.refs.push_back(std::move(ref));
    }

    std::string_view html_;
    std::size_t pos_ = 0;
};

std::string strip_css_value(std::string_view v)
{
    auto b = v.find_first_not_of(" \t\r\n\f");
    if (b == std::string_view::npos)
        return {};
    auto e = v.find_last_not_of(" \t\r\n\f");
    v = v.substr(b, e - b + 1);
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
        v = v.substr(1, v.size() - 2);
    return std::string(v);
}

}  // namespace

MarkupScan scan_html(std::string_view html)
{
    return HtmlScanner(html).run();
}

std::vector<ExtractedRef> scan_css(std::string_view css, std::string_view context_prefix)
{
    std::vector<ExtractedRef> refs;
    const std::string prefix(context_prefix);
    std::size_t pos = 0;

    auto read_url = [&](std::size_t open) -> std::string {
        // `open` indexes the '(' of url(
        auto close = css.find(')', open);
        if (close == std::string_view::npos)
            close = css.size();
        pos = std::min(close + 1, css.size());
        return strip_css_value(css.substr(open + 1, close - open - 1));
    };

    while (pos < css.size()) {
        if (css.substr(pos).starts_with("/*")) {
            auto end = css.find("*/", pos + 2);
            pos = end == std::string_view::npos ? css.size() : end + 2;
        } else if (iequals_at(css, pos, "@import")) {
            pos += 7;
            while (pos < css.size() && is_space(css[pos]))
                ++pos;
            if (pos < css.size() && (css[pos] == '"' || css[pos] == '\'')) {
                char quote = css[pos];
                auto end = css.find(quote, pos + 1);
                if (end == std::string_view::npos)
                    end = css.size();
                refs.push_back({std::string(css.substr(pos + 1, end - pos - 1)), true, prefix + "/@import"});
                pos = std::min(end + 1, css.size());
            } else if (iequals_at(css, pos, "url(")) {
                refs.push_back({read_url(pos + 3), true, prefix + "/@import"});
            }
        } else if (iequals_at(css, pos, "url(")) {
            refs.push_back({read_url(pos + 3), false, prefix + "/url"});
        } else {
            ++pos;
        }
    }
    return refs;
}

}  // namespace memaudit

#include "memaudit/link_format.hpp"

#include "memaudit/error.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace memaudit {

std::string RelSet::to_link_value() const
{
    std::string out;
    if (contains(MementoRel::FirstMemento))
        out += "first ";
    if (contains(MementoRel::LastMemento))
        out += "last ";
    out += "memento";
    return out;
}

bool memento_order(const MementoRecord& a, const MementoRecord& b)
{
    if (a.datetime != b.datetime)
        return a.datetime < b.datetime;
    return a.uri < b.uri;
}

namespace {

struct LinkEntry {
    std::size_t offset = 0;
    std::string target;
    std::multimap<std::string, std::string> params;  // names lower-cased
};

class LinkScanner {
public:
    explicit LinkScanner(std::string_view body) : body_(body) {}

    std::vector<LinkEntry> entries()
    {
        std::vector<LinkEntry> out;
        skip_ws();
        while (pos_ < body_.size()) {
            out.push_back(entry());
            skip_ws();
            if (pos_ < body_.size()) {
                if (body_[pos_] != ',')
                    fail("expected ',' between link entries");
                ++pos_;
                skip_ws();
                if (pos_ == body_.size())
                    break;  // tolerate a trailing comma
            }
        }
        return out;
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw Error(Errc::MalformedEntry, what, pos_); }

    void skip_ws()
    {
        while (pos_ < body_.size() && std::isspace(static_cast<unsigned char>(body_[pos_])))
            ++pos_;
    }

    static bool is_token_char(char c)
    {
        return std::isalnum(static_cast<unsigned char>(c)) || std::string_view("!#$&+-.^_`|~*").find(c) != std::string_view::npos;
    }

    std::string token()
    {
        auto start = pos_;
        while (pos_ < body_.size() && is_token_char(body_[pos_]))
            ++pos_;
        if (start == pos_)
            fail("expected a token");
        return std::string(body_.substr(start, pos_ - start));
    }

    std::string quoted()
    {
        ++pos_;  // opening quote
        std::string out;
        while (pos_ < body_.size() && body_[pos_] != '"') {
            if (body_[pos_] == '\\' && pos_ + 1 < body_.size())
                ++pos_;
            out += body_[pos_++];
        }
        if (pos_ == body_.size())
            fail("unterminated quoted string");
        ++pos_;
        return out;
    }

    LinkEntry entry()
    {
        LinkEntry e;
        e.offset = pos_;
        if (body_[pos_] != '<')
            fail("link entry must start with '<'");
        auto close = body_.find('>', pos_);
        if (close == std::string_view::npos)
            fail("unterminated '<' in link entry");
        e.target = std::string(body_.substr(pos_ + 1, close - pos_ - 1));
        if (e.target.empty() || e.target.find_first_of("<\r\n") != std::string::npos)
            fail("invalid link target");
        pos_ = close + 1;

        while (true) {
            skip_ws();
            if (pos_ >= body_.size() || body_[pos_] != ';')
                break;
            ++pos_;
            skip_ws();
            std::string name = token();
            std::transform(name.begin(), name.end(), name.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            skip_ws();
            std::string value;
            if (pos_ < body_.size() && body_[pos_] == '=') {
                ++pos_;
                skip_ws();
                if (pos_ >= body_.size())
                    fail("missing parameter value");
                value = body_[pos_] == '"' ? quoted() : token();
            }
            e.params.emplace(std::move(name), std::move(value));
        }
        return e;
    }

    std::string_view body_;
    std::size_t pos_ = 0;
};

std::vector<std::string> rel_tokens(const LinkEntry& e)
{
    std::vector<std::string> tokens;
    auto [lo, hi] = e.params.equal_range("rel");
    for (auto it = lo; it != hi; ++it) {
        std::string current;
        for (char c : it->second + " ") {
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!current.empty())
                    tokens.push_back(std::move(current));
                current.clear();
            } else {
                current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            }
        }
    }
    return tokens;
}

}  // namespace

TimeMap parse_link_format(std::string_view body)
{
    std::optional<std::string> original, timegate, timemap, timebundle;
    std::vector<MementoRecord> mementos;
    bool seen_first = false;
    bool seen_last = false;

    auto assign = [](std::optional<std::string>& slot, const LinkEntry& e, std::string_view role) {
        if (slot)
            throw Error(Errc::MalformedEntry, "duplicate rel=\"" + std::string(role) + "\"", e.offset);
        slot = e.target;
    };

    for (const auto& entry : LinkScanner(body).entries()) {
        auto tokens = rel_tokens(entry);
        auto has = [&](std::string_view t) { return std::find(tokens.begin(), tokens.end(), t) != tokens.end(); };

        if (has("original"))
            assign(original, entry, "original");
        if (has("timegate"))
            assign(timegate, entry, "timegate");
        if (has("timemap") || has("self"))
            assign(timemap, entry, "timemap");
        if (has("timebundle"))
            assign(timebundle, entry, "timebundle");
        if (!has("memento"))
            continue;

        auto dt = entry.params.find("datetime");
        if (dt == entry.params.end())
            throw Error(Errc::BadDatetime, "memento entry without datetime", entry.offset);
        MementoRecord rec{entry.target, {}, {MementoRel::Memento}};
        try {
            rec.datetime = parse_rfc1123(dt->second);
        } catch (const Error& err) {
            throw Error(Errc::BadDatetime, err.what(), entry.offset);
        }
        if (has("first")) {
            if (seen_first)
                throw Error(Errc::MalformedEntry, "more than one first memento", entry.offset);
            seen_first = true;
            rec.rels.insert(MementoRel::FirstMemento);
        }
        if (has("last")) {
            if (seen_last)
                throw Error(Errc::MalformedEntry, "more than one last memento", entry.offset);
            seen_last = true;
            rec.rels.insert(MementoRel::LastMemento);
        }
        mementos.push_back(std::move(rec));
    }

    if (!original)
        throw Error(Errc::MissingRole, "no rel=\"original\" entry");
    if (!timegate)
        throw Error(Errc::MissingRole, "no rel=\"timegate\" entry");
    if (!timemap)
        throw Error(Errc::MissingRole, "no rel=\"timemap\" entry");
    if (!OriginalUri::is_valid(*original))
        throw Error(Errc::MalformedEntry, "original is not an absolute http(s) URI: " + *original, 0);

    std::stable_sort(mementos.begin(), mementos.end(), memento_order);
    return TimeMap{OriginalUri::parse(*original), *timegate, *timemap, timebundle, std::move(mementos)};
}

std::string serialize_link_format(const TimeMap& tm)
{
    std::vector<std::string> lines;
    if (tm.timebundle_uri)
        lines.push_back("<" + *tm.timebundle_uri + ">; rel=\"timebundle\"");
    lines.push_back("<" + tm.original.str() + ">; rel=\"original\"");
    lines.push_back("<" + tm.timemap_uri + ">; rel=\"timemap\"; type=\"application/link-format\"");
    lines.push_back("<" + tm.timegate_uri + ">; rel=\"timegate\"");
    for (const auto& m : tm.mementos)
        lines.push_back("<" + m.uri + ">; rel=\"" + m.rels.to_link_value() + "\"; datetime=\""
                        + format_rfc1123(m.datetime) + "\"");

    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        out += lines[i];
        out += i + 1 < lines.size() ? ",\n" : "\n";
    }
    return out;
}

}  // namespace memaudit

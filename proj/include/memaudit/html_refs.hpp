#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace memaudit {

struct ExtractedRef {
    std::string reference;    // attribute / url() value, entity-decoded, untrimmed
    bool stylesheet = false;  // body should be scanned as CSS once fetched
    std::string context;      // "img/src", "link/href", "style/url", "css/@import", ...

    bool operator==(const ExtractedRef&) const = default;
};

struct MarkupScan {
    std::vector<ExtractedRef> refs;            // document order
    std::vector<std::string> inline_scripts;  // bodies of <script> without src
};

/// Collects subresource references a crawler would see in static markup:
/// img/src, script/src, link/href with a stylesheet rel, iframe/src,
/// embed/src, object/data, source/src, plus url() and @import inside <style>
/// blocks and style attributes.
MarkupScan scan_html(std::string_view html);

/// url(...) and @import references of a stylesheet, in source order.
std::vector<ExtractedRef> scan_css(std::string_view css, std::string_view context_prefix = "css");

}  // namespace memaudit

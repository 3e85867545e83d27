#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace memaudit {

/// The memento-audit command line: timemap, sample, capture, audit, report.
/// Returns the process exit code (0 ok, 1 partial failure, 2 fatal).
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// fixture-archive serve <dir> --port N [--bridge-port M]
int fixture_archive_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace memaudit

#ifndef LOFREE_LOGGING_HPP
#define LOFREE_LOGGING_HPP

#include <functional>
#include <string>

namespace lofree {

using WarningHandler = std::function<void(const std::string&)>;

// Non-fatal conditions (embedding fallbacks, m=1 pools, ...) go through a
// process-wide handler. The default prints "warning: ..." to stderr.
// Returns the previous handler so callers can restore it.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(const std::string& message);

}  // namespace lofree

#endif  // LOFREE_LOGGING_HPP

#pragma once

#include <functional>
#include <string>

namespace boclab {

// Sink for non-fatal diagnostics (degenerate spectra, floored eigenvalues,
// quadrature fallbacks). Defaults to stderr.
using NoteSink = std::function<void(const std::string&)>;

void set_note_sink(NoteSink sink);
void log_note(const std::string& message);

}  // namespace boclab

#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>

namespace docintel::sparse {

struct HighlightOptions {
  std::size_t window = 200;  // code points
  std::string pre = "**";
  std::string post = "**";
  std::string ellipsis = "...";
};

// Start (code points) of the earliest window of `window` characters holding
// the most distinct matched terms; tokens count only when fully inside.
std::size_t best_window_start(std::string_view text,
                              const std::set<std::string>& terms,
                              std::size_t window);

// Snippet of the best window with matched tokens wrapped in markers and
// ellipses where the text was cut. No match yields the unmarked prefix.
std::string highlight(std::string_view text, const std::set<std::string>& terms,
                      const HighlightOptions& options = {});

}  // namespace docintel::sparse

#pragma once

#include <string>
#include <string_view>

namespace changegpt {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // always starts with '/'
};

/// "http://host:8080/v1/x" -> {"http://host:8080", "/v1/x"}.
SplitUrl split_url(std::string_view url);

}  // namespace changegpt

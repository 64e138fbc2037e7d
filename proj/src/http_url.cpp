#include "changegpt/http_url.hpp"

#include "changegpt/error.hpp"

namespace changegpt {

SplitUrl split_url(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos) {
    throw Error(ErrorCode::BadInput, "URL needs a scheme: " + std::string(url));
  }
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

}  // namespace changegpt

#pragma once

#include <string>

namespace cid::http {

struct Url {
    std::string scheme_host_port;  // "https://api.example.com:443"
    std::string path;              // "/v1/chat/completions"
};

/// Throws cid::PreconditionError on anything that is not http(s)://host[:port][/path].
Url parse_url(const std::string& url);

/// POSTs a JSON body and returns the response body on 2xx.
/// Connection failures and 5xx raise a retryable TransportError, 429 raises
/// RateLimitError, other statuses raise a non-retryable TransportError.
std::string post_json(const std::string& url, const std::string& body,
                      const std::string& bearer_token, int timeout_seconds);

/// Reads the environment variable; empty name or unset variable yields "".
std::string env_or_empty(const std::string& name);

}  // namespace cid::http

#include "cid/http.hpp"

#include "cid/error.hpp"

#include <httplib.h>

#include <cstdlib>

namespace cid::http {

Url parse_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw PreconditionError("URL without scheme: '" + url + "'");
    }
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw PreconditionError("unsupported URL scheme '" + scheme + "'");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    Url out;
    if (path_start == std::string::npos) {
        out.scheme_host_port = url;
        out.path = "/";
    } else {
        out.scheme_host_port = url.substr(0, path_start);
        out.path = url.substr(path_start);
    }
    if (out.scheme_host_port.size() <= scheme_end + 3) {
        throw PreconditionError("URL without host: '" + url + "'");
    }
    return out;
}

std::string post_json(const std::string& url, const std::string& body,
                      const std::string& bearer_token, int timeout_seconds) {
    const Url parsed = parse_url(url);
    httplib::Client client(parsed.scheme_host_port);
    client.set_connection_timeout(timeout_seconds, 0);
    client.set_read_timeout(timeout_seconds, 0);
    client.set_write_timeout(timeout_seconds, 0);

    httplib::Headers headers;
    if (!bearer_token.empty()) {
        headers.emplace("Authorization", "Bearer " + bearer_token);
    }
    auto res = client.Post(parsed.path, headers, body, "application/json");
    if (!res) {
        throw TransportError(url, "request failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 429) {
        throw RateLimitError(url, "rate limited (HTTP 429)");
    }
    if (res->status >= 500) {
        throw TransportError(url, "server error (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status < 200 || res->status >= 300) {
        throw TransportError(url,
                             "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200),
                             false);
    }
    return res->body;
}

std::string env_or_empty(const std::string& name) {
    if (name.empty()) return {};
    const char* value = std::getenv(name.c_str());
    return value == nullptr ? std::string{} : std::string(value);
}

}  // namespace cid::http

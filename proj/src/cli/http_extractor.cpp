#include "xvars/cli/http_extractor.hpp"

#include "httplib.h"
#include "xvars/common/error.hpp"
#include "xvars/common/ini.hpp"

namespace xvars::cli {

HttpExtractorClient::HttpExtractorClient(const std::string& url, int timeout_s) : timeout_s_(timeout_s) {
    constexpr std::string_view scheme = "http://";
    if (url.rfind(scheme, 0) != 0) {
        fail(ErrorCode::Config, "extractor url must start with http://, got '" + url + "'");
    }
    const auto rest = url.substr(scheme.size());
    const auto slash = rest.find('/');
    const auto authority = rest.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : rest.substr(slash);
    const auto colon = authority.rfind(':');
    host_ = authority.substr(0, colon);
    if (colon != std::string::npos) {
        port_ = static_cast<int>(parse_int(authority.substr(colon + 1), "extractor url port"));
    }
    if (host_.empty()) {
        fail(ErrorCode::Config, "extractor url has no host: '" + url + "'");
    }
}

std::string HttpExtractorClient::complete(const std::string& request) const {
    httplib::Client client(host_, port_);
    client.set_connection_timeout(timeout_s_, 0);
    client.set_read_timeout(timeout_s_, 0);
    const auto res = client.Post(path_, request, "text/plain");
    if (!res) {
        fail(ErrorCode::Transport, "extractor at " + host_ + ":" + std::to_string(port_) + path_ +
                                       " unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        fail(ErrorCode::Transport, "extractor answered HTTP " + std::to_string(res->status));
    }
    return res->body;
}

}  // namespace xvars::cli

#pragma once

#include <string>

#include "xvars/evaluation/extraction.hpp"

namespace xvars::cli {

/// ExtractorClient that POSTs each request as text/plain to an HTTP URL
/// (http://host[:port]/path) and returns the response body. Transport errors
/// for connection failures and non-200 answers.
class HttpExtractorClient final : public eval::ExtractorClient {
public:
    explicit HttpExtractorClient(const std::string& url, int timeout_s = 30);
    std::string complete(const std::string& request) const override;

private:
    std::string host_;
    int port_ = 80;
    std::string path_;
    int timeout_s_;
};

}  // namespace xvars::cli

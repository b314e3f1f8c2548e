#ifdef WKFORGE_WITH_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "wkforge/errors.hpp"
#include "wkforge/providers.hpp"

namespace wkforge {

namespace {

struct SplitUrl {
    std::string origin; // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidInput, "endpoint URL lacks a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpTransport final : public Transport {
public:
    std::string post(const std::string& url, const std::string& json_body, const HttpHeaders& headers,
                     std::chrono::duration<double> timeout) override {
        const auto [origin, path] = split_url(url);
        httplib::Client client(origin);
        const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
        client.set_connection_timeout(micros);
        client.set_read_timeout(micros);
        client.set_write_timeout(micros);

        httplib::Headers h;
        std::string content_type = "application/json";
        for (const auto& [k, v] : headers) {
            if (k == "Content-Type") {
                content_type = v;
            } else {
                h.emplace(k, v);
            }
        }
        auto res = client.Post(path, h, json_body, content_type);
        if (!res) {
            throw Error(ErrorCode::ProviderUnavailable, "POST " + url + " failed: " + httplib::to_string(res.error()));
        }
        if (res->status < 200 || res->status >= 300) {
            throw Error(ErrorCode::ProviderUnavailable, "POST " + url + " returned HTTP " + std::to_string(res->status));
        }
        return res->body;
    }
};

} // namespace

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttpTransport>(); }

} // namespace wkforge

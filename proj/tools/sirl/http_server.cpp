// Copyright 2026 The SIRL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "http_server.hpp"

#include "httplib.h"
#include "json.hpp"

namespace sirl::service {

namespace {

void send(httplib::Response& res, const Reply& reply) {
  res.status = reply.status;
  res.set_content(reply.body, reply.content_type);
}

}  // namespace

void mount(httplib::Server& server, QueryService& service) {
  // The labeling page is served from its own origin.
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get(R"(/session/([^/]+)/next)", [&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.next(req.matches[1]));
  });
  server.Post(R"(/session/([^/]+)/answer)", [&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.answer(req.matches[1], req.body));
  });
  server.Get("/export", [&](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("phase")) {
      send(res, {400, R"({"error":"missing phase parameter"})"});
      return;
    }
    send(res, service.export_phase(req.get_param_value("phase")));
  });
  server.Get("/health", [&](const httplib::Request&, httplib::Response& res) {
    send(res, service.health());
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(nlohmann::json{{"error", what}}.dump(), "application/json");
  });
}

}  // namespace sirl::service

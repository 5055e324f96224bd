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

#ifndef SIRL_TOOLS_HTTP_SERVER_HPP_
#define SIRL_TOOLS_HTTP_SERVER_HPP_

#include "sirl/service.hpp"

namespace httplib {
class Server;
}

namespace sirl::service {

// Routes:
//   GET  /session/{id}/next
//   POST /session/{id}/answer   {"query_id": q, "choice": {...}, "elapsed_ms": t}
//   GET  /export?phase=similarity|preference
//   GET  /health
void mount(httplib::Server& server, QueryService& service);

}  // namespace sirl::service

#endif  // SIRL_TOOLS_HTTP_SERVER_HPP_
